import csv

import numpy as np
import pytest

from cprobust.filterfn import crossover, ff_amplitude
from cprobust.geometry import (
    ProjectionError,
    VectorChain,
    crossover_bound,
    ff_from_chains,
    frequency_chains,
    static_chain,
    write_chains_csv,
)
from cprobust.pulses import Segment, PulseSequence, build_sequence, trapezoidalize
from cprobust.toggling import first_order_integrals


def test_static_chain_shapes():
    sk1 = static_chain(build_sequence("SK1", np.pi, 1.0))
    bb1 = static_chain(build_sequence("BB1", np.pi, 1.0))
    prim = static_chain(build_sequence("primitive", np.pi, 1.0))
    assert len(sk1.terms) == 3 and len(bb1.terms) == 4
    np.testing.assert_allclose(np.linalg.norm(sk1.terms, axis=1), [np.pi, 2 * np.pi, 2 * np.pi])
    assert sk1.defect <= 1e-12 * sk1.path_length
    assert bb1.defect <= 1e-12 * bb1.path_length
    assert prim.defect == pytest.approx(np.pi)


def test_bb1_forms_two_opposite_triangles():
    # signed areas (z of cross products) of the two halves cancel
    bb1 = static_chain(build_sequence("BB1", np.pi, 1.0))
    v = bb1.vertices()[:, :2]
    area = 0.5 * np.sum(v[:-1, 0] * v[1:, 1] - v[1:, 0] * v[:-1, 1])
    assert abs(area) < 1e-12
    assert bb1.vertices().shape == (5, 3)


@pytest.mark.parametrize("name", ["primitive", "SK1", "BB1", "CORPSE", "CinSK", "CinBB"])
def test_closure_agrees_with_first_order_integral(name):
    seq = build_sequence(name, np.pi, 1.0)
    amp, _ = first_order_integrals(seq)
    # both vanish together: chain total = 2 Omega int rho_a dt
    np.testing.assert_allclose(static_chain(seq).total, 2 * amp, atol=1e-13)


@pytest.mark.parametrize("name", ["SK1", "BB1", "CinBB", "DCG"])
def test_chains_reconstruct_filter_function(name):
    seq = build_sequence(name, np.pi, 1.0)
    omegas = np.random.default_rng(0).uniform(1e-3, 5.0, 20)
    got = np.array([ff_from_chains(seq, w) for w in omegas])
    np.testing.assert_allclose(got, ff_amplitude(seq, omegas), rtol=1e-10, atol=1e-24)


def test_b_chain_approaches_static_chain():
    seq = build_sequence("SK1", np.pi, 1.0)
    _, b = frequency_chains(seq, 1e-6)
    np.testing.assert_allclose(b.terms, static_chain(seq).terms / 1.0, rtol=1e-9, atol=1e-12)


def test_sk1_chain_opens_with_frequency():
    seq = build_sequence("SK1", np.pi, 1.0)
    _, low = frequency_chains(seq, 0.01)
    _, high = frequency_chains(seq, 0.3)
    shortest_low = np.min(np.linalg.norm(low.terms, axis=1))
    shortest_high = np.min(np.linalg.norm(high.terms, axis=1))
    assert low.defect < 0.05 * shortest_low
    assert high.defect > 0.3 * shortest_high


def test_projection():
    chain = static_chain(build_sequence("BB1", np.pi, 1.0))
    assert chain.projection_2d().shape == (4, 2)
    tilted = VectorChain(np.array([[1.0, 0.0, 0.1]]), "static")
    with pytest.raises(ProjectionError):
        tilted.projection_2d()


def test_chain_errors():
    seq = build_sequence("SK1", np.pi, 1.0)
    with pytest.raises(ValueError):
        frequency_chains(seq, 0.0)
    with pytest.raises(ValueError):
        static_chain(trapezoidalize(seq, 0.1))


def test_crossover_bound_value_and_ordering():
    for name in ("SK1", "BB1"):
        seq = build_sequence(name, np.pi, 1.0)
        bound = crossover_bound(seq)
        assert bound == pytest.approx(2 / (25 * np.pi), rel=1e-14)
        assert bound <= crossover(seq, "a")


def test_crossover_bound_solves_its_equation():
    seq = build_sequence("BB1", np.pi / 2, 3.0)
    w = crossover_bound(seq)
    tau_p, tau_cp = (np.pi / 2) / 3.0, seq.duration
    assert 0.25 * (w * tau_p) ** 2 == pytest.approx((w * tau_cp) ** 4 / 16, rel=1e-12)


def test_crossover_bound_degenerate():
    seq = PulseSequence("single", (Segment(np.pi, 1.0, 0.0),), np.pi)
    assert crossover_bound(seq) == pytest.approx(2 / np.pi)


def test_chain_csv(tmp_path):
    seq = build_sequence("SK1", np.pi, 1.0)
    chains = [static_chain(seq), *frequency_chains(seq, 0.1)]
    path = tmp_path / "chains.csv"
    write_chains_csv(path, chains)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["index", "kind", "x", "y", "z"]
    assert len(rows) == 1 + 9
    assert [r[1] for r in rows[1:]] == ["static"] * 3 + ["A"] * 3 + ["B"] * 3
    assert float(rows[1][2]) == pytest.approx(np.pi)


def test_crossover_bound_rounds_to_quoted_value():
    # 2 / (25 pi) = 0.02546..., quoted to two significant figures as 0.025
    bound = crossover_bound(build_sequence("SK1", np.pi, 1.0))
    assert float(f"{bound:.2g}") == 0.025
