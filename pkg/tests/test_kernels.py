import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from cprobust import kernels
from cprobust._fallback import qmul
from cprobust.mcsim import quaternion_to_matrix
from cprobust.pulses import SIGMA_X, SIGMA_Y, SIGMA_Z

compiled_only = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled kernel not built")


def _expm_product(amplitude, phase, dt, ba, bd):
    u = np.eye(2, dtype=complex)
    for w, p, h, a, d in zip(amplitude, phase, dt, ba, bd):
        ham = 0.5 * (w + a) * (np.cos(p) * SIGMA_X + np.sin(p) * SIGMA_Y) + 0.5 * d * SIGMA_Z
        u = expm(-1j * ham * h) @ u
    return u


def _random_problem(rng, n_real=7, n_steps=13):
    amplitude = rng.uniform(0.2, 2.0, n_steps)
    phase = rng.uniform(-np.pi, np.pi, n_steps)
    dt = rng.uniform(0.1, 1.0, n_steps)
    ba = rng.normal(0, 0.3, (n_real, n_steps))
    bd = rng.normal(0, 0.3, (n_real, n_steps))
    return amplitude, phase, dt, ba, bd


def test_fallback_matches_matrix_exponential():
    amplitude, phase, dt, ba, bd = _random_problem(np.random.default_rng(1))
    q = kernels.propagate_batch(amplitude, phase, dt, ba, bd, backend="python")
    for i in range(len(ba)):
        ref = _expm_product(amplitude, phase, dt, ba[i], bd[i])
        np.testing.assert_allclose(quaternion_to_matrix(q[i]), ref, atol=1e-13)


@compiled_only
def test_compiled_matches_fallback():
    amplitude, phase, dt, ba, bd = _random_problem(np.random.default_rng(2), 50, 40)
    q_c = kernels.propagate_batch(amplitude, phase, dt, ba, bd, backend="compiled")
    q_p = kernels.propagate_batch(amplitude, phase, dt, ba, bd, backend="python")
    np.testing.assert_allclose(q_c, q_p, atol=1e-14)


@compiled_only
def test_compiled_handles_zero_field_step():
    # a step with no drive and no noise is the identity in both backends
    args = (np.array([0.0, 1.0]), np.zeros(2), np.array([0.5, 0.5]), np.zeros((1, 2)), np.zeros((1, 2)))
    q_c = kernels.propagate_batch(*args, backend="compiled")
    q_p = kernels.propagate_batch(*args, backend="python")
    np.testing.assert_allclose(q_c, q_p, atol=1e-15)
    np.testing.assert_allclose(q_c[0], [np.cos(0.25), np.sin(0.25), 0, 0], atol=1e-15)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.propagate_batch([1.0], [0.0], [1.0], np.zeros((1, 1)), np.zeros((1, 1)), backend="fortran")


unit_quaternion = st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.asarray(v) / np.linalg.norm(v))


@settings(max_examples=50, deadline=None)
@given(unit_quaternion, unit_quaternion)
def test_qmul_is_matrix_product(p, r):
    # p is the later (left) factor
    np.testing.assert_allclose(
        quaternion_to_matrix(qmul(p, r)), quaternion_to_matrix(p) @ quaternion_to_matrix(r), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(unit_quaternion, unit_quaternion, unit_quaternion)
def test_qmul_associative(a, b, c):
    np.testing.assert_allclose(qmul(qmul(a, b), c), qmul(a, qmul(b, c)), atol=1e-12)


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, CPROBUST_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cprobust import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
