"""Filter-function, dc-limit and Monte Carlo analysis of composite pulses under colored noise."""
from .analytic import (
    DcCoefficient,
    FidelityEstimate,
    combined_estimate,
    dc_coefficient,
    dc_fidelity_loss,
    ff_fidelity_loss,
)
from .filterfn import crossover, ff_amplitude, ff_curve, ff_detuning, ff_discretized, lowfreq_slope
from .geometry import VectorChain, crossover_bound, frequency_chains, static_chain
from .kernels import BACKEND
from .mcsim import EnsembleResult, ensemble, fidelity, propagate
from .noisegen import NoiseTrajectory, periodogram, synthesize
from .pulses import (
    PiecewiseConstantControl,
    PulseSequence,
    Segment,
    build_sequence,
    discretize,
    square_equivalent,
    trapezoidalize,
)
from .spectra import NoiseSpectrum, TabulatedSpectrum, gaussian_moment
from .toggling import control_trajectories, toggling_matrices

__version__ = "0.1.0"
