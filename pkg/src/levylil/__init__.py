"""
levylil -- laws of the iterated logarithm for stable-type jump processes.

Modules
-------
scale_functions
    Volume and time-scale functions, LIL normalizers and an integral-test
    classifier.
process_sim
    Exact-law path simulation with reproducible per-path seeds.
kernel_oracle
    Transition densities by Fourier inversion, resolvents and heat kernel
    bound fits.
occupation
    Local-time estimators, ``L*`` and range, Kac moments, tail and modulus
    checks.
lil_experiments
    Normalized LIL statistics over geometric time ladders.
harness
    Configs, experiment registry, result records and the command line.
"""
from .errors import (ConflictError, CoverageError, DomainError, ExtrapolationError,
                     LadderError, LevyLilError, NumericError, ResourceError,
                     StatisticalError)
from .kernel_oracle import (QuadConfig, density, heat_kernel, hke_fit, mass_check,
                            resolvent)
from .lil_experiments import DyadicLadder, Functional, LilMode, ladder_samples
from .occupation import kac_moments_exact, local_time, range_estimate, sup_local_time
from .process_sim import (PathEnsemble, StableLevy, StableMixtureLevy, SubordinatedBM,
                          TimeGrid, build_ensemble, simulate_path)
from .scale_functions import (InverseMixture, Power, RateKind, StableMixture, Tabulated,
                              integral_test, inverse_scale, lil_rate)

__version__ = "0.1.0"

__all__ = [
    "ConflictError", "CoverageError", "DomainError", "ExtrapolationError", "LadderError",
    "LevyLilError", "NumericError", "ResourceError", "StatisticalError",
    "QuadConfig", "density", "heat_kernel", "hke_fit", "mass_check", "resolvent",
    "DyadicLadder", "Functional", "LilMode", "ladder_samples",
    "kac_moments_exact", "local_time", "range_estimate", "sup_local_time",
    "PathEnsemble", "StableLevy", "StableMixtureLevy", "SubordinatedBM", "TimeGrid",
    "build_ensemble", "simulate_path",
    "InverseMixture", "Power", "RateKind", "StableMixture", "Tabulated",
    "integral_test", "inverse_scale", "lil_rate",
]
