"""Two-timescale gradient descent-ascent: spectra, hypocoercive rates,
eta-uniform preconditioning, interacting-particle couplings, and averaging.

Submodules are imported lazily so the command-line front end can pin thread
counts before any numerical library initializes.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "averaging",
    "cli",
    "errors",
    "io",
    "linalg",
    "meanfield",
    "precond",
    "quadratic",
    "rates",
    "report",
)

# name -> submodule for the flat convenience namespace
_EXPORTS = {
    "QuadraticGame": "quadratic",
    "assemble": "quadratic",
    "system_matrix": "quadratic",
    "spectral_rate": "quadratic",
    "simulate_gda": "quadratic",
    "fit_decay_rate": "quadratic",
    "coercivity_constants": "quadratic",
    "Regime": "quadratic",
    "GameKernel": "meanfield",
    "KernelGeometry": "meanfield",
    "ParticleSystem": "meanfield",
    "make_benchmark_kernel": "meanfield",
    "step_particles": "meanfield",
    "make_coupled_pair": "meanfield",
    "coupled_step": "meanfield",
    "mne_fixed_point": "meanfield",
    "wasserstein1": "meanfield",
    "contraction_experiment": "meanfield",
    "make_rate_profile": "rates",
    "closed_form_c": "rates",
    "bracket_c": "rates",
    "admissibility": "rates",
    "averaged_rate": "averaging",
    "mu_lower_bound": "averaging",
    "validate_averaging": "averaging",
}

__all__ = ["__version__", *_SUBMODULES, *_EXPORTS]


def __getattr__(name):
    import importlib

    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    if name in _EXPORTS:
        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(__all__)
