"""copula_lab: copula priors, chronic-rejection diagnostics and posterior studies."""
__version__ = "0.1.0"
