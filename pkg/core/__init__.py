from core.errors import TorusLSIError
from core.lattice import DiagonalElement, GradedElement, ThetaParam, TorusElement

_LAZY = {
    "spectrum": "core.spectral",
    "entropy_functional": "core.spectral",
    "is_positive": "core.spectral",
    "g_taylor": "core.combinatorics",
    "check_bpq_factorization": "core.combinatorics",
    "GeneratorSpec": "core.verify",
    "verify_diagonal": "core.verify",
    "verify_general": "core.verify",
    "verify_weissler_baseline": "core.verify",
    "CampaignConfig": "core.campaign",
    "run_campaign": "core.campaign",
}


# Lazy imports for the layers built on the algebra (eigensolvers, pydantic models)
def __getattr__(name):
    if name in _LAZY:
        import importlib
        return getattr(importlib.import_module(_LAZY[name]), name)
    raise AttributeError(f"module 'core' has no attribute {name!r}")


__all__ = [
    "TorusLSIError",
    "ThetaParam",
    "TorusElement",
    "DiagonalElement",
    "GradedElement",
    *_LAZY,
]
