from .dynamics import PARAM_NAMES, OdeDynamics, dynamics_eval
from .integrator import (
    basis_at,
    basis_tensor,
    fit_schedule,
    integrate,
    integrate_tensor,
    param_gradients,
    sample_t,
)
from .cache import (
    BasisCache,
    build_cache,
    build_schedule_cache,
    default_cache_grid,
    load_cache,
    lookup,
    lookup_entry,
    save_cache,
)

__all__ = [
    "PARAM_NAMES",
    "OdeDynamics",
    "dynamics_eval",
    "basis_at",
    "basis_tensor",
    "fit_schedule",
    "integrate",
    "integrate_tensor",
    "param_gradients",
    "sample_t",
    "BasisCache",
    "build_cache",
    "build_schedule_cache",
    "default_cache_grid",
    "load_cache",
    "lookup",
    "lookup_entry",
    "save_cache",
]
