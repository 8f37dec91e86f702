"""coarse-kit: exact certificates for finite complexes and cochain norms."""

from .complexes import (
    CellComplex,
    CellMap,
    annulus_triangulation,
    barycentric_subdivision,
    circle,
    coarsening_cylinder,
    filled_triangle,
    fundamental_cycle,
    glue,
    interval_product,
    labeled_cycle,
    mapping_cylinder,
    midpoint_subdivision,
    new_complex,
    path_complex,
    point,
    product_interval,
    simplicial_complex,
    subcomplex_matching,
    wedge,
)
from .exact_linalg import (
    NormCertificate,
    SnfDecomposition,
    ilp_min_linf,
    lp_min_linf,
    smith_normal_form,
    solve_integer,
)

__version__ = "0.1.0"


def __getattr__(name):
    # heavier subsystems load on first use: cochains, towers, metric_nerve
    from importlib import import_module

    for mod in ("cochains", "towers", "metric_nerve", "interchange",
                "verify", "report"):
        module = import_module(f".{mod}", __name__)
        if hasattr(module, name):
            return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
