"""Antidistinguishability of quantum states, complex spherical codes and the
communication protocols built on them."""

from .antidist import (
    ExclusionResult,
    Povm,
    Status,
    Tolerances,
    TripleOverlaps,
    antidistinguishing_povm,
    cfs_criterion,
    exclusion_sdp,
    is_antidistinguishable_triple,
    triple_overlaps,
)
from .codes import (
    CodeReport,
    SphericalCode,
    analyze,
    cap_bound_size,
    cap_volume_ratio,
    haar_random_set,
    missing_basis_family,
    mub_union,
    random_rademacher_code,
    sic3,
)
from .numerics import RngStream

__version__ = "0.1.0"
