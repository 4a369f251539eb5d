"""Curvature of weighted Sasaki metrics on tangent bundles and tangent sphere bundles.

Submodules
----------
tensorkit
    Finite differences, orthonormal frames, metric contractions.
base_manifold
    Single-chart Riemannian manifolds and a zoo of test spaces.
sasaki_core
    Closed-form curvature of ``G = f1 g + f2 g`` on ``TM`` (constant weights).
coordinate_oracle
    The same curvature by brute force from the ``2m x 2m`` metric matrix.
conformal_fiber
    Flat base with ``f2 = exp(2 phi2)``: curvature and geodesics.
sphere_bundle
    Second fundamental form, Gauss equation and scalar-curvature scans on ``S_rM``.
"""

from .base_manifold import ChartedManifold, ZooSpec, construct_zoo
from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    GeometryError,
    NumericError,
    PreconditionError,
    RankError,
    SasakiGeoError,
    ShapeError,
)
from .sasaki_core import (
    LocalSasaki,
    SplitTangentVector,
    TangentBundlePoint,
    WeightedSasakiMetric,
)

__version__ = "0.1.0"

__all__ = [
    "ChartedManifold",
    "ZooSpec",
    "construct_zoo",
    "LocalSasaki",
    "SplitTangentVector",
    "TangentBundlePoint",
    "WeightedSasakiMetric",
    "SasakiGeoError",
    "ConfigurationError",
    "DivergenceError",
    "DomainError",
    "GeometryError",
    "NumericError",
    "PreconditionError",
    "RankError",
    "ShapeError",
]
