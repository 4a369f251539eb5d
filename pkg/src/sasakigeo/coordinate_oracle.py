"""Brute-force curvature of ``(TM, G)`` in induced coordinates ``(x, u)``.

The metric is written out as a ``2m x 2m`` matrix,

    G = f1 g_ij dx^i dx^j + f2 g_kl (du^k + N^k_i dx^i)(du^l + N^l_j dx^j),
    N^k_i = Gamma^k_ia u^a,

and its Levi-Civita curvature is obtained by finite differences of that
matrix alone. Nothing here calls :mod:`sasakigeo.sasaki_core`; the only
shared ingredient is the base Christoffel symbols that define the
horizontal distribution. ``f2`` may be a function of the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from . import base_manifold as bm
from .base_manifold import ChartedManifold
from .errors import ConfigurationError, DomainError, NumericError
from .tensorkit import FDScheme, finite_difference_derivative, finite_difference_hessian

# h = 10**-2.5 with one Richardson level; second derivatives of the metric
# lose roughly half the digits without the extrapolation near chart edges
ORACLE_SCHEME = FDScheme(step=10**-2.5, order=4, richardson=True)

Weight = Union[float, Callable[[np.ndarray], float]]


@dataclass(frozen=True)
class InducedChart:
    """Coordinates ``(x^1..x^m, u^1..u^m)`` on ``TM`` with weights ``f1, f2``."""

    base: ChartedManifold
    f1: float = 1.0
    f2: Weight = 1.0

    def __post_init__(self):
        if not self.f1 > 0:
            raise ConfigurationError("f1 must be positive")
        if not callable(self.f2) and not self.f2 > 0:
            raise ConfigurationError("f2 must be positive")

    @property
    def dim(self) -> int:
        return 2 * self.base.dim

    def f2_at(self, x) -> float:
        return float(self.f2(x)) if callable(self.f2) else float(self.f2)

    def contains(self, p) -> bool:
        # fibre coordinates are global
        return self.base.contains(np.asarray(p)[: self.base.dim])


def _split_point(C: InducedChart, p):
    p = np.asarray(p, dtype=float)
    m = C.base.dim
    if p.shape != (2 * m,):
        raise DomainError(f"expected {2 * m} induced coordinates, got shape {p.shape}")
    return p[:m], p[m:]


def connection_matrix(C: InducedChart, x, u) -> np.ndarray:
    """``N[k, i] = Gamma^k_ia u^a``."""
    return np.einsum("kia,a->ki", bm.christoffel(C.base, x), u)


def metric_matrix_TM(C: InducedChart, p) -> np.ndarray:
    x, u = _split_point(C, p)
    if not C.base.contains(x):
        raise DomainError(f"base point {x} is outside the chart")
    g = np.asarray(C.base.metric(x), dtype=float)
    N = connection_matrix(C, x, u)
    f1, f2 = C.f1, C.f2_at(x)
    m = C.base.dim
    out = np.empty((2 * m, 2 * m))
    gN = g @ N
    out[:m, :m] = f1 * g + f2 * N.T @ gN
    out[:m, m:] = f2 * gN.T
    out[m:, :m] = f2 * gN
    out[m:, m:] = f2 * g
    return out


def frame_change(C: InducedChart, x, u) -> np.ndarray:
    """Matrix taking split components ``(h, v)`` to induced-coordinate components.

    Horizontal basis vectors are ``d/dx^i - N^k_i d/du^k``.
    """
    m = C.base.dim
    T = np.eye(2 * m)
    T[m:, :m] = -connection_matrix(C, x, u)
    return T


def curvature_from_metric_derivatives(g, dg, ddg) -> np.ndarray:
    """Lowered curvature ``R_ABCD = G(R(d_A, d_B) d_C, d_D)`` from ``g``, ``d g``, ``d d g``.

    ``dg[a, b, c] = d_a g_bc`` and ``ddg[a, b, c, d] = d_a d_b g_cd``.
    """
    ginv = np.linalg.inv(g)
    first = 0.5 * (np.einsum("bca->abc", dg) + np.einsum("cba->abc", dg) - dg)  # Gamma_{a,bc}
    second = (
        np.einsum("acbd->abcd", ddg)
        + np.einsum("bdac->abcd", ddg)
        - np.einsum("adbc->abcd", ddg)
        - np.einsum("bcad->abcd", ddg)
    )
    quad = np.einsum("ef,ebd,fac->abcd", ginv, first, first) - np.einsum(
        "ef,ead,fbc->abcd", ginv, first, first
    )
    return 0.5 * second + quad


class OracleAtPoint:
    """Coordinate curvature of ``(TM, G)`` at one point, computed once."""

    def __init__(self, C: InducedChart, x, u, scheme: FDScheme = ORACLE_SCHEME):
        self.C = C
        self.x = np.asarray(x, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.p = np.concatenate([self.x, self.u])
        self.scheme = scheme
        self.metric = metric_matrix_TM(C, self.p)
        self.T = frame_change(C, self.x, self.u)

    def _field(self, p):
        return metric_matrix_TM(self.C, p)

    @cached_property
    def metric_derivative(self) -> np.ndarray:
        return finite_difference_derivative(self._field, self.p, self.scheme, self.C.contains)

    @cached_property
    def curvature(self) -> np.ndarray:
        ddg = finite_difference_hessian(self._field, self.p, self.scheme, self.C.contains)
        R = curvature_from_metric_derivatives(self.metric, self.metric_derivative, ddg)
        if not np.all(np.isfinite(R)):
            raise NumericError("non-finite oracle curvature")
        return R

    @cached_property
    def christoffel(self) -> np.ndarray:
        return bm.christoffel_from_metric_derivative(self.metric, self.metric_derivative)

    def to_coordinates(self, X) -> np.ndarray:
        """Induced-coordinate components of a split vector (anything with ``.h``, ``.v``)."""
        return self.T @ np.concatenate([np.asarray(X.h, float), np.asarray(X.v, float)])

    def curvature4(self, X, Y, Z, W) -> float:
        a, b, c, d = (self.to_coordinates(V) for V in (X, Y, Z, W))
        return float(np.einsum("abcd,a,b,c,d->", self.curvature, a, b, c, d))

    @cached_property
    def ricci(self) -> np.ndarray:
        """``ric_BC = G^{AD} R_{BADC}`` in induced coordinates."""
        return np.einsum("ad,badc->bc", np.linalg.inv(self.metric), self.curvature)

    @cached_property
    def scalar(self) -> float:
        return float(np.einsum("bc,bc->", np.linalg.inv(self.metric), self.ricci))

    def ricci_form(self, X, Y) -> float:
        return float(self.to_coordinates(X) @ self.ricci @ self.to_coordinates(Y))

    def connection(self, X, Y) -> np.ndarray:
        """``Gamma^C_AB X^A Y^B`` in induced coordinates (covariant derivative of constant fields)."""
        return np.einsum("cab,a,b->c", self.christoffel, self.to_coordinates(X), self.to_coordinates(Y))

    def from_coordinates(self, w) -> np.ndarray:
        """Split components ``(h, v)`` of an induced-coordinate vector, concatenated."""
        return np.linalg.solve(self.T, w)


def curvature_TM_coordinates(C: InducedChart, p, scheme: FDScheme = ORACLE_SCHEME) -> np.ndarray:
    x, u = _split_point(C, p)
    return OracleAtPoint(C, x, u, scheme).curvature


def curvature_in_adapted_frame(C: InducedChart, P, X, Y, Z, W, scheme: FDScheme = ORACLE_SCHEME) -> float:
    return OracleAtPoint(C, P.x, P.u, scheme).curvature4(X, Y, Z, W)


def ricci_scalar_TM(C: InducedChart, p, scheme: FDScheme = ORACLE_SCHEME):
    x, u = _split_point(C, p)
    o = OracleAtPoint(C, x, u, scheme)
    return o.ricci, o.scalar
