"""The tangent sphere bundle ``S_rM = {u : |u| = r(x)}`` inside ``(TM, G)``.

Constant weights ``f1, f2`` throughout. The radius is either a positive
constant or a function on the base (given with or without derivatives).
With ``xi_u = u`` the spray, the unit normal is

    U = a grad r + b xi,   b = 1 / (r sqrt(f2 + delta f2 tau^2)),   a = -delta b r,

where ``tau = |grad r|``. Curvature of ``S_rM`` is only provided for a
constant radius, through the Gauss equation with the scalar second
fundamental form ``alpha(X, Y) = G(nabla^G_X Y, U)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from . import base_manifold as bm
from .base_manifold import ChartedManifold
from .errors import ConfigurationError, PreconditionError
from .parallel import ordered_map
from .sasaki_core import (
    LocalSasaki,
    SplitTangentVector,
    TangentBundlePoint,
    WeightedSasakiMetric,
    _ensure_split,
)
from .serialize import write_csv, write_json
from .tensorkit import finite_difference_derivative, gram_schmidt_frame

Radius = Union[float, Callable[[np.ndarray], float]]


@dataclass(frozen=True)
class SphereBundleConfig:
    """Ambient weighted metric and radius.

    ``grad_radius`` returns the coordinate differential ``d_i r`` and
    ``hess_radius`` the coordinate second partials ``d_i d_j r``; either is
    finite-differenced when omitted.
    """

    G: WeightedSasakiMetric
    radius: Radius
    grad_radius: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess_radius: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not callable(self.radius) and not self.radius > 0:
            raise ConfigurationError(f"radius must be positive, got {self.radius}")

    @property
    def constant(self) -> bool:
        return not callable(self.radius)

    @property
    def base(self) -> ChartedManifold:
        return self.G.base

    @property
    def n(self) -> int:
        return self.base.dim - 1

    def r_at(self, x) -> float:
        r = float(self.radius(np.asarray(x, dtype=float))) if callable(self.radius) else float(self.radius)
        if not r > 0:
            raise PreconditionError(f"radius must be positive, got {r} at {x}")
        return r

    def dr(self, x) -> np.ndarray:
        m = self.base.dim
        if self.constant:
            return np.zeros(m)
        x = np.asarray(x, dtype=float)
        if self.grad_radius is not None:
            return np.asarray(self.grad_radius(x), dtype=float)
        return finite_difference_derivative(lambda y: np.array(self.r_at(y)), x, self.base.scheme, self.base.contains)

    def grad_r(self, x) -> np.ndarray:
        return np.linalg.solve(self.base.metric_at(x), self.dr(x))

    def tau(self, x) -> float:
        return math.sqrt(max(0.0, float(self.dr(x) @ self.grad_r(x))))

    def hess_r(self, x) -> np.ndarray:
        """Covariant Hessian ``(nabla d r)_ij = d_i d_j r - Gamma^k_ij d_k r``."""
        m = self.base.dim
        if self.constant:
            return np.zeros((m, m))
        x = np.asarray(x, dtype=float)
        if self.hess_radius is not None:
            dd = np.asarray(self.hess_radius(x), dtype=float)
        else:
            dd = finite_difference_derivative(self.dr, x, self.base.scheme, self.base.contains)
            dd = 0.5 * (dd + dd.T)
        return dd - np.einsum("kij,k->ij", bm.christoffel(self.base, x), self.dr(x))


@dataclass(frozen=True)
class NormalField:
    """Coefficients of ``U = a grad r + b xi``."""

    a: float
    b: float


class LocalSphereBundle:
    """Geometry of ``S_rM`` at one point ``u``, sharing one :class:`LocalSasaki`."""

    def __init__(self, C: SphereBundleConfig, P: TangentBundlePoint, tol: float = 1e-8):
        self.C, self.P = C, P
        self.tol = tol
        self.m, self.n = C.base.dim, C.n
        self.f1, self.f2, self.delta = C.G.f1, C.G.f2, C.G.delta
        self.r = C.r_at(P.x)
        g = C.base.metric_at(P.x)
        norm_u = math.sqrt(float(P.u @ g @ P.u))
        if abs(norm_u - self.r) > tol * max(1.0, self.r):
            raise PreconditionError(f"|u| = {norm_u:.12g} is not the radius {self.r:.12g}")
        self.frame = bm.orthonormal_frame(C.base, P.x, distinguished_last=P.u)
        self.L = LocalSasaki(C.G, P, frame=self.frame)
        self.dr = C.dr(P.x)
        self.grad_r = C.grad_r(P.x)
        self.tau = C.tau(P.x)

    # -- normal and tangency -------------------------------------------------------

    def tangency_defect(self, X) -> float:
        X = _ensure_split(X)
        return self.L.ip(X.v, self.P.u) - self.r * float(X.h @ self.dr)

    def _require_tangent(self, *vectors):
        for X in vectors:
            X = _ensure_split(X)
            size = math.sqrt(self.L.ip(X.h, X.h) + self.L.ip(X.v, X.v))
            if abs(self.tangency_defect(X)) > self.tol * max(1.0, self.r * size):
                raise PreconditionError("argument is not tangent to the sphere bundle")

    @cached_property
    def normal(self) -> NormalField:
        b = 1.0 / (self.r * math.sqrt(self.f2 + self.delta * self.f2 * self.tau**2))
        return NormalField(a=-self.delta * b * self.r, b=b)

    @cached_property
    def unit_normal_vector(self) -> SplitTangentVector:
        nf = self.normal
        return SplitTangentVector(nf.a * self.grad_r, nf.b * self.P.u)

    def tangent_frame(self) -> List[SplitTangentVector]:
        """G-orthonormal frame of ``T_u S_rM`` (``2m - 1`` vectors).

        Constant radius: all horizontal ``e_i / sqrt f1`` and the vertical
        ``e_i / sqrt f2`` except ``e_m = u / r``. Otherwise Gram-Schmidt in
        ``G`` with the unit normal split off.
        """
        E = self.frame
        if self.C.constant:
            hs = [SplitTangentVector.horizontal(e / math.sqrt(self.f1)) for e in E]
            vs = [SplitTangentVector.vertical(e / math.sqrt(self.f2)) for e in E[:-1]]
            return hs + vs
        g, m = self.L.g, self.m
        gram = np.zeros((2 * m, 2 * m))
        gram[:m, :m], gram[m:, m:] = self.f1 * g, self.f2 * g
        rows = gram_schmidt_frame(gram, distinguished_last=self.unit_normal_vector.as_array())
        return [SplitTangentVector.from_array(r) for r in rows[:-1]]

    # -- second fundamental form and mean curvature --------------------------------

    @staticmethod
    def _sym(a, B, b) -> float:
        # bitwise symmetric in (a, b)
        return 0.5 * (float(a @ B @ b) + float(b @ B @ a))

    def alpha_closed(self, X, Y) -> float:
        if not self.C.constant:
            raise PreconditionError("the closed form needs a constant radius")
        X, Y = _ensure_split(X), _ensure_split(Y)
        return -math.sqrt(self.f2) / self.r * self._sym(X.v, self.L.g, Y.v)

    def alpha_general(self, X, Y) -> float:
        X, Y = _ensure_split(X), _ensure_split(Y)
        nf = self.normal
        A_r = float(self.L.tensor_A(X, Y).h @ self.dr)
        hess = self._sym(X.h, self.C.hess_r(self.P.x), Y.h)
        xr, yr = float(X.h @ self.dr), float(Y.h @ self.dr)
        return nf.a * self.f1 * (A_r - hess) + nf.b * self.f2 * (xr * yr - self._sym(X.v, self.L.g, Y.v))

    def second_fundamental(self, X, Y, method: str = "auto") -> float:
        self._require_tangent(X, Y)
        if method == "auto":
            method = "closed" if self.C.constant else "general"
        if method == "closed":
            return self.alpha_closed(X, Y)
        if method == "general":
            return self.alpha_general(X, Y)
        raise ValueError(f"unknown method {method!r}")

    def mean_curvature(self, method: str = "closed") -> float:
        if np.linalg.norm(self.C.hess_r(self.P.x)) >= 1e-8:
            raise PreconditionError("mean curvature formula needs a parallel radius gradient")
        if method == "closed":
            return -self.n / (self.r * math.sqrt(self.f2 + self.delta * self.f2 * self.tau**2))
        if method == "trace":
            return float(sum(self.second_fundamental(E, E) for E in self.tangent_frame()))
        raise ValueError(f"unknown method {method!r}")

    # -- intrinsic curvature (constant radius) ---------------------------------------

    def _require_constant(self):
        if not self.C.constant:
            raise PreconditionError("curvature of the sphere bundle needs a constant radius")

    def curvature(self, X, Y, Z, W) -> float:
        """Gauss equation ``R^G(X,Y,Z,W) - alpha(X,Z) alpha(Y,W) + alpha(Y,Z) alpha(X,W)``."""
        self._require_constant()
        self._require_tangent(X, Y, Z, W)
        a = self.alpha_closed
        return self.L.curvature_RG4(X, Y, Z, W) - a(X, Z) * a(Y, W) + a(Y, Z) * a(X, W)

    def sectional(self, X, Y) -> float:
        X, Y = _ensure_split(X), _ensure_split(Y)
        G = self.L.G_inner
        den = G(X, X) * G(Y, Y) - G(X, Y) ** 2
        if not den > 0:
            raise PreconditionError("plane vectors are linearly dependent")
        return self.curvature(X, Y, Y, X) / den

    def ricci(self, X, Y, method: str = "formula") -> float:
        self._require_constant()
        self._require_tangent(X, Y)
        X, Y = _ensure_split(X), _ensure_split(Y)
        if method == "formula":
            return self.L.ricci_G(X, Y) + (self.n - 1) / self.r**2 * self.L.ip(X.v, Y.v)
        if method == "trace":
            return float(sum(self.curvature(X, E, E, Y) for E in self.tangent_frame()))
        raise ValueError(f"unknown method {method!r}")

    def scalar(self, method: str = "formula") -> float:
        self._require_constant()
        if method == "formula":
            return self.L.scalar_G() + (self.n - 1) * self.n / (self.f2 * self.r**2)
        if method == "trace":
            F = self.tangent_frame()
            total = 0.0
            for i, A in enumerate(F):
                for B in F[i + 1 :]:
                    total += 2.0 * self.curvature(A, B, B, A)
            return total
        raise ValueError(f"unknown method {method!r}")


# -- functional interface ------------------------------------------------------------


def tangency_defect(C: SphereBundleConfig, P: TangentBundlePoint, X) -> float:
    return LocalSphereBundle(C, P).tangency_defect(X)


def unit_normal(C: SphereBundleConfig, P: TangentBundlePoint) -> NormalField:
    return LocalSphereBundle(C, P).normal


def second_fundamental(C: SphereBundleConfig, P: TangentBundlePoint, X, Y, method: str = "auto") -> float:
    return LocalSphereBundle(C, P).second_fundamental(X, Y, method)


def mean_curvature(C: SphereBundleConfig, P: TangentBundlePoint, method: str = "closed") -> float:
    return LocalSphereBundle(C, P).mean_curvature(method)


def curvature_SrM(C: SphereBundleConfig, P: TangentBundlePoint, X, Y, Z, W) -> float:
    return LocalSphereBundle(C, P).curvature(X, Y, Z, W)


def ricci_SrM(C: SphereBundleConfig, P: TangentBundlePoint, X, Y, method: str = "formula") -> float:
    return LocalSphereBundle(C, P).ricci(X, Y, method)


def scalar_SrM(C: SphereBundleConfig, P: TangentBundlePoint, method: str = "formula") -> float:
    return LocalSphereBundle(C, P).scalar(method)


def sample_bundle_point(M: ChartedManifold, r: float, rng: np.random.Generator, margin: float = 0.05):
    """Uniform ``x`` in the shrunken box and ``u`` uniform on the g-sphere of radius ``r``."""
    x = M.sample_point(rng, margin)
    E = bm.orthonormal_frame(M, x)
    z = rng.standard_normal(M.dim)
    return TangentBundlePoint(x, r * (z / np.linalg.norm(z)) @ E)


# -- positive scalar curvature scan ------------------------------------------------------


@dataclass
class ScanReport:
    """Grid minima of the scalar curvature of ``S_rM`` and their analysis."""

    dim: int
    rows: List[tuple] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def header(self) -> List[str]:
        m = self.dim
        return (
            ["f1", "f2", "r", "min_scalar"]
            + [f"argmin_x{i + 1}" for i in range(m)]
            + [f"argmin_u{i + 1}" for i in range(m)]
            + ["positive"]
        )

    def write_csv(self, path) -> None:
        write_csv(path, self.header, self.rows)

    def write_json(self, path) -> None:
        write_json(path, self.summary)


def _check_grid(name, grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ConfigurationError(f"{name} grid is empty")
    if not np.all(grid > 0):
        raise ConfigurationError(f"{name} grid must be positive")
    return np.sort(grid)


def _scalar_pieces(M: ChartedManifold, sample) -> tuple:
    """``(S, Q, x, u_hat)`` with ``Q`` the squared-norm sum for the g-unit direction."""
    x, u = sample
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    g = M.metric_at(x)
    nu = math.sqrt(float(u @ g @ u))
    if not nu > 0:
        raise ConfigurationError("sample fibre vectors must be nonzero")
    u_hat = u / nu
    S, Q = LocalSasaki(WeightedSasakiMetric(M), TangentBundlePoint(x, u_hat)).scalar_terms()
    return S, Q, x, u_hat


def _scalar_values(pieces, n, f1, f2, r) -> np.ndarray:
    # the curvature sum is quadratic in u, so |u| = r scales it by r^2
    S = np.array([p[0] for p in pieces])
    Q = np.array([p[1] for p in pieces])
    return S / f1 - f2 * r**2 * Q / (4.0 * f1**2) + (n - 1) * n / (f2 * r**2)


def scan_positive_scalar(
    M: ChartedManifold,
    f1_grid: Sequence[float],
    f2_grid: Sequence[float],
    r_grid: Sequence[float],
    sample_points: Sequence,
) -> ScanReport:
    """Minimum scalar curvature of ``(S_rM, G)`` over samples on every grid cell.

    ``sample_points`` holds ``(x, u)`` pairs; only the direction of ``u`` is
    used, rescaled to each radius of the grid. Sign changes of the minimum
    along any grid axis are reported as thresholds, bracketed by the grid
    and refined with Brent's method on the same sample set.
    """
    f1s, f2s, rs = _check_grid("f1", f1_grid), _check_grid("f2", f2_grid), _check_grid("r", r_grid)
    if len(sample_points) == 0:
        raise ConfigurationError("no sample points")
    m, n = M.dim, M.dim - 1
    pieces = ordered_map(lambda s: _scalar_pieces(M, s), sample_points)

    def min_scalar(f1, f2, r):
        return float(np.min(_scalar_values(pieces, n, f1, f2, r)))

    report = ScanReport(dim=m)
    mins = np.empty((f1s.size, f2s.size, rs.size))
    for i, f1 in enumerate(f1s):
        for j, f2 in enumerate(f2s):
            for k, r in enumerate(rs):
                vals = _scalar_values(pieces, n, f1, f2, r)
                a = int(np.argmin(vals))
                mins[i, j, k] = vals[a]
                _, _, x, u_hat = pieces[a]
                report.rows.append((f1, f2, r, float(vals[a]), *x, *(r * u_hat), bool(vals[a] > 0)))

    summary = {
        "dimension": m,
        "samples": len(pieces),
        "grid": {"f1": f1s.tolist(), "f2": f2s.tolist(), "r": rs.tolist()},
        "min_scalar": float(mins.min()),
        "all_positive": bool(np.all(mins > 0)),
        "any_positive": bool(np.any(mins > 0)),
    }
    if m == 2:
        summary["thresholds"] = []
        summary["note"] = (
            "dimension 2: the fibre term vanishes, so the scalar curvature of S_rM "
            "equals that of TM at every point of the bundle; no positivity frontier"
        )
        summary["max_abs_difference_from_TM"] = _dimension_two_gap(M, pieces, f1s, f2s, rs)
        report.summary = summary
        return report

    thresholds = []
    axes = (("f1", f1s), ("f2", f2s), ("r", rs))
    for axis, (name, grid) in enumerate(axes):
        others = [a for a in range(3) if a != axis]
        for idx in np.ndindex(*(axes[a][1].size for a in others)):
            fixed = {axes[a][0]: float(axes[a][1][i]) for a, i in zip(others, idx)}
            sl = [slice(None)] * 3
            for a, i in zip(others, idx):
                sl[a] = i
            line = mins[tuple(sl)]
            for k in range(grid.size - 1):
                lo_v, hi_v = line[k], line[k + 1]
                if (lo_v > 0) == (hi_v > 0):
                    continue

                def fn(t, name=name, fixed=fixed):
                    return min_scalar(**{**fixed, name: t})

                root = brentq(fn, grid[k], grid[k + 1], xtol=1e-12) if lo_v * hi_v < 0 else float(
                    grid[k] if lo_v == 0 else grid[k + 1]
                )
                thresholds.append(
                    {
                        "axis": name,
                        "fixed": fixed,
                        "bracket": [float(grid[k]), float(grid[k + 1])],
                        "refined": float(root),
                        "becomes": "positive" if hi_v > 0 else "non-positive",
                    }
                )
    summary["thresholds"] = thresholds
    summary["sign_change"] = bool(thresholds)
    if not thresholds:
        if summary["all_positive"]:
            summary["message"] = "no sign change; all positive"
        elif not summary["any_positive"]:
            summary["message"] = "no sign change; none positive"
        else:
            summary["message"] = "no sign change"
    summary["monotonicity"] = _monotonicity(mins, rs)
    report.summary = summary
    return report


def _monotonicity(mins: np.ndarray, rs: np.ndarray) -> dict:
    """Diagnostics only: none of these is asserted."""
    d_f1 = np.diff(mins, axis=0)
    d_f2 = -np.diff(mins, axis=1)  # f2 decreasing
    out = {
        "f1_increasing_fraction": float(np.mean(d_f1 > 0)) if d_f1.size else None,
        "f2_decreasing_fraction": float(np.mean(d_f2 > 0)) if d_f2.size else None,
    }
    small = []
    if rs.size >= 3:
        for i, j in np.ndindex(mins.shape[0], mins.shape[1]):
            first = mins[i, j, :3]
            small.append(bool(first[0] > first[1] > first[2]))
        out["small_radius_increasing_fraction"] = float(np.mean(small))
    return out


def _dimension_two_gap(M, pieces, f1s, f2s, rs) -> float:
    """``max |S(S_rM) - S(TM)|`` over samples at the grid corners, via both modules."""
    worst = 0.0
    for f1 in (f1s[0], f1s[-1]):
        for f2 in (f2s[0], f2s[-1]):
            for r in (rs[0], rs[-1]):
                G = WeightedSasakiMetric(M, float(f1), float(f2))
                C = SphereBundleConfig(G, float(r))
                for _, _, x, u_hat in pieces[:5]:
                    P = TangentBundlePoint(x, r * u_hat)
                    worst = max(worst, abs(scalar_SrM(C, P) - LocalSasaki(G, P).scalar_G()))
    return worst
