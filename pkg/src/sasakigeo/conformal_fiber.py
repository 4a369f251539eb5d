"""Flat base with constant ``f1`` and a conformal fibre weight ``f2 = exp(2 phi2)``.

On ``M = R^m`` the horizontal lift of a coordinate vector is the coordinate
vector itself, so split components ``(h, v)`` coincide with the induced
coordinates ``(dx, du)``. The Levi-Civita connection of ``G`` differs from
the flat one by the symmetric tensor

    C(X, Y) = X(phi2) Y^v + Y(phi2) X^v - delta <X^v, Y^v> grad phi2,

with ``delta = f2 / f1`` now a function on the base. ``X(phi2)`` always
means ``d phi2(X^h)`` because ``phi2`` is pulled back from ``M``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import base_manifold as bm
from .errors import ConfigurationError, DivergenceError, PreconditionError
from .sasaki_core import SplitTangentVector, TangentBundlePoint, _ensure_split
from .serialize import write_csv
from .tensorkit import FDScheme, finite_difference_derivative

ScalarField = Callable[[np.ndarray], float]

_FD = FDScheme(step=1e-3, order=4, richardson=True)


class NormalizationWarning(UserWarning):
    """Raised when a plane basis had to be made G-orthonormal."""


@dataclass(frozen=True)
class ConformalFiberMetric:
    """``G = f1 g + exp(2 phi2) g`` on ``T R^m``.

    Parameters
    ----------
    dim : int
        Dimension of the Euclidean base.
    f1 : float
        Constant horizontal weight.
    phi2 : callable
        Base point to real.
    grad_phi2, hess_phi2 : callable, optional
        Analytic derivatives. Missing ones are finite-differenced; supplied
        ones are checked against finite differences at a probe point.
    """

    dim: int
    f1: float
    phi2: ScalarField
    grad_phi2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess_phi2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    consistency_tol: float = 1e-6

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dimension must be positive")
        if not self.f1 > 0:
            raise ConfigurationError("f1 must be positive")
        probe = np.linspace(-0.3, 0.4, self.dim)
        if self.grad_phi2 is not None:
            fd = finite_difference_derivative(lambda y: np.array(self.phi2(y)), probe, _FD)
            _consistent(self.grad(probe), fd, self.consistency_tol, "gradient")
        if self.hess_phi2 is not None:
            fd = finite_difference_derivative(self.grad, probe, _FD)
            _consistent(self.hess(probe), fd, self.consistency_tol, "Hessian")

    @classmethod
    def linear(cls, dim: int, f1: float, coeffs, offset: float = 0.0) -> "ConformalFiberMetric":
        """``phi2(x) = offset + coeffs . x``, with exact derivatives."""
        c = np.zeros(dim)
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        c[: coeffs.size] = coeffs
        return cls(
            dim,
            f1,
            phi2=lambda x: offset + float(c @ x),
            grad_phi2=lambda x: c.copy(),
            hess_phi2=lambda x: np.zeros((dim, dim)),
        )

    @property
    def base(self) -> bm.ChartedManifold:
        return bm.euclidean(self.dim)

    def f2(self, x) -> float:
        # overflow gives inf, which the integrator reports as divergence
        with np.errstate(over="ignore"):
            return float(np.exp(2.0 * float(self.phi2(np.asarray(x, dtype=float)))))

    def delta(self, x) -> float:
        return self.f2(x) / self.f1

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad_phi2 is not None:
            return np.asarray(self.grad_phi2(x), dtype=float)
        return finite_difference_derivative(lambda y: np.array(self.phi2(y)), x, _FD)

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess_phi2 is not None:
            return np.asarray(self.hess_phi2(x), dtype=float)
        H = finite_difference_derivative(self.grad, x, _FD)
        return 0.5 * (H + H.T)

    def epsilon(self, x) -> float:
        return float(np.linalg.norm(self.grad(x)))

    def G_inner(self, x, X, Y) -> float:
        X, Y = _ensure_split(X), _ensure_split(Y)
        return self.f1 * float(X.h @ Y.h) + self.f2(x) * float(X.v @ Y.v)


def _consistent(given, fd, tol, what):
    given = np.asarray(given, dtype=float)
    if given.shape != fd.shape:
        raise ConfigurationError(f"{what} has shape {given.shape}, expected {fd.shape}")
    err = np.max(np.abs(given - fd)) / max(1.0, np.max(np.abs(fd)))
    if err > tol:
        raise ConfigurationError(f"supplied {what} disagrees with finite differences ({err:.2e})")


def connection_conformal(Gc: ConformalFiberMetric, P: TangentBundlePoint, X, Y) -> SplitTangentVector:
    """Difference tensor ``nabla^G_X Y - D_X Y`` at ``P`` (symmetric in ``X, Y``)."""
    X, Y = _ensure_split(X), _ensure_split(Y)
    grad = Gc.grad(P.x)
    xphi, yphi = float(grad @ X.h), float(grad @ Y.h)
    hor = -Gc.delta(P.x) * float(X.v @ Y.v) * grad
    return SplitTangentVector(hor, xphi * Y.v + yphi * X.v)


def curvature_conformal(Gc: ConformalFiberMetric, P: TangentBundlePoint, X, Y, Z) -> SplitTangentVector:
    """``R^G(X, Y) Z`` for the conformal fibre metric on a flat base."""
    X, Y, Z = _ensure_split(X), _ensure_split(Y), _ensure_split(Z)
    grad, H = Gc.grad(P.x), Gc.hess(P.x)
    d = Gc.delta(P.x)
    eps2 = float(grad @ grad)
    xp, yp, zp = float(grad @ X.h), float(grad @ Y.h), float(grad @ Z.h)
    xz, yz = float(X.v @ Z.v), float(Y.v @ Z.v)
    HX, HY = H @ X.h, H @ Y.h
    ver = (xp * zp + d * eps2 * xz + float(HX @ Z.h)) * Y.v - (yp * zp + d * eps2 * yz + float(HY @ Z.h)) * X.v
    hor = -d * (xp * yz - yp * xz) * grad - d * yz * HX + d * xz * HY
    return SplitTangentVector(hor, ver)


def curvature_conformal4(Gc: ConformalFiberMetric, P: TangentBundlePoint, X, Y, Z, W) -> float:
    return Gc.G_inner(P.x, curvature_conformal(Gc, P, X, Y, Z), W)


def _require_parallel_gradient(Gc, x, tol=1e-8):
    h = np.linalg.norm(Gc.hess(x))
    if h >= tol:
        raise PreconditionError(f"grad phi2 is not parallel here (|hess| = {h:.3e})")


def plane_curvature_form(Gc: ConformalFiberMetric, P: TangentBundlePoint, X, Y) -> float:
    """``G(R^G(X, Y) Y, X)`` through the split along ``grad phi2``.

    With ``X^h = a grad phi2 + X'`` and ``Y^h = b grad phi2 + Y'``,

        -f2 eps^4 |b X^v - a Y^v|^2 - f2 eps^2 delta (|X^v|^2 |Y^v|^2 - <X^v, Y^v>^2).

    Valid for any pair when ``grad phi2`` is parallel; no normalisation.
    """
    X, Y = _ensure_split(X), _ensure_split(Y)
    _require_parallel_gradient(Gc, P.x)
    grad = Gc.grad(P.x)
    eps2 = float(grad @ grad)
    f2, d = Gc.f2(P.x), Gc.delta(P.x)
    if eps2 == 0.0:
        return 0.0
    a, b = float(grad @ X.h) / eps2, float(grad @ Y.h) / eps2
    mix = b * X.v - a * Y.v
    gram = float(X.v @ X.v) * float(Y.v @ Y.v) - float(X.v @ Y.v) ** 2
    return -f2 * eps2**2 * float(mix @ mix) - f2 * eps2 * d * gram


def sectional_conformal(Gc: ConformalFiberMetric, P: TangentBundlePoint, X, Y, tol: float = 1e-10) -> float:
    """Sectional curvature of the plane ``span(X, Y)``.

    A basis that is not G-orthonormal is orthonormalised first and a
    :class:`NormalizationWarning` is issued.
    """
    X, Y = _ensure_split(X), _ensure_split(Y)
    _require_parallel_gradient(Gc, P.x)
    ip = lambda A, B: Gc.G_inner(P.x, A, B)  # noqa: E731
    if abs(ip(X, X) - 1) > tol or abs(ip(Y, Y) - 1) > tol or abs(ip(X, Y)) > tol:
        warnings.warn("plane basis was not G-orthonormal; normalised", NormalizationWarning, stacklevel=2)
        X = X / math.sqrt(ip(X, X))
        y0 = ip(Y, Y)
        Y = Y - ip(X, Y) * X
        ny = ip(Y, Y)
        if not ny > 1e-12 * y0:
            raise PreconditionError("plane vectors are linearly dependent")
        Y = Y / math.sqrt(ny)
    return plane_curvature_form(Gc, P, X, Y)


def fiber_second_fundamental(Gc: ConformalFiberMetric, P: TangentBundlePoint, X, Y) -> np.ndarray:
    """Second fundamental form of the fibre ``T_xM`` on vertical ``X, Y``.

    It is the horizontal part of ``nabla^G_X Y`` for vertical fields with
    constant components, namely ``-delta <X^v, Y^v> grad phi2``.
    """
    X, Y = _ensure_split(X), _ensure_split(Y)
    if np.any(X.h) or np.any(Y.h):
        raise PreconditionError("fibre second fundamental form takes vertical vectors")
    return connection_conformal(Gc, P, X, Y).h


# -- geodesics ----------------------------------------------------------------


@dataclass(frozen=True)
class BundleState:
    """Position ``(x, u)`` and velocity ``(x_dot, u_dot)`` of a curve in ``T R^m``."""

    x: np.ndarray
    u: np.ndarray
    x_dot: np.ndarray
    u_dot: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.u, self.x_dot, self.u_dot]).astype(float)

    @classmethod
    def from_array(cls, a) -> "BundleState":
        a = np.asarray(a, dtype=float)
        m = a.size // 4
        return cls(a[:m], a[m : 2 * m], a[2 * m : 3 * m], a[3 * m :])


def geodesic_rhs(Gc: ConformalFiberMetric, s: BundleState, literal: bool = False) -> BundleState:
    """Time derivative of ``s`` along a G-geodesic.

    ``x'' = delta |u'|^2 grad phi2`` and ``u'' = -2 (x' . grad phi2) u'``.
    With ``literal=True`` the first equation carries ``f2`` in place of
    ``delta``; the two agree only when ``f1 = 1``.
    """
    grad = Gc.grad(s.x)
    w = Gc.f2(s.x) if literal else Gc.delta(s.x)
    x_dd = w * float(s.u_dot @ s.u_dot) * grad
    u_dd = -2.0 * float(s.x_dot @ grad) * s.u_dot
    return BundleState(s.x_dot, s.u_dot, x_dd, u_dd)


@dataclass
class Trajectory:
    """Times ``t`` and stacked states ``Y[k] = BundleState.as_array()``."""

    t: np.ndarray
    Y: np.ndarray
    dim: int

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k) -> BundleState:
        return BundleState.from_array(self.Y[k])

    @property
    def states(self) -> List[BundleState]:
        return [self[k] for k in range(len(self))]

    def g_speed(self, Gc: ConformalFiberMetric) -> np.ndarray:
        return np.array([g_speed(Gc, s) for s in self.states])


def g_speed(Gc: ConformalFiberMetric, s: BundleState) -> float:
    return math.sqrt(Gc.f1 * float(s.x_dot @ s.x_dot) + Gc.f2(s.x) * float(s.u_dot @ s.u_dot))


def integrate_geodesic(
    Gc: ConformalFiberMetric, s0: BundleState, T: float, dt: float, literal: bool = False
) -> Trajectory:
    """Classical RK4 with ``ceil(T / dt)`` steps; the last one is shortened to land on ``T``.

    Raises
    ------
    DivergenceError
        If a state stops being finite; ``partial`` holds the trajectory so far.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    if not T >= dt:
        raise ConfigurationError("T must be at least dt")
    n = math.ceil(T / dt - 1e-9)
    m = s0.x.size

    def f(y):
        return geodesic_rhs(Gc, BundleState.from_array(y), literal).as_array()

    Y = np.empty((n + 1, 4 * m))
    t = np.empty(n + 1)
    Y[0], t[0] = s0.as_array(), 0.0
    for k in range(n):
        h = min(dt, T - t[k]) if k == n - 1 else dt
        y = Y[k]
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            Y[k + 1] = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t[k + 1] = T if k == n - 1 else t[k] + h
        if not np.all(np.isfinite(Y[k + 1])):
            raise DivergenceError(
                f"geodesic state stopped being finite at t={t[k + 1]:.6g}",
                partial=Trajectory(t[: k + 1].copy(), Y[: k + 1].copy(), m),
            )
    return Trajectory(t, Y, m)


def speed_drift(Gc: ConformalFiberMetric, traj: Trajectory) -> float:
    """``max |speed - speed_0| / speed_0`` (absolute if the initial speed is 0)."""
    s = traj.g_speed(Gc)
    scale = s[0] if s[0] > 0 else 1.0
    return float(np.max(np.abs(s - s[0])) / scale)


def convergence_order(Gc: ConformalFiberMetric, s0: BundleState, T: float, dt: float) -> float:
    """Observed order from terminal states at ``dt, dt/2, dt/4``."""
    ends = [integrate_geodesic(Gc, s0, T, dt / 2**k).Y[-1] for k in range(3)]
    e1 = np.linalg.norm(ends[0] - ends[1])
    e2 = np.linalg.norm(ends[1] - ends[2])
    if e2 == 0.0:
        return float("inf")
    return math.log2(e1 / e2)


def write_trajectory_csv(path, Gc: ConformalFiberMetric, traj: Trajectory) -> None:
    m = traj.dim
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(m)]
        + [f"u{i + 1}" for i in range(m)]
        + [f"xdot{i + 1}" for i in range(m)]
        + [f"udot{i + 1}" for i in range(m)]
        + ["g_speed"]
    )
    speeds = traj.g_speed(Gc)
    write_csv(path, header, ([t, *y, sp] for t, y, sp in zip(traj.t, traj.Y, speeds)))
