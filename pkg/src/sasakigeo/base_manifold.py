"""Riemannian manifolds in a single chart and their Levi-Civita curvature.

Conventions
-----------
``christoffel(M, x)[k, i, j]`` is the symbol with upper index ``k``.
``riemann(M, x)`` returns ``(R_up, R_low)`` where::

    R(d_i, d_j) d_k = R_up[l, i, j, k] d_l
    R_low[i, j, k, l] = g(R(d_i, d_j) d_k, d_l)

with ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``, so that round spheres
have positive sectional curvature ``R_low(X, Y, Y, X)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, GeometryError
from .tensorkit import (
    DEFAULT_SCHEME,
    FDScheme,
    finite_difference_derivative,
    gram_schmidt_frame,
)


@dataclass(frozen=True)
class ChartedManifold:
    """A Riemannian manifold given by metric components on a coordinate box.

    ``analytic_christoffel`` and ``analytic_curvature`` are optional closed
    forms; ``analytic_curvature`` returns the lowered tensor ``R_ijkl``.
    """

    dim: int
    metric: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    analytic_christoffel: Optional[Callable[[np.ndarray], np.ndarray]] = None
    analytic_curvature: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""
    scheme: FDScheme = DEFAULT_SCHEME
    is_flat: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dimension must be positive")
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != (self.dim,) or self.upper.shape != (self.dim,):
            raise ConfigurationError("domain box must have one bound per coordinate")
        if np.any(self.lower >= self.upper):
            raise ConfigurationError("empty domain box")

    @property
    def has_analytic(self) -> bool:
        return self.analytic_christoffel is not None

    def contains(self, x, margin: float = 0.0) -> bool:
        """Whether ``x`` lies in the box shrunk by ``margin`` times its width."""
        x = np.asarray(x, dtype=float)
        pad = margin * (self.upper - self.lower)
        return bool(np.all(x > self.lower + pad) and np.all(x < self.upper - pad))

    def sample_point(self, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
        pad = margin * (self.upper - self.lower)
        return rng.uniform(self.lower + pad, self.upper - pad)

    def metric_at(self, x) -> np.ndarray:
        x = _checked(self, x)
        g = np.asarray(self.metric(x), dtype=float)
        return g


def _checked(M: ChartedManifold, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (M.dim,):
        raise DomainError(f"expected a point with {M.dim} coordinates, got shape {x.shape}")
    if not M.contains(x):
        raise DomainError(f"point {x} is outside the chart of {M.label or 'manifold'}")
    return x


def _inverse(g: np.ndarray) -> np.ndarray:
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("metric is not positive-definite") from exc
    return np.linalg.inv(g)


def christoffel_from_metric_derivative(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols from ``g`` and ``dg[l, i, j] = d_l g_ij``."""
    ginv = _inverse(g)
    # first kind: Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (
        np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    )
    return np.einsum("kl,lij->kij", ginv, first)


def christoffel(M: ChartedManifold, x, use_analytic: bool = True) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]``, symmetric in ``(i, j)``."""
    x = _checked(M, x)
    if use_analytic and M.analytic_christoffel is not None:
        return np.asarray(M.analytic_christoffel(x), dtype=float)
    dg = finite_difference_derivative(M.metric, x, M.scheme, M.contains)
    return christoffel_from_metric_derivative(np.asarray(M.metric(x), dtype=float), dg)


def riemann(M: ChartedManifold, x, use_analytic: bool = True):
    """Curvature tensor ``(R_up[l, i, j, k], R_low[i, j, k, l])``."""
    x = _checked(M, x)
    g = np.asarray(M.metric(x), dtype=float)
    if use_analytic and M.analytic_curvature is not None:
        low = np.asarray(M.analytic_curvature(x), dtype=float)
        up = np.einsum("lm,ijkm->lijk", _inverse(g), low)
        return up, low
    gam = christoffel(M, x, use_analytic)
    dgam = finite_difference_derivative(
        lambda y: christoffel(M, y, use_analytic), x, M.scheme, M.contains
    )
    up = (
        np.einsum("iljk->lijk", dgam)
        - np.einsum("jlik->lijk", dgam)
        + np.einsum("lim,mjk->lijk", gam, gam)
        - np.einsum("ljm,mik->lijk", gam, gam)
    )
    low = np.einsum("lm,mijk->ijkl", g, up)
    return up, low


def nabla_riemann(M: ChartedManifold, x, use_analytic: bool = True) -> np.ndarray:
    """Covariant derivative ``out[a, i, j, k, l] = (nabla_a R)_ijkl`` of the lowered tensor."""
    x = _checked(M, x)
    if M.is_flat:
        return np.zeros((M.dim,) * 5)
    gam = christoffel(M, x, use_analytic)
    _, low = riemann(M, x, use_analytic)
    dlow = finite_difference_derivative(
        lambda y: riemann(M, y, use_analytic)[1], x, M.scheme, M.contains
    )
    return (
        dlow
        - np.einsum("mai,mjkl->aijkl", gam, low)
        - np.einsum("maj,imkl->aijkl", gam, low)
        - np.einsum("mak,ijml->aijkl", gam, low)
        - np.einsum("mal,ijkm->aijkl", gam, low)
    )


def orthonormal_frame(M: ChartedManifold, x, distinguished_last=None) -> np.ndarray:
    """g-orthonormal frame at ``x`` (rows), Gram-Schmidt on the coordinate basis."""
    g = M.metric_at(x)
    return gram_schmidt_frame(g, distinguished_last=distinguished_last)


def ricci_and_scalar(M: ChartedManifold, x, frame: Optional[np.ndarray] = None):
    """Ricci tensor ``ric_jk = sum_i R(d_j, e_i, e_i, d_k)`` and its trace ``S``."""
    x = _checked(M, x)
    if frame is None:
        frame = orthonormal_frame(M, x)
    _, low = riemann(M, x)
    ric = np.einsum("jabk,ia,ib->jk", low, frame, frame)
    scal = float(np.einsum("jk,ij,ik->", ric, frame, frame))
    return ric, scal


def sectional_curvature(M: ChartedManifold, x, X, Y) -> float:
    """Sectional curvature of the plane spanned by ``X, Y`` (need not be orthonormal)."""
    g = M.metric_at(x)
    _, low = riemann(M, x)
    num = np.einsum("ijkl,i,j,k,l->", low, X, Y, Y, X)
    den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    return float(num / den)


# ---------------------------------------------------------------------------
# Zoo of test manifolds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bump:
    amplitude: float = 0.3
    center: Optional[tuple] = None
    width: float = 1.0


@dataclass(frozen=True)
class ZooSpec:
    """Recipe for a test manifold.

    ``kind`` is one of ``euclidean``, ``constant_curvature``, ``product``,
    ``perturbed``. ``product`` uses ``factors``; ``perturbed`` adds a
    Gaussian bump of amplitude ``bump.amplitude`` to the Euclidean metric.
    """

    kind: str
    dim: int = 0
    curvature_constant: float = 0.0
    factors: tuple = ()
    bump: Optional[Bump] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ZooSpec":
        d = dict(d)
        factors = tuple(cls.from_dict(f) for f in d.pop("factors", ()))
        bump = d.pop("bump", None)
        if bump is not None:
            bump = Bump(
                amplitude=float(bump.get("amplitude", 0.3)),
                center=tuple(bump["center"]) if bump.get("center") is not None else None,
                width=float(bump.get("width", 1.0)),
            )
        try:
            return cls(factors=factors, bump=bump, **d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind != "product":
            out["dim"] = self.dim
        if self.kind == "constant_curvature":
            out["curvature_constant"] = self.curvature_constant
        if self.factors:
            out["factors"] = [f.to_dict() for f in self.factors]
        if self.bump is not None:
            out["bump"] = {
                "amplitude": self.bump.amplitude,
                "center": list(self.bump.center) if self.bump.center is not None else None,
                "width": self.bump.width,
            }
        return out


def _space_form_curvature(c: float, metric):
    def curv(x):
        g = metric(x)
        return c * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))

    return curv


def euclidean(dim: int, half_width: float = 2.0) -> ChartedManifold:
    eye = np.eye(dim)
    return ChartedManifold(
        dim=dim,
        metric=lambda x: eye.copy(),
        lower=-half_width * np.ones(dim),
        upper=half_width * np.ones(dim),
        analytic_christoffel=lambda x: np.zeros((dim, dim, dim)),
        analytic_curvature=lambda x: np.zeros((dim,) * 4),
        label=f"euclidean({dim})",
        is_flat=True,
    )


def _diagonal_christoffel(h, dh):
    """Symbols of ``diag(h)`` given ``dh[j, k] = d_j h_k``."""
    m = h.size
    eye = np.eye(m)
    gam = (
        np.einsum("jk,ik->kij", eye, dh)
        + np.einsum("ik,jk->kij", eye, dh)
        - np.einsum("ij,ki->kij", eye, dh)
    )
    return gam / (2.0 * h)[:, None, None]


def sphere(dim: int, c: float = 1.0, cap_margin: float = 0.1) -> ChartedManifold:
    """Round sphere of curvature ``c > 0`` in hyperspherical (polar-cap) coordinates.

    ``g = (1/c) diag(1, s1^2, s1^2 s2^2, ...)`` with ``s_k = sin x_k``; the
    polar angles live in ``(cap_margin, pi - cap_margin)``.
    """
    if c <= 0:
        raise ConfigurationError("sphere requires positive curvature")

    def diag(x):
        s2 = np.sin(x[:-1]) ** 2
        return np.concatenate([[1.0], np.cumprod(s2)]) / c

    def metric(x):
        return np.diag(diag(x))

    def christ(x):
        h = diag(x)
        cot = np.cos(x[:-1]) / np.sin(x[:-1])
        dh = np.zeros((dim, dim))
        for k in range(1, dim):
            dh[:k, k] = 2.0 * cot[:k] * h[k]
        return _diagonal_christoffel(h, dh)

    lower = np.full(dim, cap_margin)
    upper = np.full(dim, np.pi - cap_margin)
    lower[-1], upper[-1] = -np.pi, np.pi
    return ChartedManifold(
        dim=dim,
        metric=metric,
        lower=lower,
        upper=upper,
        analytic_christoffel=christ,
        analytic_curvature=_space_form_curvature(c, metric),
        label=f"constant_curvature({dim}, {c:g})",
    )


def hyperbolic(dim: int, c: float = -1.0, half_width: float = 2.0, height=(0.3, 3.0)) -> ChartedManifold:
    """Hyperbolic space of curvature ``c < 0`` in the upper half-space model."""
    if c >= 0:
        raise ConfigurationError("hyperbolic space requires negative curvature")
    k = -c

    def metric(x):
        return np.eye(dim) / (k * x[-1] ** 2)

    def christ(x):
        # g = exp(2 psi) delta with d psi = -e_m / y
        dpsi = np.zeros(dim)
        dpsi[-1] = -1.0 / x[-1]
        eye = np.eye(dim)
        return (
            np.einsum("ki,j->kij", eye, dpsi)
            + np.einsum("kj,i->kij", eye, dpsi)
            - np.einsum("ij,k->kij", eye, dpsi)
        )

    lower = np.full(dim, -half_width)
    upper = np.full(dim, half_width)
    lower[-1], upper[-1] = height
    return ChartedManifold(
        dim=dim,
        metric=metric,
        lower=lower,
        upper=upper,
        analytic_christoffel=christ,
        analytic_curvature=_space_form_curvature(c, metric),
        label=f"constant_curvature({dim}, {c:g})",
    )


def constant_curvature(dim: int, c: float) -> ChartedManifold:
    if c > 0:
        return sphere(dim, c)
    if c < 0:
        return hyperbolic(dim, c)
    return euclidean(dim)


def product(first: ChartedManifold, second: ChartedManifold) -> ChartedManifold:
    """Riemannian product with block-diagonal metric."""
    p, q = first.dim, second.dim
    m = p + q

    def metric(x):
        g = np.zeros((m, m))
        g[:p, :p] = first.metric(x[:p])
        g[p:, p:] = second.metric(x[p:])
        return g

    christ = curv = None
    if first.has_analytic and second.has_analytic:

        def christ(x):
            gam = np.zeros((m, m, m))
            gam[:p, :p, :p] = christoffel(first, x[:p])
            gam[p:, p:, p:] = christoffel(second, x[p:])
            return gam

    if first.analytic_curvature is not None and second.analytic_curvature is not None:

        def curv(x):
            r = np.zeros((m,) * 4)
            r[:p, :p, :p, :p] = first.analytic_curvature(x[:p])
            r[p:, p:, p:, p:] = second.analytic_curvature(x[p:])
            return r

    return ChartedManifold(
        dim=m,
        metric=metric,
        lower=np.concatenate([first.lower, second.lower]),
        upper=np.concatenate([first.upper, second.upper]),
        analytic_christoffel=christ,
        analytic_curvature=curv,
        label=f"product({first.label}, {second.label})",
        is_flat=first.is_flat and second.is_flat,
    )


def perturbed_euclidean(dim: int, bump: Bump = Bump(), half_width: float = 1.0) -> ChartedManifold:
    """Euclidean metric plus ``A exp(-|x - c|^2 / w^2) K`` with ``K`` a fixed SPD matrix.

    ``K`` has unit diagonal and 1/2 off the diagonal, so the perturbation is
    not conformal. Only finite-difference derivatives are available.
    """
    center = np.zeros(dim) if bump.center is None else np.asarray(bump.center, dtype=float)
    if center.shape != (dim,):
        raise ConfigurationError("bump center must have one entry per coordinate")
    if bump.width <= 0:
        raise ConfigurationError("bump width must be positive")
    shape = np.eye(dim) + 0.5 * (np.ones((dim, dim)) - np.eye(dim))
    amp, w = bump.amplitude, bump.width

    def metric(x):
        b = np.exp(-np.sum((x - center) ** 2) / w**2)
        return np.eye(dim) + amp * b * shape

    M = ChartedManifold(
        dim=dim,
        metric=metric,
        lower=-half_width * np.ones(dim),
        upper=half_width * np.ones(dim),
        label=f"perturbed_euclidean({dim}, A={amp:g})",
    )
    # positive-definiteness at a deterministic sample of the box
    rng = np.random.default_rng(0)
    probes = [center] + [M.sample_point(rng, 0.0) for _ in range(32)]
    for x in probes:
        if np.min(np.linalg.eigvalsh(metric(np.asarray(x)))) <= 0:
            raise ConfigurationError("bump amplitude destroys positive-definiteness")
    return M


def construct_zoo(spec: ZooSpec) -> ChartedManifold:
    """Build the manifold described by ``spec``."""
    kind = spec.kind
    if kind == "euclidean":
        _need_dim(spec, 1)
        return euclidean(spec.dim)
    if kind == "constant_curvature":
        _need_dim(spec, 2)
        return constant_curvature(spec.dim, float(spec.curvature_constant))
    if kind == "product":
        if len(spec.factors) != 2:
            raise ConfigurationError("product needs exactly two factors")
        return product(construct_zoo(spec.factors[0]), construct_zoo(spec.factors[1]))
    if kind == "perturbed":
        _need_dim(spec, 2)
        return perturbed_euclidean(spec.dim, spec.bump or Bump())
    raise ConfigurationError(f"unknown manifold kind {kind!r}")


def _need_dim(spec: ZooSpec, least: int):
    if not isinstance(spec.dim, int) or spec.dim < least:
        raise ConfigurationError(f"{spec.kind} needs integer dim >= {least}, got {spec.dim!r}")
