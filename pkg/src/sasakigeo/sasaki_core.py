"""Levi-Civita curvature of ``G = f1 pi*g + f2 pi*g`` on ``TM`` for constant weights.

Tangent vectors of ``TM`` at ``u in T_xM`` are handled as
:class:`SplitTangentVector` pairs ``(h, v)``: the horizontal and vertical
parts, each written in the coordinate basis of ``T_xM``. Angle brackets
below mean the base metric ``g`` applied to the matching parts, and
``G(X, Y) = f1 g(X.h, Y.h) + f2 g(X.v, Y.v)``.

The objects follow the connection formula

    nabla^G_X Y = D_X Y - 1/2 Rs(X, Y) + A(X, Y)

with ``Rs(X, Y) = R(X.h, Y.h) u`` (vertical) and ``A`` the horizontal tensor
``g(A(X, Y), Z) = (delta/2) (g(Rs(X, Z), Y) + g(Rs(Y, Z), X))``,
``delta = f2 / f1``. Two independent assemblies of the curvature are
provided: the block formulas on pure horizontal/vertical arguments
(:meth:`LocalSasaki.curvature_RG`) and the generic expansion
``R + d Rs + d A + wedge terms`` (:meth:`LocalSasaki.assemble_RG_from_pieces`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import base_manifold as bm
from .base_manifold import ChartedManifold
from .errors import ConfigurationError, DomainError, NumericError


@dataclass(frozen=True)
class WeightedSasakiMetric:
    base: ChartedManifold
    f1: float = 1.0
    f2: float = 1.0

    def __post_init__(self):
        if not (self.f1 > 0 and self.f2 > 0):
            raise ConfigurationError(f"weights must be positive, got f1={self.f1}, f2={self.f2}")

    @property
    def delta(self) -> float:
        return self.f2 / self.f1


@dataclass(frozen=True)
class TangentBundlePoint:
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if self.x.shape != self.u.shape:
            raise DomainError("base point and fibre vector must have the same length")


@dataclass(frozen=True)
class SplitTangentVector:
    """Element of ``T(TM) = H + V`` as a (horizontal, vertical) pair."""

    h: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.v))):
            raise NumericError("split vector has non-finite entries")

    @classmethod
    def horizontal(cls, h) -> "SplitTangentVector":
        h = np.asarray(h, dtype=float)
        return cls(h, np.zeros_like(h))

    @classmethod
    def vertical(cls, v) -> "SplitTangentVector":
        v = np.asarray(v, dtype=float)
        return cls(np.zeros_like(v), v)

    @classmethod
    def zero(cls, m: int) -> "SplitTangentVector":
        return cls(np.zeros(m), np.zeros(m))

    @classmethod
    def from_array(cls, a) -> "SplitTangentVector":
        a = np.asarray(a, dtype=float)
        m = a.size // 2
        return cls(a[:m], a[m:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.h, self.v])

    @property
    def hor(self) -> "SplitTangentVector":
        return SplitTangentVector(self.h, np.zeros_like(self.v))

    @property
    def ver(self) -> "SplitTangentVector":
        return SplitTangentVector(np.zeros_like(self.h), self.v)

    def theta(self) -> "SplitTangentVector":
        """Horizontal part copied to the vertical slot; vertical part dropped."""
        return SplitTangentVector(np.zeros_like(self.h), self.h)

    def theta_t(self) -> "SplitTangentVector":
        return SplitTangentVector(self.v, np.zeros_like(self.v))

    def __add__(self, other):
        return SplitTangentVector(self.h + other.h, self.v + other.v)

    def __sub__(self, other):
        return SplitTangentVector(self.h - other.h, self.v - other.v)

    def __neg__(self):
        return SplitTangentVector(-self.h, -self.v)

    def __mul__(self, s):
        return SplitTangentVector(s * self.h, s * self.v)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return SplitTangentVector(self.h / s, self.v / s)


def _ensure_split(X) -> SplitTangentVector:
    if isinstance(X, SplitTangentVector):
        return X
    return SplitTangentVector.from_array(X)


class LocalSasaki:
    """All curvature quantities of ``(TM, G)`` at one point ``u in T_xM``.

    Base tensors (metric, frame, curvature, its covariant derivative) are
    computed once per instance; ``nabla R`` is only evaluated if a formula
    needs it. ``frame`` overrides the g-orthonormal frame used in the frame
    sums (rows must be g-orthonormal).
    """

    def __init__(self, G: WeightedSasakiMetric, P: TangentBundlePoint, frame: Optional[np.ndarray] = None):
        self.G = G
        self.P = P
        self.m = G.base.dim
        self.f1, self.f2, self.delta = G.f1, G.f2, G.delta
        self.x, self.u = P.x, P.u
        if self.u.shape != (self.m,):
            raise DomainError(f"fibre vector must have {self.m} components")
        self.g = G.base.metric_at(self.x)
        self.E = bm.orthonormal_frame(G.base, self.x) if frame is None else np.asarray(frame, dtype=float)
        self.R_up, self.R_low = bm.riemann(G.base, self.x)

    # -- base-level helpers -------------------------------------------------

    def ip(self, a, b) -> float:
        return float(a @ self.g @ b)

    def G_inner(self, X, Y) -> float:
        X, Y = _ensure_split(X), _ensure_split(Y)
        return self.f1 * self.ip(X.h, Y.h) + self.f2 * self.ip(X.v, Y.v)

    def _R(self, X, Y, Z):
        return np.einsum("lijk,i,j,k->l", self.R_up, X, Y, Z)

    @cached_property
    def nabla_R_up(self) -> np.ndarray:
        """``(nabla_a R)^l_ijk`` indexed ``[a, l, i, j, k]``."""
        low = bm.nabla_riemann(self.G.base, self.x)
        return np.einsum("lm,aijkm->alijk", np.linalg.inv(self.g), low)

    def _nR(self, D, X, Y, Z):
        return np.einsum("alijk,a,i,j,k->l", self.nabla_R_up, D, X, Y, Z)

    def _frame_expand(self, coeffs) -> np.ndarray:
        return np.einsum("j,ja->a", coeffs, self.E)

    # -- the tensors Rs, A, B, A^{nabla Rs} -----------------------------------

    def script_R(self, X, Y) -> SplitTangentVector:
        X, Y = _ensure_split(X), _ensure_split(Y)
        return SplitTangentVector.vertical(self._R(X.h, Y.h, self.u))

    def nabla_script_R(self, D, Y, Z) -> SplitTangentVector:
        """``(nabla_D Rs)(Y, Z) = (nabla_{D.h} R)(Y.h, Z.h) u + R(Y.h, Z.h) D.v``."""
        D, Y, Z = _ensure_split(D), _ensure_split(Y), _ensure_split(Z)
        out = self._R(Y.h, Z.h, D.v)
        if np.any(D.h):
            out = out + self._nR(D.h, Y.h, Z.h, self.u)
        return SplitTangentVector.vertical(out)

    def _rs_pair(self, P, Q) -> np.ndarray:
        """``c_j = g(Rs(P, e_j), Q.v)`` for every frame index ``j``."""
        return np.einsum("abcd,a,jb,c,d->j", self.R_low, P.h, self.E, self.u, Q.v)

    def tensor_A(self, X, Y) -> SplitTangentVector:
        X, Y = _ensure_split(X), _ensure_split(Y)
        coeffs = 0.5 * self.delta * (self._rs_pair(X, Y) + self._rs_pair(Y, X))
        return SplitTangentVector.horizontal(self._frame_expand(coeffs))

    def tensor_B(self, grad_phi2, X, Y) -> SplitTangentVector:
        X, Y = _ensure_split(X), _ensure_split(Y)
        grad_phi2 = np.asarray(grad_phi2, dtype=float)
        y_phi = self.ip(grad_phi2, Y.h)
        return SplitTangentVector(-self.delta * self.ip(X.v, Y.v) * grad_phi2, y_phi * X.v)

    def a_nabla_R(self, D, Y, Z) -> SplitTangentVector:
        """``A^{nabla_D Rs}(Y, Z)``, built like ``A`` with ``nabla_D Rs`` in place of ``Rs``."""
        D, Y, Z = _ensure_split(D), _ensure_split(Y), _ensure_split(Z)
        coeffs = np.zeros(self.m)
        for j, e in enumerate(self.E):
            ej = SplitTangentVector.horizontal(e)
            coeffs[j] = self.ip(self.nabla_script_R(D, Y, ej).v, Z.v) + self.ip(
                self.nabla_script_R(D, Z, ej).v, Y.v
            )
        return SplitTangentVector.horizontal(self._frame_expand(0.5 * self.delta * coeffs))

    # -- block formulas --------------------------------------------------------

    def _rs_frame(self, Ph) -> np.ndarray:
        """Rows ``Rs(P, e_j)`` as base vectors."""
        return np.einsum("labc,a,jb,c->jl", self.R_up, Ph, self.E, self.u)

    def _rs_ee(self, Qv) -> np.ndarray:
        """Matrix ``g(Rs(e_j, e_i), Q.v)`` indexed ``[j, i]``."""
        return np.einsum("abcd,ja,ib,c,d->ji", self.R_low, self.E, self.E, self.u, Qv)

    def _block_hhh(self, X, Y, Z):
        hor = (
            self._R(X.h, Y.h, Z.h)
            + self.tensor_A(self.script_R(X, Y), Z).h
            - 0.5 * self.tensor_A(X, self.script_R(Y, Z)).h
            + 0.5 * self.tensor_A(Y, self.script_R(X, Z)).h
        )
        ver = -0.5 * self.nabla_script_R(X, Y, Z).v + 0.5 * self.nabla_script_R(Y, X, Z).v
        return SplitTangentVector(hor, ver)

    def _block_vhh(self, X, Y, Z):
        c = self._rs_pair(Z, X)
        ver = -0.5 * self._R(Y.h, Z.h, X.v) + 0.25 * self.delta * c @ self._rs_frame(Y.h)
        hor = -self.a_nabla_R(Y, X, Z).h
        return SplitTangentVector(hor, ver)

    def _block_vhv(self, X, Y, Z):
        coeffs = np.einsum("j,ji->i", self._rs_pair(Y, Z), self._rs_ee(X.v))
        hor = self.a_nabla_R(X, Y, Z).h + 0.25 * self.delta**2 * self._frame_expand(coeffs)
        return SplitTangentVector.horizontal(hor)

    def _block_hhv(self, X, Y, Z):
        ver = (
            self._R(X.h, Y.h, Z.v)
            + 0.25 * self.delta * self._rs_pair(X, Z) @ self._rs_frame(Y.h)
            - 0.25 * self.delta * self._rs_pair(Y, Z) @ self._rs_frame(X.h)
        )
        hor = -self.a_nabla_R(Y, X, Z).h + self.a_nabla_R(X, Y, Z).h
        return SplitTangentVector(hor, ver)

    def _block_vvh(self, X, Y, Z):
        coeffs = np.einsum("j,ji->i", self._rs_pair(Z, Y), self._rs_ee(X.v)) - np.einsum(
            "j,ji->i", self._rs_pair(Z, X), self._rs_ee(Y.v)
        )
        hor = (
            -self.a_nabla_R(Y, X, Z).h
            + self.a_nabla_R(X, Y, Z).h
            + 0.25 * self.delta**2 * self._frame_expand(coeffs)
        )
        return SplitTangentVector.horizontal(hor)

    def curvature_RG(self, X, Y, Z) -> SplitTangentVector:
        """``R^G(X, Y) Z`` by multilinear expansion over horizontal/vertical parts."""
        X, Y, Z = _ensure_split(X), _ensure_split(Y), _ensure_split(Z)
        Xh, Xv, Yh, Yv, Zh, Zv = X.hor, X.ver, Y.hor, Y.ver, Z.hor, Z.ver
        out = SplitTangentVector.zero(self.m)
        if np.any(Zh.h):
            out = out + self._block_hhh(Xh, Yh, Zh) + self._block_vhh(Xv, Yh, Zh)
            out = out - self._block_vhh(Yv, Xh, Zh) + self._block_vvh(Xv, Yv, Zh)
        if np.any(Zv.v):
            out = out + self._block_hhv(Xh, Yh, Zv) + self._block_vhv(Xv, Yh, Zv)
            out = out - self._block_vhv(Yv, Xh, Zv)
            # R^G(X^v, Y^v) Z^v = 0
        return out

    def curvature_RG4(self, X, Y, Z, W) -> float:
        return self.G_inner(self.curvature_RG(X, Y, Z), W)

    # -- closed forms for the 4-tensor on special argument patterns -----------

    def curvature_RG4_closed_form(self, pattern: str, X, Y, W) -> float:
        """``R^G(X, Y, Y, W)`` on the argument pattern ``pattern``.

        ``pattern`` names the parts used for ``(X, Y, Y, W)``, one of
        ``hhhh``, ``hvvh``, ``vhhv``, ``vhhh``, ``vvvh``, ``hhhv``, ``hvvv``.
        """
        X, Y, W = _ensure_split(X), _ensure_split(Y), _ensure_split(W)
        f1, f2, d = self.f1, self.f2, self.delta
        if pattern == "hhhh":
            rs_yw, rs_xy = self.script_R(Y, W).v, self.script_R(X, Y).v
            r = np.einsum("ijkl,i,j,k,l->", self.R_low, X.h, Y.h, Y.h, W.h)
            return float(f1 * r + 0.75 * f2 * self.ip(rs_yw, rs_xy))
        if pattern == "hvvh":
            return float(0.25 * f1 * d**2 * self._rs_pair(X, Y) @ self._rs_pair(W, Y))
        if pattern == "vhhv":
            return float(0.25 * f2 * d * self._rs_pair(Y, W) @ self._rs_pair(Y, X))
        if pattern == "vhhh":
            return 0.5 * f2 * self.ip(self.nabla_script_R(Y.hor, W.hor, Y.hor).v, X.v)
        if pattern == "hhhv":
            return 0.5 * f2 * self.ip(self.nabla_script_R(Y.hor, X.hor, Y.hor).v, W.v)
        if pattern in ("vvvh", "hvvv"):
            return 0.0
        raise ValueError(f"no closed form for pattern {pattern!r}")

    # -- second assembly route --------------------------------------------------

    def assemble_RG_from_pieces(self, X, Y, Z) -> SplitTangentVector:
        """``R + (-1/2) d Rs + d A - 1/2 Rs^A - 1/2 A^Rs + A^A`` applied to ``(X, Y) Z``.

        Every piece is evaluated on the full (mixed) arguments; the wedge
        terms use their frame-sum expansions.
        """
        X, Y, Z = _ensure_split(X), _ensure_split(Y), _ensure_split(Z)
        d = self.delta
        R = SplitTangentVector(self._R(X.h, Y.h, Z.h), self._R(X.h, Y.h, Z.v))
        dRs = self.nabla_script_R(X, Y, Z) - self.nabla_script_R(Y, X, Z)
        dA = self.a_nabla_R(X, Y, Z) - self.a_nabla_R(Y, X, Z) + self.tensor_A(self.script_R(X, Y), Z)

        def sym(P, Q):
            return self._rs_pair(P, Q) + self._rs_pair(Q, P)

        rs_wedge_a = SplitTangentVector.vertical(
            -0.25 * d * (sym(Y, Z) @ self._rs_frame(X.h) - sym(X, Z) @ self._rs_frame(Y.h))
        )
        rs_yz, rs_xz = self.script_R(Y, Z), self.script_R(X, Z)
        a_wedge_rs = SplitTangentVector.horizontal(
            -0.25 * d * self._frame_expand(self._rs_pair(X, rs_yz) - self._rs_pair(Y, rs_xz))
        )
        coeffs = np.einsum("j,ji->i", sym(Y, Z), self._rs_ee(X.v)) - np.einsum(
            "j,ji->i", sym(X, Z), self._rs_ee(Y.v)
        )
        a_wedge_a = SplitTangentVector.horizontal(0.25 * d**2 * self._frame_expand(coeffs))
        return R - 0.5 * dRs + dA + rs_wedge_a + a_wedge_rs + a_wedge_a

    # -- Ricci and scalar curvature ----------------------------------------------

    @cached_property
    def base_ricci(self) -> np.ndarray:
        return np.einsum("jabk,ia,ib->jk", self.R_low, self.E, self.E)

    def _ric_hh(self, Xh, Yh) -> float:
        rx, ry = self._rs_frame(Xh), self._rs_frame(Yh)
        return float(Xh @ self.base_ricci @ Yh - 0.5 * self.delta * np.einsum("ja,ab,jb->", rx, self.g, ry))

    def _ric_vv(self, Xv, Yv) -> float:
        return float(0.25 * self.delta**2 * np.sum(self._rs_ee(Xv) * self._rs_ee(Yv)))

    def _ric_hv(self, Xh, Yv) -> float:
        total = 0.0
        for e in self.E:
            total += self.ip(self._nR(e, e, Xh, self.u), Yv)
        return -0.5 * self.delta * total

    def ricci_G(self, X, Y) -> float:
        X, Y = _ensure_split(X), _ensure_split(Y)
        val = self._ric_hh(X.h, Y.h) + self._ric_vv(X.v, Y.v)
        if not self.G.base.is_flat:
            val += self._ric_hv(X.h, Y.v) + self._ric_hv(Y.h, X.v)
        return val

    def adapted_frame(self) -> list:
        """G-orthonormal frame ``(e_i / sqrt f1, 0)``, then ``(0, e_i / sqrt f2)``."""
        hs = [SplitTangentVector.horizontal(e / np.sqrt(self.f1)) for e in self.E]
        vs = [SplitTangentVector.vertical(e / np.sqrt(self.f2)) for e in self.E]
        return hs + vs

    def ricci_matrix(self) -> np.ndarray:
        """``ric^G`` in the adapted frame, a symmetric ``2m x 2m`` array."""
        F = self.adapted_frame()
        n = len(F)
        out = np.zeros((n, n))
        for a in range(n):
            for b in range(a, n):
                out[a, b] = out[b, a] = self.ricci_G(F[a], F[b])
        return out

    def ricci_by_trace(self, X, Y, frame=None) -> float:
        """``sum_a R^G(X, E_a, E_a, Y)`` over a G-orthonormal frame (default: adapted)."""
        frame = self.adapted_frame() if frame is None else frame
        return float(sum(self.curvature_RG4(X, E, E, Y) for E in frame))

    def scalar_terms(self):
        """``(S, sum_ijk Rs_ijk^2)`` with ``Rs_ijk = g(R(e_i, e_j) u, e_k)``."""
        S = float(np.trace(self.E @ self.base_ricci @ self.E.T))
        rs = np.einsum("abcd,ia,jb,c,kd->ijk", self.R_low, self.E, self.E, self.u, self.E)
        return S, float(np.sum(rs**2))

    def scalar_G(self) -> float:
        S, q = self.scalar_terms()
        return S / self.f1 - self.f2 / (4.0 * self.f1**2) * q

    def trace_free_ricci_norm(self) -> float:
        """Frobenius norm of ``ric^G - (S^G / 2m) G`` in the adapted frame; zero iff Einstein here."""
        ric = self.ricci_matrix()
        n = ric.shape[0]
        return float(np.linalg.norm(ric - np.trace(ric) / n * np.eye(n)))


# -- functional interface -------------------------------------------------------


def script_R(G, P, X, Y) -> SplitTangentVector:
    return LocalSasaki(G, P).script_R(X, Y)


def tensor_A(G, P, X, Y) -> SplitTangentVector:
    return LocalSasaki(G, P).tensor_A(X, Y)


def tensor_B(grad_phi2, G, P, X, Y) -> SplitTangentVector:
    return LocalSasaki(G, P).tensor_B(grad_phi2, X, Y)


def a_nabla_R(G, P, D, Y, Z) -> SplitTangentVector:
    return LocalSasaki(G, P).a_nabla_R(D, Y, Z)


def curvature_RG(G, P, X, Y, Z) -> SplitTangentVector:
    return LocalSasaki(G, P).curvature_RG(X, Y, Z)


def curvature_RG4(G, P, X, Y, Z, W) -> float:
    return LocalSasaki(G, P).curvature_RG4(X, Y, Z, W)


def assemble_RG_from_pieces(G, P, X, Y, Z) -> SplitTangentVector:
    return LocalSasaki(G, P).assemble_RG_from_pieces(X, Y, Z)


def ricci_G(G, P, X, Y) -> float:
    return LocalSasaki(G, P).ricci_G(X, Y)


def scalar_G(G, P) -> float:
    return LocalSasaki(G, P).scalar_G()


def trace_free_ricci_norm(G, P) -> float:
    return LocalSasaki(G, P).trace_free_ricci_norm()
