"""Dense tensor helpers: finite differences, Gram-Schmidt frames, metric contractions.

Tensors are plain ``numpy.ndarray`` objects. Index order is row-major and
derivative slots are always prepended, so ``finite_difference_derivative``
of a field of shape ``(a, b)`` on an ``m``-dimensional chart returns shape
``(m, a, b)`` with ``out[i] = d field / d x^i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, GeometryError, NumericError, RankError, ShapeError

Field = Callable[[np.ndarray], np.ndarray]

# central first-derivative weights, offsets -2..2
_D1 = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}
# central second-derivative weights
_D2 = {
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    4: (np.array([-2, -1, 0, 1, 2]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
}


@dataclass(frozen=True)
class FDScheme:
    """Central finite-difference scheme.

    The effective step along coordinate ``i`` is ``max(step, step * |x_i|)``
    so that large coordinates do not drown the stencil in roundoff.
    """

    step: float = 1e-3
    order: int = 4
    richardson: bool = False

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order}")

    def steps_at(self, point: np.ndarray) -> np.ndarray:
        return np.maximum(self.step, self.step * np.abs(point))

    def halved(self) -> "FDScheme":
        return FDScheme(self.step / 2, self.order, False)


DEFAULT_SCHEME = FDScheme()


def _evaluate(field: Field, x: np.ndarray, domain) -> np.ndarray:
    if domain is not None and not domain(x):
        raise DomainError(f"stencil point {x} leaves the chart domain")
    val = np.asarray(field(x), dtype=float)
    if not np.all(np.isfinite(val)):
        raise NumericError(f"non-finite field value at {x}")
    return val


def _derivative_once(field, point, scheme, domain):
    offsets, weights = _D1[scheme.order]
    hs = scheme.steps_at(point)
    # weights sum to zero, so differencing against f0 keeps constants exact
    f0 = _evaluate(field, point, domain)
    parts = []
    for i in range(point.size):
        acc = 0.0
        for o, w in zip(offsets, weights):
            if o == 0:
                continue
            x = point.copy()
            x[i] += o * hs[i]
            acc = acc + w * (_evaluate(field, x, domain) - f0)
        parts.append(acc / hs[i])
    return np.stack(parts)


def finite_difference_derivative(
    field: Field,
    point,
    scheme: FDScheme = DEFAULT_SCHEME,
    domain: Optional[Callable[[np.ndarray], bool]] = None,
) -> np.ndarray:
    """Partial derivatives of ``field`` at ``point``, stacked in a new leading slot.

    Parameters
    ----------
    field : callable
        Maps a coordinate vector to an array of fixed shape.
    point : array_like
        Evaluation point.
    scheme : FDScheme
        Step, order (2 or 4) and optional Richardson extrapolation.
    domain : callable, optional
        Predicate on coordinates; any stencil point for which it is false
        raises :class:`DomainError`.
    """
    point = np.asarray(point, dtype=float)
    d = _derivative_once(field, point, scheme, domain)
    if scheme.richardson:
        fine = _derivative_once(field, point, scheme.halved(), domain)
        k = 2.0**scheme.order
        d = (k * fine - d) / (k - 1.0)
    return d


def _hessian_once(field, point, scheme, domain):
    m = point.size
    hs = scheme.steps_at(point)
    o1, w1 = _D1[scheme.order]
    o2, w2 = _D2[scheme.order]
    f0 = _evaluate(field, point, domain)
    out = np.zeros((m, m) + f0.shape)
    for i in range(m):
        acc = 0.0
        for o, w in zip(o2, w2):
            if o == 0:
                continue
            x = point.copy()
            x[i] += o * hs[i]
            acc = acc + w * (_evaluate(field, x, domain) - f0)
        out[i, i] = acc / hs[i] ** 2
        for j in range(i + 1, m):
            acc = 0.0
            for oa, wa in zip(o1, w1):
                for ob, wb in zip(o1, w1):
                    x = point.copy()
                    x[i] += oa * hs[i]
                    x[j] += ob * hs[j]
                    acc = acc + wa * wb * (_evaluate(field, x, domain) - f0)
            out[i, j] = out[j, i] = acc / (hs[i] * hs[j])
    return out


def finite_difference_hessian(
    field: Field,
    point,
    scheme: FDScheme = DEFAULT_SCHEME,
    domain: Optional[Callable[[np.ndarray], bool]] = None,
) -> np.ndarray:
    """Second partial derivatives, two new leading slots ``out[i, j] = d_i d_j field``.

    Diagonal entries use the 3- or 5-point second-derivative stencil; mixed
    entries use the tensor product of first-derivative stencils.
    """
    point = np.asarray(point, dtype=float)
    d = _hessian_once(field, point, scheme, domain)
    if scheme.richardson:
        fine = _hessian_once(field, point, scheme.halved(), domain)
        k = 2.0**scheme.order
        d = (k * fine - d) / (k - 1.0)
    return d


def _check_gram(gram: np.ndarray) -> np.ndarray:
    gram = np.asarray(gram, dtype=float)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ShapeError(f"gram must be square, got shape {gram.shape}")
    if not np.allclose(gram, gram.T, rtol=1e-10, atol=1e-12):
        raise GeometryError("gram matrix is not symmetric")
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("gram matrix is not positive-definite") from exc
    return gram


def gram_schmidt_frame(
    gram,
    seed: Optional[Sequence] = None,
    distinguished_last=None,
    rank_tol: float = 1e-10,
) -> np.ndarray:
    """Orthonormal frame for the inner product ``gram``.

    Returns an ``(m, m)`` array whose rows are the frame vectors. The seed
    is processed in order (standard basis by default). When
    ``distinguished_last`` is given, its normalisation becomes the last row;
    the seed is first projected onto its orthogonal complement and seed
    vectors that become dependent are skipped.
    """
    gram = _check_gram(gram)
    m = gram.shape[0]
    seed = np.eye(m) if seed is None else np.asarray(seed, dtype=float)
    if seed.shape != (m, m):
        raise ShapeError(f"seed must hold {m} vectors of length {m}, got {seed.shape}")

    def ip(a, b):
        return a @ gram @ b

    basis = []
    last = None
    if distinguished_last is not None:
        d = np.asarray(distinguished_last, dtype=float)
        nd = np.sqrt(ip(d, d))
        if not nd > 0:
            raise RankError("distinguished_last must be nonzero")
        last = d / nd
    target = m - 1 if last is not None else m
    for s in seed:
        scale = np.sqrt(ip(s, s))
        if scale == 0:
            if last is None:
                raise RankError("seed contains a zero vector")
            continue
        v = s.copy()
        refs = basis + ([last] if last is not None else [])
        for _ in range(2):  # re-orthogonalise once for stability
            for b in refs:
                v = v - ip(b, v) * b
        nv = np.sqrt(ip(v, v))
        if nv <= rank_tol * scale:
            if last is None:
                raise RankError("seed vectors are linearly dependent")
            continue
        basis.append(v / nv)
        if len(basis) == target:
            break
    if len(basis) < target:
        raise RankError("seed does not span the orthogonal complement")
    if last is not None:
        basis.append(last)
    return np.array(basis)


def contract_with_metric(t, gram, slot_pairs: Sequence[tuple]) -> np.ndarray:
    """Contract pairs of slots of ``t`` against ``gram``.

    ``contract_with_metric(np.multiply.outer(X, Y), g, [(0, 1)])`` is
    ``g(X, Y)``. Slot numbers refer to ``t`` before contraction; the
    surviving slots keep their relative order.
    """
    t = np.asarray(t, dtype=float)
    gram = np.asarray(gram, dtype=float)
    used = [s for pair in slot_pairs for s in pair]
    if len(set(used)) != len(used) or any(s < 0 or s >= t.ndim for s in used):
        raise ShapeError(f"invalid slot pairs {slot_pairs} for a rank-{t.ndim} tensor")
    letters = "abcdefghijklmnopqrstuvwxyz"
    t_idx = list(letters[: t.ndim])
    operands = [t]
    subs = []
    for i, j in slot_pairs:
        if t.shape[i] != t.shape[j] or gram.shape != (t.shape[i], t.shape[i]):
            raise ShapeError(
                f"slot extents {t.shape[i]}, {t.shape[j]} do not match gram {gram.shape}"
            )
        subs.append(t_idx[i] + t_idx[j])
        operands.append(gram)
    keep = "".join(c for k, c in enumerate(t_idx) if k not in used)
    expr = "".join(t_idx) + "," + ",".join(subs) + "->" + keep
    return np.einsum(expr, *operands)


def inner(gram, a, b) -> float:
    """``gram(a, b)`` for two vectors."""
    return float(np.asarray(a) @ np.asarray(gram) @ np.asarray(b))
