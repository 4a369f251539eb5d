"""Scalar and Ricci curvature of (TM, f1 g + f2 g) over space forms.

Run with ``python3 demos/02_tangent_bundle_curvature.py``.

On a space form of curvature c the scalar curvature of TM depends on the
fibre coordinate only through rho = |u|:

    S = m(m-1)c / f1 - (f2 / 4 f1^2) 2(m-1) c^2 rho^2.

So it always decreases away from the zero section and eventually turns
negative. The Ricci tensor is never a multiple of the metric unless the base
is flat, which the trace-free norm below makes visible.
"""

import numpy as np

from sasakigeo import base_manifold as bm
from sasakigeo.sasaki_core import LocalSasaki, TangentBundlePoint, WeightedSasakiMetric

rng = np.random.default_rng(3)


def point_with_length(M, rho):
    x = M.sample_point(rng, 0.1)
    u = rng.standard_normal(M.dim)
    return TangentBundlePoint(x, rho * u / np.sqrt(u @ M.metric_at(x) @ u))


# -- scalar curvature along the fibre ----------------------------------------------

M = bm.constant_curvature(3, 1.0)
for f1, f2 in [(1.0, 1.0), (2.0, 0.5)]:
    G = WeightedSasakiMetric(M, f1, f2)
    print(f"S^3, f1 = {f1}, f2 = {f2}")
    for rho in [0.0, 0.5, 1.0, 2.0, 4.0]:
        S = LocalSasaki(G, point_with_length(M, rho)).scalar_G()
        closed = 6 / f1 - f2 / (4 * f1**2) * 4 * rho**2
        print(f"  |u| = {rho:3.1f}   S = {S:10.6f}   closed form {closed:10.6f}")
    print()

# -- Einstein test -------------------------------------------------------------------

print("trace-free Ricci norm at |u| = 1 (zero exactly when Einstein at that point)")
for name, N in [("R^3", bm.euclidean(3)), ("S^3", M), ("H^3", bm.constant_curvature(3, -1.0))]:
    L = LocalSasaki(WeightedSasakiMetric(N), point_with_length(N, 1.0))
    print(f"  {name}: {L.trace_free_ricci_norm():.4f}")
