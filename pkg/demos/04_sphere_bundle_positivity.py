"""Tangent sphere bundles S_rM: the unit tangent bundle of S^2 and positivity thresholds.

Run with ``python3 demos/04_sphere_bundle_positivity.py``.

The curvature of S_rM comes from the Gauss equation with the closed-form
second fundamental form. On T_1 S^2 this recovers constant sectional
curvature 1/4. On three-dimensional space forms the minimum scalar
curvature changes sign as r or f1 varies; the scan locates the frontier.
"""

import numpy as np

from sasakigeo import base_manifold as bm
from sasakigeo import sphere_bundle as sb
from sasakigeo.sasaki_core import SplitTangentVector, WeightedSasakiMetric

rng = np.random.default_rng(5)

# -- T_1 S^2 ---------------------------------------------------------------------------

S2 = bm.constant_curvature(2, 1.0)
C = sb.SphereBundleConfig(WeightedSasakiMetric(S2), 1.0)
S = sb.LocalSphereBundle(C, sb.sample_bundle_point(S2, 1.0, rng))
F = S.tangent_frame()
print("T_1 S^2 sectional curvatures on frame planes:")
for i in range(len(F)):
    for j in range(i + 1, len(F)):
        print(f"  k(E{i}, E{j}) = {S.sectional(F[i], F[j]):.10f}")
print(f"scalar curvature {S.scalar():.10f}, mean curvature {S.mean_curvature():.6f}\n")

# -- scans -----------------------------------------------------------------------------


def samples(M, k=20):
    return [(P.x, P.u) for P in (sb.sample_bundle_point(M, 1.0, rng) for _ in range(k))]


H3 = bm.constant_curvature(3, -1.0)
rep = sb.scan_positive_scalar(H3, [1.0], [1.0], np.arange(0.1, 1.51, 0.05), samples(H3))
th = rep.summary["thresholds"][0]
print(f"H^3, f1 = f2 = 1: positive scalar curvature while r < {th['refined']:.5f}"
      f"  (closed form {np.sqrt((-6 + np.sqrt(44)) / 2):.5f})")

rep = sb.scan_positive_scalar(H3, np.arange(1.0, 6.01, 0.25), [1.0], [1.0], samples(H3))
th = rep.summary["thresholds"][0]
print(f"H^3, r = f2 = 1: positive scalar curvature once f1 > {th['refined']:.5f}"
      f"  (closed form {(6 + np.sqrt(44)) / 4:.5f})")

S3 = bm.constant_curvature(3, 1.0)
rep = sb.scan_positive_scalar(S3, [1.0], [1.0], np.arange(0.1, 4.01, 0.1), samples(S3))
for th in rep.summary["thresholds"]:
    print(f"S^3, f1 = f2 = 1: scalar curvature turns {th['becomes']} at r = {th['refined']:.5f}"
          f"  (6 - r^2 + 2/r^2 = 0 at {np.sqrt((6 + np.sqrt(44)) / 2):.5f})")
