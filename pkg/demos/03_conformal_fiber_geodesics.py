"""Geodesics of TR^m with a conformally scaled fibre metric f2 = exp(2 phi2).

Run with ``python3 demos/03_conformal_fiber_geodesics.py``.

With phi2 linear the gradient is parallel, every sectional curvature is
non-positive, and the fibres bend: a curve launched purely vertically is
pushed along grad phi2 in the base. The classical RK4 integrator keeps the
G-speed constant to roundoff and shows fourth-order convergence.
"""

import numpy as np

from sasakigeo import conformal_fiber as cf
from sasakigeo.sasaki_core import SplitTangentVector, TangentBundlePoint

Gc = cf.ConformalFiberMetric.linear(2, 1.0, [0.3, 0.0])

# -- curvature ------------------------------------------------------------------------

rng = np.random.default_rng(11)
P = TangentBundlePoint(np.zeros(2), np.array([1.0, 0.0]))
ks = []
for _ in range(200):
    X = SplitTangentVector(rng.standard_normal(2), rng.standard_normal(2))
    Y = SplitTangentVector(rng.standard_normal(2), rng.standard_normal(2))
    ks.append(cf.plane_curvature_form(Gc, P, X, Y))
print(f"largest of 200 unnormalised plane curvatures: {max(ks):.3e}  (never positive)")
e = np.eye(2)
print(f"fibre plane, g-unit vectors: {cf.plane_curvature_form(Gc, P, SplitTangentVector.vertical(e[0]), SplitTangentVector.vertical(e[1])):.6f}")
print(f"  -f2 eps^2 delta           : {-Gc.f2(P.x) * Gc.epsilon(P.x) ** 2 * Gc.delta(P.x):.6f}\n")

# -- a geodesic -----------------------------------------------------------------------

s0 = cf.BundleState(np.array([0.1, -0.2]), np.array([1.0, 0.5]), np.array([0.3, 0.1]), np.array([0.2, -0.4]))
traj = cf.integrate_geodesic(Gc, s0, T=5.0, dt=1e-3)
print(f"{len(traj)} states, relative G-speed drift {cf.speed_drift(Gc, traj):.2e}")
for k in range(0, len(traj), 1000):
    s = traj[k]
    print(f"  t = {traj.t[k]:3.1f}  x = {np.round(s.x, 4)}  u = {np.round(s.u, 4)}")

order = cf.convergence_order(Gc, s0, T=5.0, dt=0.1)
print(f"observed order from dt = 0.1, 0.05, 0.025: {order:.2f}\n")

# -- vertical launch ------------------------------------------------------------------

up = cf.BundleState(np.zeros(2), np.zeros(2), np.zeros(2), np.array([0.0, 1.0]))
end = cf.integrate_geodesic(Gc, up, T=1.0, dt=1e-2)[-1]
print(f"vertical launch: base point moves to {np.round(end.x, 5)} (along grad phi2 = {Gc.grad(end.x)})")
