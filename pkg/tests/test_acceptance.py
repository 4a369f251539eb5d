"""Exit criteria, one test each; every test prints a PASS/FAIL line that the terminal summary repeats."""

import itertools
import math
import time

import numpy as np
import pytest

from sasakigeo import base_manifold as bm
from sasakigeo import conformal_fiber as cf
from sasakigeo import coordinate_oracle as co
from sasakigeo import sphere_bundle as sb
from sasakigeo.sasaki_core import LocalSasaki, SplitTangentVector, TangentBundlePoint, WeightedSasakiMetric

from conftest import ZOO_NAMES, random_point, random_split, report_acceptance, zoo

pytestmark = pytest.mark.acceptance

H = SplitTangentVector.horizontal
V = SplitTangentVector.vertical


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def unit_bundle_point(M, x, u_dir, r):
    g = M.metric_at(x)
    return TangentBundlePoint(x, r * u_dir / math.sqrt(u_dir @ g @ u_dir))


def bundle_vectors(S, rng, k):
    F = S.tangent_frame()
    return [sum((c * E for c, E in zip(rng.standard_normal(len(F)), F)), SplitTangentVector.zero(S.m))
            for _ in range(k)]


# ---------------------------------------------------------------------------
# 1. closed forms against the coordinate oracle
# ---------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence(rng):
    tol = {name: 1e-5 for name in ZOO_NAMES}
    tol["perturbed3"] = 5e-3
    worst = {}
    start = time.perf_counter()
    for name, f1, f2 in itertools.product(ZOO_NAMES, (1.0, 2.0), (1.0, 0.5)):
        M = zoo()[name]()
        G = WeightedSasakiMetric(M, f1, f2)
        chart = co.InducedChart(M, f1, f2)
        err = 0.0
        for _ in range(20):
            P = random_point(M, rng, margin=0.1)
            L, o = LocalSasaki(G, P), co.OracleAtPoint(chart, P.x, P.u)
            X, Y, Z, W = (random_split(rng, M.dim) for _ in range(4))
            err = max(err, rel(L.curvature_RG4(X, Y, Z, W), o.curvature4(X, Y, Z, W)))
            A, B = random_split(rng, M.dim), random_split(rng, M.dim)
            err = max(err, rel(L.ricci_G(A, B), o.ricci_form(A, B)))
            err = max(err, rel(L.scalar_G(), o.scalar))
        worst[name] = max(worst.get(name, 0.0), err / tol[name])
    elapsed = time.perf_counter() - start
    passed = max(worst.values()) <= 1.0 and elapsed < 120.0
    detail = ", ".join(f"{n} {v:.2g}" for n, v in worst.items())
    report_acceptance(1, passed, f"worst residual / tolerance: {detail}; {elapsed:.1f} s")
    assert passed


# ---------------------------------------------------------------------------
# 2. two assembly routes
# ---------------------------------------------------------------------------


def test_criterion_2_two_path_assembly(rng):
    worst = 0.0
    for name in ZOO_NAMES:
        M = zoo()[name]()
        G = WeightedSasakiMetric(M, 1.7, 0.6)
        for _ in range(20):
            L = LocalSasaki(G, random_point(M, rng))
            X, Y, Z = (random_split(rng, M.dim) for _ in range(3))
            a = L.curvature_RG(X, Y, Z).as_array()
            b = L.assemble_RG_from_pieces(X, Y, Z).as_array()
            worst = max(worst, np.linalg.norm(a - b) / max(1.0, np.linalg.norm(a)))
    passed = worst <= 1e-6
    report_acceptance(2, passed, f"max relative gap between routes {worst:.2e} over {len(ZOO_NAMES)} manifolds")
    assert passed


# ---------------------------------------------------------------------------
# 3. scalar curvature closed form on space forms
# ---------------------------------------------------------------------------


def test_criterion_3_scalar_closed_form(rng):
    worst = 0.0
    for m, c, rho in itertools.product((2, 3), (1.0, -1.0), (0.5, 1.0, 2.0)):
        M = bm.constant_curvature(m, c)
        for f1, f2 in ((1.0, 1.0), (2.0, 0.5), (0.7, 1.6)):
            P = unit_bundle_point(M, M.sample_point(rng, 0.1), rng.standard_normal(m), rho)
            S = LocalSasaki(WeightedSasakiMetric(M, f1, f2), P).scalar_G()
            expected = m * (m - 1) * c / f1 - f2 / (4 * f1**2) * 2 * (m - 1) * c**2 * rho**2
            worst = max(worst, abs(S - expected))
    passed = worst <= 1e-6
    report_acceptance(3, passed, f"max |scalar_G - closed form| {worst:.2e} over 12 (m, c, rho) cases")
    assert passed


# ---------------------------------------------------------------------------
# 4. unit tangent bundle of the round 2-sphere
# ---------------------------------------------------------------------------


def test_criterion_4_unit_tangent_bundle_of_s2(rng):
    M = bm.constant_curvature(2, 1.0)
    C = sb.SphereBundleConfig(WeightedSasakiMetric(M), 1.0)
    k_err, s_err = 0.0, 0.0
    for _ in range(20):
        S = sb.LocalSphereBundle(C, sb.sample_bundle_point(M, 1.0, rng))
        for _ in range(5):
            X, Y = bundle_vectors(S, rng, 2)
            k_err = max(k_err, abs(S.sectional(X, Y) - 0.25))
        s_err = max(s_err, abs(S.scalar() - 1.5), abs(S.scalar("trace") - 1.5))
    passed = k_err <= 1e-5 and s_err <= 1e-6
    report_acceptance(4, passed, f"max |k - 1/4| {k_err:.2e}, max |S - 3/2| {s_err:.2e}")
    assert passed


# ---------------------------------------------------------------------------
# 5. positivity thresholds
# ---------------------------------------------------------------------------


def scan_samples(M, rng, k=20):
    return [(P.x, P.u) for P in (sb.sample_bundle_point(M, 1.0, rng) for _ in range(k))]


def test_criterion_5_positivity_thresholds(rng):
    H3, S3 = bm.constant_curvature(3, -1.0), bm.constant_curvature(3, 1.0)
    timings, parts = [], []

    start = time.perf_counter()
    rep = sb.scan_positive_scalar(H3, [1.0], [1.0], np.linspace(0.1, 1.5, 20), scan_samples(H3, rng))
    timings.append(time.perf_counter() - start)
    r_star = [t["refined"] for t in rep.summary["thresholds"] if t["axis"] == "r"]
    ok_r = len(r_star) == 1 and abs(r_star[0] - 0.5627) <= 0.05
    parts.append(f"H3 r* {r_star}")

    start = time.perf_counter()
    rep = sb.scan_positive_scalar(H3, np.linspace(1.0, 6.0, 20), [1.0], [1.0], scan_samples(H3, rng))
    timings.append(time.perf_counter() - start)
    f1_star = [t["refined"] for t in rep.summary["thresholds"] if t["axis"] == "f1"]
    ok_f1 = len(f1_star) == 1 and abs(f1_star[0] - 3.158) <= 0.1
    parts.append(f"H3 f1* {f1_star}")

    start = time.perf_counter()
    rep = sb.scan_positive_scalar(S3, [1.0], [1.0], np.linspace(0.15, 3.0, 20), scan_samples(S3, rng))
    timings.append(time.perf_counter() - start)
    ok_s3 = rep.summary.get("message") == "no sign change; all positive"
    crossings = [round(t["refined"], 4) for t in rep.summary["thresholds"]]
    parts.append(f"S3 all positive on (0, 3]: {ok_s3} (sign changes at r = {crossings})")

    fast = max(timings) < 60.0
    passed = ok_r and ok_f1 and ok_s3 and fast
    report_acceptance(5, passed, "; ".join(parts) + f"; slowest scan {max(timings):.1f} s")
    assert passed


# ---------------------------------------------------------------------------
# 6. dimension two
# ---------------------------------------------------------------------------


def test_criterion_6_dimension_two_equality(rng):
    M = bm.constant_curvature(2, 1.0)
    worst = 0.0
    for f1, f2, r in ((1.0, 1.0, 1.0), (2.0, 0.5, 0.7), (0.8, 1.5, 1.9)):
        C = sb.SphereBundleConfig(WeightedSasakiMetric(M, f1, f2), r)
        for _ in range(20):
            S = sb.LocalSphereBundle(C, sb.sample_bundle_point(M, r, rng))
            worst = max(worst, abs(S.scalar("trace") - S.L.scalar_G()))
    passed = worst <= 1e-8
    report_acceptance(6, passed, f"max |S(S_rM) - S(TM)| on |u| = r: {worst:.2e}")
    assert passed


# ---------------------------------------------------------------------------
# 7. curvature symmetries
# ---------------------------------------------------------------------------


def symmetry_defects(R, X, Y, Z, W):
    r = R(X, Y, Z, W)
    scale = max(1.0, abs(r))
    return max(
        abs(r + R(Y, X, Z, W)),
        abs(r + R(X, Y, W, Z)),
        abs(r - R(Z, W, X, Y)),
        abs(r + R(Y, Z, X, W) + R(Z, X, Y, W)),
    ) / scale


def test_criterion_7_symmetry_suite(rng):
    names = ZOO_NAMES
    tm, srm = 0.0, 0.0
    for k in range(50):
        M = zoo()[names[k % len(names)]]()
        G = WeightedSasakiMetric(M, 1.3, 0.8)
        L = LocalSasaki(G, random_point(M, rng))
        tm = max(tm, symmetry_defects(L.curvature_RG4, *(random_split(rng, M.dim) for _ in range(4))))
        S = sb.LocalSphereBundle(sb.SphereBundleConfig(G, 0.9), sb.sample_bundle_point(M, 0.9, rng))
        srm = max(srm, symmetry_defects(S.curvature, *bundle_vectors(S, rng, 4)))
    passed = max(tm, srm) <= 1e-6
    report_acceptance(7, passed, f"max relative defect: TM {tm:.2e}, S_rM {srm:.2e}")
    assert passed


# ---------------------------------------------------------------------------
# 8. conformal fibre
# ---------------------------------------------------------------------------


@pytest.mark.filterwarnings("ignore::sasakigeo.conformal_fiber.NormalizationWarning")
def test_criterion_8_conformal_fiber_suite(rng):
    Gc = cf.ConformalFiberMetric.linear(3, 1.5, [0.3])
    chart = co.InducedChart(Gc.base, Gc.f1, Gc.f2)
    oracle_err = 0.0
    for _ in range(20):
        P = TangentBundlePoint(rng.uniform(-1, 1, 3), rng.standard_normal(3))
        o = co.OracleAtPoint(chart, P.x, P.u)
        X, Y, Z, W = (random_split(rng, 3) for _ in range(4))
        oracle_err = max(oracle_err, rel(cf.curvature_conformal4(Gc, P, X, Y, Z, W), o.curvature4(X, Y, Z, W)))

    k_max = -np.inf
    for _ in range(100):
        P = TangentBundlePoint(rng.uniform(-1, 1, 3), rng.standard_normal(3))
        k_max = max(k_max, cf.sectional_conformal(Gc, P, random_split(rng, 3), random_split(rng, 3)))

    x = rng.uniform(-1, 1, 3)
    P = TangentBundlePoint(x, rng.standard_normal(3))
    e = np.eye(3)
    fiber = cf.plane_curvature_form(Gc, P, V(e[0]), V(e[1]))
    fiber_err = abs(fiber + Gc.f2(x) * Gc.epsilon(x) ** 2 * Gc.delta(x))

    s0 = cf.BundleState(np.array([0.1, -0.2, 0.3]), np.array([1.0, 0.5, -0.4]),
                        np.array([0.3, 0.1, -0.2]), np.array([0.2, -0.4, 0.5]))
    drift = cf.speed_drift(Gc, cf.integrate_geodesic(Gc, s0, T=5.0, dt=1e-3))
    order = cf.convergence_order(Gc, s0, T=5.0, dt=0.1)

    passed = oracle_err <= 1e-5 and k_max <= 0.0 and fiber_err <= 1e-8 and drift < 1e-6 and order >= 3.8
    report_acceptance(
        8, passed,
        f"oracle {oracle_err:.2e}, max k {k_max:.2e}, fibre plane {fiber_err:.2e}, "
        f"speed drift {drift:.2e}, order {order:.2f}",
    )
    assert passed


# ---------------------------------------------------------------------------
# 9. mean curvature and the Einstein witness
# ---------------------------------------------------------------------------


def test_criterion_9_mean_curvature_and_einstein(rng):
    trace_err = 0.0
    for name in ZOO_NAMES:
        M = zoo()[name]()
        for f1, f2, r in ((1.0, 1.0, 1.0), (2.0, 0.5, 0.6)):
            S = sb.LocalSphereBundle(sb.SphereBundleConfig(WeightedSasakiMetric(M, f1, f2), r),
                                     sb.sample_bundle_point(M, r, rng))
            trace_err = max(trace_err, abs(S.mean_curvature("trace") + S.n / (r * math.sqrt(f2))))

    flat = 0.0
    for f1, f2 in ((1.0, 1.0), (2.0, 0.5)):
        M = bm.euclidean(3)
        for _ in range(10):
            flat = max(flat, np.linalg.norm(LocalSasaki(WeightedSasakiMetric(M, f1, f2), random_point(M, rng)).ricci_matrix()))

    S3 = bm.constant_curvature(3, 1.0)
    witness = min(
        LocalSasaki(WeightedSasakiMetric(S3), sb.sample_bundle_point(S3, 1.0, rng)).trace_free_ricci_norm()
        for _ in range(10)
    )

    passed = trace_err <= 1e-8 and flat <= 1e-8 and witness > 0.1
    report_acceptance(
        9, passed, f"trace alpha gap {trace_err:.2e}, flat |ric| {flat:.2e}, S3 trace-free |ric| {witness:.3f}"
    )
    assert passed
