"""Shared fixtures: seeded generators, the manifold zoo, random split vectors."""

import numpy as np
import pytest

from sasakigeo import base_manifold as bm
from sasakigeo.sasaki_core import SplitTangentVector, TangentBundlePoint

ACCEPTANCE_LINES = []


def zoo():
    """Name and constructor of every manifold in the test zoo."""
    return {
        "euclidean3": lambda: bm.euclidean(3),
        "sphere2": lambda: bm.constant_curvature(2, 1.0),
        "sphere3": lambda: bm.constant_curvature(3, 1.0),
        "hyperbolic3": lambda: bm.constant_curvature(3, -1.0),
        "s2_x_r": lambda: bm.product(bm.constant_curvature(2, 1.0), bm.euclidean(1)),
        "perturbed3": lambda: bm.perturbed_euclidean(3),
    }


ZOO_NAMES = list(zoo())
ANALYTIC_NAMES = [n for n in ZOO_NAMES if n != "perturbed3"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=ZOO_NAMES)
def zoo_manifold(request):
    return zoo()[request.param]()


def random_split(rng, m, scale=1.0):
    return SplitTangentVector(scale * rng.standard_normal(m), scale * rng.standard_normal(m))


def random_point(M, rng, margin=0.05):
    x = M.sample_point(rng, margin)
    return TangentBundlePoint(x, rng.standard_normal(M.dim))


def report_acceptance(number, passed, detail):
    """Record and print one acceptance line; the terminal summary repeats them."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
