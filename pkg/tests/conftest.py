"""Shared fixtures.  Blow-up solves are the expensive pieces (roughly 2 s at
129, 12 s at 257, 70 s at 513), so every field that more than one test wants
is built once per session."""

import time

import numpy as np
import pytest

import curvforge as cf


@pytest.fixture(scope="session")
def disk65():
    return cf.build_grid(cf.DomainDescriptor.disk(), 65)


@pytest.fixture(scope="session")
def disk129():
    return cf.build_grid(cf.DomainDescriptor.disk(), 129)


@pytest.fixture(scope="session")
def disk257():
    return cf.build_grid(cf.DomainDescriptor.disk(), 257)


@pytest.fixture(scope="session")
def h_one():
    return cf.PolynomialFactor((1.0,))


@pytest.fixture(scope="session")
def h_z():
    # h(z) = z as a Blaschke factor, so lower-bound checks recognize it
    return cf.FiniteBlaschke((0j,))


def _timed_blowup(grid, h, **kw):
    t0 = time.perf_counter()
    m = cf.solve_blowup(grid, h, **kw)
    return {"metric": m, "seconds": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def blowup_one_257(disk257, h_one):
    return _timed_blowup(disk257, h_one)


@pytest.fixture(scope="session")
def blowup_one_129(disk129, h_one):
    return _timed_blowup(disk129, h_one)


@pytest.fixture(scope="session")
def blowup_z_257(disk257, h_z):
    return _timed_blowup(disk257, h_z)


@pytest.fixture(scope="session")
def blowup_z_129(disk129, h_z):
    return _timed_blowup(disk129, h_z)


@pytest.fixture(scope="session")
def blowup_z_513(h_z):
    grid = cf.build_grid(cf.DomainDescriptor.disk(), 513)
    return _timed_blowup(grid, h_z)


@pytest.fixture(scope="session")
def source_z_257(blowup_z_257):
    return cf.GridSource(blowup_z_257["metric"].u, pole_points=(0j,))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260815)


def interior_targets(rng, count, r_lo=0.2, r_hi=0.6, avoid=(), clearance=0.12):
    """Sample points in an annulus of the unit disk, away from given points."""
    out = []
    while len(out) < count:
        w = complex(rng.uniform(-r_hi, r_hi), rng.uniform(-r_hi, r_hi))
        if not (r_lo <= abs(w) <= r_hi):
            continue
        if any(abs(w - a) < clearance for a in avoid):
            continue
        out.append(w)
    return np.array(out)
