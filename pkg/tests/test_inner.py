"""Blaschke products, singular factors, critical points, Frostman shifts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import curvforge as cf
from curvforge.errors import ConfigError, DegreeViolationError

SQ3 = np.sqrt(3.0)


def small_complex(r):
    return st.tuples(
        st.floats(-r, r, allow_nan=False), st.floats(-r, r, allow_nan=False)
    ).map(lambda t: complex(*t)).filter(lambda c: abs(c) < r)


# --- construction and evaluation --------------------------------------------

def test_single_zero_at_origin_is_identity_map():
    b = cf.blaschke_from_spec([0j])
    assert b.degree == 1
    v, dv = b.evaluate(0.3 + 0.1j, order=1)
    assert abs(v - (0.3 + 0.1j)) < 1e-15
    assert abs(dv - 1.0) < 1e-15


def test_empty_spec_is_constant_one():
    b = cf.blaschke_from_spec([])
    assert b.degree == 0
    v, dv = b.evaluate(np.array([0.2, -0.4j]), order=1)
    np.testing.assert_allclose(v, 1.0)
    np.testing.assert_allclose(dv, 0.0)


def test_single_offcenter_zero_normalization():
    # factor is -conj(a)/|a| * (z - a)/(1 - conj(a) z): positive at the origin
    b = cf.blaschke_from_spec([0.5])
    assert abs(b.evaluate(0.5)[0]) < 1e-15
    assert abs(b.evaluate(0.0)[0] - 0.5) < 1e-15
    assert abs(b.evaluate(0.0, order=1)[1] - (-0.75)) < 1e-15


def test_zero_multiplicity_flattens_derivative():
    b = cf.FiniteBlaschke(((0.3 + 0.2j, 2),))
    assert b.degree == 2
    v, dv, ddv = b.evaluate(0.3 + 0.2j, order=2)
    assert abs(v) < 1e-15 and abs(dv) < 1e-15
    assert abs(ddv) > 0.1


def test_rejects_zero_outside_disk():
    with pytest.raises(ConfigError):
        cf.FiniteBlaschke((1.2,))
    with pytest.raises(ConfigError):
        cf.FiniteBlaschke((np.exp(0.3j),))


def test_evaluation_outside_disk_rejected():
    b = cf.blaschke_from_spec([0j])
    with pytest.raises(ConfigError):
        b.evaluate(1.0 + 0j)


# --- critical points ----------------------------------------------------------

def test_critical_points_of_squaring_map():
    b = cf.FiniteBlaschke(((0j, 2),))
    c = cf.critical_points_of_finite_blaschke(b)
    assert c.size == 1
    assert abs(c[0]) < 1e-12


def test_critical_points_of_squared_automorphism():
    b = cf.FiniteBlaschke(((0.3, 2),))
    c = cf.critical_points_of_finite_blaschke(b)
    assert c.size == 1
    assert abs(c[0] - 0.3) < 1e-10


def test_critical_point_of_two_zero_product_closed_form():
    # B(z) = -z (z - 1/2)/(1 - z/2): numerator of B' is z^2 - 4z + 1,
    # so the interior critical point is 2 - sqrt(3)
    b = cf.FiniteBlaschke((0j, 0.5))
    c = cf.critical_points_of_finite_blaschke(b)
    assert c.size == 1
    assert abs(c[0] - (2.0 - SQ3)) < 1e-10
    assert abs(b.evaluate(c[0], order=1)[1]) < 1e-12


def test_critical_count_matches_degree_minus_one():
    for zeros in ([0j], [0.2, -0.3j], [0.1, 0.4j, -0.5], [(0.25, 2), 0.1j]):
        b = cf.FiniteBlaschke(zeros)
        c = cf.critical_points_of_finite_blaschke(b)
        assert c.size == b.degree - 1


@settings(max_examples=30, deadline=None)
@given(st.lists(small_complex(0.7), min_size=1, max_size=4))
def test_critical_count_hypothesis(zeros):
    b = cf.FiniteBlaschke(zeros)
    c = cf.critical_points_of_finite_blaschke(b)
    assert c.size == b.degree - 1
    assert np.all(np.abs(c) < 1.0)
    dv = np.array([b.evaluate(p, order=1)[1] for p in c])
    assert np.max(np.abs(dv)) < 1e-6 if c.size else True


# --- disk mapping properties ---------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.lists(small_complex(0.8), min_size=0, max_size=3), small_complex(0.95))
def test_maps_disk_into_disk(zeros, z):
    b = cf.FiniteBlaschke(zeros)
    assert abs(b.evaluate(z)[0]) < 1.0 + 1e-12


def test_boundary_modulus_approaches_one():
    b = cf.FiniteBlaschke((0.5, -0.3j, (0.2 + 0.1j, 1)))
    r = 1.0 - 1e-8
    xi = r * np.exp(2j * np.pi * np.arange(32) / 32.0)
    mod = np.abs(b.evaluate(xi)[0])
    assert np.min(mod) > 1.0 - 1e-6


@settings(max_examples=30, deadline=None)
@given(st.lists(small_complex(0.6), min_size=1, max_size=3), small_complex(0.7))
def test_analytic_derivative_matches_central_difference(zeros, z):
    b = cf.FiniteBlaschke(zeros)
    e = 1e-5
    dv = b.evaluate(z, order=1)[1]
    fd = (b.evaluate(z + e)[0] - b.evaluate(z - e)[0]) / (2 * e)
    assert abs(dv - fd) < 1e-7 * (1.0 + abs(dv))


def test_second_derivative_matches_central_difference():
    b = cf.FiniteBlaschke((0.4, -0.2j))
    z = 0.1 + 0.3j
    e = 1e-4
    ddv = b.evaluate(z, order=2)[2]
    fd = (b.evaluate(z + e, 1)[1] - b.evaluate(z - e, 1)[1]) / (2 * e)
    assert abs(ddv - fd) < 1e-6 * (1.0 + abs(ddv))


def test_logderiv_consistency():
    b = cf.FiniteBlaschke((0.3, (0.1 - 0.2j, 2)))
    z = np.array([0.05 + 0.4j, -0.3 - 0.1j])
    v, dv = b.evaluate(z, order=1)
    np.testing.assert_allclose(b.logderiv(z), dv / v, rtol=1e-10)


# --- zero-sequence condition ---------------------------------------------------

def test_blaschke_condition_two_points():
    out = cf.check_blaschke_condition([0.5, 0.5j])
    assert abs(out["sum"] - 1.0) < 1e-15
    assert out["count"] == 2


def test_blaschke_condition_empty():
    out = cf.check_blaschke_condition([])
    assert out["sum"] == 0.0 and out["count"] == 0


def test_blaschke_condition_geometric_sequence():
    # 50 terms: beyond ~53 the point 1 - 2^-j rounds onto the circle itself
    pts = [1.0 - 2.0 ** (-j) for j in range(1, 51)]
    out = cf.check_blaschke_condition(pts)
    assert out["sum"] < 1.0
    assert out["converges"]


def test_blaschke_condition_rejects_boundary_point():
    with pytest.raises(ConfigError):
        cf.check_blaschke_condition([1.0])


# --- Frostman shifts -----------------------------------------------------------

def test_frostman_zero_is_identity():
    b = cf.blaschke_from_spec([0j])
    assert cf.frostman_shift(b, 0.0) is b


def test_frostman_shift_moves_origin_value():
    b = cf.FiniteBlaschke(((0j, 2),))  # z^2
    f = cf.frostman_shift(b, 0.2)
    assert abs(f.evaluate(0.0)[0] - (-0.2)) < 1e-15


def test_frostman_shift_preserves_critical_points():
    b = cf.FiniteBlaschke(((0j, 2),))
    f = cf.frostman_shift(b, 0.3 - 0.1j)
    assert abs(f.evaluate(0.0, order=1)[1]) < 1e-15


def test_frostman_rejects_parameter_outside_disk():
    b = cf.blaschke_from_spec([0j])
    with pytest.raises(ConfigError):
        cf.frostman_shift(b, 1.0)


@settings(max_examples=25, deadline=None)
@given(small_complex(0.8), small_complex(0.9))
def test_frostman_shift_stays_inner(alpha, z):
    b = cf.FiniteBlaschke((0.2, -0.4j))
    f = cf.frostman_shift(b, alpha)
    assert abs(f.evaluate(z)[0]) < 1.0 + 1e-12


# --- singular factor ------------------------------------------------------------

def test_singular_atom_modulus_and_rejection():
    atom = cf.SingularInnerAtom()
    z = np.array([0.0, 0.5j, -0.9])
    mod = np.ravel(atom.modulus(z))
    assert np.all(mod < 1.0) and np.all(mod > 0.0)
    # modulus 1 a.e. on the circle, approached radially away from the puncture
    near = np.ravel(atom.modulus(np.array([-0.999999])))
    assert near[0] > 1.0 - 1e-4
    with pytest.raises(ConfigError):
        atom.evaluate(1.0 + 0j)


def test_singular_atom_derivative_consistency():
    atom = cf.SingularInnerAtom()
    z = 0.2 + 0.3j
    e = 1e-6
    dv = np.ravel(atom.evaluate(z, order=1)[1])[0]
    fd = (np.ravel(atom.evaluate(z + e)[0])[0] - np.ravel(atom.evaluate(z - e)[0])[0]) / (2 * e)
    assert abs(dv - fd) < 1e-6 * (1 + abs(dv))


# --- serialization ---------------------------------------------------------------

def test_factor_json_roundtrip_blaschke():
    b = cf.FiniteBlaschke(((0.3 + 0.1j, 2), (-0.2j, 1)), unimodular=np.exp(0.7j))
    b2 = cf.factor_from_json(b.to_json())
    z = np.array([0.1, 0.2 - 0.3j])
    np.testing.assert_allclose(b2.evaluate(z)[0], b.evaluate(z)[0], rtol=1e-14)


def test_factor_json_roundtrip_product():
    p = cf.ProductFactor([cf.FiniteBlaschke((0.2,)), cf.SingularInnerAtom()])
    p2 = cf.factor_from_json(p.to_json())
    z = np.array([0.4j, -0.1])
    np.testing.assert_allclose(
        np.ravel(p2.evaluate(z)[0]), np.ravel(p.evaluate(z)[0]), rtol=1e-13
    )


def test_critical_spec_json_roundtrip():
    spec = cf.CriticalSpec(((0.3 + 0.0j, 2), (-0.1j, 1)))
    spec2 = cf.CriticalSpec.from_json(spec.to_json())
    assert spec2.points == spec.points
    assert spec2.total == 3
