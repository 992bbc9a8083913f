"""Symbolic verification of every closed form the numeric tests lean on.

These run before anything numeric matters: if a reference formula here is
wrong, the downstream comparisons are meaningless.  sympy does the work;
z and zb are treated as independent variables (Wirtinger calculus), with
Laplacian(u) = 4 u_z_zb.
"""

import numpy as np
import sympy as sp

import curvforge as cf

z, zb = sp.symbols("z zbar")
x, y = sp.symbols("x y", real=True)


def lap(u):
    return 4 * sp.diff(u, z, zb)


def is_zero(expr):
    ex = sp.simplify(expr)
    if ex == 0:
        return True
    # sympy's verified numeric-sampling equality, for exp-heavy forms
    return bool(ex.equals(0))


# --- the two disk densities the solver is measured against -----------------

def test_hyperbolic_density_solves_curvature_equation():
    u = -sp.log(1 - z * zb)
    assert sp.simplify(lap(u) - 4 * sp.exp(2 * u)) == 0


def test_power_density_solves_curvature_equation():
    # reference for h(z) = z: |h|^2 = z*zb
    u = sp.log(2 / (1 - (z * zb) ** 2))
    assert sp.simplify(lap(u) - 4 * z * zb * sp.exp(2 * u)) == 0


def test_power_density_from_squaring_map():
    # u = log(|f'| / ((1-|f|^2)|h|)) with f = z^2, h = z reproduces it
    f, fb = z**2, zb**2
    u_from_f = sp.log(2 * sp.sqrt(z * zb) / ((1 - f * fb) * sp.sqrt(z * zb)))
    u_ref = sp.log(2 / (1 - (z * zb) ** 2))
    assert sp.simplify(u_from_f - u_ref) == 0


# --- annulus fixture --------------------------------------------------------

def test_radial_annulus_density_curvature_and_boundary_values():
    r = sp.sqrt(x**2 + y**2)
    lam = 1 / (2 * sp.sqrt(r) * (1 - r))
    u = sp.log(lam)
    residual = sp.diff(u, x, 2) + sp.diff(u, y, 2) - 4 * sp.exp(2 * u)
    assert sp.simplify(residual.subs({x: sp.Rational(3, 10), y: sp.Rational(1, 5)})) == 0
    assert is_zero(residual)
    lam_r = 1 / (2 * sp.sqrt(sp.Symbol("r", positive=True)) * (1 - sp.Symbol("r", positive=True)))
    assert sp.simplify(lam_r.subs(sp.Symbol("r", positive=True), sp.Rational(1, 4)) - sp.Rational(4, 3)) == 0
    assert sp.simplify(lam_r.subs(sp.Symbol("r", positive=True), sp.Rational(1, 2)) - sp.sqrt(2)) == 0


# --- the meromorphic combination and the normal form ------------------------

def test_b_combination_vanishes_for_hyperbolic():
    u = -sp.log(1 - z * zb)
    uz = sp.diff(u, z)
    b = sp.diff(u, z, 2) - uz**2  # h = 1: no log-derivative term
    assert sp.simplify(b) == 0


def test_b_combination_vanishes_for_power_case():
    u = sp.log(2 / (1 - (z * zb) ** 2))
    uz = sp.diff(u, z)
    b = sp.diff(u, z, 2) - uz**2 - uz / z  # h = z: h'/h = 1/z
    assert sp.simplify(b) == 0


def test_normal_form_coefficient_power_case():
    # A = B + (1/2)(h'/h)' - (1/4)(h'/h)^2 with B = 0, h'/h = 1/z
    a = sp.Rational(1, 2) * sp.diff(1 / z, z) - sp.Rational(1, 4) * (1 / z) ** 2
    assert sp.simplify(a + 3 / (4 * z**2)) == 0


def test_schwarzian_of_squaring_is_twice_normal_form():
    f = z**2
    lp = sp.diff(f, z, 2) / sp.diff(f, z)
    s = sp.diff(lp, z) - lp**2 / 2
    assert sp.simplify(s + 3 / (2 * z**2)) == 0  # S_{z^2} = -3/(2 z^2)
    assert sp.simplify(s - 2 * (-3 / (4 * z**2))) == 0


def test_schwarzian_of_mobius_vanishes():
    a, b, c, d = sp.symbols("a b c d")
    f = (a * z + b) / (c * z + d)
    lp = sp.diff(f, z, 2) / sp.diff(f, z)
    s = sp.diff(lp, z) - lp**2 / 2
    assert sp.simplify(s) == 0


def test_singular_coefficient_and_indicial_roots():
    n = sp.Symbol("n", positive=True)
    r = sp.Symbol("r")
    b0 = (1 - (n + 1) ** 2) / 4
    roots = sp.solve(sp.Eq(r * (r - 1) + b0, 0), r)
    assert {sp.simplify(t) for t in roots} == {sp.simplify((n + 2) / 2), sp.simplify(-n / 2)}
    for nn in (1, 2, 3):
        lo, hi = cf.indicial_roots(nn)
        assert np.isclose(sorted((lo, hi))[0], -nn / 2)
        assert np.isclose(sorted((lo, hi))[1], (nn + 2) / 2)
    assert float(b0.subs(n, 1)) == -0.75
    assert float(b0.subs(n, 2)) == -2.0


# --- nonuniqueness pair (singular curvature factor) --------------------------

def test_nonuniqueness_pair_both_solve_the_equation():
    h = sp.exp(-(1 + z) / (1 - z))
    hb = sp.exp(-(1 + zb) / (1 - zb))
    mod2 = h * hb  # |h|^2 as a function of (z, zbar)

    u1 = -sp.log(1 - z * zb) - sp.log(mod2) / 2
    r1 = lap(u1) - 4 * mod2 * sp.exp(2 * u1)
    assert sp.simplify(r1) == 0

    hp = sp.diff(h, z)
    hpb = sp.diff(hb, zb)
    u2 = sp.log(hp * hpb) / 2 - sp.log(1 - mod2) - sp.log(mod2) / 2
    r2 = lap(u2) - 4 * mod2 * sp.exp(2 * u2)
    assert is_zero(r2)


def test_nonuniqueness_pair_differ():
    # u1(0) = -log|h(0)| = 1 while u2(0) = log(2/(1-e^{-2})) ~ 0.839
    h = sp.exp(-(1 + z) / (1 - z))
    u1_0 = float((-sp.log(1 - z * zb) - sp.log(h * h.subs(z, zb)) / 2).subs({z: 0, zb: 0}))
    hp = sp.diff(h, z)
    u2_0 = float(
        (sp.log(hp * sp.diff(h.subs(z, zb), zb)) / 2
         - sp.log(1 - h * h.subs(z, zb)) - sp.log(h * h.subs(z, zb)) / 2
         ).subs({z: 0, zb: 0})
    )
    assert abs(u1_0 - u2_0) > 0.1


# --- potential-theory pieces -------------------------------------------------

def test_disk_green_function_harmonic_and_boundary_zero():
    zeta, zetab = sp.symbols("zeta zetabar")
    g = sp.log((1 - z * zetab) * (1 - zb * zeta) / ((z - zeta) * (zb - zetab))) / 2
    assert sp.simplify(sp.diff(g, z, zb)) == 0  # harmonic off the diagonal
    # |z| = 1 means zb = 1/z; the argument collapses to modulus 1
    on_circle = g.subs(zb, 1 / z)
    assert sp.simplify(on_circle) == 0


def test_poisson_radial_solution():
    v = (1 - x**2 - y**2) / 4
    assert sp.simplify(sp.diff(v, x, 2) + sp.diff(v, y, 2) + 1) == 0


def test_harmonic_log_modulus():
    v = sp.log(sp.sqrt((2 + x) ** 2 + y**2))  # Re log(2+z)
    assert sp.simplify(sp.diff(v, x, 2) + sp.diff(v, y, 2)) == 0


# --- the one-dimensional boundary-layer reduction ----------------------------

def test_layer_reduction_first_integral_and_arclengths():
    s = sp.Symbol("s")
    c, E, t = sp.symbols("c E t", positive=True)
    U = sp.Function("U")
    # first integral: if U'^2 = c^2 e^{2U} + E then U'' = c^2 e^{2U}
    up2 = c**2 * sp.exp(2 * U(s)) + E
    upp = sp.diff(up2, s) / (2 * sp.sqrt(up2))
    assert sp.simplify(upp.subs(sp.Derivative(U(s), s), sp.sqrt(up2)) - c**2 * sp.exp(2 * U(s))) == 0
    # arclength element in t = e^{-U}: ds/dt = 1/sqrt(c^2 + E t^2), three branches
    assert sp.simplify(sp.diff(sp.asinh(t * sp.sqrt(E) / c) / sp.sqrt(E), t) - 1 / sp.sqrt(c**2 + E * t**2)) == 0
    assert sp.simplify(sp.diff(t / c, t) - 1 / sp.sqrt(c**2)) == 0
    mu = sp.Symbol("mu", positive=True)
    ds = sp.diff(sp.asin(t * mu / c) / mu, t)
    assert sp.simplify(ds - 1 / sp.sqrt(c**2 - mu**2 * t**2)) == 0


# --- closed-form sources agree with their own derivative formulas -----------

def test_packaged_sources_match_symbolic_derivatives(rng):
    cases = [
        (cf.hyperbolic_source(), -sp.log(1 - z * zb)),
        (cf.power_source(), sp.log(2 / (1 - (z * zb) ** 2))),
    ]
    pts = 0.6 * (rng.random(12) - 0.5) + 0.6j * (rng.random(12) - 0.5)
    for src, expr in cases:
        fu = sp.lambdify((z, zb), expr, "numpy")
        fdu = sp.lambdify((z, zb), sp.diff(expr, z), "numpy")
        fd2u = sp.lambdify((z, zb), sp.diff(expr, z, 2), "numpy")
        np.testing.assert_allclose(src.u(pts), fu(pts, pts.conj()).real, atol=1e-13)
        np.testing.assert_allclose(src.du(pts), fdu(pts, pts.conj()), atol=1e-13)
        np.testing.assert_allclose(src.d2u(pts), fd2u(pts, pts.conj()), atol=1e-13)


def test_annulus_source_matches_symbolic(rng):
    src = cf.radial_annulus_source()
    r = sp.sqrt(z * zb)
    expr = -sp.log(2 * sp.sqrt(r) * (1 - r))
    fdu = sp.lambdify((z, zb), sp.diff(expr, z), "numpy")
    fd2u = sp.lambdify((z, zb), sp.diff(expr, z, 2), "numpy")
    ang = np.exp(2j * np.pi * rng.random(10))
    pts = (0.27 + 0.2 * rng.random(10)) * ang
    np.testing.assert_allclose(src.du(pts), fdu(pts, pts.conj()), atol=1e-12)
    np.testing.assert_allclose(src.d2u(pts), fd2u(pts, pts.conj()), atol=1e-12)


def test_singular_pair_sources_match_symbolic(rng):
    src1, src2, atom = cf.singular_pair_sources()
    h = sp.exp(-(1 + z) / (1 - z))
    hb = sp.exp(-(1 + zb) / (1 - zb))
    u1 = -sp.log(1 - z * zb) - sp.log(h * hb) / 2
    hp = sp.diff(h, z)
    hpb = sp.diff(hb, zb)
    u2 = sp.log(hp * hpb) / 2 - sp.log(1 - h * hb) - sp.log(h * hb) / 2
    pts = 0.5 * (rng.random(8) - 0.5) + 0.5j * (rng.random(8) - 0.5)
    for src, expr in ((src1, u1), (src2, u2)):
        fu = sp.lambdify((z, zb), expr, "numpy")
        fdu = sp.lambdify((z, zb), sp.diff(expr, z), "numpy")
        got_u = src.u(pts)
        np.testing.assert_allclose(got_u, fu(pts, pts.conj()).real, atol=1e-12)
        np.testing.assert_allclose(src.du(pts), fdu(pts, pts.conj()), atol=1e-12)
    # the atom itself evaluates to exp(-(1+z)/(1-z))
    w = pts[:3]
    np.testing.assert_allclose(
        np.ravel(atom.evaluate(w)), np.exp(-(1 + w) / (1 - w)), atol=1e-14
    )
