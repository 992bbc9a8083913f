"""Exact reference metrics: densities with known u, u_z, u_zz in closed form.

Each source here satisfies  Laplacian(u) = 4 |h|^2 exp(2u)  for its stated h,
which makes them the ground truth for solver, coefficient, and developing-map
tests.  All Wirtinger derivatives were derived by hand and are re-checked
symbolically in the test suite.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .inner import SingularInnerAtom
from .liouville import ClosedFormSource


def hyperbolic_source() -> ClosedFormSource:
    """u = -log(1 - |z|^2); the disk metric itself, h identically 1."""

    def u(z):
        return -np.log1p(-np.abs(z) ** 2)

    def du(z):
        return np.conj(z) / (1.0 - z * np.conj(z))

    def d2u(z):
        return (np.conj(z) / (1.0 - z * np.conj(z))) ** 2

    return ClosedFormSource(u, du, d2u, name="hyperbolic")


def power_source() -> ClosedFormSource:
    """u = log(2 / (1 - |z|^4)), the metric with h(z) = z (developing map z^2)."""

    def u(z):
        r4 = np.abs(z) ** 4
        return np.log(2.0) - np.log1p(-r4)

    def du(z):
        zb = np.conj(z)
        return 2.0 * z * zb**2 / (1.0 - (z * zb) ** 2)

    def d2u(z):
        zb = np.conj(z)
        r4 = (z * zb) ** 2
        return 2.0 * zb**2 * (1.0 + r4) / (1.0 - r4) ** 2

    return ClosedFormSource(u, du, d2u, name="power")


def radial_annulus_source() -> ClosedFormSource:
    """u = -log(2 sqrt(r) (1 - r)) on an annulus inside the punctured disk.

    With h identically 1 this density solves the curvature equation exactly;
    it extends the hyperbolic metric of the punctured disk radially.  Valid
    for 0 < |z| < 1.
    """

    def u(z):
        r = np.abs(z)
        return -np.log(2.0) - 0.5 * np.log(r) - np.log1p(-r)

    def _g1(r):
        return -0.5 / r + 1.0 / (1.0 - r)

    def du(z):
        r = np.abs(z)
        return _g1(r) * np.conj(z) / (2.0 * r)

    def d2u(z):
        r = np.abs(z)
        g1 = _g1(r)
        g2 = 0.5 / r**2 + 1.0 / (1.0 - r) ** 2
        return np.conj(z) ** 2 / (4.0 * r**2) * (g2 - g1 / r)

    return ClosedFormSource(u, du, d2u, name="radial_annulus")


def singular_pair_sources() -> tuple[ClosedFormSource, ClosedFormSource, SingularInnerAtom]:
    """Two distinct complete disk metrics sharing h = exp(-(1+z)/(1-z)).

    The first has developing map f(z) = z, the second f(z) = h(z); both give
    curvature -4 densities |h| e^u with the same zero-free h, so the metric
    is not determined by h alone.
    """
    atom = SingularInnerAtom()

    def w(z):
        return (1.0 + z) / (1.0 - z)

    def u1(z):
        return -np.log1p(-np.abs(z) ** 2) + np.real(w(z))

    def du1(z):
        return np.conj(z) / (1.0 - z * np.conj(z)) + 1.0 / (1.0 - z) ** 2

    def d2u1(z):
        return (np.conj(z) / (1.0 - z * np.conj(z))) ** 2 + 2.0 / (1.0 - z) ** 3

    def _hpair(z):
        hv = np.exp(-w(z))
        hp = -2.0 / (1.0 - z) ** 2 * hv
        return hv, hp

    def u2(z):
        hv, _ = _hpair(z)
        return np.log(2.0) - 2.0 * np.log(np.abs(1.0 - z)) - np.log1p(-np.abs(hv) ** 2)

    def du2(z):
        hv, hp = _hpair(z)
        return 1.0 / (1.0 - z) + hp * np.conj(hv) / (1.0 - hv * np.conj(hv))

    def d2u2(z):
        hv, hp = _hpair(z)
        hpp = (-4.0 / (1.0 - z) ** 3 + 4.0 / (1.0 - z) ** 4) * hv
        q = 1.0 - hv * np.conj(hv)
        t = hp * np.conj(hv)
        return 1.0 / (1.0 - z) ** 2 + hpp * np.conj(hv) / q + (t / q) ** 2

    return (
        ClosedFormSource(u1, du1, d2u1, name="singular_pair_identity"),
        ClosedFormSource(u2, du2, d2u2, name="singular_pair_selfmap"),
        atom,
    )


# ---------------------------------------------------------------------------
# Sources built from an explicit developing map
# ---------------------------------------------------------------------------

def compose_map3(outer3, inner3):
    """Derivatives to order 3 of a composition from those of its pieces."""

    def m3(z):
        g, g1, g2, g3 = inner3(z)
        f, f1, f2, f3 = outer3(g)
        return (
            f,
            f1 * g1,
            f2 * g1**2 + f1 * g2,
            f3 * g1**3 + 3.0 * f2 * g1 * g2 + f1 * g3,
        )

    return m3


def factor_map3(factor):
    """Order-3 derivative callable of a holomorphic factor object."""

    def m3(z):
        v = factor.evaluate(np.asarray(z, dtype=complex), 3)
        return v[0], v[1], v[2], v[3]

    return m3


def squaring_map3():
    def m3(z):
        z = np.asarray(z, dtype=complex)
        return z * z, 2.0 * z, np.full(z.shape, 2.0, dtype=complex), np.zeros(z.shape, dtype=complex)

    return m3


def mobius_map3(t):
    """Order-3 derivatives of a Moebius transform (matrix [[a,b],[c,d]])."""
    a, b, c, d = np.asarray(t.matrix, dtype=complex).ravel()
    det = a * d - b * c

    def m3(z):
        z = np.asarray(z, dtype=complex)
        q = c * z + d
        return (
            (a * z + b) / q,
            det / q**2,
            -2.0 * det * c / q**3,
            6.0 * det * c**2 / q**4,
        )

    return m3


def source_from_map(map3, h) -> ClosedFormSource:
    """The density u = log(|f'| / ((1 - |f|^2)|h|)) for a developing map f.

    map3(z) must return (f, f', f'', f''') with f mapping into the unit disk;
    h is the holomorphic factor whose zeros match the critical points of f.
    The Wirtinger derivatives are

        u_z  = f''/(2f') + conj(f) f'/(1-|f|^2) - (h'/h)/2
        u_zz = (f'''f' - f''^2)/(2f'^2) + conj(f) f''/(1-|f|^2)
               + conj(f)^2 f'^2/(1-|f|^2)^2 - (h'/h)'/2
    """

    def u(z):
        z = np.asarray(z, dtype=complex)
        f, f1, _f2, _f3 = map3(z)
        af = np.abs(f)
        if np.any(af >= 1.0):
            raise ConfigError("developing map must take values in the unit disk")
        return np.log(np.abs(f1)) - np.log1p(-af * af) - np.log(h.modulus(z))

    def du(z):
        z = np.asarray(z, dtype=complex)
        f, f1, f2, _f3 = map3(z)
        q = 1.0 - f * np.conj(f)
        return 0.5 * f2 / f1 + np.conj(f) * f1 / q - 0.5 * h.logderiv(z)

    def d2u(z):
        z = np.asarray(z, dtype=complex)
        f, f1, f2, f3 = map3(z)
        q = 1.0 - f * np.conj(f)
        return (
            0.5 * (f3 * f1 - f2 * f2) / (f1 * f1)
            + np.conj(f) * f2 / q
            + (np.conj(f) * f1 / q) ** 2
            - 0.5 * h.dlogderiv(z)
        )

    return ClosedFormSource(u, du, d2u, name="from_map")


def boundary_from_source(source) -> callable:
    """Dirichlet data callable: the source's u restricted to boundary points."""

    def bc(zb):
        return np.asarray(source.u(np.asarray(zb, dtype=complex)), dtype=float)

    return bc
