"""Finite Blaschke products and related holomorphic factors.

The right-hand side of the curvature equation involves the squared modulus of
a holomorphic function h; this module provides the concrete h families (finite
Blaschke products, polynomials, the one-atom singular inner function, and
products of these) with exact derivatives up to third order, plus the
combinatorial operations on critical points that the construction pipeline
needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import numpy.polynomial.polynomial as npoly

from .errors import ConfigError, DegreeViolationError

# zeros closer together than this are treated as one multiple zero when
# extracting critical points: double precision cannot separate a genuine pair
# below the sqrt(eps) root-splitting floor anyway
CLUSTER_TOL = 1e-6


def _as_points(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class CriticalSpec:
    """Finite multiset of prescribed critical points in the unit disk."""

    points: tuple          # ((complex, multiplicity), ...)

    def __post_init__(self):
        for a, m in self.points:
            if abs(a) >= 1.0:
                raise ConfigError(f"critical point {a} is not inside the unit disk")
            if int(m) != m or m < 1:
                raise ConfigError(f"multiplicity must be a positive integer, got {m}")

    @staticmethod
    def from_points(seq) -> "CriticalSpec":
        """Build from a plain sequence; repeated points accumulate multiplicity."""
        acc: list[list] = []
        for a in seq:
            a = complex(a)
            for item in acc:
                if abs(item[0] - a) == 0.0:
                    item[1] += 1
                    break
            else:
                acc.append([a, 1])
        return CriticalSpec(tuple((a, int(m)) for a, m in acc))

    @property
    def total(self) -> int:
        return sum(m for _, m in self.points)

    def flat(self) -> np.ndarray:
        """Points repeated by multiplicity."""
        return np.array([a for a, m in self.points for _ in range(m)], dtype=complex)

    def to_json(self) -> dict:
        return {"points": [[a.real, a.imag, int(m)] for a, m in self.points]}

    @staticmethod
    def from_json(data: dict) -> "CriticalSpec":
        return CriticalSpec(tuple((complex(re, im), int(m)) for re, im, m in data["points"]))


class HolomorphicFactor:
    """Common interface: values/derivatives, log-derivative, zeros, modulus."""

    variant = "abstract"

    def evaluate(self, z, order: int = 0):
        """Return [h, h', ..., h^(order)] evaluated at z (arrays)."""
        raise NotImplementedError

    def logderiv(self, z):
        """h'/h, with exact pole structure at zeros of h."""
        v = self.evaluate(z, 1)
        return v[1] / v[0]

    def dlogderiv(self, z):
        """(h'/h)' = h''/h - (h'/h)^2."""
        v = self.evaluate(z, 2)
        ld = v[1] / v[0]
        return v[2] / v[0] - ld * ld

    def modulus(self, z):
        return np.abs(self.evaluate(z, 0)[0])

    def zeros(self) -> tuple:
        """((zero, multiplicity), ...) inside the unit disk."""
        return ()

    def is_identically_zero(self) -> bool:
        return False

    def to_json(self) -> dict:
        raise NotImplementedError


def _check_unit_disk(z: np.ndarray) -> None:
    if np.any(np.abs(z) >= 1.0):
        raise ConfigError("inner functions are evaluated strictly inside the unit disk")


def _leibniz(parts: list[list[np.ndarray]], order: int) -> list[np.ndarray]:
    """Combine per-factor derivative stacks [[v, v', ...], ...] into the product's."""
    shape = parts[0][0].shape
    out = [np.ones(shape, dtype=complex)] + [np.zeros(shape, dtype=complex) for _ in range(order)]
    for fac in parts:
        new = []
        for k in range(order + 1):
            acc = np.zeros(shape, dtype=complex)
            for j in range(k + 1):
                acc += comb(k, j) * out[j] * fac[k - j]
            new.append(acc)
        out = new
    return out


class FiniteBlaschke(HolomorphicFactor):
    """unimodular * prod over zeros a of [(-conj(a)/|a|) (z-a)/(1-conj(a)z)]^mult.

    The factor for a zero at the origin is plain z.  An empty product is the
    constant function 1.
    """

    variant = "blaschke"

    def __init__(self, zeros=(), unimodular: complex = 1.0):
        zl = []
        for item in zeros:
            a, m = item if isinstance(item, tuple) else (item, 1)
            a = complex(a)
            if abs(a) >= 1.0:
                raise ConfigError(f"Blaschke zero {a} is not inside the unit disk")
            if int(m) != m or m < 1:
                raise ConfigError("zero multiplicity must be a positive integer")
            zl.append((a, int(m)))
        self._zeros = tuple(zl)
        lam = complex(unimodular)
        if abs(abs(lam) - 1.0) > 1e-9:
            raise ConfigError("unimodular factor must have modulus 1")
        self.unimodular = lam / abs(lam)

    @property
    def degree(self) -> int:
        return sum(m for _, m in self._zeros)

    def zeros(self) -> tuple:
        return self._zeros

    def _factor_derivs(self, a: complex, z: np.ndarray, order: int) -> list[np.ndarray]:
        s = 1.0 if a == 0 else -np.conj(a) / abs(a)
        q = 1.0 - np.conj(a) * z
        vals = [s * (z - a) / q]
        if order >= 1:
            c = s * (1.0 - abs(a) ** 2)
            vals.append(c / q**2)
        if order >= 2:
            vals.append(2.0 * np.conj(a) * c / q**3)
        if order >= 3:
            vals.append(6.0 * np.conj(a) ** 2 * c / q**4)
        return vals

    def evaluate(self, z, order: int = 0):
        z = _as_points(z)
        _check_unit_disk(z)
        if not self._zeros:
            shape = z.shape
            out = [np.full(shape, self.unimodular, dtype=complex)]
            out += [np.zeros(shape, dtype=complex) for _ in range(order)]
            return out
        parts = []
        for a, m in self._zeros:
            fd = self._factor_derivs(a, z, order)
            parts.extend([fd] * m)
        out = _leibniz(parts, order)
        return [self.unimodular * v for v in out]

    def logderiv(self, z):
        z = _as_points(z)
        acc = np.zeros(z.shape, dtype=complex)
        for a, m in self._zeros:
            acc += m * (1.0 / (z - a) + np.conj(a) / (1.0 - np.conj(a) * z))
        return acc

    def dlogderiv(self, z):
        z = _as_points(z)
        acc = np.zeros(z.shape, dtype=complex)
        for a, m in self._zeros:
            acc += m * (-1.0 / (z - a) ** 2 + np.conj(a) ** 2 / (1.0 - np.conj(a) * z) ** 2)
        return acc

    def to_json(self) -> dict:
        return {
            "variant": "blaschke",
            "zeros": [[a.real, a.imag, m] for a, m in self._zeros],
            "unimodular": [self.unimodular.real, self.unimodular.imag],
        }


class PolynomialFactor(HolomorphicFactor):
    """Polynomial in z, coefficients in increasing order."""

    variant = "polynomial"

    def __init__(self, coeffs, roots=None):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.size == 0:
            raise ConfigError("polynomial needs at least one coefficient")
        self._roots = None if roots is None else tuple(roots)

    @staticmethod
    def monic_from_roots(roots) -> "PolynomialFactor":
        roots = [complex(r) for r in roots]
        return PolynomialFactor(npoly.polyfromroots(roots), roots=roots)

    def evaluate(self, z, order: int = 0):
        z = _as_points(z)
        out = []
        c = self.coeffs
        for _ in range(order + 1):
            out.append(npoly.polyval(z, c) if c.size else np.zeros(z.shape, dtype=complex))
            c = npoly.polyder(c) if c.size > 1 else np.zeros(1, dtype=complex)
        return out

    def zeros(self) -> tuple:
        if self._roots is not None:
            pts = [complex(r) for r in self._roots]
        else:
            c = self.coeffs.copy()
            while c.size > 1 and c[-1] == 0:
                c = c[:-1]
            if c.size <= 1:
                return ()
            pts = [complex(r) for r in npoly.polyroots(c)]
        return tuple((a, m) for a, m in _cluster_points(np.array(pts, dtype=complex)) if abs(a) < 1.0)

    def is_identically_zero(self) -> bool:
        return bool(np.all(self.coeffs == 0))

    def to_json(self) -> dict:
        return {"variant": "polynomial", "coeffs": [[c.real, c.imag] for c in self.coeffs]}


class SingularInnerAtom(HolomorphicFactor):
    """exp(-(1+z)/(1-z)): the zero-free inner function with one boundary atom."""

    variant = "singular_atom"

    def evaluate(self, z, order: int = 0):
        z = _as_points(z)
        _check_unit_disk(z)
        q = 1.0 - z
        h = np.exp(-(1.0 + z) / q)
        out = [h]
        if order >= 1:
            g1 = -2.0 / q**2
            out.append(g1 * h)
        if order >= 2:
            g2 = -4.0 / q**3
            out.append((g2 + g1 * g1) * h)
        if order >= 3:
            g3 = -12.0 / q**4
            out.append((g3 + 3.0 * g1 * g2 + g1**3) * h)
        return out

    def logderiv(self, z):
        z = _as_points(z)
        return -2.0 / (1.0 - z) ** 2

    def dlogderiv(self, z):
        z = _as_points(z)
        return -4.0 / (1.0 - z) ** 3

    def modulus(self, z):
        z = _as_points(z)
        w = (1.0 + z) / (1.0 - z)
        return np.exp(-w.real)

    def to_json(self) -> dict:
        return {"variant": "singular_atom"}


class ProductFactor(HolomorphicFactor):
    """Flat product of holomorphic factors."""

    variant = "product"

    def __init__(self, parts):
        flat = []
        for p in parts:
            if isinstance(p, ProductFactor):
                flat.extend(p.parts)
            else:
                flat.append(p)
        if not flat:
            raise ConfigError("product needs at least one part")
        self.parts = tuple(flat)

    def evaluate(self, z, order: int = 0):
        z = _as_points(z)
        stacks = [p.evaluate(z, order) for p in self.parts]
        return _leibniz(stacks, order)

    def logderiv(self, z):
        return sum(p.logderiv(z) for p in self.parts)

    def dlogderiv(self, z):
        return sum(p.dlogderiv(z) for p in self.parts)

    def modulus(self, z):
        out = np.ones(_as_points(z).shape)
        for p in self.parts:
            out = out * p.modulus(z)
        return out

    def zeros(self) -> tuple:
        out = []
        for p in self.parts:
            out.extend(p.zeros())
        return tuple(out)

    def is_identically_zero(self) -> bool:
        return any(p.is_identically_zero() for p in self.parts)

    def to_json(self) -> dict:
        return {"variant": "product", "parts": [p.to_json() for p in self.parts]}


ONE = FiniteBlaschke(())


def factor_from_json(data: dict) -> HolomorphicFactor:
    v = data["variant"]
    if v == "blaschke":
        zeros = [(complex(re, im), int(m)) for re, im, m in data["zeros"]]
        lam = complex(*data["unimodular"])
        return FiniteBlaschke(zeros, lam)
    if v == "polynomial":
        return PolynomialFactor([complex(re, im) for re, im in data["coeffs"]])
    if v == "singular_atom":
        return SingularInnerAtom()
    if v == "product":
        return ProductFactor([factor_from_json(p) for p in data["parts"]])
    raise ConfigError(f"unknown factor variant {v!r}")


def blaschke_from_spec(spec: CriticalSpec | list) -> FiniteBlaschke:
    """Blaschke product whose zero set is the given critical-point spec."""
    if not isinstance(spec, CriticalSpec):
        spec = CriticalSpec.from_points(spec)
    return FiniteBlaschke(spec.points)


def check_blaschke_condition(points) -> dict:
    """Partial sum of (1 - |a|) * mult over a zero sequence.

    All points must lie strictly inside the disk.  For an infinite sequence
    truncated after N terms with a geometric tail 1 - |a_j| <= C rho^j, the
    discarded mass is at most C rho^(N+1) / (1 - rho); callers should choose N
    accordingly, this routine only sums the prefix it is given.
    """
    total = 0.0
    count = 0
    for item in points:
        a, m = item if isinstance(item, tuple) else (item, 1)
        if abs(a) >= 1.0:
            raise ConfigError(f"zero {a} lies outside the open unit disk")
        total += m * (1.0 - abs(a))
        count += m
    return {"sum": total, "count": count, "converges": np.isfinite(total)}


def _cluster_points(pts: np.ndarray, tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """Greedy merge of near-coincident points into (centroid, multiplicity)."""
    remaining = list(pts)
    out = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        rest = []
        for p in remaining:
            if abs(p - seed) < tol:
                group.append(p)
            else:
                rest.append(p)
        remaining = rest
        out.append((complex(np.mean(group)), len(group)))
    return out


def critical_points_of_finite_blaschke(b: FiniteBlaschke, cluster_tol: float = CLUSTER_TOL) -> np.ndarray:
    """The d-1 critical points (with multiplicity) of a degree-d Blaschke product.

    Critical points are roots of the numerator of B' = (P'Q - PQ')/Q^2, found
    by companion matrix, polished by one Newton step, and merged into multiple
    roots when a cluster is tighter than cluster_tol (the centroid of a
    numerically split multiple root is second-order accurate).
    """
    d = b.degree
    if d == 0:
        return np.empty(0, dtype=complex)
    roots = [a for a, m in b.zeros() for _ in range(m)]
    p = npoly.polyfromroots(roots)
    q = np.ones(1, dtype=complex)
    for a in roots:
        q = npoly.polymul(q, np.array([1.0, -np.conj(a)]))
    num = npoly.polysub(npoly.polymul(npoly.polyder(p), q), npoly.polymul(p, npoly.polyder(q)))
    scale = np.abs(num).max()
    if scale == 0:
        raise DegreeViolationError("derivative numerator vanished identically")
    num = num / scale
    while num.size > 1 and abs(num[-1]) < 1e-13:
        num = num[:-1]
    raw = npoly.polyroots(num) if num.size > 1 else np.empty(0, dtype=complex)
    inside = raw[np.abs(raw) < 1.0]
    # one Newton step sharpens simple roots to machine accuracy; the step is
    # capped so a nearly-multiple root (tiny derivative) cannot be thrown off
    dnum = npoly.polyder(num)
    fv = npoly.polyval(inside, num)
    fd = npoly.polyval(inside, dnum)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(np.abs(fd) > 1e-300, fv / fd, 0.0)
    step = np.where(np.abs(step) < 1e-4, step, 0.0)
    inside = inside - step
    clustered = _cluster_points(inside, cluster_tol)
    flat = np.array([c for c, m in clustered for _ in range(m)], dtype=complex)
    if flat.size != d - 1:
        raise DegreeViolationError(
            f"expected {d - 1} critical points for a degree-{d} Blaschke product, found {flat.size}"
        )
    return flat


class FrostmanShift(HolomorphicFactor):
    """(f - alpha)/(1 - conj(alpha) f): disk-automorphism postcomposition."""

    variant = "frostman_shift"

    def __init__(self, base: HolomorphicFactor, alpha: complex):
        alpha = complex(alpha)
        if abs(alpha) >= 1.0:
            raise ConfigError("Frostman parameter must lie inside the unit disk")
        self.base = base
        self.alpha = alpha

    def _tau_derivs(self, w: np.ndarray, order: int) -> list[np.ndarray]:
        a = self.alpha
        q = 1.0 - np.conj(a) * w
        out = [(w - a) / q]
        if order >= 1:
            c = 1.0 - abs(a) ** 2
            out.append(c / q**2)
        if order >= 2:
            out.append(2.0 * np.conj(a) * c / q**3)
        if order >= 3:
            out.append(6.0 * np.conj(a) ** 2 * c / q**4)
        return out

    def evaluate(self, z, order: int = 0):
        f = self.base.evaluate(z, order)
        t = self._tau_derivs(f[0], order)
        out = [t[0]]
        if order >= 1:
            out.append(t[1] * f[1])
        if order >= 2:
            out.append(t[2] * f[1] ** 2 + t[1] * f[2])
        if order >= 3:
            out.append(t[3] * f[1] ** 3 + 3.0 * t[2] * f[1] * f[2] + t[1] * f[3])
        return out

    def zeros(self) -> tuple:
        raise ConfigError("zeros of a Frostman-shifted map are not tracked symbolically")

    def to_json(self) -> dict:
        return {
            "variant": "frostman_shift",
            "alpha": [self.alpha.real, self.alpha.imag],
            "base": self.base.to_json(),
        }


def frostman_shift(obj, alpha: complex):
    """Postcompose with the disk automorphism w -> (w - alpha)/(1 - conj(alpha) w).

    Accepts a holomorphic factor (returns a shifted factor) or any object with
    a .frostman(alpha) method, e.g. a sampled developing map.
    """
    if isinstance(obj, HolomorphicFactor):
        if complex(alpha) == 0:
            return obj
        return FrostmanShift(obj, alpha)
    if hasattr(obj, "frostman"):
        return obj.frostman(alpha)
    raise ConfigError(f"cannot Frostman-shift object of type {type(obj).__name__}")
