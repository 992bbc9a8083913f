"""Meromorphic coefficients of a metric and reconstruction of its developing map.

For a solution u of  Laplacian(u) = 4|h|^2 exp(2u)  the combination

    B(z) = u_zz - u_z^2 - (h'/h) u_z
    A(z) = B(z) + (1/2)(h'/h)' - (1/4)(h'/h)^2

is meromorphic (its dbar-derivative vanishes where the equation holds), with
double poles exactly at the zeros of h.  A equals half the Schwarzian
derivative of the developing map f, which is recovered here by integrating the
linear system  y'' + A y = 0  along pole-avoiding polylines and forming the
quotient of two solutions.

Grid-backed sources keep u and its Wirtinger derivatives as interpolated
lattice fields while every h-dependent term is evaluated exactly, so the pole
structure of A (in particular the leading Laurent coefficient at each zero of
h) carries no discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, EvaluationDomainError, PathPlanningError, SolverError
from .grid import ScalarField
from .operators import BicubicSampler, _d1, wirtinger_fields

DEFAULT_POLE_MARGIN = 0.05
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12


# ---------------------------------------------------------------------------
# Moebius transforms
# ---------------------------------------------------------------------------

@dataclass
class MobiusTransform:
    """w -> (a w + b)/(c w + d), stored as a 2x2 complex matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex).reshape(2, 2)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-300:
            raise ConfigError("Moebius matrix is singular")
        self.matrix = m / np.sqrt(det)

    def __call__(self, w):
        a, b, c, d = self.matrix.ravel()
        return (a * w + b) / (c * w + d)

    def derivative(self, w):
        a, b, c, d = self.matrix.ravel()
        det = a * d - b * c
        return det / (c * w + d) ** 2

    def inverse(self) -> "MobiusTransform":
        a, b, c, d = self.matrix.ravel()
        return MobiusTransform(np.array([[d, -b], [-c, a]]))

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        return MobiusTransform(self.matrix @ other.matrix)

    @staticmethod
    def from_three_points(src, dst) -> "MobiusTransform":
        """The transform sending the triple src to the triple dst."""

        def to_standard(w1, w2, w3):
            # maps w1, w2, w3 to 0, 1, infinity
            return np.array([[w2 - w3, -w1 * (w2 - w3)], [w2 - w1, -w3 * (w2 - w1)]])

        ms = to_standard(*[complex(w) for w in src])
        md = to_standard(*[complex(w) for w in dst])
        a, b, c, d = md.ravel()
        md_inv = np.array([[d, -b], [-c, a]])
        return MobiusTransform(md_inv @ ms)

    def disk_form(self) -> tuple[complex, complex]:
        """(a, mu) with T(z) = mu (z - a)/(1 - conj(a) z), if T is of that form."""
        A, B, C, D = self.matrix.ravel()
        a = -B / A
        probe = 0.5 if abs(a - 0.5) > 0.25 else -0.4 + 0.3j
        mu = self(probe) * (1.0 - np.conj(a) * probe) / (probe - a)
        return complex(a), complex(mu)

    def is_disk_automorphism(self, tol: float = 1e-6) -> bool:
        xi = np.exp(1j * np.array([0.1, 2.2, 4.4]))
        return bool(np.max(np.abs(np.abs(self(xi)) - 1.0)) <= tol)


@dataclass
class MobiusFit:
    transform: MobiusTransform
    max_residual: float
    automorphism_defect: float

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol and self.automorphism_defect <= 1e-6


def mobius_fit(f_values, g_values) -> MobiusFit:
    """Fit T with f = T(g) from samples, then measure the worst deviation.

    Three pairs with well-separated g-values pin T; the remaining samples
    measure the defect.  The automorphism defect reports how far |T| is from
    1 on the unit circle.
    """
    f = np.asarray(f_values, dtype=complex).ravel()
    g = np.asarray(g_values, dtype=complex).ravel()
    if f.size != g.size or f.size < 3:
        raise ConfigError("mobius_fit needs at least three matching samples")
    idx = [int(np.argmin(np.abs(g)))]
    for _ in range(2):
        d = np.min(np.abs(g[:, None] - g[idx][None, :]), axis=1)
        idx.append(int(np.argmax(d)))
    sep = min(
        abs(g[idx[0]] - g[idx[1]]), abs(g[idx[0]] - g[idx[2]]), abs(g[idx[1]] - g[idx[2]])
    )
    if sep < 1e-8:
        raise SolverError("samples too degenerate for a Moebius fit")
    t = MobiusTransform.from_three_points(g[idx], f[idx])
    resid = float(np.max(np.abs(f - t(g))))
    xi = np.exp(1j * np.array([0.1, 2.2, 4.4]))
    defect = float(np.max(np.abs(np.abs(t(xi)) - 1.0)))
    return MobiusFit(t, resid, defect)


# ---------------------------------------------------------------------------
# Analytic sources: closed-form and grid-backed u with Wirtinger derivatives
# ---------------------------------------------------------------------------

class ClosedFormSource:
    """u with exact d/dz and d2/dz2 callables."""

    kind = "closed_form"

    def __init__(self, u, du, d2u, name: str = "closed_form"):
        self._u, self._du, self._d2u = u, du, d2u
        self.name = name

    def u(self, z):
        return np.asarray(self._u(np.asarray(z, dtype=complex)), dtype=float)

    def du(self, z):
        return np.asarray(self._du(np.asarray(z, dtype=complex)), dtype=complex)

    def d2u(self, z):
        return np.asarray(self._d2u(np.asarray(z, dtype=complex)), dtype=complex)

    def guard_points(self, pts) -> None:
        pass


class GridSource:
    """u from a lattice field; derivatives by fourth-order stencils + bicubic.

    Evaluation refuses points within 3 spacings of the domain boundary (where
    the stencil-derivative fields lose support) and within 2 spacings of a
    zero of h supplied via pole_points (pole structure is added analytically
    by the coefficient routines, never interpolated).
    """

    kind = "grid_backed"

    def __init__(self, u_field: ScalarField, pole_points=()):
        grid = u_field.grid
        self.grid = grid
        self.pole_points = np.asarray(list(pole_points), dtype=complex)
        uz, uzz, valid = wirtinger_fields(u_field)
        dense_u = u_field.dense()
        self._s_u = BicubicSampler(grid, dense_u, grid.mask)
        self._s_uz = BicubicSampler(grid, np.where(valid, uz, np.nan), valid)
        self._s_uzz = BicubicSampler(grid, np.where(valid, uzz, np.nan), valid)
        self.boundary_margin = 3.0 * grid.spacing
        self.pole_margin_cells = 2.0 * grid.spacing

    def guard_points(self, pts) -> None:
        pts = np.atleast_1d(np.asarray(pts, dtype=complex))
        dist = self.grid.descriptor.boundary_distance(pts)
        if np.any(dist < self.boundary_margin - 1e-13):
            raise EvaluationDomainError(
                f"grid-backed source refuses points within {self.boundary_margin:g} of the boundary"
            )
        if self.pole_points.size:
            dmin = np.min(np.abs(pts[:, None] - self.pole_points[None, :]), axis=1)
            if np.any(dmin < self.pole_margin_cells - 1e-13):
                raise EvaluationDomainError(
                    "grid-backed source refuses points within 2 spacings of a zero of h"
                )

    def u(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self.guard_points(z)
        return self._s_u(z).real

    def du(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self.guard_points(z)
        return self._s_uz(z)

    def d2u(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self.guard_points(z)
        return self._s_uzz(z)


def compute_Bu(source, h, z):
    """u_zz - u_z^2 - (h'/h) u_z  at the points z."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    du = source.du(z)
    return source.d2u(z) - du * du - h.logderiv(z) * du


def compute_Au(source, h, z):
    """compute_Bu plus the exact h-only terms; half the Schwarzian of f."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ld = h.logderiv(z)
    return compute_Bu(source, h, z) + 0.5 * h.dlogderiv(z) - 0.25 * ld * ld


def au_evaluator(source, h):
    def au(z):
        return compute_Au(source, h, z)

    return au


# ---------------------------------------------------------------------------
# Laurent data at zeros of h
# ---------------------------------------------------------------------------

def laurent_b0(source, h, center: complex, radius: float, nodes: int = 64) -> complex:
    """Leading Laurent coefficient of A at a zero of h, by contour quadrature.

    Integrates (z - center) A(z) over a circle; the trapezoid rule on an
    analytic integrand converges geometrically, so 64 nodes are far beyond the
    target accuracy.  The contour must stay clear of other poles and of the
    region where a grid-backed source refuses to evaluate.
    """
    center = complex(center)
    if radius <= 0:
        raise ConfigError("contour radius must be positive")
    others = [a for a, _m in h.zeros() if abs(a - center) > 1e-14]
    for a in others:
        if abs(a - center) <= radius + 1e-12:
            raise ConfigError(
                f"contour of radius {radius:g} around {center} touches another zero of h at {a}"
            )
    t = 2.0 * np.pi * np.arange(nodes) / nodes
    ring = center + radius * np.exp(1j * t)
    vals = compute_Au(source, h, ring)
    return complex(radius**2 / nodes * np.sum(np.exp(2j * t) * vals))


def indicial_roots(n: int) -> tuple[float, float]:
    """Roots of r(r-1) + b0 = 0 for a zero of h of order n."""
    b0 = (1.0 - (n + 1) ** 2) / 4.0
    disc = np.sqrt(1.0 - 4.0 * b0)
    return ((1.0 + disc) / 2.0, (1.0 - disc) / 2.0)


# ---------------------------------------------------------------------------
# Holomorphy residual of the grid-backed coefficient
# ---------------------------------------------------------------------------

def holomorphy_residual(u_field, h, margin: float | None = None, grid=None) -> dict:
    """Sup of |dbar B| over safely interior nodes; zero in exact arithmetic.

    B (not A) is differenced: the h-only terms of A are exactly meromorphic
    and differentiating their double poles numerically would only inject
    truncation noise.  The margin keeps a fixed physical distance from the
    boundary and from zeros of h so that refinement studies compare the same
    region; it must be at least 5 spacings.

    Accepts either a lattice field (stencil derivatives) or an analytic
    source plus an explicit grid (exact derivatives; isolates the dbar
    stencil's own truncation, which vanishes identically when B does).
    """
    if isinstance(u_field, ScalarField):
        grid = u_field.grid
    elif grid is None:
        raise ConfigError("an analytic source needs an explicit grid argument")
    hsp = grid.spacing
    if margin is None:
        # 0.3 keeps the probe in the truncation-dominated regime: solved fields
        # show clean fourth-order decay there, while below ~0.25 the amplified
        # near-boundary field error swamps the corruption signal this residual
        # exists to detect
        margin = max(5.0 * hsp, 0.3)
    if margin < 5.0 * hsp - 1e-13:
        raise ConfigError("holomorphy margin must be at least 5 grid spacings")
    z_dense = grid.xs[None, :] + 1j * grid.ys[:, None]
    if isinstance(u_field, ScalarField):
        uz, uzz, valid = wirtinger_fields(u_field)
    else:
        valid = grid.mask.copy()
        zf = z_dense.ravel()[grid.mask.ravel()]
        uz = np.full(z_dense.shape, np.nan, dtype=complex)
        uzz = np.full(z_dense.shape, np.nan, dtype=complex)
        uz[valid] = u_field.du(zf)
        uzz[valid] = u_field.d2u(zf)
    with np.errstate(invalid="ignore", divide="ignore"):
        ld = h.logderiv(z_dense.ravel()).reshape(z_dense.shape)
        b_field = np.where(valid, uzz - uz * uz - ld * uz, np.nan)
    # dbar = (d/dx + i d/dy)/2, fourth-order stencils on the node field
    dbar = 0.5 * (_d1(b_field, 1, hsp) + 1j * _d1(b_field, 0, hsp))
    ok = valid.copy()
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            if abs(dy) + abs(dx) and abs(dy) * abs(dx) == 0:
                shifted = np.roll(valid, (dy, dx), axis=(0, 1))
                ok &= shifted
    dist = grid.descriptor.boundary_distance(z_dense)
    region = ok & (dist >= margin)
    for a, _m in h.zeros():
        region &= np.abs(z_dense - a) >= margin
    vals = np.abs(dbar[region])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise ConfigError("no nodes satisfy the holomorphy-residual margins")
    return {"norm": float(vals.max()), "nodes": int(vals.size), "margin": float(margin)}


# ---------------------------------------------------------------------------
# Path planning and the developing-map integration
# ---------------------------------------------------------------------------

def _segment_pole_clearance(a: complex, b: complex, pole: complex) -> float:
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(a - pole)
    t = ((pole - a).real * d.real + (pole - a).imag * d.imag) / L2
    t = min(max(t, 0.0), 1.0)
    return abs(a + t * d - pole)


def plan_path(
    start: complex,
    end: complex,
    poles,
    margin: float,
    domain_guard=None,
    max_depth: int = 10,
) -> list[complex]:
    """Polyline from start to end keeping every pole at distance >= margin.

    Straight segments are split around offending poles by a detour point at
    1.5 margin on the far side of the closest approach.  domain_guard, when
    given, must accept each candidate waypoint (used to keep detours inside
    the trustworthy region of grid-backed sources).
    """
    poles = [complex(p) for p in poles]

    def ok_point(p: complex) -> bool:
        return domain_guard is None or domain_guard(p)

    def refine(a: complex, b: complex, depth: int) -> list[complex]:
        worst, worst_pole = np.inf, None
        for p in poles:
            c = _segment_pole_clearance(a, b, p)
            if c < worst:
                worst, worst_pole = c, p
        if worst >= margin * 0.999 or worst_pole is None:
            return [b]
        if depth <= 0:
            raise PathPlanningError(
                f"cannot clear pole at {worst_pole} between {a} and {b}"
            )
        d = b - a
        L2 = abs(d) ** 2
        t = 0.5 if L2 == 0 else min(max(((worst_pole - a).real * d.real + (worst_pole - a).imag * d.imag) / L2, 0.0), 1.0)
        q = a + t * d
        away = q - worst_pole
        if abs(away) < 1e-12:
            away = 1j * d / abs(d) if abs(d) else 1.0 + 0j
        away /= abs(away)
        for side in (away, -away):
            det = worst_pole + 1.5 * margin * side
            if ok_point(det):
                try:
                    return refine(a, det, depth - 1) + refine(det, b, depth - 1)
                except PathPlanningError:
                    continue
        raise PathPlanningError(
            f"no admissible detour around the pole at {worst_pole}"
        )

    pts = [complex(start)] + refine(complex(start), complex(end), max_depth)
    return pts


@dataclass
class DevelopSession:
    """Shared integration context: coefficient, poles, margins, tolerances."""

    au: object
    poles: list
    pole_margin: float
    domain_guard: object = None
    rtol: float = ODE_RTOL
    atol: float = ODE_ATOL
    rhs_evals: int = 0

    def integrate(self, y: np.ndarray, a: complex, b: complex) -> np.ndarray:
        if a == b:
            return y.copy()
        path = plan_path(a, b, self.poles, self.pole_margin, self.domain_guard)
        out = y.copy()
        for p, q in zip(path[:-1], path[1:]):
            if self.domain_guard is not None:
                samples = p + np.linspace(0.0, 1.0, 17) * (q - p)
                if not all(self.domain_guard(s) for s in samples):
                    raise PathPlanningError(
                        f"integration segment {p} -> {q} leaves the trusted region"
                    )
            out = self._leg(out, p, q)
        return out

    def _leg(self, y: np.ndarray, a: complex, b: complex) -> np.ndarray:
        dz = b - a

        def rhs(t, s):
            self.rhs_evals += 1
            av = self.au(a + t * dz)
            av = av[0] if np.ndim(av) else av
            return dz * np.array([s[1], -av * s[0], s[3], -av * s[2]])

        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", rtol=self.rtol, atol=self.atol)
        if not sol.success:
            raise SolverError(f"developing-map integration failed: {sol.message}")
        return sol.y[:, -1]


def _state_to_map(y: np.ndarray, wronskian: complex) -> tuple[complex, complex]:
    y1, _y1p, y2, _y2p = y
    if abs(y2) < 1e-300:
        raise SolverError("developing map hit a pole of y1/y2; inconsistent input")
    return complex(y1 / y2), complex(wronskian / (y2 * y2))


@dataclass
class DevelopingMap:
    """Samples (f, f') of the developing map plus its normalization data."""

    base_point: complex
    targets: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    normalization: dict
    path_report: dict
    session: DevelopSession = field(repr=False, default=None)
    states: np.ndarray = field(repr=False, default=None)

    def frostman(self, alpha: complex) -> "DevelopingMap":
        alpha = complex(alpha)
        if abs(alpha) >= 1:
            raise ConfigError("Frostman parameter must lie inside the unit disk")
        q = 1.0 - np.conj(alpha) * self.f
        f_new = (self.f - alpha) / q
        fp_new = (1.0 - abs(alpha) ** 2) / q**2 * self.fprime
        norm = dict(self.normalization)
        norm["frostman_alpha"] = [alpha.real, alpha.imag]
        return DevelopingMap(
            self.base_point, self.targets.copy(), f_new, fp_new, norm,
            dict(self.path_report), self.session,
            self.states.copy() if self.states is not None else None,
        )

    def to_json(self) -> dict:
        return {
            "base": [self.base_point.real, self.base_point.imag],
            "normalization": self.normalization,
            "targets": [
                {
                    "z": [t.real, t.imag],
                    "f": [fv.real, fv.imag],
                    "fprime": [fp.real, fp.imag],
                }
                for t, fv, fp in zip(self.targets, self.f, self.fprime)
            ],
            "report": self.path_report,
        }


def develop(
    source,
    h,
    base_point: complex,
    targets,
    pole_margin: float = DEFAULT_POLE_MARGIN,
    chain: bool = False,
    rtol: float = ODE_RTOL,
    check_disk: bool = True,
) -> DevelopingMap:
    """Reconstruct the developing map at the targets from (u, h).

    Normalization at the base point z0: f(z0) = 0, f'(z0) = exp(u1(z0)),
    f''(z0) = 2 exp(u1(z0)) du1(z0), with u1 = u + log|h|.  With chain=True
    targets are visited along one nearest-neighbor tour (the continuation is
    path independent, which is verified separately); otherwise each target is
    integrated independently from the base point.
    """
    z0 = complex(base_point)
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    poles = [a for a, _m in h.zeros()]
    pts = np.concatenate([[z0], targets])
    if poles:
        dmin = np.min(np.abs(pts[:, None] - np.asarray(poles)[None, :]), axis=1)
        if np.any(dmin < pole_margin - 1e-13):
            raise ConfigError(
                f"base point and targets must stay {pole_margin:g} away from zeros of h"
            )
    source.guard_points(pts)

    u0 = float(np.atleast_1d(source.u(z0))[0])
    du0 = complex(np.atleast_1d(source.du(z0))[0])
    mod0 = float(np.atleast_1d(h.modulus(z0))[0])
    if mod0 == 0.0:
        raise ConfigError("base point must not be a zero of h")
    u1_0 = u0 + np.log(mod0)
    du1_0 = du0 + 0.5 * complex(np.atleast_1d(h.logderiv(z0))[0])
    s = np.exp(u1_0)
    y0 = np.array([0.0, 1.0, 1.0 / s, -du1_0 / s], dtype=complex)
    wronskian = 1.0 / s

    guard = None
    if hasattr(source, "grid"):
        bm = source.boundary_margin

        def guard(p):  # noqa: E731 - small closure, clearer inline
            return bool(source.grid.descriptor.boundary_distance(np.asarray(p)) >= bm)

    session = DevelopSession(au_evaluator(source, h), poles, pole_margin, guard, rtol=rtol)

    n = targets.size
    f = np.empty(n, dtype=complex)
    fp = np.empty(n, dtype=complex)
    states = np.empty((n, 4), dtype=complex)
    max_drift = 0.0
    if chain and n > 1:
        order = _nearest_neighbor_tour(z0, targets)
    else:
        order = np.arange(n)
    cur_y, cur_z = y0, z0
    for k in order:
        zt = complex(targets[k])
        y_from = cur_y if chain else y0
        z_from = cur_z if chain else z0
        y = session.integrate(np.asarray(y_from, dtype=complex), z_from, zt)
        states[k] = y
        w_num = y[1] * y[2] - y[0] * y[3]
        max_drift = max(max_drift, abs(w_num - wronskian) / abs(wronskian))
        f[k], fp[k] = _state_to_map(y, wronskian)
        if chain:
            cur_y, cur_z = y, zt
    if check_disk and np.any(np.abs(f) >= 1.0):
        worst = targets[np.argmax(np.abs(f))]
        raise SolverError(
            f"|f| >= 1 at {worst}: the input does not represent a disk metric"
        )
    report = {
        "wronskian_drift": max_drift,
        "rhs_evaluations": session.rhs_evals,
        "pole_margin": pole_margin,
        "chained": bool(chain and n > 1),
    }
    norm = {
        "u1_base": u1_0,
        "du1_base": [du1_0.real, du1_0.imag],
        "fprime_base": [float(s), 0.0],
    }
    return DevelopingMap(z0, targets, f, fp, norm, report, session, states)


def _nearest_neighbor_tour(z0: complex, targets: np.ndarray) -> np.ndarray:
    remaining = list(range(targets.size))
    order = []
    cur = z0
    while remaining:
        k = min(remaining, key=lambda i: abs(targets[i] - cur))
        order.append(k)
        remaining.remove(k)
        cur = targets[k]
    return np.array(order, dtype=int)


def verify_representation(dm: DevelopingMap, source, h, targets=None) -> dict:
    """Max over samples of |u - log(|f'| / ((1-|f|^2)|h|))|."""
    if targets is None:
        sel = np.arange(dm.targets.size)
    else:
        sel = np.asarray(targets, dtype=int)
    z = dm.targets[sel]
    fv, fp = dm.f[sel], dm.fprime[sel]
    mod = np.asarray(h.modulus(z), dtype=float)
    if np.any(mod <= 0):
        raise ConfigError("representation check needs h nonzero at the samples")
    rec = np.log(np.abs(fp) / ((1.0 - np.abs(fv) ** 2) * mod))
    err = np.abs(np.asarray(source.u(z), dtype=float) - rec)
    return {"max_error": float(err.max()), "mean_error": float(err.mean()), "count": int(err.size)}
