"""End-to-end constructions built on the curvature solver and developing maps.

construct_blaschke: prescribe critical points in the disk, solve the blow-up
curvature problem for h = Blaschke with those zeros, develop the metric, and
fit the resulting finite Blaschke product.  invert_critical_map solves the
same prescription problem purely algebraically (Newton on coefficient space)
for cross-validation.  The boundary-modulus constructions run the same
solve-then-develop pipeline for a prescribed boundary density profile: either
exactly, from a polynomial factor and matching Dirichlet data, or almost
everywhere, from a Blaschke times a zero-free grid-backed outer part with
Dirichlet data 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import linear_sum_assignment

from .curvature import MetricField, solve_blowup, solve_dirichlet
from .errors import ConfigError, DegreeViolationError, NewtonDivergenceError
from .grid import DomainDescriptor, ScalarField, build_grid
from .inner import (
    CriticalSpec,
    FiniteBlaschke,
    HolomorphicFactor,
    PolynomialFactor,
    _cluster_points,
    blaschke_from_spec,
    critical_points_of_finite_blaschke,
)
from .curvature import get_operator
from .liouville import (
    DevelopingMap,
    GridSource,
    MobiusFit,
    develop,
    mobius_fit,
    verify_representation,
)
from .operators import (
    BicubicSampler,
    _eval_boundary,
    harmonic_extension,
    wirtinger_fields,
)

MAX_PRESCRIBED_MULTIPLICITY = 12


# ---------------------------------------------------------------------------
# Base-point and sampling-mesh selection
# ---------------------------------------------------------------------------

def _pick_base_point(spec_points: np.ndarray, keepout: float = 0.15) -> complex:
    """A sampling base well inside the disk, clear of all prescribed points."""
    cands = [0.0 + 0.0j]
    for r in (0.2, 0.35, 0.45):
        cands.extend(r * np.exp(1j * np.pi * k / 4.0) for k in range(8))
    best, best_d = None, -1.0
    for c in cands:
        d = np.min(np.abs(c - spec_points)) if spec_points.size else np.inf
        if d > best_d:
            best, best_d = c, d
        if d >= 2.0 * keepout:
            return complex(c)
    if best_d < keepout:
        raise ConfigError(
            "no admissible base point: prescribed points crowd the disk center"
        )
    return complex(best)


def _sampling_mesh(r_max: float, poles: np.ndarray, clearance: float) -> np.ndarray:
    radii = np.linspace(0.15, r_max, 9)
    angles = np.exp(1j * (2.0 * np.pi * np.arange(16) / 16.0 + 0.17))
    mesh = (radii[:, None] * angles[None, :]).ravel()
    if poles.size:
        keep = np.min(np.abs(mesh[:, None] - poles[None, :]), axis=1) >= clearance
        mesh = mesh[keep]
    return mesh


# ---------------------------------------------------------------------------
# Rational recovery of the developed map
# ---------------------------------------------------------------------------

def _fit_rational(z: np.ndarray, fz: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares p, q (ascending coeffs, len degree+1) with f ~ p/q."""
    v = np.vander(z, degree + 1, increasing=True)
    m = np.hstack([fz[:, None] * v, -v])
    _u, _s, vh = np.linalg.svd(m, full_matrices=False)
    null = vh[-1].conj()
    q, p = null[: degree + 1], null[degree + 1 :]
    return p, q


def _blaschke_from_samples(z: np.ndarray, fz: np.ndarray, degree: int) -> tuple[FiniteBlaschke, dict]:
    p, q = _fit_rational(z, fz, degree)
    pr = npoly.polyroots(p)
    inside = np.abs(pr) < 1.0
    if inside.sum() != degree:
        raise DegreeViolationError(
            f"rational fit found {int(inside.sum())} zeros in the disk, expected {degree}"
        )
    zeros = pr[inside]
    # Blaschke structure check: nonzero zeros must reflect into the roots of q
    nz = zeros[np.abs(zeros) > 1e-8]
    struct = 0.0
    if nz.size:
        qr = npoly.polyroots(q)
        refl = 1.0 / np.conj(nz)
        if qr.size:
            dmat = np.abs(refl[:, None] - qr[None, :])
            struct = float(np.max(np.min(dmat, axis=1)))
    clustered = _cluster_points(zeros, 1e-6)
    b0 = FiniteBlaschke(tuple(clustered))
    bv = b0.evaluate(z, 0)[0]
    big = np.abs(bv) > 0.1
    ratios = fz[big] / bv[big]
    lam = complex(np.mean(ratios))
    lam_defect = float(abs(abs(lam) - 1.0))
    fitted = FiniteBlaschke(tuple(clustered), unimodular=lam / abs(lam))
    resid = float(np.max(np.abs(fitted.evaluate(z, 0)[0] - fz)))
    return fitted, {
        "structure_defect": struct,
        "unimodular_defect": lam_defect,
        "sample_residual": resid,
    }


def _match_points(found: np.ndarray, target: np.ndarray) -> float:
    """Max distance under the optimal pairing of two equal-size point sets."""
    if found.size != target.size:
        return float("inf")
    if found.size == 0:
        return 0.0
    cost = np.abs(found[:, None] - target[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def _product_coeffs(b: FiniteBlaschke) -> tuple[np.ndarray, np.ndarray]:
    """Ascending numerator and denominator coefficients of the product."""
    num = np.array([complex(b.unimodular)])
    den = np.array([1.0 + 0.0j])
    for a, m in b.zeros():
        a = complex(a)
        for _ in range(m):
            if a == 0.0:
                num = npoly.polymul(num, [0.0, 1.0])
            else:
                c = -np.conj(a) / abs(a)
                num = npoly.polymul(num, [-c * a, c])
                den = npoly.polymul(den, [1.0, -np.conj(a)])
    return num, den


def _preimages(b: FiniteBlaschke, w: complex) -> np.ndarray:
    """All solutions of b(z) = w in the open disk, with multiplicity."""
    num, den = _product_coeffs(b)
    width = max(num.size, den.size)
    coeffs = np.zeros(width, dtype=complex)
    coeffs[: num.size] += num
    coeffs[: den.size] -= complex(w) * den
    roots = npoly.polyroots(coeffs)
    inside = roots[np.abs(roots) < 1.0]
    if inside.size != b.degree:
        raise DegreeViolationError(
            f"expected {b.degree} disk preimages, found {inside.size}"
        )
    return inside


def _renormalized_through(b: FiniteBlaschke, z0: complex) -> FiniteBlaschke:
    """Same equivalence class (same critical set), renormalized so that the
    product vanishes at z0 with positive derivative there."""
    w0 = complex(b.evaluate(np.array([z0]), 0)[0][0])
    zs = _preimages(b, w0)
    zs[int(np.argmin(np.abs(zs - z0)))] = z0
    plain = FiniteBlaschke([(complex(a), 1) for a in zs])
    d1 = complex(plain.evaluate(np.array([z0]), 1)[1][0])
    return FiniteBlaschke(
        [(complex(a), 1) for a in zs], unimodular=np.conj(d1) / abs(d1)
    )


# ---------------------------------------------------------------------------
# The PDE-based construction
# ---------------------------------------------------------------------------

@dataclass
class ConstructionResult:
    blaschke: FiniteBlaschke
    requested: CriticalSpec
    base_point: complex
    metric: MetricField = field(repr=False)
    developing: DevelopingMap = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        mu = self.blaschke.unimodular
        profile = self.diagnostics.get("boundary_profile_samples")
        diag = {
            "repr_error": self.diagnostics.get("representation_error"),
            "critical_residuals": self.diagnostics.get("critical_circle_residuals"),
            "boundary_profile": [
                {"angle": float(a), "value": float(v)}
                for a, v in zip(profile[0], profile[1])
            ]
            if profile is not None
            else [],
        }
        skip = {
            "representation_error",
            "critical_circle_residuals",
            "boundary_profile_samples",
        }
        diag.update(
            (k, v)
            for k, v in self.diagnostics.items()
            if k not in skip and not isinstance(v, (np.ndarray, tuple))
        )
        return {
            "spec": self.requested.to_json(),
            "degree": self.blaschke.degree,
            "zeros": [
                [a.real, a.imag] for a, m in self.blaschke.zeros() for _ in range(m)
            ],
            "unimodular": [mu.real, mu.imag],
            "base": [self.base_point.real, self.base_point.imag],
            "resolution": self.metric.grid.resolution,
            "level": self.metric.level,
            "diagnostics": diag,
        }


def construct_blaschke(
    spec: CriticalSpec,
    resolution: int = 257,
    schedule=None,
    stop_tol: float = 1e-4,
    base_point: complex | None = None,
) -> ConstructionResult:
    """Build the finite Blaschke product with prescribed critical points.

    The degree comes out as (total multiplicity) + 1.  Route: solve the
    blow-up curvature problem with h vanishing at the prescribed points,
    reconstruct the developing map of the solved metric on a polar mesh,
    recover the Blaschke product from those samples by a rational fit, and
    polish the fitted zero set algebraically so the returned product carries
    the prescription to Newton precision (the sampled fit alone is limited by
    the grid's second-order truncation error; diagnostics keep the pre-refit
    distance).  The result is normalized by f(base) = 0, f'(base) > 0.
    """
    pts = spec.flat()
    n = pts.size
    if n == 0:
        raise ConfigError("prescribe at least one critical point")
    if n > MAX_PRESCRIBED_MULTIPLICITY:
        raise ConfigError(
            f"total multiplicity {n} exceeds the supported bound {MAX_PRESCRIBED_MULTIPLICITY}"
        )
    if np.any(np.abs(pts) >= 1.0):
        raise ConfigError("critical points must lie inside the unit disk")
    h = FiniteBlaschke(spec.points)
    grid = build_grid(DomainDescriptor.disk(), resolution)
    kw = {} if schedule is None else {"schedule": schedule}
    metric = solve_blowup(grid, h, stop_tol=stop_tol, **kw)
    src = GridSource(metric.u, pole_points=pts)

    z0 = complex(base_point) if base_point is not None else _pick_base_point(pts)
    hsp = grid.spacing
    clearance = max(0.06, 2.0 * hsp + 1e-9)
    if np.min(np.abs(z0 - pts)) < clearance:
        raise ConfigError(f"base point {z0} is too close to a prescribed point")

    r_max = min(0.8, 1.0 - 5.0 * hsp)
    mesh = _sampling_mesh(r_max, pts, clearance)

    # small circles around each distinct prescribed point: the average of f'
    # over such a circle equals f' at the center (mean value property), so it
    # measures how exactly the prescription was hit
    distinct = np.array([a for a, _m in spec.points], dtype=complex)
    circle_slices = []
    targets = [mesh]
    pos = mesh.size
    for k, a in enumerate(distinct):
        gaps = [abs(a - b) for j, b in enumerate(distinct) if j != k]
        gap = min(gaps) if gaps else np.inf
        r_c = min(0.1, 0.45 * gap, 0.9 * (1.0 - abs(a)))
        if r_c < max(0.055, 2.5 * hsp):
            circle_slices.append(None)
            continue
        ring = a + r_c * np.exp(2j * np.pi * np.arange(16) / 16.0)
        circle_slices.append(slice(pos, pos + 16))
        targets.append(ring)
        pos += 16
    targets = np.concatenate(targets)

    dm = develop(src, h, z0, targets, chain=True)

    mesh_f = dm.f[: mesh.size]
    fitted, fit_info = _blaschke_from_samples(mesh, mesh_f, n + 1)
    sampled_error = _match_points(critical_points_of_finite_blaschke(fitted), pts)

    # the sampled fit carries the grid's truncation error (second order in
    # spacing), so its zero set seeds an exact algebraic refit: Newton on the
    # zeros driving the product's critical points onto the prescription, then
    # renormalization back through the base point.  On refit failure the
    # sampled fit is returned and the diagnostics say so.
    refit_info = {"refit_applied": False}
    final = fitted
    try:
        chart = _preimages(fitted, complex(fitted.evaluate(np.array([0j]), 0)[0][0]))
        free = np.delete(chart, int(np.argmin(np.abs(chart))))
        polished, polish_report = invert_critical_map(spec, initial=free)
        final = _renormalized_through(polished, z0)
        refit_info = {
            "refit_applied": True,
            "refit_residual": polish_report["critical_error"],
            "refit_shift": _match_points(
                np.array([a for a, m in final.zeros() for _ in range(m)]),
                np.array([a for a, m in fitted.zeros() for _ in range(m)]),
            ),
        }
    except (NewtonDivergenceError, DegreeViolationError) as exc:
        refit_info = {"refit_applied": False, "refit_failure": str(exc)}

    crit_full = critical_points_of_finite_blaschke(final)
    crit = [c for c, _m in _cluster_points(crit_full)]
    rep = verify_representation(dm, src, h, targets=np.arange(mesh.size))

    crit_resid = []
    for sl in circle_slices:
        crit_resid.append(None if sl is None else float(abs(np.mean(dm.fprime[sl]))))

    r_b = 1.0 - 4.0 * hsp
    ring = r_b * np.exp(2j * np.pi * np.arange(64) / 64.0)
    # the density of a degree-d Blaschke product approaches the hyperbolic
    # density of the disk at the boundary, so (1 - r^2) e^u |h| -> 1
    lam_scaled = np.asarray(h.modulus(ring) * np.exp(src.u(ring)), dtype=float) * (
        1.0 - r_b**2
    )
    profile_dev = float(np.max(np.abs(lam_scaled - 1.0)))

    diagnostics = {
        "boundary_profile_samples": (np.angle(ring), lam_scaled),
        "critical_error": _match_points(crit_full, pts),
        "sampled_critical_error": sampled_error,
        **refit_info,
        "distinct_critical_points": [[c.real, c.imag] for c in crit],
        "critical_circle_residuals": crit_resid,
        "representation_error": rep["max_error"],
        "boundary_profile_radius": r_b,
        "boundary_profile_deviation": profile_dev,
        "final_level": metric.level,
        "wronskian_drift": dm.path_report["wronskian_drift"],
        **fit_info,
    }
    return ConstructionResult(final, spec, z0, metric, dm, diagnostics)


# ---------------------------------------------------------------------------
# Algebraic inversion of the critical-point map (cross-validation route)
# ---------------------------------------------------------------------------

def _crit_coeffs(zeros_free: np.ndarray, n: int) -> np.ndarray:
    """Monic coefficient vector of the inside-critical-point polynomial.

    The Blaschke product has zero set {0} united with zeros_free; its n
    critical points inside the disk are encoded by the monic polynomial that
    vanishes on them, whose coefficients are smooth in the zeros even when
    critical points collide.
    """
    b = FiniteBlaschke([(0.0 + 0.0j, 1)] + [(complex(a), 1) for a in zeros_free])
    flat = critical_points_of_finite_blaschke(b, cluster_tol=0.0)
    coeffs = npoly.polyfromroots(flat)
    return coeffs[:n]  # drop the leading 1


def _real_view(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag])


def _complex_view(x: np.ndarray) -> np.ndarray:
    half = x.size // 2
    return x[:half] + 1j * x[half:]


def _newton_coeffs(
    target: np.ndarray,
    init: np.ndarray,
    tol: float,
    max_iter: int = 60,
    stall_floor: float | None = None,
):
    """Damped Newton (finite-difference Jacobian) for _crit_coeffs = target.

    stall_floor, if given, turns a stall below that residual into a normal
    return instead of an error; used for best-effort polishing past tol.
    """
    n = target.size

    def f_of(x):
        zs = _complex_view(x)
        if np.any(np.abs(zs) >= 0.999999):
            return None
        try:
            return _real_view(_crit_coeffs(zs, n) - target)
        except DegreeViolationError:
            return None

    x = _real_view(init)
    fx = f_of(x)
    if fx is None:
        raise NewtonDivergenceError("initial zeros are inadmissible")
    iters = 0
    for _ in range(max_iter):
        iters += 1
        nrm = np.max(np.abs(fx))
        if nrm <= tol:
            return _complex_view(x), nrm, iters
        m = x.size
        jac = np.empty((m, m))
        for j in range(m):
            step = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += step
            fp = f_of(xp)
            if fp is None:
                xp[j] -= 2.0 * step
                fp = f_of(xp)
                if fp is None:
                    if stall_floor is not None and nrm <= stall_floor:
                        return _complex_view(x), nrm, iters
                    raise NewtonDivergenceError("Jacobian probe left the unit disk")
                jac[:, j] = (fx - fp) / step
            else:
                jac[:, j] = (fp - fx) / step
        try:
            dx = np.linalg.lstsq(jac, -fx, rcond=None)[0]
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergenceError(f"Jacobian solve failed: {exc}") from exc
        alpha, accepted = 1.0, False
        for _h in range(25):
            xt = x + alpha * dx
            ft = f_of(xt)
            if ft is not None and np.max(np.abs(ft)) < nrm:
                x, fx, accepted = xt, ft, True
                break
            alpha *= 0.5
        if not accepted:
            if stall_floor is not None and nrm <= stall_floor:
                return _complex_view(x), nrm, iters
            raise NewtonDivergenceError(
                f"Newton stalled at residual {nrm:.3e}"
            )
    nrm = np.max(np.abs(fx))
    if nrm <= tol or (stall_floor is not None and nrm <= stall_floor):
        return _complex_view(x), nrm, iters
    raise NewtonDivergenceError(f"Newton did not reach {tol:g}; residual {nrm:.3e}")


def _spread_ties(init: np.ndarray) -> np.ndarray:
    """Separate coincident seed zeros onto a small circle around their value.

    A seed with repeated entries sits on the fixed locus of the zero-swap
    symmetry, where the Jacobian of the critical-coefficient map is exactly
    rank-deficient and Newton cannot leave the symmetric subspace.  The
    spread is deterministic; the off-axis phase avoids conjugation traps.
    """
    out = init.copy()
    used = np.zeros(init.size, dtype=bool)
    for i in range(init.size):
        if used[i]:
            continue
        group = [j for j in range(init.size) if not used[j] and abs(init[j] - init[i]) < 1e-9]
        if len(group) > 1:
            for k, j in enumerate(group):
                out[j] = init[i] + 0.01 * np.exp(1j * (2.0 * np.pi * k / len(group) + 0.4))
        for j in group:
            used[j] = True
    return out


def invert_critical_map(spec: CriticalSpec, tol: float = 1e-10, initial=None) -> tuple[FiniteBlaschke, dict]:
    """Zeros of a Blaschke product with the prescribed critical points.

    Purely algebraic: Newton on the coefficients of the critical-point
    polynomial, with one zero pinned at the origin and the unimodular factor
    pinned at 1 (neither affects critical points).  Falls back to a short
    homotopy from an easy prescription when the direct solve stalls.
    """
    pts = spec.flat()
    n = pts.size
    if n == 0:
        raise ConfigError("prescribe at least one critical point")
    if n > MAX_PRESCRIBED_MULTIPLICITY:
        raise ConfigError(
            f"total multiplicity {n} exceeds the supported bound {MAX_PRESCRIBED_MULTIPLICITY}"
        )
    if np.any(np.abs(pts) >= 1.0):
        raise ConfigError("critical points must lie inside the unit disk")
    target = npoly.polyfromroots(pts)[:n]
    init = np.asarray(initial, dtype=complex) if initial is not None else pts.copy()
    if init.size != n:
        raise ConfigError(f"initial guess must supply {n} free zeros")
    mag = np.abs(init)
    init = np.where(mag > 0.95, 0.95 * init / np.maximum(mag, 1e-300), init)

    homotopy_used = False
    try:
        zeros, resid, iters = _newton_coeffs(target, init, tol)
    except NewtonDivergenceError:
        spread = _spread_ties(init)
        try:
            zeros, resid, iters = _newton_coeffs(target, spread, tol)
        except NewtonDivergenceError:
            homotopy_used = True
            start = _crit_coeffs(spread, n)
            zeros, iters = spread, 0
            steps = 20
            for k in range(1, steps + 1):
                t = k / steps
                goal = (1.0 - t) * start + t * target
                step_tol = tol if k == steps else 1e-8
                zeros, resid, it_k = _newton_coeffs(goal, zeros, step_tol)
                iters += it_k

    # best-effort extra polish: a multiple prescribed point recovered at
    # residual eps splits by sqrt(eps) when the critical points are re-read
    # off the zeros, so push toward rounding level before reporting
    try:
        zeros2, resid2, it2 = _newton_coeffs(
            target, zeros, 1e-14, max_iter=8, stall_floor=max(tol, 1e-10)
        )
        if resid2 <= resid:
            zeros, resid = zeros2, resid2
            iters += it2
    except NewtonDivergenceError:
        pass

    b = FiniteBlaschke([(0.0 + 0.0j, 1)] + [(complex(a), 1) for a in zeros])
    crit_full = critical_points_of_finite_blaschke(b)
    info = {
        "coefficient_residual": float(resid),
        "newton_iterations": int(iters),
        "homotopy_used": homotopy_used,
        "critical_error": _match_points(crit_full, pts),
    }
    return b, info


# ---------------------------------------------------------------------------
# Prescribed boundary modulus
# ---------------------------------------------------------------------------

class CompositeModulusFactor(HolomorphicFactor):
    """base * exp(v + i conj-harmonic v): modulus and log-derivative only.

    v is a lattice harmonic function; the conjugate is never formed.  The
    log-derivative uses that (log g)' = 2 d/dz v for g with log|g| = v, so
    every quantity the curvature and coefficient machinery needs is available
    without knowing the phase.  Values (evaluate) are undefined by design.
    """

    variant = "composite_modulus"

    def __init__(self, base: HolomorphicFactor, v_field: ScalarField):
        self.base = base
        self.v_field = v_field
        grid = v_field.grid
        vz, vzz, valid = wirtinger_fields(v_field)
        self._nodes_mod = np.exp(v_field.values)
        self._s_v = BicubicSampler(grid, v_field.dense(), grid.mask, fill=np.nan)
        self._s_vz = BicubicSampler(grid, np.where(valid, vz, np.nan), valid, fill=np.nan)
        self._s_vzz = BicubicSampler(grid, np.where(valid, vzz, np.nan), valid, fill=np.nan)
        self.grid = grid

    def evaluate(self, z, order: int = 0):
        raise ConfigError(
            "composite-modulus factors expose modulus and log-derivative only"
        )

    def _is_grid_nodes(self, z: np.ndarray) -> bool:
        return z.shape == self.grid.z.shape and np.array_equal(z, self.grid.z)

    def modulus(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self._is_grid_nodes(z):
            return self.base.modulus(z) * self._nodes_mod
        return self.base.modulus(z) * np.exp(self._s_v(z).real)

    def logderiv(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.base.logderiv(z) + 2.0 * self._s_vz(z)

    def dlogderiv(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.base.dlogderiv(z) + 2.0 * self._s_vzz(z)

    def zeros(self) -> tuple:
        return self.base.zeros()

    def to_json(self) -> dict:
        return {
            "variant": "composite_modulus",
            "base": self.base.to_json(),
            "resolution": self.grid.resolution,
        }


@dataclass
class ModulusConstruction:
    factor: HolomorphicFactor
    metric: MetricField = field(repr=False)
    developing: DevelopingMap = field(repr=False)
    diagnostics: dict = field(default_factory=dict)
    v_field: ScalarField | None = field(default=None, repr=False)


def _harmonic_defect(v_field: ScalarField, boundary) -> float:
    op = get_operator(v_field.grid)
    res = op.apply(v_field.values, boundary)
    return float(np.max(np.abs(res)))


def _develop_and_profile(grid, h, metric, boundary_modulus, poles) -> tuple[DevelopingMap, dict]:
    """Develop the solved metric and measure its boundary density profile.

    The hyperbolic derivative |f'|/(1 - |f|^2) of the developing map equals
    e^u |h| exactly, so the profile on the sampling circle is read off from
    the metric itself; the identity is checked separately at the interior
    targets through the reconstructed map.
    """
    poles = np.asarray(list(poles), dtype=complex)
    src = GridSource(metric.u, pole_points=tuple(poles))
    x0, y0, x1, y1 = grid.descriptor.bbox()
    center = complex((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    if grid.descriptor.kind == "disk":
        z0 = _pick_base_point(poles)
        ring_r = 0.5
    else:
        z0 = center
        ring_r = 0.2 * min(x1 - x0, y1 - y0)
        if poles.size and np.min(np.abs(z0 - poles)) < max(0.08, 3.0 * grid.spacing):
            z0 = center + 0.5 * ring_r

    clearance = max(0.08, 3.0 * grid.spacing)
    targets = center + ring_r * np.exp(2j * np.pi * (np.arange(12) + 0.5) / 12.0)
    if poles.size:
        keep = np.min(np.abs(targets[:, None] - poles[None, :]), axis=1) >= clearance
        targets = targets[keep]

    dm = develop(src, h, z0, targets, chain=True)
    rep = verify_representation(dm, src, h)
    diag = {
        "representation_error": rep["max_error"],
        "wronskian_drift": dm.path_report["wronskian_drift"],
        "sup_density": float(
            np.max(np.asarray(h.modulus(grid.z), dtype=float) * np.exp(metric.u.values))
        ),
    }
    if grid.descriptor.kind == "disk":
        angles = np.exp(2j * np.pi * np.arange(128) / 128.0)
        phi = np.asarray(_eval_boundary(boundary_modulus, angles), dtype=float)
        r1 = 1.0 - 3.0 * grid.spacing
        r2 = 1.0 - 6.0 * grid.spacing

        def density_on(rad):
            ring = rad * angles
            return np.asarray(h.modulus(ring), dtype=float) * np.exp(src.u(ring))

        lam1 = density_on(r1)
        lam2 = density_on(r2)
        # the density approaches its boundary values linearly in 1 - r, so
        # extrapolating two rings estimates the radial limit itself
        limit = lam1 + (lam1 - lam2) * (1.0 - r1) / (r1 - r2)
        diag["boundary_profile_radius"] = r1
        diag["boundary_profile_deviation"] = float(np.max(np.abs(lam1 / phi - 1.0)))
        diag["boundary_limit_deviation"] = float(np.max(np.abs(limit / phi - 1.0)))
    return dm, diag


def construct_with_boundary_modulus(
    boundary_modulus,
    zero_spec: CriticalSpec | None = None,
    resolution: int = 257,
    domain: DomainDescriptor | None = None,
) -> ModulusConstruction:
    """Bounded-curvature metric whose boundary density matches a continuous
    positive target and whose degenerate points are exactly the given zeros.

    Route: h is the monic polynomial over the prescribed zeros, the curvature
    equation is solved with Dirichlet data log(target / |h|), and the metric
    is developed into the disk.  The density e^u |h| then takes the target's
    values on the boundary, so the map's hyperbolic derivative
    |f'|/(1 - |f|^2) approaches the target profile there.  Only simply
    connected domains admit this: on an annulus the Dirichlet data would need
    a multivalued correction, so that request is rejected.
    """
    if domain is None:
        domain = DomainDescriptor.disk()
    if domain.kind == "annulus":
        raise ConfigError(
            "prescribing a boundary modulus needs a simply connected domain; "
            "on an annulus the harmonic log-extension has periods"
        )
    grid = build_grid(domain, resolution)
    roots = zero_spec.flat() if zero_spec is not None else np.array([], dtype=complex)
    if roots.size and not np.all(domain.contains(roots)):
        raise ConfigError("prescribed zeros must lie strictly inside the domain")

    h = (
        PolynomialFactor.monic_from_roots(roots)
        if roots.size
        else PolynomialFactor((1.0 + 0.0j,))
    )

    def log_target(zb):
        phi = np.asarray(_eval_boundary(boundary_modulus, zb), dtype=float)
        if np.any(phi <= 0.0):
            raise ConfigError("boundary modulus must be strictly positive")
        return np.log(phi) - np.log(np.abs(h.evaluate(zb, 0)[0]))

    metric = solve_dirichlet(grid, h, log_target)
    dm, diag = _develop_and_profile(grid, h, metric, boundary_modulus, roots)
    return ModulusConstruction(h, metric, dm, diag)


def construct_with_ae_boundary_modulus(
    boundary_modulus,
    spec=None,
    resolution: int = 257,
) -> ModulusConstruction:
    """Metric with unit boundary density whose developing map's hyperbolic
    derivative matches the target profile almost everywhere on the circle.

    The critical structure rides on a Blaschke product B over the prescribed
    points; the target rides on a zero-free factor g with log|g| the harmonic
    extension of log(target), handled entirely through modulus and
    log-derivative so the conjugate phase is never formed.  One curvature
    solve with boundary data 0 (density e^u is 1 on the circle), then a
    developing map.  Its hyperbolic derivative equals e^u |B| |g|, bounded
    over the closed disk, with boundary profile the target wherever the
    target is continuous.
    """
    if isinstance(spec, FiniteBlaschke):
        blaschke = spec
    elif spec is None:
        blaschke = FiniteBlaschke(())
    else:
        blaschke = blaschke_from_spec(spec)
    grid = build_grid(DomainDescriptor.disk(), resolution)

    def log_target(zb):
        phi = np.asarray(_eval_boundary(boundary_modulus, zb), dtype=float)
        if np.any(phi <= 0.0):
            raise ConfigError("boundary modulus must be strictly positive")
        return np.log(phi)

    v_field = harmonic_extension(grid, log_target)
    factor = CompositeModulusFactor(blaschke, v_field)
    metric = solve_dirichlet(grid, factor, 0.0)
    poles = [a for a, _m in blaschke.zeros()]
    dm, diag = _develop_and_profile(grid, factor, metric, boundary_modulus, poles)
    diag["harmonic_defect"] = _harmonic_defect(v_field, log_target)
    return ModulusConstruction(factor, metric, dm, diag, v_field=v_field)


# ---------------------------------------------------------------------------
# Equivalence of metrics / maps up to disk automorphism
# ---------------------------------------------------------------------------

def equivalence_up_to_automorphism(f_values, g_values, tol: float = 1e-4) -> dict:
    """Fit f = T(g) with T a disk automorphism and report the defects.

    Accepts either value arrays on common sample points or two construction
    results, whose products are then evaluated on a shared polar mesh.
    """
    if hasattr(f_values, "blaschke") and hasattr(g_values, "blaschke"):
        mesh = (
            np.array([0.3, 0.5, 0.7])[:, None]
            * np.exp(2j * np.pi * np.arange(16) / 16.0)[None, :]
        ).ravel()
        f_values = f_values.blaschke.evaluate(mesh, 0)[0]
        g_values = g_values.blaschke.evaluate(mesh, 0)[0]
    fit: MobiusFit = mobius_fit(f_values, g_values)
    a, mu = fit.transform.disk_form()
    return {
        "max_residual": fit.max_residual,
        "automorphism_defect": fit.automorphism_defect,
        "equivalent": bool(fit.passed(tol)),
        "transform": {"fixed_zero": [a.real, a.imag], "rotation": [mu.real, mu.imag]},
    }
