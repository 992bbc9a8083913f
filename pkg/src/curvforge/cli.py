"""Command-line driver.

Subcommands:
  solve      curvature equation on a domain (Dirichlet data or blow-up run)
  develop    solve, then reconstruct the developing map at sample points
  construct  finite Blaschke product with prescribed critical points
  verify     solve, then run consistency checks and report their norms

Exit codes: 0 success, 1 configuration errors, 2 solver failures.  All JSON
output is deterministic: keys sorted, floats rounded to 12 significant
digits.  CURVFORGE_THREADS caps the quadrature thread pool.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .closedforms import boundary_from_source, hyperbolic_source, radial_annulus_source
from .curvature import (
    check_bounds,
    check_green_representation,
    residual,
    solve_blowup,
    solve_dirichlet,
)
from .errors import ConfigError, SolverError
from .grid import DomainDescriptor, build_grid
from .inner import (
    CriticalSpec,
    FiniteBlaschke,
    PolynomialFactor,
    SingularInnerAtom,
    critical_points_of_finite_blaschke,
)
from .liouville import GridSource, develop as develop_map, holomorphy_residual, verify_representation
from .pipeline import construct_blaschke, invert_critical_map


def _round_floats(obj, digits: int = 12):
    if isinstance(obj, float):
        if not np.isfinite(obj):
            return None
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _round_floats(float(obj), digits)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_round_floats(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_domain(text: str) -> DomainDescriptor:
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "disk" and len(parts) == 1:
            return DomainDescriptor.disk()
        if kind == "annulus" and len(parts) == 3:
            return DomainDescriptor.annulus(float(parts[1]), float(parts[2]))
        if kind == "rect" and len(parts) == 5:
            return DomainDescriptor.rectangle(
                complex(float(parts[1]), float(parts[2])),
                complex(float(parts[3]), float(parts[4])),
            )
    except ValueError as exc:
        raise ConfigError(f"bad domain {text!r}: {exc}") from exc
    raise ConfigError(
        f"bad domain {text!r}; use disk, annulus:<rin>:<rout>, or rect:<x0>:<y0>:<x1>:<y1>"
    )


def _parse_points(text: str) -> list[tuple[complex, int]]:
    """re,im[xM] items separated by ';', e.g. '0.5,0;-0.2,0.3x2'."""
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        mult = 1
        if "x" in item:
            item, ms = item.rsplit("x", 1)
            mult = int(ms)
        re_s, im_s = item.split(",")
        out.append((complex(float(re_s), float(im_s)), mult))
    if not out:
        raise ConfigError("no points given")
    return out


def parse_factor(text: str):
    if text == "one":
        return FiniteBlaschke(())
    if text == "z":
        return PolynomialFactor((0.0, 1.0), roots=[0.0])
    if text == "singular":
        return SingularInnerAtom()
    if text.startswith("blaschke:"):
        return FiniteBlaschke(_parse_points(text[len("blaschke:") :]))
    if text.startswith("poly:"):
        roots = [a for a, m in _parse_points(text[len("poly:") :]) for _ in range(m)]
        return PolynomialFactor.monic_from_roots(roots)
    raise ConfigError(
        f"bad factor {text!r}; use one, z, singular, blaschke:<pts>, or poly:<roots>"
    )


def parse_boundary(text: str):
    if text == "zero":
        return 0.0
    if text.startswith("const:"):
        return float(text[len("const:") :])
    if text == "hyperbolic":
        return boundary_from_source(hyperbolic_source())
    if text == "radial":
        return boundary_from_source(radial_annulus_source())
    raise ConfigError(
        f"bad boundary {text!r}; use zero, const:<v>, hyperbolic, or radial"
    )


def parse_schedule(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad schedule {text!r}") from exc


def parse_targets(text: str) -> np.ndarray:
    parts = text.split(":")
    if parts[0] == "polar" and len(parts) == 4:
        rmax, nr, nth = float(parts[1]), int(parts[2]), int(parts[3])
        radii = np.linspace(rmax / nr, rmax, nr)
        ang = np.exp(2j * np.pi * np.arange(nth) / nth)
        return (radii[:, None] * ang[None, :]).ravel()
    if parts[0] == "points" and len(parts) == 2:
        return np.array([a for a, m in _parse_points(parts[1]) for _ in range(m)])
    raise ConfigError(
        f"bad targets {text!r}; use polar:<rmax>:<nr>:<ntheta> or points:<pts>"
    )


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        raise ConfigError(f"{message}\n{self.format_usage()}")


def _add_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", default="disk")
    p.add_argument("--h", dest="factor", required=True)
    p.add_argument("--boundary", default="zero")
    p.add_argument("--resolution", type=int, default=129)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--blowup", action="store_true", help="run the escalation schedule instead of fixed data")
    p.add_argument("--schedule", default=None, help="comma-separated increasing levels (with --blowup)")
    p.add_argument("--stop-tol", type=float, default=1e-4)
    p.add_argument("--out", default=".", help="output directory")


def _solve_from_args(args):
    domain = parse_domain(args.domain)
    h = parse_factor(args.factor)
    grid = build_grid(domain, args.resolution)
    if args.blowup:
        sched = parse_schedule(args.schedule) if args.schedule else None
        kw = {"stop_tol": args.stop_tol, "tol": args.tol}
        if sched is not None:
            kw["schedule"] = sched
        return grid, h, solve_blowup(grid, h, **kw)
    boundary = parse_boundary(args.boundary)
    return grid, h, solve_dirichlet(grid, h, boundary, tol=args.tol)


def _metric_report(args, m) -> dict:
    return {
        "domain": args.domain,
        "h": args.factor,
        "resolution": args.resolution,
        "mode": m.boundary_kind,
        "level": m.level,
        "solver": m.report.to_json(),
    }


def cmd_solve(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _grid, _h, m = _solve_from_args(args)
    m.u.to_csv(out / "u.csv")
    write_json(out / "report.json", _metric_report(args, m))
    return 0


def cmd_develop(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, h, m = _solve_from_args(args)
    poles = [a for a, _m in h.zeros()]
    src = GridSource(m.u, pole_points=poles)
    targets = parse_targets(args.targets)
    if poles:
        dmin = np.min(np.abs(targets[:, None] - np.asarray(poles)[None, :]), axis=1)
        targets = targets[dmin >= args.pole_margin + 1e-12]
        if targets.size == 0:
            raise ConfigError("all requested targets sit too close to zeros of h")
    if args.base is not None:
        ((base, _mult),) = _parse_points(args.base)
    else:
        base = 0.0 + 0.0j
        if poles and min(abs(base - p) for p in poles) < 0.1:
            from .pipeline import _pick_base_point

            base = _pick_base_point(np.asarray(poles, dtype=complex))
    dm = develop_map(src, h, base, targets, pole_margin=args.pole_margin, chain=True)
    rep = verify_representation(dm, src, h)
    payload = dm.to_json()
    payload["representation_check"] = rep
    payload["metric"] = _metric_report(args, m)
    write_json(out / "developing_map.json", payload)
    return 0


def cmd_construct(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = CriticalSpec.from_points(
        [a for a, m in _parse_points(args.spec) for _ in range(m)]
    )
    sched = parse_schedule(args.schedule) if args.schedule else None
    res = construct_blaschke(
        spec, resolution=args.resolution, schedule=sched, stop_tol=args.stop_tol
    )
    payload = res.to_json()
    if args.oracle:
        from .pipeline import equivalence_up_to_automorphism

        b, info = invert_critical_map(spec)
        crit = critical_points_of_finite_blaschke(b)
        mesh = (
            np.array([0.3, 0.5, 0.7])[:, None]
            * np.exp(2j * np.pi * np.arange(16) / 16.0)[None, :]
        ).ravel()
        verdict = equivalence_up_to_automorphism(
            res.blaschke.evaluate(mesh), b.evaluate(mesh)
        )
        payload["oracle"] = {
            "blaschke": b.to_json(),
            "critical_points": [[c.real, c.imag] for c in crit],
            "diagnostics": info,
            "equivalence": verdict,
        }
    write_json(out / "blaschke.json", payload)
    return 0


def cmd_verify(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, h, m = _solve_from_args(args)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    payload = {"metric": _metric_report(args, m)}
    all_passed = True
    for c in checks:
        if c == "residual":
            r = residual(m)
            entry = {
                "sup": float(np.max(np.abs(r.values))),
                "scaled_final": m.report.final_residual,
                "passed": bool(m.report.converged and m.report.final_residual <= args.tol),
            }
        elif c == "bounds":
            entry = check_bounds(m)
            entry["passed"] = bool(
                entry["upper_passed"] and entry.get("lower_passed", True)
            )
        elif c == "green":
            entry = check_green_representation(m)
            entry["passed"] = bool(entry["error"] <= 5e-3)
        elif c == "holomorphy":
            entry = holomorphy_residual(m.u, h)
            entry["passed"] = bool(entry["norm"] <= 0.05)
        else:
            raise ConfigError(
                f"unknown check {c!r}; pick from residual, bounds, green, holomorphy"
            )
        payload[c] = entry
        all_passed = all_passed and entry["passed"]
    write_json(out / "verify.json", payload)
    return 0 if all_passed else 2


def build_parser() -> _Parser:
    p = _Parser(prog="curvforge", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"curvforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve the curvature equation")
    _add_solve_flags(ps)
    ps.set_defaults(fn=cmd_solve)

    pd = sub.add_parser("develop", help="solve and reconstruct the developing map")
    _add_solve_flags(pd)
    pd.add_argument("--targets", default="polar:0.75:5:16")
    pd.add_argument("--base", default=None, help="base point 're,im' (default: auto)")
    pd.add_argument("--pole-margin", type=float, default=0.05)
    pd.set_defaults(fn=cmd_develop)

    pc = sub.add_parser("construct", help="Blaschke product with given critical points")
    pc.add_argument("--spec", required=True, help="critical points 're,im[xM];...'")
    pc.add_argument(
        "--oracle",
        action="store_true",
        help="also run the algebraic inversion and report the equivalence verdict",
    )
    pc.add_argument("--resolution", type=int, default=257)
    pc.add_argument("--schedule", default=None)
    pc.add_argument("--stop-tol", type=float, default=1e-4)
    pc.add_argument("--out", default=".")
    pc.set_defaults(fn=cmd_construct)

    pv = sub.add_parser("verify", help="solve and run consistency checks")
    _add_solve_flags(pv)
    pv.add_argument("--checks", default="residual", help="comma list: residual,bounds,green,holomorphy")
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
