"""Command-line front end: orbits, identity suites, density reports.

Examples:
    autorbit orbit --function exp --z 1+0i --radius 20
    autorbit verify --suite all --function cossqrt
    autorbit verify --suite vanishing --function exp
    autorbit density --function exp --z 1+0i --rgrid 10:1e4:log
    autorbit density --function quarter --wiman --rho 0.25 --eps 0.05

Reports are JSON by default (schema_version 1); --format csv flattens the
scalar fields.  --plot-dir renders matplotlib figures next to the data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .contour import ContourConfig
from .errors import AutorbitError
from .functions import EntireFunction, build_function, check_finite
from .orbit import counting_profile, orbit, wiman_search
from .report import ReportFile, decimal_str, orbit_to_dict, profile_to_dict, wiman_to_dict
from .suites import SUITE_NAMES, run_suites


def parse_complex(text: str) -> complex:
    """Accept 1+0i / 2-3i / -0.5 / 1j spellings."""
    cleaned = text.strip().replace("i", "j")
    value = complex(cleaned)
    check_finite(value)
    return value


def parse_rgrid(text: str, points: int) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3 or parts[2] not in ("log", "lin"):
        raise ValueError("rgrid must look like LO:HI:log or LO:HI:lin")
    lo, hi = float(parts[0]), float(parts[1])
    if not (0 < lo < hi):
        raise ValueError("need 0 < LO < HI")
    if parts[2] == "log":
        return [float(r) for r in np.geomspace(lo, hi, points)]
    return [float(r) for r in np.linspace(lo, hi, points)]


def _add_function_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--function",
        required=True,
        choices=["exp", "cossqrt", "quarter", "monomial", "quadratic", "poly", "ngfactor"],
    )
    p.add_argument("--n", type=int, default=2, help="monomial degree")
    p.add_argument("--coeffs", type=str, default=None, help="poly coefficients a0,a1,...")
    p.add_argument("--c", type=float, default=0.1, help="ngfactor constant")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", type=str, default=None, help="report file path (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--plot-dir", type=str, default=None, help="also render figures here")
    p.add_argument("--seed", type=int, default=0, help="seed for the random-z sweeps")
    p.add_argument("--nodes-initial", type=int, default=256)
    p.add_argument("--max-doublings", type=int, default=10)
    p.add_argument("--tol-abs", type=float, default=1e-10)
    p.add_argument("--tol-rel", type=float, default=1e-10)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="autorbit", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p_orbit = sub.add_parser("orbit", help="recover the orbit of z inside |w| < R")
    _add_function_args(p_orbit)
    p_orbit.add_argument("--z", required=True, type=str)
    p_orbit.add_argument("--radius", required=True, type=float)
    _add_common_args(p_orbit)

    p_verify = sub.add_parser("verify", help="run identity suites")
    _add_function_args(p_verify)
    p_verify.add_argument("--suite", required=True, type=str, help=f"one of {SUITE_NAMES} or comma list")
    _add_common_args(p_verify)

    p_density = sub.add_parser("density", help="counting profile / minimum-modulus radii")
    _add_function_args(p_density)
    p_density.add_argument("--z", type=str, default="1+0i")
    p_density.add_argument("--rgrid", type=str, default=None, help="LO:HI:log")
    p_density.add_argument("--rpoints", type=int, default=10)
    p_density.add_argument("--rho", type=float, default=None)
    p_density.add_argument("--wiman", action="store_true")
    p_density.add_argument("--eps", type=float, default=0.05)
    p_density.add_argument("--rlo", type=float, default=1e2)
    p_density.add_argument("--rhi", type=float, default=1e8)
    _add_common_args(p_density)

    return ap


def _make_function(args) -> EntireFunction:
    params = {}
    if args.function == "monomial":
        params["n"] = args.n
    elif args.function == "poly":
        if not args.coeffs:
            raise ValueError("--coeffs required for --function poly")
        params["coeffs"] = [parse_complex(c) for c in args.coeffs.split(",")]
    elif args.function == "ngfactor":
        params["c"] = args.c
    return build_function(args.function, **params)


def _make_config(args) -> ContourConfig:
    return ContourConfig(
        nodes_initial=args.nodes_initial,
        max_doublings=args.max_doublings,
        tol_abs=args.tol_abs,
        tol_rel=args.tol_rel,
    )


def _config_echo(args) -> dict:
    echo = {}
    for key, value in sorted(vars(args).items()):
        if key in ("command",) or value is None:
            continue
        if isinstance(value, float):
            echo[key] = decimal_str(value)
        else:
            echo[key] = value
    return echo


def _emit(rf: ReportFile, args, csv_text: str | None = None) -> None:
    if args.format == "csv":
        text = csv_text if csv_text is not None else rf.to_csv()
    else:
        text = rf.to_json()
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))


def cmd_orbit(args) -> int:
    f = _make_function(args)
    cfg = _make_config(args)
    z = parse_complex(args.z)
    sample = orbit(f, z, args.radius, cfg)
    oracle_diff = None
    if f.has_oracle:
        oracle = sorted(
            [p for p, m in f.orbit_oracle(z, sample.R) for _ in range(m)], key=abs
        )
        rec = sorted(sample.with_multiplicity(), key=abs)
        if len(oracle) == len(rec):
            oracle_diff = max(
                (abs(a - b) for a, b in zip(rec, oracle)), default=0.0
            )
    rf = ReportFile(command="orbit", config=_config_echo(args))
    rf.orbits.append(orbit_to_dict(sample, oracle_diff))
    _emit(rf, args, csv_text=rf.orbit_csv() if args.format == "csv" else None)
    if args.plot_dir:
        from .plotting import orbit_figure, save_figure

        fig = orbit_figure(rf.orbits[0], title=f"{f.name}: orbit of {args.z}, R={sample.R:g}")
        save_figure(fig, Path(args.plot_dir) / "orbit.png")
    return 0


def cmd_verify(args) -> int:
    f = _make_function(args)
    cfg = _make_config(args)
    names = [s.strip() for s in args.suite.split(",")]
    for name in names:
        if name not in SUITE_NAMES:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    results = run_suites(names, f, cfg, seed=args.seed)
    rf = ReportFile(command="verify", config=_config_echo(args))
    for report, xfail in results:
        rf.add_identity(report, xfail=xfail)
    _emit(rf, args)
    if args.plot_dir:
        from .plotting import identity_errors_figure, save_figure

        fig = identity_errors_figure(rf.identities, title=f"{f.name}: identity suite errors")
        save_figure(fig, Path(args.plot_dir) / "identities.png")
    return 1 if rf.hard_failures else 0


def cmd_density(args) -> int:
    f = _make_function(args)
    cfg = _make_config(args)
    z = parse_complex(args.z)
    rf = ReportFile(command="density", config=_config_echo(args))
    if args.rgrid:
        grid = parse_rgrid(args.rgrid, args.rpoints)
        profile = counting_profile(f, z, grid, rho=args.rho, cfg=cfg)
        rf.profiles.append(profile_to_dict(profile))
    if args.wiman:
        if args.rho is None:
            raise ValueError("--wiman requires --rho")
        wr = wiman_search(f, args.rho, args.eps, args.rlo, args.rhi, z=z, cfg=cfg)
        rf.wiman.append(wiman_to_dict(wr))
    if not args.rgrid and not args.wiman:
        raise ValueError("density needs --rgrid and/or --wiman")
    _emit(rf, args, csv_text=rf.density_csv() if args.format == "csv" else None)
    if args.plot_dir:
        from .plotting import counting_figure, save_figure, wiman_figure

        if rf.profiles:
            save_figure(
                counting_figure(rf.profiles[0], title=f"{f.name}: n(r, z)"),
                Path(args.plot_dir) / "counting.png",
            )
        if rf.wiman:
            save_figure(
                wiman_figure(rf.wiman[0], title=f"{f.name}: minimum-modulus radii"),
                Path(args.plot_dir) / "wiman.png",
            )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"orbit": cmd_orbit, "verify": cmd_verify, "density": cmd_density}
    try:
        return handlers[args.command](args)
    except (AutorbitError, ValueError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(payload) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
