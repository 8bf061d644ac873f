"""Identity-suite definitions for the CLI verify command.

Each suite maps a function family to a concrete list of identity runs.  The
paper-level counterexamples are wired in as expected failures: vanishing sums
on the exponential (order 1) and on the half-order square-root cosine, which
must come out red without failing the run.
"""

from __future__ import annotations

import math

import numpy as np

from .contour import ContourConfig, DEFAULT_CONFIG
from .functions import (
    CosSqrt,
    EntireFunction,
    Exp,
    GeneralPolynomial,
    Monomial,
    NgFactor,
    QuadraticZZ,
    QuarterOrder,
)
from .identities import (
    IdentityReport,
    compute_shift_T_exp,
    folner_ratios,
    path_length,
    reconstruct_low_order,
    verify_circular_density,
    verify_cycle_chain,
    verify_derivative_sums,
    verify_exp_g_closed_form,
    verify_fiber_stability,
    verify_fixed_points,
    verify_jensen,
    verify_negative_moment_g,
    verify_orbit_nesting,
    verify_poly_vieta,
    verify_reconstruction_partial_sums,
    verify_vanishing_sums,
    verify_vieta_coefficients,
)
from .orbit import wiman_search

SUITE_NAMES = [
    "vieta",
    "jensen",
    "derivsum",
    "vanishing",
    "density",
    "fixedpoints",
    "reconstruction",
    "expg",
    "tshift",
    "nesting",
    "fiber",
    "cycle",
    "folner",
    "metric",
    "all",
]

Result = tuple[IdentityReport, bool]  # (report, xfail)


def _family(f: EntireFunction) -> str:
    if isinstance(f, QuadraticZZ):
        return "quadratic"
    if isinstance(f, Monomial):
        return "monomial"
    if isinstance(f, CosSqrt):
        return "cossqrt"
    if isinstance(f, QuarterOrder):
        return "quarter"
    if isinstance(f, Exp):
        return "exp"
    if isinstance(f, NgFactor):
        return "ngfactor"
    if isinstance(f, GeneralPolynomial):
        return "poly"
    return f.name


def suite_vieta(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    out: list[Result] = []
    if isinstance(f, GeneralPolynomial):
        out.append((verify_poly_vieta(f, 1.3 + 0.4j, cfg), False))
        for _ in range(2):
            z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            out.append((verify_poly_vieta(f, z, cfg), False))
    elif fam == "cossqrt":
        out.append((verify_vieta_coefficients(f, math.pi**2 + 0j, 1, oracle_terms=10_000), False))
        out.append((verify_vieta_coefficients(f, 1 + 0j, 1, R=1e4, cfg=cfg), False))
    elif fam == "quarter":
        out.append((verify_vieta_coefficients(f, 1 + 0j, 1, R=1e6, cfg=cfg), False))
    return out


_JENSEN_ARGS = {
    "exp": (1 + 0j, 3),
    "quadratic": (1 + 0j, 1),
    "cossqrt": (1 + 0j, 2),
    "quarter": (1 + 0j, 2),
    "ngfactor": (0.5 + 0.2j, 2),
}


def suite_jensen(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    if isinstance(f, Monomial):
        z, n = 1 + 0j, f.N
    elif isinstance(f, GeneralPolynomial) and fam == "poly":
        z, n = 1.2 + 0.3j, f.degree
    else:
        z, n = _JENSEN_ARGS.get(fam, (0.7 + 0.3j, 2))
    return [(verify_jensen(f, z, n, cfg), False)]


_DERIVSUM_R = {
    "exp": 10.0,
    "quadratic": 6.0,
    "cossqrt": 200.0,
    "quarter": 1e4,
    "monomial": 3.0,
    "poly": 8.0,
    "ngfactor": 8.0,
}


def suite_derivsum(f, cfg, rng) -> list[Result]:
    R = _DERIVSUM_R.get(_family(f), 10.0)
    out = []
    zs = [1 + 0j, complex(rng.uniform(0.3, 1.5), rng.uniform(-0.8, 0.8))]
    for z in zs:
        for k in (1, 2, 3):
            out.append((verify_derivative_sums(f, z, R, k, cfg), False))
    return out


def suite_vanishing(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    out: list[Result] = []
    if fam == "quarter":
        wr = wiman_search(f, 0.25, 0.05, 1e2, 1e8, z=1 + 0j, cfg=cfg)
        for k in (1, 2, 3):
            out.append((verify_vanishing_sums(f, 1 + 0j, wr, k, cfg=cfg), False))
    elif fam == "exp":
        radii = list(np.geomspace(10, 1e3, 6))
        out.append(
            (verify_vanishing_sums(f, 0.5 + 0j, radii, 1, enforce_order=False, cfg=cfg), True)
        )
    elif fam == "cossqrt":
        radii = list(np.geomspace(1e2, 1e6, 6))
        out.append(
            (verify_vanishing_sums(f, 1 + 0j, radii, 1, enforce_order=False, cfg=cfg), True)
        )
    return out


def suite_density(f, cfg, rng) -> list[Result]:
    if _family(f) != "quarter":
        return []
    wr = wiman_search(f, 0.25, 0.05, 1e2, 1e8, z=1 + 0j, cfg=cfg)
    return [
        (verify_circular_density(f, 1 + 0j, wr, 0.25, cfg), False),
        (verify_circular_density(f, 2 + 1j, wr, 0.25, cfg), False),
    ]


_FIXEDPOINT_R = {"cossqrt": 50.0, "quadratic": 2.0, "exp": 10.0, "monomial": 2.0, "poly": 6.0}


def suite_fixedpoints(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    if fam not in _FIXEDPOINT_R:
        return []
    return [(verify_fixed_points(f, _FIXEDPOINT_R[fam], cfg), False)]


def suite_reconstruction(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    out: list[Result] = []
    if fam == "exp":
        out.append((verify_reconstruction_partial_sums(f, 1 + 0j, 0.5 + 0j, [10, 20, 30]), False))
    elif fam == "cossqrt":
        out.append((verify_reconstruction_partial_sums(f, 1 + 0j, 0.3 + 0j, [8, 16, 24]), False))
        out.append((reconstruct_low_order(f, 4 + 0j, 1 + 0j, 1e4, cfg), False))
    elif fam == "quarter":
        out.append((verify_reconstruction_partial_sums(f, 1 + 0j, 0.3 + 0j, [4, 6, 8]), False))
        out.append((reconstruct_low_order(f, 1.5 + 0j, 0.5 + 0j, 1e6, cfg), False))
    elif fam == "quadratic":
        out.append((reconstruct_low_order(f, 1 + 0j, 3 + 0j, 10.0, cfg), False))
    elif isinstance(f, GeneralPolynomial) and f.degree >= 1:
        out.append(
            (verify_reconstruction_partial_sums(f, 1 + 0j, 0.4 + 0.1j, [f.degree]), False)
        )
    return out


def suite_expg(f, cfg, rng) -> list[Result]:
    out: list[Result] = []
    for wre in np.linspace(-1.6, 1.6, 5):
        for zre in np.linspace(-1.6, 1.6, 5):
            w = complex(wre, 0.4)
            z = complex(zre, -0.3)
            out.append((verify_exp_g_closed_form(w, z, K=100_000), False))
    out.append((verify_exp_g_closed_form(1 + 0j, 1j * math.pi, K=100_000), False))
    return out


def suite_tshift(f, cfg, rng) -> list[Result]:
    import time

    from .identities import _finish

    t0 = time.perf_counter()
    shifts = {k: compute_shift_T_exp(k, 0.6 + 0.2j, 0.8 - 0.4j) for k in range(-3, 4)}
    additive = True
    for _ in range(5):
        w = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        z = complex(rng.uniform(0.2, 1.5), rng.uniform(-1, 1))
        if compute_shift_T_exp(2, w, z) != 2 * compute_shift_T_exp(1, w, z):
            additive = False
    ok = additive and all(isinstance(v, int) for v in shifts.values())
    rep = _finish(
        "t-shift-homomorphism",
        {"k_range": [-3, 3]},
        float(shifts[2]),
        2.0 * shifts[1],
        0.0,
        t0,
        criterion="int",
        extra_notes=f"shifts {shifts}; additivity at 5 random (w, z): {additive}",
        passed=ok,
    )
    out = [(rep, False)]
    out.append((verify_negative_moment_g([0.5 + 0j, 1 + 0.3j, -0.7 + 1j, 2 - 0.5j, 1j * math.pi]), False))
    return out


_NESTING = {
    "exp": lambda: Monomial(2),
    "quadratic": lambda: Monomial(3),
    "ngfactor": lambda: NgFactor(0.05),
    "cossqrt": lambda: Monomial(2),
    "quarter": lambda: Monomial(2),
    "monomial": lambda: Monomial(2),
    "poly": lambda: Monomial(2),
}

_NESTING_ARGS = {
    "exp": (0.5 + 0.2j, 15.0),
    "quadratic": (1 + 0j, 6.0),
    "ngfactor": (0.3 + 0j, 8.0),
    "cossqrt": (1 + 0j, 200.0),
    "quarter": (1 + 0j, 1e4),
    "monomial": (1 + 0j, 2.0),
    "poly": (0.8 + 0.1j, 8.0),
}


def suite_nesting(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    if fam not in _NESTING:
        return []
    h = _NESTING[fam]()
    z, R = _NESTING_ARGS[fam]
    return [(verify_orbit_nesting(f, h, z, R, cfg), False)]


def suite_fiber(f, cfg, rng) -> list[Result]:
    p1 = GeneralPolynomial([2, -3, 1], name="(w-1)(w-2)")
    p2 = GeneralPolynomial([-3, 1], name="(w-3)")
    return [
        (verify_fiber_stability(p1, Monomial(1), [5.0, 10.0, 50.0], cfg=cfg), False),
        (verify_fiber_stability(p2, Monomial(2), [5.0, 10.0, 20.0], cfg=cfg), False),
    ]


def suite_cycle(f, cfg, rng) -> list[Result]:
    pts = [1 + 0j, 2j, -0.5 + 0j]
    extra = [complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)) for _ in range(4)]
    return [
        (verify_cycle_chain(f, pts), False),
        (verify_cycle_chain(f, extra), False),
    ]


def suite_folner(f, cfg, rng) -> list[Result]:
    fam = _family(f)
    if isinstance(f, GeneralPolynomial):
        d = max(f.degree, 1)
        return [(folner_ratios(f, 1 + 0j, [4.0 * (d + 1)], [d], cfg), False)]
    if fam in ("exp", "cossqrt", "quarter", "ngfactor"):
        degrees = [4, 8, 12]
        growing = [2.0 * d for d in degrees]
        fixed = [3.0, 3.0, 3.0]
        return [
            (folner_ratios(f, 1 + 0j, growing, degrees, cfg), False),
            (folner_ratios(f, 1 + 0j, fixed, degrees, cfg), False),
        ]
    return []


def suite_metric(f, cfg, rng) -> list[Result]:
    import time

    from .identities import _finish

    t0 = time.perf_counter()
    a, m, b = 0j, 0.6 + 0.3j, 1 + 0.4j
    whole = path_length(f, [a, b])
    split = path_length(f, [a, m]) + path_length(f, [m, b])
    # the straight segment and the bent polyline differ; additivity holds on
    # the *same* broken path
    bent = path_length(f, [a, m, b])
    err = abs(bent - split)
    notes = f"straight {whole:.9g}, bent {bent:.9g}"
    ok = err <= 1e-8 * max(1.0, bent)
    if isinstance(f, Exp):
        shift = 2j * math.pi
        shifted = path_length(f, [a + shift, m + shift, b + shift])
        inv_err = abs(shifted - bent)
        ok = ok and inv_err <= 1e-8 * max(1.0, bent)
        notes += f"; translation invariance error {inv_err:.2e}"
    rep = _finish(
        "path-metric",
        {"function": f.name},
        bent,
        split,
        1e-8,
        t0,
        criterion="rel",
        extra_notes=notes,
        passed=ok,
    )
    return [(rep, False)]


SUITES = {
    "vieta": suite_vieta,
    "jensen": suite_jensen,
    "derivsum": suite_derivsum,
    "vanishing": suite_vanishing,
    "density": suite_density,
    "fixedpoints": suite_fixedpoints,
    "reconstruction": suite_reconstruction,
    "expg": suite_expg,
    "tshift": suite_tshift,
    "nesting": suite_nesting,
    "fiber": suite_fiber,
    "cycle": suite_cycle,
    "folner": suite_folner,
    "metric": suite_metric,
}


def run_suites(
    names: list[str],
    f: EntireFunction,
    cfg: ContourConfig = DEFAULT_CONFIG,
    seed: int = 0,
) -> list[Result]:
    if "all" in names:
        names = [n for n in SUITES]
    out: list[Result] = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite: {name}")
        rng = np.random.default_rng(seed)
        out.extend(SUITES[name](f, cfg, rng))
    return out
