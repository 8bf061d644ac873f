"""Circle quadrature and contour-placement helpers.

All path integrals in the library are (1/2*pi*i) * closed integrals over
|w| = R, computed with the uniform trapezoid rule on the exact circle
parametrization.  The integrands are periodic-analytic in the angle, so node
doubling converges geometrically; the error estimate is the difference
between successive doublings, nothing fancier.

Node values are kept in ascending-angle order across doublings (old nodes
land on the even indices), so reductions see a fixed order and results are
bit-stable regardless of how the evaluations were scheduled.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoSafeRadius
from .functions import EntireFunction, OVERFLOW_LOG, check_finite


@dataclass(frozen=True)
class ContourConfig:
    nodes_initial: int = 256
    max_doublings: int = 10
    tol_abs: float = 1e-10
    tol_rel: float = 1e-10
    min_boundary_margin: float = 1e-6

    def __post_init__(self):
        if self.nodes_initial < 16 or self.nodes_initial & (self.nodes_initial - 1):
            raise ValueError("nodes_initial must be a power of two >= 16")
        if self.tol_abs <= 0 or self.tol_rel <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_CONFIG = ContourConfig()


@dataclass
class QuadratureResult:
    value: complex
    nodes_used: int
    est_error: float
    converged: bool


def _circle_nodes(R: float, M: int, offset: int = 1, stride: int = 2) -> np.ndarray:
    theta = 2.0 * math.pi * np.arange(offset, 2 * M, stride) / (2 * M)
    return R * np.exp(1j * theta)


def circle_integrals_vec(
    rows: Callable[[np.ndarray], np.ndarray],
    n_rows: int,
    R: float,
    cfg: ContourConfig = DEFAULT_CONFIG,
) -> list[QuadratureResult]:
    """Simultaneous (1/2*pi*i) circle integrals of several integrands.

    ``rows(w)`` must return an array of shape (n_rows, len(w)).  All rows share
    the node ladder; each row converges against its own tolerance.
    """
    M = cfg.nodes_initial
    theta = 2.0 * math.pi * np.arange(M) / M
    w = R * np.exp(1j * theta)
    vals = np.atleast_2d(rows(w)) * w  # integrand * w: d(theta)-measure absorbed
    est = np.mean(vals, axis=1)
    prev = est
    err = np.full(n_rows, np.inf)
    done = np.zeros(n_rows, dtype=bool)
    for _ in range(cfg.max_doublings):
        new_w = _circle_nodes(R, M)
        new_vals = np.atleast_2d(rows(new_w)) * new_w
        merged = np.empty((n_rows, 2 * M), dtype=complex)
        merged[:, 0::2] = vals
        merged[:, 1::2] = new_vals
        vals = merged
        M *= 2
        est = np.mean(vals, axis=1)
        err = np.abs(est - prev)
        done = err <= np.maximum(cfg.tol_abs, cfg.tol_rel * np.abs(est))
        prev = est
        if np.all(done):
            break
    return [
        QuadratureResult(complex(est[i]), M, float(err[i]), bool(done[i]))
        for i in range(n_rows)
    ]


def circle_integral(
    g: Callable[[np.ndarray], np.ndarray],
    R: float,
    cfg: ContourConfig = DEFAULT_CONFIG,
) -> QuadratureResult:
    """(1/2*pi*i) closed integral of g over |w| = R."""
    if R <= 0:
        raise ValueError("radius must be positive")
    return circle_integrals_vec(lambda w: np.atleast_2d(g(w)), 1, R, cfg)[0]


# ---------------------------------------------------------------------------
# Boundary placement
# ---------------------------------------------------------------------------


def _clearance(fun: EntireFunction, fz: complex, R: float, n_grid: int) -> float:
    """First-order distance of the circle |w|=R to the nearest zero of f - fz.

    Uses the Newton-step length |f - fz| / |f'| as the proximity proxy; at
    overflowing |f| the step is |f|/|f'| = 1/|dlog| and fz drops out.
    """
    theta = 2.0 * math.pi * np.arange(n_grid) / n_grid
    w = R * np.exp(1j * theta)
    la = np.real(np.atleast_1d(fun.log_abs(w)))
    big = la > OVERFLOW_LOG
    d = np.empty(n_grid)
    if np.any(~big):
        ws = w[~big]
        fv = np.atleast_1d(fun.eval(ws))
        fp = np.atleast_1d(fun.kderiv(ws, 1))
        d[~big] = np.abs(fv - fz) / np.maximum(np.abs(fp), 1e-300)
    if np.any(big):
        d[big] = 1.0 / np.maximum(np.abs(np.atleast_1d(fun.dlog(w[big]))), 1e-300)
    return float(np.min(d))


# clearance/R needed for the node-doubling trapezoid to converge comfortably
QUADRATURE_HEALTHY = 1e-3


def safe_radius_for_target(
    fun: EntireFunction,
    fz: complex,
    R_requested: float,
    cfg: ContourConfig = DEFAULT_CONFIG,
    n_grid: int = 2048,
    window: float = 0.05,
) -> float:
    """Radius near R_requested whose circle stays clear of the zeros of f - fz.

    R_requested itself is returned unchanged whenever it clears the healthy
    quadrature distance; otherwise candidates fan out within the +-window
    fraction and the clearest one wins, subject to the hard margin floor.
    """
    if R_requested <= 0:
        raise ValueError("radius must be positive")
    threshold = cfg.min_boundary_margin * R_requested
    healthy = max(threshold, QUADRATURE_HEALTHY * R_requested)
    if _clearance(fun, fz, R_requested, n_grid) >= healthy:
        return R_requested
    best_r, best_d = R_requested, -1.0
    steps = 20
    for m in range(1, steps + 1):
        delta = window * R_requested * m / steps
        for cand in (R_requested + delta, R_requested - delta):
            if cand <= 0:
                continue
            d = _clearance(fun, fz, cand, n_grid)
            if d > best_d:
                best_r, best_d = cand, d
    if best_d < threshold:
        raise NoSafeRadius(
            f"no circle in [{0.95 * R_requested:g}, {1.05 * R_requested:g}] clears "
            f"margin {threshold:g}"
        )
    return best_r


def safe_radius(
    f: EntireFunction,
    z: complex,
    R_requested: float,
    cfg: ContourConfig = DEFAULT_CONFIG,
) -> float:
    """Contour radius near R_requested avoiding the Aut(f)-orbit of z."""
    check_finite(z)
    fz = complex(f.eval(complex(z)))
    return safe_radius_for_target(f, fz, R_requested, cfg)
