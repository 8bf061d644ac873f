"""Orbit recovery from contour moments, plus counting/density statistics.

The disk pipeline mirrors the constructive side of the moment-continuity
argument: the argument principle counts the in-disk fiber of f(z), weighted
contour integrals produce the power sums of its points, Newton's identities
turn those into a monic polynomial, and a companion-matrix solve plus Newton
polish recovers the points themselves.  Disks holding more than 32 points are
split into annuli (power sums subtract), keeping each solve well conditioned.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contour import (
    ContourConfig,
    DEFAULT_CONFIG,
    circle_integrals_vec,
    safe_radius,
    safe_radius_for_target,
)
from .errors import (
    AmbiguousCount,
    CriticalOrbitPoint,
    InconsistentMoments,
    NoSafeRadius,
    NoneFound,
)
from .functions import (
    EntireFunction,
    OVERFLOW_LOG,
    check_finite,
    modulus_extrema,
    sort_points,
)

# Newton-identity root sensitivity grows exponentially with the solve size
# for spread-out points, so leaves stay tiny; near-equimodular slivers are the
# well-conditioned case and may be solved whole.
SMALL_DIRECT_SOLVE = 8
THIN_ANNULUS_RATIO = 1.05
COUNT_DEFECT_TOL = 1e-6
MERGE_FRACTION = 1e-6   # cluster-merge radius as a fraction of R
MAX_MOMENT_ORDER = 64


@dataclass
class MomentVector:
    """Power sums m_l = sum phi^l over the in-disk orbit, from the contour."""

    z: complex
    R: float
    moments: np.ndarray
    est_errors: np.ndarray
    converged: np.ndarray

    @property
    def count(self) -> int:
        return int(round(self.moments[0].real))


@dataclass
class OrbitSample:
    """Recovered orbit of z inside |w| < R."""

    z: complex
    R: float
    points: list[tuple[complex, int]]
    residuals: list[float]
    count: int
    warnings: list[str] = field(default_factory=list)

    def locations(self) -> list[complex]:
        return [p for p, _ in self.points]

    def with_multiplicity(self) -> list[complex]:
        return [p for p, m in self.points for _ in range(m)]


@dataclass
class CountingProfile:
    z: complex
    samples: list[tuple[float, int]]
    rho_hat: float
    upper_density: float
    lower_density: float
    degenerate: bool = False


@dataclass
class WimanRadii:
    rho: float
    epsilon: float
    radii: list[tuple[float, float, float]]  # (r, log m_f(r), log M_f(r))

    def values(self) -> list[float]:
        return [r for r, _, _ in self.radii]


# ---------------------------------------------------------------------------
# Integrand plumbing
# ---------------------------------------------------------------------------


def _fiber_ratio(fun: EntireFunction, w: np.ndarray, fz: complex) -> np.ndarray:
    """f'(w)/(f(w) - fz), stable where |f(w)| overflows float64."""
    la = np.real(np.atleast_1d(fun.log_abs(w)))
    big = la > OVERFLOW_LOG
    out = np.empty(w.shape, dtype=complex)
    if np.any(~big):
        ws = w[~big]
        out[~big] = np.atleast_1d(fun.kderiv(ws, 1)) / (np.atleast_1d(fun.eval(ws)) - fz)
    if np.any(big):
        wb = w[big]
        dl = np.atleast_1d(fun.dlog(wb))
        if fz == 0:
            out[big] = dl
        else:
            ratio = np.exp(cmath.log(fz) - np.atleast_1d(fun.log_eval(wb)))
            out[big] = dl / (1.0 - ratio)
    return out


def _moments_for_target(
    fun: EntireFunction,
    fz: complex,
    z_label: complex,
    R: float,
    L: int,
    cfg: ContourConfig,
) -> MomentVector:
    if L > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order {L} > {MAX_MOMENT_ORDER}")

    def rows(w: np.ndarray) -> np.ndarray:
        base = _fiber_ratio(fun, w, fz)
        scaled = w / R
        out = np.empty((L + 1, w.size), dtype=complex)
        acc = np.ones_like(w)
        for l in range(L + 1):
            out[l] = base * acc
            acc = acc * scaled
        return out

    results = circle_integrals_vec(rows, L + 1, R, cfg)
    powers = R ** np.arange(L + 1)
    moments = np.array([r.value for r in results]) * powers
    errors = np.array([r.est_error for r in results]) * powers
    conv = np.array([r.converged for r in results])
    return MomentVector(z_label, R, moments, errors, conv)


def _count_for_target(fun, fz, z_label, R, cfg) -> int:
    mv = _moments_for_target(fun, fz, z_label, R, 0, cfg)
    m0 = mv.moments[0]
    defect = abs(m0.real - round(m0.real)) + abs(m0.imag)
    if defect > COUNT_DEFECT_TOL or not mv.converged[0]:
        raise AmbiguousCount(
            f"count integral {m0} defect {defect:.3g} at R={R:g} (contour too close?)"
        )
    return int(round(m0.real))


def orbit_count(f: EntireFunction, z: complex, R: float, cfg: ContourConfig = DEFAULT_CONFIG) -> int:
    """Number of orbit points of z in |w| < R, with multiplicity."""
    check_finite(z)
    fz = complex(f.eval(complex(z)))
    return _count_for_target(f, fz, complex(z), R, cfg)


def orbit_moments(
    f: EntireFunction, z: complex, R: float, L: int, cfg: ContourConfig = DEFAULT_CONFIG
) -> MomentVector:
    """Power sums m_0..m_L of the in-disk orbit by weighted contour integrals."""
    check_finite(z)
    fz = complex(f.eval(complex(z)))
    return _moments_for_target(f, fz, complex(z), R, L, cfg)


# ---------------------------------------------------------------------------
# Newton's identities and the polynomial solve
# ---------------------------------------------------------------------------


def moments_to_points(mv: MomentVector) -> list[complex]:
    """Convert power sums to orbit points (repeated per multiplicity).

    Power sums are rescaled by the disk radius before the Newton-identity
    ladder so the companion solve sees a polynomial with roots in the unit
    disk.  The recovered roots must reproduce the input power sums.
    """
    N = mv.count
    if N < 1:
        raise ValueError("no points to recover (m0 < 1)")
    if mv.moments.size - 1 < N:
        raise ValueError(f"need moments up to L={N}, have {mv.moments.size - 1}")
    s = mv.R
    mu = mv.moments[: N + 1] / s ** np.arange(N + 1)
    e = np.zeros(N + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, N + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * mu[i]
        e[k] = acc / k
    coeffs = np.array([(-1) ** k * e[k] for k in range(N + 1)])  # descending in w
    roots = np.roots(coeffs) * s

    recon = np.array([np.sum((roots / s) ** k) for k in range(1, N + 1)])
    rel = np.abs(recon - mu[1:]) / (1.0 + np.abs(mu[1:]))
    if np.max(rel) > 1e-4:
        raise InconsistentMoments(
            f"power sums reproduce to {np.max(rel):.3g} relative (limit 1e-4)"
        )
    return [complex(r) for r in roots]


# ---------------------------------------------------------------------------
# Disk solve: count -> moments -> roots -> polish -> merge
# ---------------------------------------------------------------------------


def _polish(fun: EntireFunction, fz: complex, w0: complex, warnings: list[str]) -> complex:
    w = w0
    for _ in range(50):
        h = complex(fun.eval(w)) - fz
        hp = complex(fun.kderiv(w, 1))
        if hp == 0:
            break
        step = -h / hp
        if not (math.isfinite(step.real) and math.isfinite(step.imag)):
            warnings.append(f"polish diverged at {w0}")
            return w0
        if abs(step) > 0.1 * (1.0 + abs(w)):
            # moment roots start close; a huge step means we left the basin
            warnings.append(f"polish left basin at {w0}")
            return w0
        w = w + step
        if abs(step) <= 1e-12 * (1.0 + abs(w)):
            break
    return w


def _annulus_points(
    fun: EntireFunction,
    fz: complex,
    z_label: complex,
    r_lo: float,
    r_hi: float,
    n_lo: int,
    n_hi: int,
    cfg: ContourConfig,
    warnings: list[str],
) -> list[complex]:
    """Polished points with r_lo <= |phi| < r_hi; radii must already be safe.

    A direct Newton-identity solve is attempted for few points or a sliver
    annulus, then Newton-polished and accepted only if the polished set still
    reproduces the region's power sums (clusters along one ray defeat the
    moment solve in ways the raw consistency check cannot see, but duplicated
    or missing polished points cannot reproduce the sums).  Rejected or
    oversized regions are bisected: annuli at the geometric mean, disks at
    half radius; power sums over an annulus are differences of disk sums.
    """
    n = n_hi - n_lo
    if n == 0:
        return []
    ratio = r_hi / r_lo if r_lo > 0.0 else math.inf
    splittable = ratio > 1.0 + 1e-9
    if n <= SMALL_DIRECT_SOLVE or ratio <= THIN_ANNULUS_RATIO:
        pts = _try_direct(fun, fz, z_label, r_lo, r_hi, n_lo, n_hi, cfg, warnings)
        if pts is not None:
            return pts
        if not splittable:
            raise InconsistentMoments(
                f"unresolvable shell [{r_lo:g}, {r_hi:g}] holding {n} points"
            )
    if r_lo == 0.0:
        mid_req, window = 0.5 * r_hi, 0.05
    else:
        mid_req = math.sqrt(r_lo * r_hi)
        # keep the perturbed midpoint strictly inside the annulus
        window = min(0.05, 0.25 * (ratio - 1.0))
    try:
        mid = safe_radius_for_target(fun, fz, mid_req, cfg, window=window)
    except NoSafeRadius:
        mid = None
    if mid is None or not (r_lo < mid < r_hi):
        pts = _try_direct(fun, fz, z_label, r_lo, r_hi, n_lo, n_hi, cfg, warnings)
        if pts is None:
            raise InconsistentMoments(
                f"cannot split [{r_lo:g}, {r_hi:g}] and its direct solve is inconsistent"
            )
        return pts
    n_mid = _count_for_target(fun, fz, z_label, mid, cfg)
    left = _annulus_points(fun, fz, z_label, r_lo, mid, n_lo, n_mid, cfg, warnings)
    right = _annulus_points(fun, fz, z_label, mid, r_hi, n_mid, n_hi, cfg, warnings)
    return left + right


def _try_direct(fun, fz, z_label, r_lo, r_hi, n_lo, n_hi, cfg, warnings) -> list[complex] | None:
    n = n_hi - n_lo
    mv_hi = _moments_for_target(fun, fz, z_label, r_hi, n, cfg)
    moments = mv_hi.moments.copy()
    errors = mv_hi.est_errors.copy()
    conv = mv_hi.converged.copy()
    if n_lo > 0:
        mv_lo = _moments_for_target(fun, fz, z_label, r_lo, n, cfg)
        moments -= mv_lo.moments
        errors += mv_lo.est_errors
        conv &= mv_lo.converged
    diff = MomentVector(z_label, r_hi, moments, errors, conv)
    try:
        raw = moments_to_points(diff)
    except InconsistentMoments:
        return None
    polished = [_polish(fun, fz, w, warnings) for w in raw]
    return polished if _reproduces_moments(diff, polished, 1e-6) else None


def _reproduces_moments(mv: MomentVector, points: Sequence[complex], tol: float) -> bool:
    s = mv.R
    scaled = np.array(points, dtype=complex) / s
    for l in range(1, min(len(points), 8) + 1):
        mu_pts = complex(np.sum(scaled**l))
        mu = mv.moments[l] / s**l
        if abs(mu_pts - mu) > tol * (1.0 + abs(mu)):
            return False
    return True


def zeros_of_target(
    fun: EntireFunction,
    fz: complex,
    z_label: complex,
    R_requested: float,
    cfg: ContourConfig = DEFAULT_CONFIG,
) -> OrbitSample:
    """All solutions of f(w) = fz in |w| < R as an OrbitSample."""
    warnings: list[str] = []
    last_exc: Exception | None = None
    R_safe = None
    for attempt, scale in enumerate((1.0, 1.01, 0.985, 1.025)):
        try:
            R_safe = safe_radius_for_target(fun, fz, R_requested * scale, cfg)
            n = _count_for_target(fun, fz, z_label, R_safe, cfg)
            break
        except AmbiguousCount as exc:  # retry with a re-perturbed radius
            last_exc = exc
            R_safe = None
    if R_safe is None:
        raise last_exc  # type: ignore[misc]
    if n == 0:
        return OrbitSample(z_label, R_safe, [], [], 0, warnings)
    polished = _annulus_points(fun, fz, z_label, 0.0, R_safe, 0, n, cfg, warnings)
    merged = _merge(polished, MERGE_FRACTION * R_safe)
    merged = sort_points(merged)
    residuals = [abs(complex(fun.eval(p)) - fz) for p, _ in merged]
    _validate_against_moments(fun, fz, z_label, R_safe, merged, n, cfg)
    return OrbitSample(z_label, R_safe, merged, residuals, n, warnings)


def _validate_against_moments(fun, fz, z_label, R, points, n, cfg) -> None:
    """Cross-check the final point set against fresh low-order contour moments."""
    L = min(n, 8)
    mv = _moments_for_target(fun, fz, z_label, R, L, cfg)
    flat = np.array([p for p, m in points for _ in range(m)]) / R
    for l in range(1, L + 1):
        mu_pts = complex(np.sum(flat**l))
        mu_int = mv.moments[l] / R**l
        if abs(mu_pts - mu_int) > 1e-5 * (1.0 + abs(mu_int)):
            raise InconsistentMoments(
                f"recovered points miss moment l={l} by "
                f"{abs(mu_pts - mu_int):.2e} (scaled) at R={R:g}"
            )


def _merge(points: Sequence[complex], tol: float) -> list[tuple[complex, int]]:
    out: list[tuple[complex, int]] = []
    for p in sorted(points, key=lambda q: (abs(q), q.real, q.imag)):
        for i, (q, m) in enumerate(out):
            if abs(p - q) <= tol:
                out[i] = ((q * m + p) / (m + 1), m + 1)
                break
        else:
            out.append((p, 1))
    return out


def orbit(f: EntireFunction, z: complex, R: float, cfg: ContourConfig = DEFAULT_CONFIG) -> OrbitSample:
    """Aut(f)-orbit of z inside |w| < R: all w with f(w) = f(z)."""
    check_finite(z)
    if R <= 0:
        raise ValueError("radius must be positive")
    fz = complex(f.eval(complex(z)))
    return zeros_of_target(f, fz, complex(z), R, cfg)


def critical_points(f: EntireFunction, R: float, cfg: ContourConfig = DEFAULT_CONFIG) -> OrbitSample:
    """Z(f') inside |w| < R via the same moment engine applied to f'."""
    return zeros_of_target(_DerivativeOf(f), 0j, 0j, R, cfg)


class _DerivativeOf(EntireFunction):
    """Adapter presenting f' through the EntireFunction interface."""

    def __init__(self, f: EntireFunction):
        self.base = f
        self.name = f"{f.name}'"

    def kderiv(self, w, k: int):
        return self.base.kderiv(w, k + 1)

    def maclaurin(self, n: int) -> np.ndarray:
        c = self.base.maclaurin(n + 1)
        return c[1:] * np.arange(1, n + 2)


# ---------------------------------------------------------------------------
# Derivatives of the orbit maps
# ---------------------------------------------------------------------------


def derivative_orbit(f: EntireFunction, s: OrbitSample, k: int) -> list[complex]:
    """phi^(k)(z) for every recovered orbit point, by the chain-rule ladder.

    Differentiating f(phi(z)) = f(z) repeatedly gives
        phi'   = f'(z)/f'(phi),
        phi''  = (f''(z) - phi'^2 f''(phi)) / f'(phi),
        phi''' = (f'''(z) - 3 phi' phi'' f''(phi) - phi'^3 f'''(phi)) / f'(phi).
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    z = s.z
    fp_z = complex(f.kderiv(z, 1))
    fpp_z = complex(f.kderiv(z, 2))
    fppp_z = complex(f.kderiv(z, 3))
    out = []
    for p, mult in s.points:
        fp = complex(f.kderiv(p, 1))
        if mult > 1 or abs(fp) <= 1e-9:
            raise CriticalOrbitPoint(f"orbit point {p} is critical (mult={mult}, |f'|={abs(fp):.2g})")
        d1 = fp_z / fp
        if k == 1:
            out.append(d1)
            continue
        fpp = complex(f.kderiv(p, 2))
        d2 = (fpp_z - d1 * d1 * fpp) / fp
        if k == 2:
            out.append(d2)
            continue
        fppp = complex(f.kderiv(p, 3))
        d3 = (fppp_z - 3.0 * d1 * d2 * fpp - d1**3 * fppp) / fp
        out.append(d3)
    return out


# ---------------------------------------------------------------------------
# Counting, densities, Wiman radii
# ---------------------------------------------------------------------------


def counting_profile(
    f: EntireFunction,
    z: complex,
    r_grid: Sequence[float],
    rho: float | None = None,
    cfg: ContourConfig = DEFAULT_CONFIG,
) -> CountingProfile:
    """n(r, z) over the grid with a fitted convergence exponent and densities."""
    check_finite(z)
    r = np.asarray(list(r_grid), dtype=float)
    if r.size < 2 or np.any(np.diff(r) <= 0):
        raise ValueError("need an increasing grid")
    if r[-1] / r[0] < 1e2 * (1 - 1e-9):
        raise ValueError("grid must span at least 2 decades")
    fz = complex(f.eval(complex(z)))
    samples = []
    for ri in r:
        rs = safe_radius_for_target(f, fz, float(ri), cfg)
        samples.append((float(rs), _count_for_target(f, fz, complex(z), rs, cfg)))

    upper = samples[len(samples) // 2 :]
    counts = np.array([n for _, n in upper], dtype=float)
    degenerate = bool(np.all(counts == counts[0]))
    if degenerate or np.any(counts <= 0):
        usable = [(ri, n) for ri, n in upper if n > 0]
        if degenerate or len(usable) < 2:
            rho_hat = 0.0
            degenerate = True
        else:
            rr = np.log([ri for ri, _ in usable])
            nn = np.log([n for _, n in usable])
            rho_hat = float(np.polyfit(rr, nn, 1)[0])
    else:
        rr = np.log([ri for ri, _ in upper])
        nn = np.log(counts)
        rho_hat = float(np.polyfit(rr, nn, 1)[0])

    rho_use = rho if rho is not None else rho_hat
    decade = [(ri, n) for ri, n in samples if ri >= samples[-1][0] / 10.0]
    ratios = [n / ri**rho_use for ri, n in decade]
    return CountingProfile(
        z=complex(z),
        samples=samples,
        rho_hat=rho_hat,
        upper_density=float(max(ratios)),
        lower_density=float(min(ratios)),
        degenerate=degenerate,
    )


def wiman_search(
    f: EntireFunction,
    rho: float,
    epsilon: float,
    r_lo: float,
    r_hi: float,
    z: complex | None = None,
    n_candidates: int = 48,
    want: int = 5,
    cfg: ContourConfig = DEFAULT_CONFIG,
) -> WimanRadii:
    """Radii with log m_f(r) > (cos pi rho - eps) log M_f(r), minimum-modulus style.

    When a base point z is supplied each kept radius is additionally perturbed
    so the circle stays clear of the orbit of z.
    """
    if not (0.0 < rho < 0.5):
        raise ValueError("rho must lie in (0, 1/2)")
    if not (0.0 < epsilon < math.cos(math.pi * rho)):
        raise ValueError("epsilon must lie in (0, cos(pi rho))")
    if r_lo <= 0 or r_hi <= r_lo:
        raise ValueError("need 0 < r_lo < r_hi")
    factor = math.cos(math.pi * rho) - epsilon
    fz = complex(f.eval(complex(z))) if z is not None else None
    kept: list[tuple[float, float, float]] = []
    for r in np.geomspace(r_lo, r_hi, n_candidates):
        r = float(r)
        if fz is not None:
            try:
                r = float(safe_radius_for_target(f, fz, r, cfg))
            except Exception:
                continue
        log_m, log_M = modulus_extrema(f, r)
        if log_M > 0 and log_m > factor * log_M:
            if not kept or r > kept[-1][0] * (1 + 1e-12):
                kept.append((r, log_m, log_M))
    if not kept:
        raise NoneFound(f"no Wiman radii in [{r_lo:g}, {r_hi:g}]")
    return WimanRadii(rho=rho, epsilon=epsilon, radii=kept)
