"""Entire-function families: evaluation, derivatives, series, growth.

Every family evaluates vectorized over numpy arrays of complex points and
provides, besides plain evaluation:

* ``kderiv(w, k)``          closed-form k-th derivative, k <= 6,
* ``log_eval(w)``           a complex logarithm of f(w), stable where |f(w)|
                            overflows float64 (the branch is unspecified; only
                            exp-differences and real parts of it are used),
* ``dlog(w)``               the logarithmic derivative f'(w)/f(w), stable at
                            large |w|,
* ``maclaurin(n)``          the exact coefficient prefix a_0..a_n,
* ``orbit_oracle(z, R)``    closed-form fiber of f(z) inside |w| < R, where a
                            closed form exists (used as a test oracle).

The square-root and fourth-root families are evaluated through even/invariant
combinations of exponentials, so no branch bookkeeping is ever needed; the
power series takes over inside |w| < 1 where the closed forms cancel badly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateFit,
    EvaluationOverflow,
    UnsupportedDerivativeOrder,
    ZeroLeadingCoefficient,
)

MAX_DERIVATIVE_ORDER = 6
LOG2 = math.log(2.0)

# |f| beyond exp(OVERFLOW_LOG) switches ratio computations to log form.
OVERFLOW_LOG = 600.0


def _as_array(w) -> np.ndarray:
    return np.asarray(w, dtype=complex)


def _maybe_scalar(values: np.ndarray, w) -> complex | np.ndarray:
    if np.isscalar(w) or (isinstance(w, np.ndarray) and w.ndim == 0):
        return complex(values.ravel()[0])
    return values


def check_finite(*points: complex) -> None:
    for p in points:
        c = complex(p)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError(f"non-finite complex input: {p!r}")


class EntireFunction:
    """Base class; subclasses implement the family-specific closed forms."""

    name: str = "entire"
    known_order: float | None = None
    genus_lambda: int | None = None

    # -- evaluation ---------------------------------------------------------

    def eval(self, w):
        return self.kderiv(w, 0)

    def kderiv(self, w, k: int):
        raise NotImplementedError

    def log_eval(self, w):
        """Complex log of f(w); default takes the plain logarithm."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(_as_array(self.eval(w)))
        return _maybe_scalar(np.atleast_1d(out), w)

    def log_abs(self, w):
        out = np.real(np.atleast_1d(self.log_eval(w)))
        return _maybe_scalar(out, w)

    def dlog(self, w):
        """f'(w)/f(w); default forms the quotient in value space."""
        return self.kderiv(w, 1) / self.eval(w)

    # -- series -------------------------------------------------------------

    def maclaurin(self, n: int) -> np.ndarray:
        raise NotImplementedError

    # -- oracles -------------------------------------------------------------

    @property
    def has_oracle(self) -> bool:
        return False

    def orbit_oracle(self, z: complex, R: float) -> list[tuple[complex, int]]:
        raise NotImplementedError(f"{self.name}: no closed-form orbit")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _dedupe_with_multiplicity(points: Sequence[complex], tol: float) -> list[tuple[complex, int]]:
    out: list[tuple[complex, int]] = []
    for p in points:
        for i, (q, m) in enumerate(out):
            if abs(p - q) <= tol:
                out[i] = ((q * m + p) / (m + 1), m + 1)
                break
        else:
            out.append((p, 1))
    return out


def sort_points(points: list[tuple[complex, int]]) -> list[tuple[complex, int]]:
    """Canonical point order: by modulus, ties by argument in [0, 2pi)."""
    def key(item):
        p, _ = item
        ang = math.atan2(p.imag, p.real)
        if ang < -1e-15:
            ang += 2.0 * math.pi
        return (abs(p), ang)
    return sorted(points, key=key)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class GeneralPolynomial(EntireFunction):
    """p(w) = sum a_k w^k with coefficients in ascending order."""

    known_order = 0.0
    genus_lambda = 0

    def __init__(self, coeffs: Sequence[complex], name: str | None = None):
        c = np.asarray(list(coeffs), dtype=complex)
        if c.size == 0:
            raise ValueError("empty coefficient list")
        # strip trailing zeros, keep at least the constant term
        last = c.size - 1
        while last > 0 and c[last] == 0:
            last -= 1
        self.coeffs = c[: last + 1]
        self.name = name or f"poly-deg{self.degree}"

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def kderiv(self, w, k: int):
        if k > MAX_DERIVATIVE_ORDER:
            raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
        c = self.coeffs
        for _ in range(k):
            if c.size <= 1:
                c = np.zeros(1, dtype=complex)
                break
            c = c[1:] * np.arange(1, c.size, dtype=float)
        ww = _as_array(w)
        out = np.zeros_like(ww)
        for a in c[::-1]:
            out = out * ww + a
        return _maybe_scalar(np.atleast_1d(out), w)

    def _scaled_tail(self, ww: np.ndarray, shift: int = 0) -> np.ndarray:
        """Horner in 1/w of coefficients a_k * k^(shift), highest first."""
        d = self.degree
        ks = np.arange(d + 1, dtype=float)
        c = self.coeffs * ks**shift if shift else self.coeffs
        out = np.zeros_like(ww)
        inv = 1.0 / ww
        for a in c:  # ascending k: q = sum a_k w^(k-d)
            out = out * inv + a
        return out

    def log_eval(self, w):
        ww = np.atleast_1d(_as_array(w))
        out = np.empty_like(ww)
        big = np.abs(ww) > 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            if np.any(~big):
                out[~big] = np.log(self._horner(ww[~big]))
            if np.any(big):
                wb = ww[big]
                out[big] = self.degree * np.log(wb) + np.log(self._scaled_tail(wb))
        return _maybe_scalar(out, w)

    def _horner(self, ww):
        out = np.zeros_like(ww)
        for a in self.coeffs[::-1]:
            out = out * ww + a
        return out

    def dlog(self, w):
        ww = np.atleast_1d(_as_array(w))
        out = np.empty_like(ww)
        big = np.abs(ww) > 1.0
        if np.any(~big):
            ws = ww[~big]
            out[~big] = np.atleast_1d(self.kderiv(ws, 1)) / self._horner(ws)
        if np.any(big):
            wb = ww[big]
            out[big] = self._scaled_tail(wb, shift=1) / (wb * self._scaled_tail(wb))
        return _maybe_scalar(out, w)

    def maclaurin(self, n: int) -> np.ndarray:
        out = np.zeros(n + 1, dtype=complex)
        m = min(n, self.degree)
        out[: m + 1] = self.coeffs[: m + 1]
        return out

    @property
    def has_oracle(self) -> bool:
        return True

    def orbit_oracle(self, z, R):
        # roots of p(w) - p(z); numpy's companion solve is the closed form here
        q = self.coeffs.copy()
        q[0] -= complex(self.eval(z))
        roots = np.roots(q[::-1])
        pts = _dedupe_with_multiplicity([complex(r) for r in roots], 1e-7 * max(1.0, R))
        return sort_points([(p, m) for p, m in pts if abs(p) < R])


class Monomial(GeneralPolynomial):
    """f(w) = w^N."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("monomial degree must be >= 1")
        coeffs = [0.0] * N + [1.0]
        super().__init__(coeffs, name=f"monomial-{N}")
        self.N = N

    def orbit_oracle(self, z, R):
        zc = complex(z)
        if zc == 0:
            return [(0j, self.N)] if R > 0 else []
        pts = [zc * np.exp(2j * np.pi * k / self.N) for k in range(self.N)]
        return sort_points([(complex(p), 1) for p in pts if abs(p) < R])


class QuadraticZZ(GeneralPolynomial):
    """f(w) = w^2 + w, the paper-scale quadratic with Aut = {w, -w-1}."""

    def __init__(self):
        super().__init__([0.0, 1.0, 1.0], name="quadratic-zz")

    def orbit_oracle(self, z, R):
        zc = complex(z)
        pts = _dedupe_with_multiplicity([zc, -zc - 1.0], 1e-12)
        return sort_points([(p, m) for p, m in pts if abs(p) < R])


class TruncatedSeries(GeneralPolynomial):
    """Finite Maclaurin prefix treated as the available data of a series."""

    def __init__(self, coeffs: Sequence[complex], name: str = "truncated-series"):
        super().__init__(coeffs, name=name)
        self.known_order = None

    @property
    def has_oracle(self) -> bool:
        return False


# ---------------------------------------------------------------------------
# Exponential
# ---------------------------------------------------------------------------


class Exp(EntireFunction):
    """f(w) = e^w; Aut = translations by 2*pi*i*k."""

    name = "exp"
    known_order = 1.0
    genus_lambda = 1

    def kderiv(self, w, k: int):
        if k > MAX_DERIVATIVE_ORDER:
            raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
        return np.exp(_as_array(w)) if not np.isscalar(w) else complex(np.exp(w))

    def log_eval(self, w):
        return _as_array(w) if not np.isscalar(w) else complex(w)

    def dlog(self, w):
        ww = _as_array(w)
        return _maybe_scalar(np.ones_like(np.atleast_1d(ww)), w)

    def maclaurin(self, n: int) -> np.ndarray:
        return np.array([1.0 / math.factorial(k) for k in range(n + 1)], dtype=complex)

    @property
    def has_oracle(self) -> bool:
        return True

    def orbit_oracle(self, z, R):
        zc = complex(z)
        kmax = int((R + abs(zc)) / (2 * math.pi)) + 2
        pts = [zc + 2j * math.pi * k for k in range(-kmax, kmax + 1)]
        return sort_points([(p, 1) for p in pts if abs(p) < R])


# ---------------------------------------------------------------------------
# Root-composed families: cos(sqrt(w)) and (cos w^{1/4} + cosh w^{1/4})/2
# ---------------------------------------------------------------------------


def _build_ladder_sqrt(kmax: int):
    """Derivative tables for g(t)=cos t under d/dw = (1/(2t)) d/dt.

    Each table maps (trig, inverse-power m) -> rational coefficient, with the
    k-th derivative of cos(sqrt(w)) equal to sum c * trig(t) * t^(-m).
    """
    tables = [{("cos", 0): Fraction(1)}]
    for _ in range(kmax):
        nxt: dict[tuple[str, int], Fraction] = {}
        def add(key, val):
            nxt[key] = nxt.get(key, Fraction(0)) + val
        for (fn, m), c in tables[-1].items():
            if fn == "cos":
                add(("sin", m + 1), -c / 2)
            else:
                add(("cos", m + 1), c / 2)
            add((fn, m + 2), -c * m / 2)
        tables.append({k: v for k, v in nxt.items() if v != 0})
    return tables


def _build_ladder_quartic(kmax: int):
    """Same as above for g(t) = (cos t + cosh t)/2 under d/dw = (1/(4t^3)) d/dt."""
    ddt = {"cos": ("sin", -1), "sin": ("cos", 1), "cosh": ("sinh", 1), "sinh": ("cosh", 1)}
    tables = [{("cos", 0): Fraction(1, 2), ("cosh", 0): Fraction(1, 2)}]
    for _ in range(kmax):
        nxt: dict[tuple[str, int], Fraction] = {}
        def add(key, val):
            nxt[key] = nxt.get(key, Fraction(0)) + val
        for (fn, m), c in tables[-1].items():
            gn, sgn = ddt[fn]
            add((gn, m + 3), c * sgn / 4)
            add((fn, m + 4), -c * m / 4)
        tables.append({k: v for k, v in nxt.items() if v != 0})
    return tables


_SQRT_TABLES = _build_ladder_sqrt(MAX_DERIVATIVE_ORDER)
_QUARTIC_TABLES = _build_ladder_quartic(MAX_DERIVATIVE_ORDER)

_TRIG = {
    "cos": np.cos,
    "sin": np.sin,
    "cosh": np.cosh,
    "sinh": np.sinh,
}


class _RootComposed(EntireFunction):
    """Shared machinery for the sqrt- and quartic-root families."""

    root_power: int  # 2 for sqrt, 4 for quartic
    tables: list[dict[tuple[str, int], Fraction]]
    series_step: int  # a_n = series_sign(n) / (step*n)!

    def _series_coeff(self, n: int) -> float:
        raise NotImplementedError

    def _root(self, ww: np.ndarray) -> np.ndarray:
        return ww ** (1.0 / self.root_power)

    def kderiv(self, w, k: int):
        if k > MAX_DERIVATIVE_ORDER:
            raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
        ww = np.atleast_1d(_as_array(w))
        out = np.empty_like(ww)
        small = np.abs(ww) < 1.0
        if np.any(small):
            out[small] = self._series_deriv(ww[small], k)
        if np.any(~small):
            out[~small] = self._closed_deriv(ww[~small], k)
        return _maybe_scalar(out, w)

    def _series_deriv(self, ww: np.ndarray, k: int, terms: int = 40) -> np.ndarray:
        coeffs = []
        for n in range(k, k + terms):
            c = self._series_coeff(n) * math.factorial(n) / math.factorial(n - k)
            coeffs.append(c)
        out = np.zeros_like(ww)
        for c in coeffs[::-1]:
            out = out * ww + c
        return out

    def _closed_deriv(self, ww: np.ndarray, k: int) -> np.ndarray:
        t = self._root(ww)
        out = np.zeros_like(ww)
        for (fn, m), c in self.tables[k].items():
            out = out + float(c) * _TRIG[fn](t) * t ** (-float(m))
        return out

    def maclaurin(self, n: int) -> np.ndarray:
        return np.array([self._series_coeff(j) for j in range(n + 1)], dtype=complex)


class CosSqrt(_RootComposed):
    """f(w) = cos(sqrt(w)) = sum (-1)^n w^n / (2n)!; order 1/2."""

    name = "cossqrt"
    known_order = 0.5
    genus_lambda = 0
    root_power = 2
    tables = _SQRT_TABLES

    def _series_coeff(self, n: int) -> float:
        return (-1.0) ** n / math.factorial(2 * n)

    def log_eval(self, w):
        ww = np.atleast_1d(_as_array(w))
        t = np.sqrt(ww)
        a = 1j * t
        a = np.where(a.real >= 0, a, -a)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a + np.log(1.0 + np.exp(-2.0 * a)) - LOG2
        return _maybe_scalar(out, w)

    def dlog(self, w):
        # f'/f = -tan(t)/(2t); numpy's complex tan saturates safely at +-i
        ww = np.atleast_1d(_as_array(w))
        t = np.sqrt(ww)
        out = np.empty_like(ww)
        small = np.abs(ww) < 1.0
        if np.any(small):
            ws = ww[small]
            out[small] = np.atleast_1d(self.kderiv(ws, 1)) / np.atleast_1d(self.kderiv(ws, 0))
        if np.any(~small):
            tb = t[~small]
            out[~small] = -np.tan(tb) / (2.0 * tb)
        return _maybe_scalar(out, w)

    @property
    def has_oracle(self) -> bool:
        return True

    def orbit_oracle(self, z, R):
        zc = complex(z)
        s = complex(np.sqrt(zc))
        kmax = int((math.sqrt(R) + abs(s)) / (2 * math.pi)) + 2
        pts = []
        for k in range(-kmax, kmax + 1):
            p = zc + 4 * math.pi * k * s + 4 * math.pi**2 * k**2
            if abs(p) < R:
                pts.append(complex(p))
        merged = _dedupe_with_multiplicity(pts, 1e-9 * max(1.0, R))
        return sort_points(merged)


class QuarterOrder(_RootComposed):
    """f(w) = (cos w^{1/4} + cosh w^{1/4})/2 = sum w^n/(4n)!; order 1/4."""

    name = "quarter"
    known_order = 0.25
    genus_lambda = 0
    root_power = 4
    tables = _QUARTIC_TABLES

    def _series_coeff(self, n: int) -> float:
        return 1.0 / math.factorial(4 * n)

    def _exponents(self, t: np.ndarray) -> np.ndarray:
        return np.stack([1j * t, -1j * t, t, -t])

    def log_eval(self, w):
        ww = np.atleast_1d(_as_array(w))
        u = self._exponents(self._root(ww))
        m = np.max(u.real, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = m + np.log(np.sum(np.exp(u - m), axis=0)) - 2.0 * LOG2
        return _maybe_scalar(out, w)

    def dlog(self, w):
        ww = np.atleast_1d(_as_array(w))
        out = np.empty_like(ww)
        small = np.abs(ww) < 1.0
        if np.any(small):
            ws = ww[small]
            out[small] = np.atleast_1d(self.kderiv(ws, 1)) / np.atleast_1d(self.kderiv(ws, 0))
        if np.any(~small):
            t = self._root(ww[~small])
            u = self._exponents(t)
            m = np.max(u.real, axis=0)
            e = np.exp(u - m)
            # 2 f = sum e^{u_j}; 2 df/dt = i e^{it} - i e^{-it} + e^t - e^{-t}
            num = 1j * e[0] - 1j * e[1] + e[2] - e[3]
            den = np.sum(e, axis=0)
            out[~small] = num / (den * 4.0 * t**3)
        return _maybe_scalar(out, w)


# ---------------------------------------------------------------------------
# Products, shifts, towers
# ---------------------------------------------------------------------------


def _bell_partial(k: int, j: int, x: Sequence[complex]) -> complex:
    """Partial Bell polynomial B_{k,j}(x_1..x_{k-j+1}) by the usual recurrence."""
    if k == 0 and j == 0:
        return 1.0
    if k == 0 or j == 0:
        return 0.0
    total = 0.0
    for i in range(1, k - j + 2):
        total += math.comb(k - 1, i - 1) * x[i - 1] * _bell_partial(k - i, j - 1, x)
    return total


class PolyTimesExp(EntireFunction):
    """f(w) = p(w) * exp(g(w)) for a polynomial p and entire g."""

    def __init__(self, p: GeneralPolynomial, g: EntireFunction, name: str | None = None):
        self.p = p
        self.g = g
        self.name = name or f"({p.name})*exp({g.name})"
        if isinstance(g, GeneralPolynomial):
            self.known_order = float(g.degree)

    def kderiv(self, w, k: int):
        if k > MAX_DERIVATIVE_ORDER:
            raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
        ww = np.atleast_1d(_as_array(w))
        gd = [np.atleast_1d(self.g.kderiv(ww, j)) for j in range(0, k + 1)]
        eg = np.exp(gd[0])
        # (e^g)^(m) = e^g * Y_m(g', ..., g^(m)) with the complete Bell recurrence
        ys = [np.ones_like(ww)]
        for m in range(1, k + 1):
            acc = np.zeros_like(ww)
            for i in range(0, m):
                acc = acc + math.comb(m - 1, i) * ys[i] * gd[m - i]
            ys.append(acc)
        out = np.zeros_like(ww)
        for j in range(0, k + 1):
            out = out + math.comb(k, j) * np.atleast_1d(self.p.kderiv(ww, j)) * eg * ys[k - j]
        return _maybe_scalar(out, w)

    def log_eval(self, w):
        ww = np.atleast_1d(_as_array(w))
        out = np.atleast_1d(self.p.log_eval(ww)) + np.atleast_1d(self.g.eval(ww))
        return _maybe_scalar(out, w)

    def dlog(self, w):
        ww = np.atleast_1d(_as_array(w))
        out = np.atleast_1d(self.p.dlog(ww)) + np.atleast_1d(self.g.kderiv(ww, 1))
        return _maybe_scalar(out, w)

    def maclaurin(self, n: int) -> np.ndarray:
        gc = np.atleast_1d(self.g.maclaurin(n))
        eg = _series_exp(gc, n)
        pc = self.p.maclaurin(n)
        return np.convolve(pc, eg)[: n + 1]


def _series_exp(g: np.ndarray, n: int) -> np.ndarray:
    """Maclaurin coefficients of exp(g) through degree n."""
    b = np.zeros(n + 1, dtype=complex)
    b[0] = np.exp(g[0])
    for m in range(1, n + 1):
        acc = 0j
        for k in range(1, m + 1):
            if k < g.size:
                acc += k * g[k] * b[m - k]
        b[m] = acc / m
    return b


class NgFactor(EntireFunction):
    """f(w) = c e^w + w, the prime factor of the Ng composition towers."""

    known_order = 1.0

    def __init__(self, c: float):
        if c <= 0:
            raise ValueError("factor constant must be positive")
        self.c = float(c)
        self.name = f"ngfactor-{c:g}"

    def kderiv(self, w, k: int):
        if k > MAX_DERIVATIVE_ORDER:
            raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
        ww = _as_array(w)
        base = self.c * np.exp(ww)
        if k == 0:
            out = base + ww
        elif k == 1:
            out = base + 1.0
        else:
            out = base
        return _maybe_scalar(np.atleast_1d(out), w)

    def log_eval(self, w):
        ww = np.atleast_1d(_as_array(w))
        u = ww + math.log(self.c)  # log of c e^w
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lw = np.log(ww)
        m = np.maximum(u.real, lw.real)
        out = m + np.log(np.exp(u - m) + np.exp(lw - m))
        return _maybe_scalar(out, w)

    def dlog(self, w):
        ww = np.atleast_1d(_as_array(w))
        u = ww + math.log(self.c)
        big = u.real > OVERFLOW_LOG
        out = np.empty_like(ww)
        if np.any(~big):
            ws = ww[~big]
            e = self.c * np.exp(ws)
            out[~big] = (e + 1.0) / (e + ws)
        if np.any(big):
            wb = ww[big]
            inv = np.exp(-wb - math.log(self.c))
            out[big] = (1.0 + inv) / (1.0 + wb * inv)
        return _maybe_scalar(out, w)

    def maclaurin(self, n: int) -> np.ndarray:
        out = np.array([self.c / math.factorial(k) for k in range(n + 1)], dtype=complex)
        if n >= 1:
            out[1] += 1.0
        return out


class CompositionTower(EntireFunction):
    """Composition outer o ... o inner, given outermost-first."""

    def __init__(self, layers: Sequence[EntireFunction], name: str | None = None):
        if len(layers) < 2:
            raise ValueError("a tower needs at least two layers")
        self.layers = list(layers)
        self.name = name or "o".join(f.name for f in layers)

    @classmethod
    def compose(cls, outer: EntireFunction, inner: EntireFunction) -> "CompositionTower":
        return cls([outer, inner])

    def kderiv(self, w, k: int):
        if k > MAX_DERIVATIVE_ORDER:
            raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
        ww = np.atleast_1d(_as_array(w))
        # fold Faa di Bruno from the innermost layer outward
        derivs = [np.atleast_1d(self.layers[-1].kderiv(ww, j)) for j in range(k + 1)]
        for outer in self.layers[-2::-1]:
            val = derivs[0]
            outer_d = [np.atleast_1d(outer.kderiv(val, j)) for j in range(k + 1)]
            new = [outer_d[0]]
            for kk in range(1, k + 1):
                acc = np.zeros_like(ww)
                for j in range(1, kk + 1):
                    acc = acc + outer_d[j] * _bell_vec(kk, j, derivs[1:])
                new.append(acc)
            derivs = new
        return _maybe_scalar(derivs[k], w)

    def log_eval(self, w):
        ww = np.atleast_1d(_as_array(w))
        v = ww
        for f in self.layers[:0:-1]:
            v = np.atleast_1d(f.eval(v))
        out = np.atleast_1d(self.layers[0].log_eval(v))
        return _maybe_scalar(out, w)

    def dlog(self, w):
        ww = np.atleast_1d(_as_array(w))
        v = ww
        chain = np.ones_like(ww)
        for f in self.layers[:0:-1]:
            chain = chain * np.atleast_1d(f.kderiv(v, 1))
            v = np.atleast_1d(f.eval(v))
        out = np.atleast_1d(self.layers[0].dlog(v)) * chain
        return _maybe_scalar(out, w)

    def maclaurin(self, n: int) -> np.ndarray:
        raise NotImplementedError("towers with f(0) != 0 have no finite coefficient rule")


def _bell_vec(k: int, j: int, x: list[np.ndarray]) -> np.ndarray:
    if k == 0 and j == 0:
        return np.ones_like(x[0])
    if k == 0 or j == 0:
        return np.zeros_like(x[0])
    total = np.zeros_like(x[0])
    for i in range(1, k - j + 2):
        total = total + math.comb(k - 1, i - 1) * x[i - 1] * _bell_vec(k - i, j - 1, x)
    return total


# ---------------------------------------------------------------------------
# Spec operations
# ---------------------------------------------------------------------------


def eval_kderiv(f: EntireFunction, w: complex, k: int) -> complex:
    """f^(k)(w) by the family's closed form (never numerical differentiation)."""
    if k > MAX_DERIVATIVE_ORDER:
        raise UnsupportedDerivativeOrder(f"k={k} > {MAX_DERIVATIVE_ORDER}")
    check_finite(w)
    return complex(f.kderiv(complex(w), k))


def partial_sum(f: EntireFunction, n: int) -> GeneralPolynomial:
    """Degree-n Maclaurin partial sum, rejecting a vanishing leading term."""
    if n < 1:
        raise ValueError("partial sum degree must be positive")
    coeffs = f.maclaurin(n)
    if abs(coeffs[n]) == 0.0:
        raise ZeroLeadingCoefficient(f"{f.name}: a_{n} = 0, pick another degree")
    return GeneralPolynomial(coeffs, name=f"{f.name}-partial-{n}")


def modulus_extrema(f: EntireFunction, r: float, n_grid: int = 1024) -> tuple[float, float]:
    """(log m_f(r), log M_f(r)) on |w| = r, carried in log-magnitude.

    A uniform angle grid seeds 1-D bounded refinement around the extremal
    angles down to 1e-8 angular resolution.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    theta = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    vals = np.atleast_1d(f.log_abs(r * np.exp(1j * theta)))
    if np.all(~np.isfinite(vals)):
        raise EvaluationOverflow(f"{f.name}: log|f| not representable on r={r}")

    def refine(idx: int, sign: float) -> float:
        lo = theta[idx] - 2.0 * math.pi / n_grid
        hi = theta[idx] + 2.0 * math.pi / n_grid
        res = minimize_scalar(
            lambda th: sign * float(np.real(f.log_abs(r * np.exp(1j * th)))),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-8},
        )
        return sign * float(res.fun)

    finite = np.where(np.isfinite(vals), vals, np.inf)
    log_m = refine(int(np.argmin(finite)), +1.0)
    finite = np.where(np.isfinite(vals), vals, -np.inf)
    log_M = refine(int(np.argmax(finite)), -1.0)
    if log_m > log_M:  # refinement can only improve each side
        log_m, log_M = min(log_m, log_M), max(log_m, log_M)
    return log_m, log_M


class OrderEstimate(float):
    """Fitted growth order; carries the degenerate-fit flag of the regression."""

    degenerate: bool

    def __new__(cls, rho: float, degenerate: bool):
        obj = super().__new__(cls, rho)
        obj.degenerate = degenerate
        return obj


def estimate_order(f: EntireFunction, r_grid: Sequence[float]) -> OrderEstimate:
    """Least-squares slope of log log M_f(r) against log r.

    Polynomial-like data (log M exactly linear in log r, or log log M not
    increasing) is flagged degenerate and reported as order 0.
    """
    r = np.asarray(list(r_grid), dtype=float)
    if r.size < 4 or np.any(np.diff(r) <= 0):
        raise ValueError("need an increasing grid of at least 4 radii")
    if r[-1] / r[0] < 1e3 * (1 - 1e-9):
        raise ValueError("grid must span at least 3 decades")
    logM = np.array([modulus_extrema(f, float(ri))[1] for ri in r])
    logr = np.log(r)
    if np.any(logM <= 0.0):
        return OrderEstimate(0.0, True)
    # polynomial signature: log M is an affine function of log r
    lin = np.polyfit(logr, logM, 1)
    resid = logM - np.polyval(lin, logr)
    if np.max(np.abs(resid)) < 1e-3 * max(1.0, float(np.ptp(logM))):
        return OrderEstimate(0.0, True)
    y = np.log(logM)
    if y[-1] <= y[0]:
        return OrderEstimate(0.0, True)
    slope = float(np.polyfit(logr, y, 1)[0])
    return OrderEstimate(slope, False)


# registry used by the CLI and the test suites
def build_function(kind: str, **params) -> EntireFunction:
    kind = kind.lower()
    if kind == "exp":
        return Exp()
    if kind == "cossqrt":
        return CosSqrt()
    if kind == "quarter":
        return QuarterOrder()
    if kind in ("quadratic", "quadraticzz"):
        return QuadraticZZ()
    if kind == "monomial":
        return Monomial(int(params.get("n", 2)))
    if kind == "poly":
        coeffs = params.get("coeffs")
        if coeffs is None:
            raise ValueError("poly requires coeffs")
        return GeneralPolynomial(coeffs)
    if kind == "ngfactor":
        return NgFactor(float(params.get("c", 0.1)))
    raise ValueError(f"unknown function family: {kind}")
