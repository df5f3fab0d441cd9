"""Numerical kernels shared by the MEM engines.

Beta-function special functions, seeded random streams, sample summaries
(HPD interval, kernel density) and a bounded simulated-annealing minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

_FPMIN = 1e-300
_CF_EPS = 1e-16
_CF_MAXITER = 10000


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a PCG64 generator keyed by ``(seed, stream)``.

    Distinct stream ids give statistically independent sequences, and the
    same pair always reproduces the same draws.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"interval lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def _check_shapes(a: float, b: float) -> None:
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise ValueError(f"beta shapes must be positive and finite, got a={a}, b={b}")


_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
# Stirling series coefficients B_{2k} / (2k (2k - 1)), k = 1..7
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)


def _lgamma_correction(x: float) -> float:
    """lgamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)] for x >= 10."""
    r = 1.0 / (x * x)
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * r + c
    return acc / x


def log_beta(a: float, b: float) -> float:
    """ln B(a, b).

    Plain log-gamma sums cancel badly once a shape is large, so the large
    cases use the Stirling form with the leading terms differenced
    analytically.
    """
    _check_shapes(a, b)
    p, q = (a, b) if a <= b else (b, a)
    if q < 10:
        return math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)
    s = p + q
    corr = _lgamma_correction(q) - _lgamma_correction(s)
    if p >= 10:
        corr += _lgamma_correction(p)
        return (-0.5 * math.log(q) + _HALF_LOG_2PI + corr
                + (p - 0.5) * math.log(p / s) + q * math.log1p(-p / s))
    return math.lgamma(p) + corr + p - p * math.log(s) + (q - 0.5) * math.log1p(-p / s)


def _betacf(x: float, a: float, b: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def beta_cdf(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    _check_shapes(a, b)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(x, a, b) / a
    return 1.0 - math.exp(log_front) * _betacf(1.0 - x, b, a) / b


def beta_pdf(x: float, a: float, b: float) -> float:
    _check_shapes(a, b)
    if x <= 0.0 or x >= 1.0:
        if (x == 0.0 and a < 1) or (x == 1.0 and b < 1):
            return math.inf
        if (x == 0.0 and a == 1) or (x == 1.0 and b == 1):
            return math.exp(-log_beta(a, b))
        return 0.0
    return math.exp((a - 1) * math.log(x) + (b - 1) * math.log1p(-x) - log_beta(a, b))


def beta_quantile(p: float, a: float, b: float, tol: float = 1e-13) -> float:
    """Inverse of :func:`beta_cdf` in ``x`` by safeguarded Newton iteration.

    Newton steps that leave the current bracket fall back to bisection, so
    convergence is guaranteed for every valid ``(p, a, b)``.
    """
    _check_shapes(a, b)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return p
    lo, hi = 0.0, 1.0
    x = a / (a + b)
    for _ in range(200):
        f = beta_cdf(x, a, b) - p
        if abs(f) <= tol:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        dens = beta_pdf(x, a, b)
        nxt = x - f / dens if dens > 0 and math.isfinite(dens) else -1.0
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if hi - lo < 1e-16 or nxt == x:
            return nxt
        x = nxt
    return x


def beta_sample(rng: np.random.Generator, a, b, size=None):
    """Beta(a, b) draws from ``rng``; shapes broadcast like numpy's."""
    return rng.beta(a, b, size=size)


def hpd_from_samples(samples: Sequence[float], alpha: float) -> Interval:
    """Shortest window of sorted samples covering ceil((1 - alpha) N) draws.

    Ties between windows of equal width resolve to the lowest lower bound.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 100:
        raise ValueError(f"HPD estimation needs at least 100 samples, got {n}")
    # round before ceil so (1 - 0.05) * 1000 stays 950
    k = max(1, math.ceil(round((1.0 - alpha) * n, 9)))
    widths = x[k - 1:] - x[: n - k + 1]
    i = int(np.argmin(widths))
    return Interval(float(x[i]), float(x[i + k - 1]))


def beta_hpd(a: float, b: float, alpha: float, refinements: int = 4) -> Interval:
    """Shortest interval holding 1 - alpha of Beta(a, b) mass.

    Slides the lower tail probability over [0, alpha] on successively finer
    grids, evaluating interval ends with the inverse incomplete beta.
    """
    lo_p, hi_p = 0.0, alpha
    best = 0.0
    for _ in range(refinements):
        p = np.linspace(lo_p, hi_p, 41)
        lower = special.betaincinv(a, b, p)
        upper = special.betaincinv(a, b, np.minimum(p + 1.0 - alpha, 1.0))
        i = int(np.argmin(upper - lower))
        best = p[i]
        step = p[1] - p[0]
        lo_p, hi_p = max(0.0, best - step), min(alpha, best + step)
    lower = float(special.betaincinv(a, b, best))
    upper = float(special.betaincinv(a, b, min(best + 1.0 - alpha, 1.0)))
    return Interval(lower, max(lower, upper))


def beta_credible_interval(a: float, b: float, alpha: float) -> Interval:
    """Equal-tailed (1 - alpha) interval of Beta(a, b)."""
    lower, upper = special.betaincinv(a, b, [alpha / 2.0, 1.0 - alpha / 2.0])
    return Interval(float(lower), float(max(lower, upper)))


def silverman_bandwidth(samples: np.ndarray, floor: float = 1e-3) -> float:
    x = np.asarray(samples, dtype=float)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd
    return max(0.9 * spread * x.size ** -0.2, floor)


def kde_curve(samples: Sequence[float], grid_points: int = 512) -> list[tuple[float, float]]:
    """Gaussian kernel density of draws on [0, 1], reflected at both ends.

    Large sample sets are binned onto 4096 cells before smoothing.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    x = np.asarray(samples, dtype=float)
    if np.unique(x).size < 2:
        raise ValueError("kernel density needs at least two distinct samples")
    h = silverman_bandwidth(x)
    grid = np.linspace(0.0, 1.0, grid_points)
    if x.size > 20000:
        counts, edges = np.histogram(x, bins=4096, range=(0.0, 1.0))
        keep = counts > 0
        centers = (0.5 * (edges[:-1] + edges[1:]))[keep]
        weights = counts[keep].astype(float)
    else:
        centers, weights = x, np.ones_like(x)
    dens = np.zeros(grid_points)
    norm = weights.sum() * h * math.sqrt(2.0 * math.pi)
    for chunk in np.array_split(np.arange(centers.size), max(1, centers.size // 2048)):
        c, w = centers[chunk], weights[chunk]
        for mirror in (c, -c, 2.0 - c):
            z = (grid[:, None] - mirror[None, :]) / h
            dens += (np.exp(-0.5 * z * z) * w).sum(axis=1)
    dens /= norm
    return list(zip(grid.tolist(), dens.tolist()))


@dataclass(frozen=True)
class AnnealSchedule:
    initial_temp: float = 10.0
    cooling: float = 0.95
    levels: int = 200
    moves_per_level: int = 50
    step_fraction: float = 0.2
    polish: bool = True


def anneal_minimize(
    objective: Callable[..., float],
    bounds: Sequence[tuple[float, float]],
    rng: np.random.Generator,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> tuple[tuple[float, ...], float]:
    """Minimize ``objective(*x)`` over a box by simulated annealing.

    Proposals are Gaussian with a scale that shrinks with the square root of
    the temperature and are reflected back into the box. The best point is
    finally polished with bounded Nelder-Mead, and the best point seen by
    either stage is returned.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(hi < lo):
        raise ValueError("each bound must satisfy lower <= upper")
    width = hi - lo
    dim = lo.size

    def reflect(p):
        p = np.where(p < lo, 2 * lo - p, p)
        p = np.where(p > hi, 2 * hi - p, p)
        return np.clip(p, lo, hi)

    cur = lo + width * rng.random(dim)
    f_cur = objective(*cur)
    best, f_best = cur.copy(), f_cur
    temp = schedule.initial_temp
    for _ in range(schedule.levels):
        scale = schedule.step_fraction * width * math.sqrt(temp / schedule.initial_temp)
        steps = rng.standard_normal((schedule.moves_per_level, dim)) * scale
        u = rng.random(schedule.moves_per_level)
        for step, ui in zip(steps, u):
            cand = reflect(cur + step)
            f_cand = objective(*cand)
            delta = f_cand - f_cur
            if delta <= 0 or ui < math.exp(-delta / temp):
                cur, f_cur = cand, f_cand
                if f_cur < f_best:
                    best, f_best = cur.copy(), f_cur
        temp *= schedule.cooling

    if schedule.polish and np.all(width > 0):
        res = optimize.minimize(
            lambda p: objective(*p),
            best,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
        )
        x = np.clip(res.x, lo, hi)
        fx = objective(*x)
        if fx < f_best:
            best, f_best = x, fx
    return tuple(float(v) for v in best), float(f_best)
