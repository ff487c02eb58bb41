"""Statistics of the decoherence factor.

Long-time averages (the ``2**-N`` trend), short-time Gaussian decay rates,
recurrence scans and bath-size scaling studies.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoDecay, StepTooCoarse
from .spinbath import EnvironmentSpec, decoherence_factor, decoherence_series, env_random

# |r(t_c)|^2 = exp(-1/4) closes the fit window
WINDOW_LOG_MOD_SQ = -0.25
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    log_magnitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.log_magnitude) == len(self.phase)):
            raise ValueError("series arrays must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_magnitude + 1j * self.phase)

    @property
    def magnitude(self) -> np.ndarray:
        return np.exp(self.log_magnitude)

    def rows(self):
        """``(t, re r, im r, log|r|)`` tuples, the CSV layout."""
        v = self.values
        for t, z, lm in zip(self.times, v, self.log_magnitude):
            yield float(t), float(z.real), float(z.imag), float(lm)


@dataclass(frozen=True)
class AverageReport:
    estimate: float
    closed_form: float
    stderr: float
    horizon: float
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GaussianFit:
    gamma: float
    gamma_theory: float
    window: tuple[float, float]
    residual: float
    t_c: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d["no_decay"] = False
        return d


@dataclass(frozen=True)
class RecurrenceReport:
    threshold: float
    hits: list[tuple[float, float]]
    horizon: float
    step: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "horizon": self.horizon,
            "step": self.step,
            "degenerate": self.degenerate,
            "hits": [{"t": t, "abs_r": a} for t, a in self.hits],
        }


@dataclass(frozen=True)
class ScalingTable:
    n_list: list[int]
    mean_closed_form: list[float]
    mean_estimate: list[float] | None
    slope_log2: float
    seeds: int
    states: str = "haar"
    per_seed: list[list[float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        rows = []
        for i, n in enumerate(self.n_list):
            row = {"N": n, "mean_closed_form": self.mean_closed_form[i]}
            if self.mean_estimate is not None:
                row["mean_estimate"] = self.mean_estimate[i]
            rows.append(row)
        return {"seeds": self.seeds, "states": self.states, "slope_log2": self.slope_log2, "rows": rows}


def sample_series(env: EnvironmentSpec, t_grid: Sequence[float]) -> TimeSeries:
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0:
        raise ValueError("time grid is empty")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    lm, ph = decoherence_series(env, t)
    return TimeSeries(t, lm, ph)


def closed_form_average(env: EnvironmentSpec) -> float:
    """Exact long-time mean of ``|r|^2``: ``prod_k (1 + D_k^2) / 2``.

    Holds for rationally independent couplings, where the time average of the
    product factorizes.
    """
    d = env.deltas
    return math.exp(math.fsum(np.log1p(d * d).tolist()) - env.N * math.log(2.0))


def average_modsq(env: EnvironmentSpec, horizon: float, samples: int = 10_000) -> AverageReport:
    """Grid mean of ``|r(t)|^2`` over ``[0, horizon)`` next to the closed form.

    ``stderr`` treats the samples as independent, which is accurate once the
    grid spacing exceeds the decay time of ``r``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    slowest = 2 * math.pi / max(float(np.min(np.abs(env.couplings))), 1e-300)
    if horizon < 10 * slowest:
        warnings.warn(
            f"horizon {horizon:g} is short compared with the slowest period {slowest:g}",
            RuntimeWarning,
            stacklevel=2,
        )
    t = np.arange(samples) * (horizon / samples)
    lm, _ = decoherence_series(env, t)
    modsq = np.exp(2 * lm)
    return AverageReport(
        float(modsq.mean()),
        closed_form_average(env),
        float(modsq.std(ddof=1) / math.sqrt(samples)),
        float(horizon),
        int(samples),
    )


def gamma_theory(env: EnvironmentSpec) -> float:
    """Short-time rate from the t^2 term of ``-log|r|^2``: ``sqrt(4 sum g^2 (1 - D^2))``."""
    g, d = env.couplings, env.deltas
    return math.sqrt(4.0 * math.fsum((g * g * (1.0 - d * d)).tolist()))


def _log_modsq(env: EnvironmentSpec, t: float) -> float:
    return 2.0 * decoherence_factor(env, t).log_magnitude


def find_window_end(env: EnvironmentSpec) -> float:
    """First time at which ``|r|^2`` falls to ``exp(-1/4)``."""
    gbar = env.mean_coupling
    gmax = float(np.max(np.abs(env.couplings)))
    if gbar == 0.0:
        raise NoDecay("all couplings vanish")
    horizon = 1e3 / gbar
    step = math.pi / (16 * gmax)
    gth = gamma_theory(env)
    if gth > 0:
        step = min(step, 1.0 / (8.0 * gth))
    chunk = 4096
    t0 = 0.0
    while t0 < horizon:
        t = t0 + step * np.arange(1, chunk + 1)
        lm, _ = decoherence_series(env, t)
        below = np.flatnonzero(2 * lm <= WINDOW_LOG_MOD_SQ)
        if below.size:
            i = int(below[0])
            hi = float(t[i])
            lo = float(t[i - 1]) if i > 0 else t0
            f = lambda x: _log_modsq(env, x) - WINDOW_LOG_MOD_SQ
            if f(hi) == 0.0:
                return hi
            return brentq(f, lo, hi, xtol=1e-14, rtol=1e-13)
        t0 = float(t[-1])
    raise NoDecay(f"|r|^2 stays above exp(-1/4) up to t = {horizon:g}")


def gaussian_rate(env: EnvironmentSpec, fit_fraction: float = 1.0, points: int = 64) -> GaussianFit:
    """Fit ``-log|r|^2 = Gamma^2 t^2`` on ``[0, fit_fraction * t_c]``.

    Least squares through the origin in the variable ``t^2``; ``t_c`` is the
    first time ``|r|^2`` reaches ``exp(-1/4)``, so ``Gamma t <= 1/2`` inside
    the window.
    """
    if not 0 < fit_fraction <= 1:
        raise ValueError("fit_fraction must lie in (0, 1]")
    t_c = find_window_end(env)
    t1 = fit_fraction * t_c
    t = np.linspace(0.0, t1, points + 1)[1:]
    lm, _ = decoherence_series(env, t)
    y = -2.0 * lm
    x = t * t
    slope = float(np.dot(x, y) / np.dot(x, x))
    resid = float(np.sqrt(np.mean((y - slope * x) ** 2)))
    return GaussianFit(math.sqrt(max(slope, 0.0)), gamma_theory(env), (0.0, t1), resid, t_c)


def curvature_rate(env: EnvironmentSpec, h: float | None = None) -> float:
    """Finite-difference estimate of ``Gamma`` from ``-log|r|^2`` at ``t -> 0``.

    Central second difference of an even function: ``f''(0)/2 = f(h)/h^2``
    (``f(0) = 0``). Richardson-extrapolated over ``h`` and ``h/2``.
    """
    if h is None:
        h = 1e-3 / max(float(np.max(np.abs(env.couplings))), 1e-300)
    f = lambda x: -_log_modsq(env, x)
    c1 = (f(h) - 2 * f(0.0) + f(-h)) / (2 * h * h)
    c2 = (f(h / 2) - 2 * f(0.0) + f(-h / 2)) / (2 * (h / 2) ** 2)
    return math.sqrt(max((4 * c2 - c1) / 3, 0.0))


def _golden_max(f, a: float, b: float, tol: float = 1e-13) -> tuple[float, float]:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def recurrence_scan(
    env: EnvironmentSpec, threshold: float, horizon: float, step: float, refine_margin: float = 0.05
) -> RecurrenceReport:
    """Times after the initial decay at which ``|r|`` climbs back above ``threshold``.

    Coarse grid scan, then golden-section maximization of ``|r|`` around every
    grid local maximum within ``refine_margin`` of the threshold. If ``|r|``
    never drops below the threshold the case is degenerate and every grid
    point is reported.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    gmax = float(np.max(np.abs(env.couplings)))
    limit = math.pi / (8 * gmax) if gmax > 0 else math.inf
    if step <= 0 or step > limit * (1 + 1e-12):
        raise StepTooCoarse(f"step {step:g} must satisfy 0 < step <= pi/(8 max|g|) = {limit:g}")
    t = np.arange(0.0, horizon + 0.5 * step, step)
    t = t[t <= horizon]
    lm, _ = decoherence_series(env, t)
    log_thr = math.log(threshold)
    below = np.flatnonzero(lm < log_thr)
    if below.size == 0:
        hits = [(float(a), float(math.exp(b))) for a, b in zip(t, lm)]
        return RecurrenceReport(threshold, hits, float(horizon), float(step), degenerate=True)

    start = int(below[0])
    cand_floor = math.log(max(threshold - refine_margin, 1e-300))
    inner = np.arange(max(start, 1), len(t) - 1)
    is_peak = (lm[inner] >= lm[inner - 1]) & (lm[inner] >= lm[inner + 1]) & (lm[inner] >= cand_floor)
    peaks = list(inner[is_peak])
    if lm[-1] >= cand_floor and lm[-1] >= lm[-2]:
        peaks.append(len(t) - 1)

    mag = lambda x: decoherence_factor(env, x).magnitude
    hits: list[tuple[float, float]] = []
    for j in peaks:
        lo = float(t[j - 1])
        hi = float(min(t[j] + step, horizon))
        x, v = _golden_max(mag, lo, hi)
        grid_v = math.exp(lm[j])
        if grid_v > v:
            x, v = float(t[j]), grid_v
        if v >= threshold:
            if hits and abs(hits[-1][0] - x) < 0.5 * step:
                if v > hits[-1][1]:
                    hits[-1] = (x, v)
                continue
            hits.append((x, v))
    return RecurrenceReport(threshold, hits, float(horizon), float(step))


def _seed_for(base: int, n: int, s: int) -> int:
    return int(np.random.SeedSequence([base, n, s]).generate_state(1)[0])


def scaling_study(
    n_list: Sequence[int],
    seeds: int,
    horizon: float | None = None,
    samples: int | None = None,
    *,
    g_range: tuple[float, float] = (0.5, 1.5),
    states: str = "haar",
    base_seed: int = 0,
    threads: int = 1,
) -> ScalingTable:
    """Seed-averaged closed-form long-time mean of ``|r|^2`` per bath size.

    With ``horizon`` and ``samples`` the sampled estimate is averaged too.
    ``slope_log2`` is the least-squares slope of ``log2(mean)`` against ``N``.
    Results do not depend on ``threads``.
    """
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("n_list is empty")
    if seeds < 10:
        raise ValueError("need at least 10 seeds")
    with_estimate = horizon is not None and samples is not None

    def one(job):
        n, s = job
        env = env_random(n, _seed_for(base_seed, n, s), *g_range, states=states)
        cf = closed_form_average(env)
        if not with_estimate:
            return cf, math.nan
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return cf, average_modsq(env, horizon, samples).estimate

    jobs = [(n, s) for n in n_list for s in range(seeds)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    cf_means, est_means, per_seed = [], [], []
    for i, _ in enumerate(n_list):
        block = results[i * seeds : (i + 1) * seeds]
        cfs = [r[0] for r in block]
        per_seed.append(cfs)
        cf_means.append(math.fsum(cfs) / seeds)
        est_means.append(math.fsum(r[1] for r in block) / seeds)
    if len(n_list) > 1:
        slope = float(np.polyfit(n_list, np.log2(cf_means), 1)[0])
    else:
        slope = math.nan
    return ScalingTable(n_list, cf_means, est_means if with_estimate else None, slope, seeds, states, per_seed)
