"""One-dimensional density-matrix pipeline for a two-grating Talbot-Lau setup.

Position-basis density matrices pass through binary gratings, paraxial free
propagation and a decoherence function ``rho'(x1, x2) = rho(x1, x2) eta(x1 - x2)``.
Observables are the diagonal pattern, its visibility and the flux through a
scanning mask. Position claims (``x in interval`` and disjunctions over slit
windows) are licensed by comparing the state's coherence length with the
claimed interval.

Grid points are cell centres ``x_i = x_min + (i + 1/2) dx``; propagation
uses the FFT transfer function on the periodic grid, so the state must stay
clear of the grid edges.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .content import GateVerdict
from .errors import NonpositiveSlope, OutOfRange, UnderResolved, ZeroTransmission

_E_INV = math.exp(-1.0)


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 points")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def span(self) -> float:
        return self.x_max - self.x_min

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    def index_mask(self, lo: float, hi: float) -> np.ndarray:
        x = self.x
        return (x >= lo) & (x < hi)


@dataclass(frozen=True)
class PositionDensity:
    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.grid.n, self.grid.n):
            raise ValueError("matrix shape does not match grid")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_wavefunction(cls, grid: Grid, psi: np.ndarray) -> "PositionDensity":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(grid, np.outer(psi, psi.conj()))

    @classmethod
    def plane_wave(cls, grid: Grid) -> "PositionDensity":
        return cls(grid, np.full((grid.n, grid.n), 1.0 / grid.n, dtype=complex))

    @classmethod
    def partially_coherent(cls, grid: Grid, coherence: float, envelope: np.ndarray | None = None) -> "PositionDensity":
        """Gaussian-Schell-like state: ``sqrt(I(x1) I(x2)) exp(-((x1 - x2)/coherence)^2)``."""
        amp = np.ones(grid.n) if envelope is None else np.sqrt(np.asarray(envelope, dtype=float))
        rho = np.outer(amp, amp).astype(complex)
        rho = apply_kernel(cls(grid, rho / np.sum(amp**2)), DecoherenceKernel.gaussian(coherence))
        return rho

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "PositionDensity":
        return PositionDensity(self.grid, self.matrix / self.trace())

    def check(self, tol: float = 1e-9) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > tol:
            raise ValueError("density matrix does not have unit trace")
        d = np.diag(m)
        if np.max(np.abs(d.imag)) > tol or np.min(d.real) < -tol:
            raise ValueError("diagonal is not real and nonnegative")


@dataclass(frozen=True)
class DecoherenceKernel:
    """Decoherence function of the separation ``s = x1 - x2``.

    ``gaussian``: ``exp(-(s / l_c)^2)``, so the 1/e width is ``l_c``
    (``l_c = inf`` is the identity). ``tabulated``: linear interpolation in
    ``|s|`` of samples starting at ``(0, 1)``, held constant past the last
    sample and conjugated for negative ``s``. Tabulated kernels need not be
    positive definite, in which case the output may not be a valid state.
    """

    form: Literal["gaussian", "tabulated"]
    l_c: float = math.inf
    s_samples: np.ndarray | None = field(default=None, compare=False)
    eta_samples: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.form == "gaussian":
            if not self.l_c > 0:
                raise ValueError("coherence length must be positive")
        elif self.form == "tabulated":
            s = np.asarray(self.s_samples, dtype=float)
            eta = np.asarray(self.eta_samples, dtype=complex)
            if s.ndim != 1 or s.shape != eta.shape or s.size < 2:
                raise ValueError("tabulated kernel needs matching 1-D samples")
            if s[0] != 0.0 or eta[0] != 1.0 or np.any(np.diff(s) <= 0):
                raise ValueError("tabulated kernel must start at (0, 1) with increasing separations")
            if np.max(np.abs(eta)) > 1 + 1e-12:
                raise ValueError("|eta| must not exceed 1")
            object.__setattr__(self, "s_samples", s)
            object.__setattr__(self, "eta_samples", eta)
        else:
            raise ValueError(f"unknown kernel form {self.form!r}")

    @classmethod
    def gaussian(cls, l_c: float) -> "DecoherenceKernel":
        return cls("gaussian", float(l_c))

    @classmethod
    def tabulated(cls, s, eta) -> "DecoherenceKernel":
        return cls("tabulated", s_samples=np.asarray(s), eta_samples=np.asarray(eta))

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.form == "gaussian":
            if math.isinf(self.l_c):
                return np.ones(s.shape, dtype=complex)
            return np.exp(-((s / self.l_c) ** 2)).astype(complex)
        a = np.abs(s)
        re = np.interp(a, self.s_samples, self.eta_samples.real)
        im = np.interp(a, self.s_samples, self.eta_samples.imag)
        return re + 1j * np.sign(s + 0.0) * im * (s != 0)


@dataclass(frozen=True)
class GratingSpec:
    period: float
    open_fraction: float
    slit_count: int
    offset: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not 0 < self.open_fraction <= 1:
            raise ValueError("open_fraction must lie in (0, 1]")
        if self.slit_count < 1:
            raise ValueError("need at least one slit")

    @property
    def centers(self) -> np.ndarray:
        k = np.arange(self.slit_count) - 0.5 * (self.slit_count - 1)
        return self.offset + k * self.period

    def windows(self, shift: float = 0.0) -> list[tuple[float, float]]:
        half = 0.5 * self.open_fraction * self.period
        return [(c + shift - half, c + shift + half) for c in self.centers]

    @property
    def span(self) -> tuple[float, float]:
        w = self.windows()
        return w[0][0], w[-1][1]

    def check_fits(self, grid: Grid, shift: float = 0.0) -> None:
        lo, hi = self.span
        if lo + shift - self.period < grid.x_min - 1e-12 or hi + shift + self.period > grid.x_max + 1e-12:
            raise ValueError("grating does not fit the grid with a one-period margin")

    def aperture(self, grid: Grid) -> np.ndarray:
        """Binary transmission of each grid cell (by cell centre)."""
        self.check_fits(grid)
        a = np.zeros(grid.n)
        for lo, hi in self.windows():
            a[grid.index_mask(lo, hi)] = 1.0
        return a

    def coverage(self, grid: Grid, shift: float = 0.0) -> np.ndarray:
        """Open fraction of each grid cell for the windows shifted by ``shift``."""
        edges = grid.x_min + np.arange(grid.n + 1) * grid.dx
        cov = np.zeros(grid.n)
        for lo, hi in self.windows(shift):
            cov += np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        return np.minimum(cov / grid.dx, 1.0)


@dataclass(frozen=True)
class EntropyTable:
    energies: np.ndarray
    entropies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        s = np.asarray(self.entropies, dtype=float)
        if e.shape != s.shape or e.ndim != 1:
            raise ValueError("energy and entropy columns must match")
        if e.size < 3:
            raise ValueError("entropy table needs at least 3 entries")
        if np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly increasing")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "entropies", s)

    @classmethod
    def from_csv(cls, path: str | Path) -> "EntropyTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"E", "S"}:
            raise ValueError("entropy CSV needs exactly the columns E,S")
        return cls([float(r["E"]) for r in rows], [float(r["S"]) for r in rows])


@dataclass(frozen=True)
class VisibilityResult:
    pattern: np.ndarray
    visibility: float
    i_max: float
    i_min: float
    flat: bool = False


@dataclass(frozen=True)
class CoherenceLength:
    value: float
    capped: bool = False
    floored: bool = False


@dataclass(frozen=True)
class LicensePolicy:
    kappa: float = 1.0
    license_inclusive_union: bool = False


# ---------------------------------------------------------------------------
# Transforms


def apply_aperture(rho: PositionDensity, aperture: np.ndarray) -> tuple[PositionDensity, float]:
    """``A(x1) rho A(x2)``, renormalized; returns the state and transmitted fraction."""
    a = np.asarray(aperture, dtype=float)
    out = rho.matrix * np.outer(a, a)
    frac = float(np.real(np.trace(out)))
    if frac < 1e-12:
        raise ZeroTransmission(f"transmitted fraction {frac:.3g} below 1e-12")
    return PositionDensity(rho.grid, out / frac), frac


def grating_transmit(rho: PositionDensity, grating: GratingSpec) -> tuple[PositionDensity, float]:
    return apply_aperture(rho, grating.aperture(rho.grid))


def transfer_function(grid: Grid, distance: float, wavelength: float) -> np.ndarray:
    f = np.fft.fftfreq(grid.n, grid.dx)
    return np.exp(-1j * math.pi * wavelength * distance * f * f)


def fresnel_propagate(rho: PositionDensity, distance: float, wavelength: float) -> PositionDensity:
    """Free paraxial propagation ``U rho U^dagger`` over ``distance`` (may be negative)."""
    if distance == 0:
        return rho
    dx = rho.grid.dx
    if dx * dx > wavelength * abs(distance) / 4:
        raise UnderResolved(
            f"dx^2 <= lambda*|L|/4 violated: dx^2 = {dx * dx:.6g} > {wavelength * abs(distance) / 4:.6g}"
        )
    h = transfer_function(rho.grid, distance, wavelength)[:, None]
    a = np.fft.ifft(h * np.fft.fft(rho.matrix, axis=0), axis=0)
    b = np.fft.ifft(h * np.fft.fft(a.conj().T, axis=0), axis=0).conj().T
    return PositionDensity(rho.grid, b)


def propagate_wavefunction(psi: np.ndarray, grid: Grid, distance: float, wavelength: float) -> np.ndarray:
    return np.fft.ifft(transfer_function(grid, distance, wavelength) * np.fft.fft(psi))


def apply_kernel(rho: PositionDensity, kernel: DecoherenceKernel) -> PositionDensity:
    x = rho.grid.x
    eta = kernel(x[:, None] - x[None, :])
    np.fill_diagonal(eta, 1.0)
    return PositionDensity(rho.grid, rho.matrix * eta)


# ---------------------------------------------------------------------------
# Observables


def _refine_extremum(x: np.ndarray, y: np.ndarray, i: int, lo: int, hi: int, kind: str) -> float:
    """Quartic through the five samples centred on index ``i``; returns the extreme value."""
    if i - lo < 2 or hi - 1 - i < 2:
        return float(y[i])
    xs = (x[i - 2 : i + 3] - x[i]) / (x[1] - x[0])
    coef = np.polyfit(xs, y[i - 2 : i + 3], 4)
    roots = np.roots(np.polyder(coef))
    roots = roots[np.isreal(roots)].real
    roots = roots[np.abs(roots) <= 1.0]
    cands = [float(y[i])] + [float(np.polyval(coef, r)) for r in roots]
    return max(cands) if kind == "max" else min(cands)


def intensity_and_visibility(rho: PositionDensity, window: tuple[float, float] | None = None) -> VisibilityResult:
    pattern = rho.diagonal
    grid = rho.grid
    if window is None:
        window = (grid.x_min, grid.x_max)
    xa, xb = window
    if xa < grid.x_min - 1e-12 or xb > grid.x_max + 1e-12 or not xb > xa:
        raise ValueError("visibility window must lie inside the grid")
    idx = np.flatnonzero(grid.index_mask(xa, xb))
    if idx.size < 3:
        raise ValueError("visibility window holds fewer than 3 samples")
    lo, hi = int(idx[0]), int(idx[-1]) + 1
    seg = pattern[lo:hi]
    i_max = _refine_extremum(grid.x, pattern, lo + int(np.argmax(seg)), lo, hi, "max")
    i_min = _refine_extremum(grid.x, pattern, lo + int(np.argmin(seg)), lo, hi, "min")
    i_min = max(i_min, 0.0)
    denom = i_max + i_min
    if denom <= 0 or i_max - i_min <= 1e-12 * abs(i_max):
        return VisibilityResult(pattern, 0.0, i_max, i_min, flat=True)
    return VisibilityResult(pattern, (i_max - i_min) / denom, i_max, i_min)


def mask_scan(rho: PositionDensity, mask: GratingSpec, offsets: Sequence[float]) -> np.ndarray:
    """Flux through the mask windows for each offset (wrapped into one period)."""
    diag = rho.diagonal
    mask.check_fits(rho.grid)
    out = np.empty(len(offsets))
    for k, off in enumerate(offsets):
        shift = float(np.mod(off, mask.period))
        if shift > 0.5 * mask.period:
            shift -= mask.period
        out[k] = float(np.dot(mask.coverage(rho.grid, shift), diag))
    return np.clip(out, 0.0, 1.0)


def coherence_envelope(rho: PositionDensity, support_floor: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Degree of coherence against separation.

    ``e(s) = sum_x |rho(x + s/2, x - s/2)| / sum_x sqrt(rho(x+s/2, x+s/2) rho(x-s/2, x-s/2))``,
    which is 1 for a pure state and ``|eta(s)|`` after a kernel acts on one.
    Separations whose overlapping support weighs less than ``support_floor``
    of the zero-separation weight are NaN.
    """
    m = np.abs(rho.matrix)
    amp = np.sqrt(np.clip(rho.diagonal, 0.0, None))
    n = rho.grid.n
    num = np.array([np.trace(m, offset=k) for k in range(n)])
    den = np.array([np.dot(amp[k:], amp[: n - k]) for k in range(n)])
    with np.errstate(invalid="ignore", divide="ignore"):
        env = np.where(den > support_floor * den[0], num / den, np.nan)
    return np.arange(n) * rho.grid.dx, env


def coherence_length(rho: PositionDensity) -> CoherenceLength:
    """Largest separation at which the coherence envelope is still >= 1/e.

    Linearly interpolated at that outermost crossing. Comb-like envelopes
    (periodic sources) therefore report the extent of the comb, not the width
    of its first tooth.
    """
    s, env = coherence_envelope(rho)
    valid = np.flatnonzero(~np.isnan(env))
    above = valid[env[valid] >= _E_INV]
    if valid.size < 2 or above.size == 0:
        return CoherenceLength(rho.grid.dx, floored=True)
    j = int(above[-1])
    after = valid[valid > j]
    if after.size == 0:
        return CoherenceLength(rho.grid.span, capped=True)
    if j == 0:
        return CoherenceLength(rho.grid.dx, floored=True)
    k = int(after[0])
    e0, e1 = env[j], env[k]
    frac = (e0 - _E_INV) / (e0 - e1)
    return CoherenceLength(float(s[j] + frac * (s[k] - s[j])))


def interval_probability(rho: PositionDensity, interval: tuple[float, float]) -> float:
    return float(np.sum(rho.diagonal[rho.grid.index_mask(*interval)]))


def _check_interval(grid: Grid, interval: tuple[float, float]) -> None:
    a, b = interval
    if not b > a or a < grid.x_min - 1e-12 or b > grid.x_max + 1e-12:
        raise ValueError(f"interval {interval} must be nonempty and inside the grid")


def license_position_claim(
    rho: PositionDensity, interval: tuple[float, float], policy: LicensePolicy = LicensePolicy()
) -> GateVerdict:
    """``x in interval`` is licensed iff coherence length <= kappa * |interval|.

    ``content`` is ``min(1, kappa |interval| / coherence length)`` against a threshold of 1.
    """
    _check_interval(rho.grid, interval)
    ell = coherence_length(rho).value
    width = interval[1] - interval[0]
    score = float(min(1.0, policy.kappa * width / ell))
    if ell <= policy.kappa * width:
        return GateVerdict("licensed", 1.0, 1.0, interval_probability(rho, interval))
    return GateVerdict("refused", score, 1.0)


def license_disjunction(
    rho: PositionDensity,
    intervals: Sequence[tuple[float, float]],
    exclusive: bool = True,
    policy: LicensePolicy = LicensePolicy(),
) -> GateVerdict:
    """Disjunction of ``x in interval_i`` over disjoint windows.

    An exclusive disjunction (exactly one holds) is licensed only when every
    disjunct is. An inclusive one is licensed the same way unless
    ``policy.license_inclusive_union`` is set.
    """
    if not intervals:
        raise ValueError("disjunction needs at least one interval")
    verdicts = [license_position_claim(rho, iv, policy) for iv in intervals]
    p = math.fsum(interval_probability(rho, iv) for iv in intervals)
    if all(v.licensed for v in verdicts) or (not exclusive and policy.license_inclusive_union):
        return GateVerdict("licensed", 1.0, 1.0, p)
    return GateVerdict("refused", float(min(v.content for v in verdicts)), 1.0)


# ---------------------------------------------------------------------------
# Thermodynamics


def microcanonical_temperature(table: EntropyTable, energy: float) -> float:
    """``T* = 1 / (dS/dE)`` from the three-point unequal-spacing derivative at ``energy``."""
    e, s = table.energies, table.entropies
    if not e[0] < energy < e[-1]:
        raise OutOfRange(f"E = {energy} outside the open table range ({e[0]}, {e[-1]})")
    i = int(np.searchsorted(e, energy))
    # centre node: an exact interior match, else the nearer bracketing node
    if e[i] != energy and i > 0 and abs(energy - e[i - 1]) < abs(e[i] - energy):
        i -= 1
    i = min(max(i, 1), len(e) - 2)
    x0, x1, x2 = e[i - 1], e[i], e[i + 1]
    y0, y1, y2 = s[i - 1], s[i], s[i + 1]
    x = energy
    # derivative of the Lagrange quadratic through the three nodes
    slope = (
        y0 * (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
    )
    if slope <= 0:
        raise NonpositiveSlope(f"dS/dE = {slope:.6g} <= 0 at E = {energy}")
    return 1.0 / slope


# ---------------------------------------------------------------------------
# Reference two-grating configuration


@dataclass(frozen=True)
class TalbotLauConfig:
    """Toy Talbot-Lau geometry in units of the grating period.

    A spatially incoherent source (coherence ``source_coherence``) illuminates
    grating 1; after ``talbot_multiple * d^2 / lambda`` the beam meets grating 2,
    and the same distance again brings it to the scanning-mask plane. The
    decoherence kernel acts on the state arriving at grating 2.
    """

    period: float = 1.0
    open_fraction: float = 0.3
    slit_count: int = 16
    points_per_period: int = 32
    grid_periods: int = 32
    wavelength: float = 1.0
    talbot_multiple: float = 1.0
    source_coherence: float = 0.05
    window_periods: int = 4

    @property
    def grid(self) -> Grid:
        half = 0.5 * self.grid_periods * self.period
        return Grid(-half, half, self.grid_periods * self.points_per_period)

    @property
    def distance(self) -> float:
        return self.talbot_multiple * self.period**2 / self.wavelength

    def grating(self, offset: float = 0.0) -> GratingSpec:
        return GratingSpec(self.period, self.open_fraction, self.slit_count, offset)

    @property
    def window(self) -> tuple[float, float]:
        half = 0.5 * self.window_periods * self.period
        return (-half, half)


def run_pipeline(
    grid: Grid,
    wavelength: float,
    source_coherence: float,
    gratings: Sequence[GratingSpec],
    distances: Sequence[float],
    kernel: DecoherenceKernel | None = None,
    kernel_before: int = 1,
) -> dict[str, PositionDensity]:
    """Source, then for each grating: (kernel if ``i == kernel_before``), transmit, propagate.

    Stage keys are ``source``, ``at_g{i}``, ``after_g{i}`` (1-based) and
    ``at_mask`` for the final state.
    """
    if len(distances) != len(gratings):
        raise ValueError("need one propagation distance per grating")
    if kernel is not None and not 0 <= kernel_before <= len(gratings):
        raise ValueError("kernel_before must index a grating plane or the final plane")
    rho = PositionDensity.partially_coherent(grid, source_coherence)
    stages = {"source": rho}
    for i, (grating, dist) in enumerate(zip(gratings, distances)):
        if i > 0:
            stages[f"at_g{i + 1}"] = rho
        if kernel is not None and i == kernel_before:
            rho = apply_kernel(rho, kernel)
            stages[f"at_g{i + 1}"] = rho
        rho, _ = grating_transmit(rho, grating)
        stages[f"after_g{i + 1}"] = rho
        rho = fresnel_propagate(rho, dist, wavelength)
    if kernel is not None and kernel_before == len(gratings):
        rho = apply_kernel(rho, kernel)
    stages["at_mask"] = rho
    return stages


def run_talbot_lau(config: TalbotLauConfig, kernel: DecoherenceKernel | None = None) -> dict[str, PositionDensity]:
    """States at each stage of the reference setup, keyed by stage name."""
    return run_pipeline(
        config.grid,
        config.wavelength,
        config.source_coherence,
        [config.grating(), config.grating()],
        [config.distance, config.distance],
        kernel,
        kernel_before=1,
    )
