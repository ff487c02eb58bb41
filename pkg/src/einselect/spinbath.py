"""Closed-form quantities of the central-qubit / spin-bath model.

A system qubit couples to ``N`` bath qubits through ``sigma_z (x) sum_k g_k
sigma_z^k`` with vanishing self-Hamiltonians (hbar = 1). Because the
interaction is diagonal in the product z-basis, everything of interest has a
closed form:

* branch environment states are products of per-qubit phase rotations,
  ``alpha_k exp(+i g_k t)``, ``beta_k exp(-i g_k t)`` for the system-up branch
  and the time-reversed phases for system-down;
* the decoherence factor is ``r(t) = prod_k [cos 2 g_k t + i D_k sin 2 g_k t]``
  with population imbalance ``D_k = |alpha_k|^2 - |beta_k|^2``;
* the reduced system state keeps its populations and has its coherence
  multiplied by ``r(t)``.

Bath states are always stored factorized (an ``(N, 2)`` array). The dense
``2**N`` expansion lives only in :mod:`einselect.oracle`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Literal, Sequence

import numpy as np

NORM_TOL = 1e-12
TWO_PI = 2.0 * math.pi

Branch = Literal["up", "down"]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _check_normalized(u: complex, v: complex, what: str) -> None:
    norm = abs(u) ** 2 + abs(v) ** 2
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{what} not normalized: |u|^2 + |v|^2 = {norm!r}")


@dataclass(frozen=True)
class QubitAmplitudes:
    """System qubit state ``a|up> + b|down>``."""

    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        _check_normalized(self.a, self.b, "system amplitudes")

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "QubitAmplitudes":
        return cls(
            math.cos(theta / 2) * np.exp(-0.5j * phi),
            math.sin(theta / 2) * np.exp(0.5j * phi),
        )

    @property
    def theta(self) -> float:
        return 2.0 * math.atan2(abs(self.b), abs(self.a))

    @property
    def phi(self) -> float:
        if abs(self.a) == 0.0 or abs(self.b) == 0.0:
            return 0.0
        return (np.angle(self.b) - np.angle(self.a)) % TWO_PI

    @property
    def c(self) -> complex:
        """Amplitude on the first x-basis state, ``(a + b)/sqrt 2``."""
        return (self.a + self.b) / math.sqrt(2.0)

    @property
    def d(self) -> complex:
        return (self.a - self.b) / math.sqrt(2.0)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    def direction(self) -> "Direction":
        """Bloch direction for which this state is the +1/2 eigenvector."""
        return Direction(self.theta, self.phi)


@dataclass(frozen=True)
class EnvQubitSpec:
    alpha: complex
    beta: complex
    g: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "g", float(self.g))
        _check_normalized(self.alpha, self.beta, "bath qubit amplitudes")

    @property
    def delta(self) -> float:
        """Population imbalance ``|alpha|^2 - |beta|^2``."""
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2


class EnvironmentSpec:
    """Ordered product-state bath of ``N >= 1`` qubits.

    Stored as arrays (``alpha``, ``beta``, ``g``) so that baths of 10**6 qubits
    stay cheap; :attr:`qubits` gives the per-qubit view.
    """

    __slots__ = ("_amps", "_g")

    def __init__(self, qubits: Iterable[EnvQubitSpec]):
        qubits = tuple(qubits)
        self._set(
            np.array([[q.alpha, q.beta] for q in qubits], dtype=complex).reshape(-1, 2),
            np.array([q.g for q in qubits], dtype=float),
        )

    def _set(self, amps: np.ndarray, g: np.ndarray) -> None:
        if amps.shape[0] < 1:
            raise ValueError("environment needs at least one qubit")
        if g.shape != (amps.shape[0],):
            raise ValueError("one coupling per bath qubit required")
        norms = np.sum(np.abs(amps) ** 2, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise ValueError(f"bath qubit {int(bad[0])} not normalized: {norms[bad[0]]!r}")
        if not np.all(np.isfinite(g)):
            raise ValueError("couplings must be finite")
        amps.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "_amps", amps)
        object.__setattr__(self, "_g", g)

    @classmethod
    def from_arrays(cls, alpha, beta, g) -> "EnvironmentSpec":
        obj = cls.__new__(cls)
        amps = np.stack([np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex)], axis=1)
        obj._set(amps, np.array(g, dtype=float).reshape(-1))
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("EnvironmentSpec is immutable")

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnvironmentSpec):
            return NotImplemented
        return np.array_equal(self._amps, other._amps) and np.array_equal(self._g, other._g)

    def __hash__(self) -> int:
        return hash((self._amps.tobytes(), self._g.tobytes()))

    def __repr__(self) -> str:
        return f"EnvironmentSpec(N={self.N})"

    def __len__(self) -> int:
        return self._amps.shape[0]

    @property
    def N(self) -> int:
        return self._amps.shape[0]

    @property
    def qubits(self) -> tuple[EnvQubitSpec, ...]:
        return tuple(EnvQubitSpec(a, b, g) for (a, b), g in zip(self._amps, self._g))

    @property
    def amplitudes(self) -> np.ndarray:
        """``(N, 2)`` array of ``(alpha_k, beta_k)``."""
        return self._amps

    @property
    def couplings(self) -> np.ndarray:
        return self._g

    @property
    def deltas(self) -> np.ndarray:
        p = np.abs(self._amps) ** 2
        return p[:, 0] - p[:, 1]

    @property
    def mean_coupling(self) -> float:
        return float(np.mean(np.abs(self._g)))

    def subset(self, indices: Sequence[int]) -> "EnvironmentSpec":
        idx = np.asarray(indices, dtype=int)
        return EnvironmentSpec.from_arrays(self._amps[idx, 0], self._amps[idx, 1], self._g[idx])


@dataclass(frozen=True)
class ModelSpec:
    system: QubitAmplitudes
    env: EnvironmentSpec

    @property
    def N(self) -> int:
        return self.env.N


@dataclass(frozen=True)
class Direction:
    """Bloch direction by polar angle ``psi`` and azimuth ``chi``."""

    psi: float
    chi: float = 0.0

    def __post_init__(self):
        psi, chi = float(self.psi), float(self.chi)
        if not (0.0 <= psi <= math.pi + 1e-12):
            raise ValueError(f"polar angle {psi} outside [0, pi]")
        object.__setattr__(self, "psi", min(psi, math.pi))
        object.__setattr__(self, "chi", chi % TWO_PI)

    @property
    def bloch_vector(self) -> np.ndarray:
        s = math.sin(self.psi)
        return np.array([s * math.cos(self.chi), s * math.sin(self.chi), math.cos(self.psi)])

    def eigenvectors(self) -> tuple[np.ndarray, np.ndarray]:
        """``(|+n>, |-n>)`` in the z-basis, phase convention of ``from_bloch``."""
        c, s = math.cos(self.psi / 2), math.sin(self.psi / 2)
        em, ep = np.exp(-0.5j * self.chi), np.exp(0.5j * self.chi)
        return np.array([c * em, s * ep]), np.array([-s * em, c * ep])


Z_AXIS = Direction(0.0, 0.0)
X_AXIS = Direction(math.pi / 2, 0.0)
Y_AXIS = Direction(math.pi / 2, math.pi / 2)


@dataclass(frozen=True)
class BranchEnvState:
    """Factorized bath state; row ``k`` holds (up, down) amplitudes of qubit k."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[1] != 2:
            raise ValueError("branch state must be an (N, 2) array")
        norms = np.sum(np.abs(amps) ** 2, axis=1)
        if np.max(np.abs(norms - 1.0)) > NORM_TOL:
            raise ValueError("branch state has an unnormalized factor")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def inner(self, other: "BranchEnvState") -> complex:
        """``<self|other>`` as a product of per-qubit brackets."""
        per_qubit = np.sum(np.conj(self.amplitudes) * other.amplitudes, axis=1)
        return complex(np.prod(per_qubit))

    def dense(self) -> np.ndarray:
        """Expand to ``2**N`` amplitudes (first bath qubit is the most significant bit)."""
        out = np.ones(1, dtype=complex)
        for row in self.amplitudes:
            out = np.kron(out, row)
        return out


@dataclass(frozen=True)
class DecoherenceFactor:
    """``r = exp(log_magnitude + i*phase)``; ``log_magnitude`` may be ``-inf``."""

    log_magnitude: float
    phase: float

    @property
    def magnitude(self) -> float:
        return math.exp(self.log_magnitude)

    @property
    def value(self) -> complex:
        if self.log_magnitude == -math.inf:
            return 0j
        return complex(math.exp(self.log_magnitude) * np.exp(1j * self.phase))

    def __complex__(self) -> complex:
        return self.value

    def __abs__(self) -> float:
        return self.magnitude


@dataclass(frozen=True)
class ReducedState:
    """2x2 density matrix of the system in the {up, down} basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("reduced state must be 2x2")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def check(self, tol: float = 1e-12) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("reduced state is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise ValueError("reduced state does not have unit trace")
        if np.min(np.linalg.eigvalsh(m)) < -tol:
            raise ValueError("reduced state has a negative eigenvalue")

    @property
    def coherence(self) -> complex:
        return complex(self.matrix[0, 1])

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @property
    def bloch_vector(self) -> np.ndarray:
        m = self.matrix
        return np.array([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real])


# ---------------------------------------------------------------------------
# Generators


def haar_qubit_states(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` Haar-random single-qubit states as an ``(n, 2)`` complex array."""
    z = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def equatorial_qubit_states(rng: np.random.Generator, n: int) -> np.ndarray:
    """States with zero population imbalance and uniform relative phase."""
    phases = rng.uniform(0.0, TWO_PI, n)
    return np.stack([np.full(n, 1 / math.sqrt(2)), np.exp(1j * phases) / math.sqrt(2)], axis=1)


STATE_SAMPLERS: dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "haar": haar_qubit_states,
    "equatorial": equatorial_qubit_states,
}


def env_random(
    n: int,
    seed: int,
    g_low: float = 0.5,
    g_high: float = 1.5,
    *,
    states: str = "haar",
    coupling_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
) -> EnvironmentSpec:
    """Seeded random bath.

    Couplings are uniform on ``[g_low, g_high]`` unless ``coupling_sampler`` is
    given; bath qubit states are Haar-random by default (``states="equatorial"``
    pins every population imbalance to zero).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not g_low < g_high:
        raise ValueError(f"invalid coupling range [{g_low}, {g_high}]")
    if states not in STATE_SAMPLERS:
        raise ValueError(f"unknown state distribution {states!r}")
    rng = np.random.default_rng(seed)
    amps = STATE_SAMPLERS[states](rng, n)
    if coupling_sampler is None:
        g = rng.uniform(g_low, g_high, n)
    else:
        g = np.asarray(coupling_sampler(rng, n), dtype=float)
    return EnvironmentSpec.from_arrays(amps[:, 0], amps[:, 1], g)


# ---------------------------------------------------------------------------
# Closed forms


def _factor_logs(g: np.ndarray, delta: np.ndarray, t) -> tuple[np.ndarray, np.ndarray]:
    """Per-factor log-magnitude and phase of ``cos 2gt + i D sin 2gt``.

    ``t`` broadcasts against the qubit axis (last axis).
    """
    theta = 2.0 * g * t
    s = np.sin(theta)
    c = np.cos(theta)
    with np.errstate(divide="ignore"):
        # |f|^2 = 1 - (1 - D^2) sin^2, accurate near 1
        logmag = 0.5 * np.log1p(-(1.0 - delta * delta) * s * s)
    phase = np.arctan2(delta * s, c)
    return logmag, phase


def decoherence_factor(env: EnvironmentSpec, t: float) -> DecoherenceFactor:
    """Exact ``r(t)`` accumulated in log-magnitude / phase form.

    Uses exactly rounded summation so that million-qubit baths keep both the
    magnitude (far below the double range) and the phase.
    """
    logmag, phase = _factor_logs(env.couplings, env.deltas, float(t))
    if np.any(np.isneginf(logmag)):
        total = -math.inf
    else:
        total = math.fsum(logmag.tolist())
    return DecoherenceFactor(total, math.remainder(math.fsum(phase.tolist()), TWO_PI))


def decoherence_series(
    env: EnvironmentSpec, times: Sequence[float], chunk_elems: int = 1 << 22
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(log|r|, arg r)`` over a time grid.

    Pairwise summation instead of ``fsum``; agrees with
    :func:`decoherence_factor` to rounding for moderate ``N``.
    """
    times = np.asarray(times, dtype=float)
    g, delta = env.couplings, env.deltas
    logmag = np.empty(times.shape)
    phase = np.empty(times.shape)
    step = max(1, chunk_elems // max(1, len(g)))
    for lo in range(0, times.size, step):
        tt = times[lo : lo + step, None]
        lm, ph = _factor_logs(g, delta, tt)
        logmag[lo : lo + step] = lm.sum(axis=1)
        phase[lo : lo + step] = np.remainder(ph.sum(axis=1) + math.pi, TWO_PI) - math.pi
    return logmag, phase


def branch_env_state(env: EnvironmentSpec, branch: Branch, t: float) -> BranchEnvState:
    """Bath state correlated with system up (``"up"``) or down (``"down"``)."""
    if branch == "up":
        sign = 1.0
    elif branch == "down":
        sign = -1.0
    else:
        raise ValueError(f"branch must be 'up' or 'down', got {branch!r}")
    rot = np.exp(1j * sign * env.couplings * t)
    amps = env.amplitudes * np.stack([rot, np.conj(rot)], axis=1)
    return BranchEnvState(amps)


def reduced_state(model: ModelSpec, t: float) -> ReducedState:
    a, b = model.system.a, model.system.b
    r = decoherence_factor(model.env, t).value
    off = a * np.conj(b) * r
    return ReducedState(np.array([[abs(a) ** 2, off], [np.conj(off), abs(b) ** 2]]))


def direction_operator(direction: Direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin component ``(1/2) n.sigma`` along ``direction``.

    Returns ``(matrix, eigenvalues, eigenvectors)``; eigenvalues are exactly
    ``(+1/2, -1/2)`` and the columns of ``eigenvectors`` match them.
    """
    nx, ny, nz = direction.bloch_vector
    op = 0.5 * (nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z)
    plus, minus = direction.eigenvectors()
    return op, np.array([0.5, -0.5]), np.stack([plus, minus], axis=1)


# ---------------------------------------------------------------------------
# JSON


def _cx(pair: Sequence[float]) -> complex:
    if len(pair) != 2:
        raise ValueError(f"complex value must be [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def env_from_dict(doc: dict[str, Any], seed: int | None = None) -> EnvironmentSpec:
    if "random_env" in doc:
        gen = doc["random_env"]
        lo, hi = gen.get("g_range", [0.5, 1.5])
        return env_random(
            int(gen["n"]),
            int(gen["seed"] if seed is None else seed),
            float(lo),
            float(hi),
            states=gen.get("states", "haar"),
        )
    return EnvironmentSpec(
        tuple(EnvQubitSpec(_cx(q["alpha"]), _cx(q["beta"]), float(q["g"])) for q in doc["qubits"])
    )


def model_from_dict(doc: dict[str, Any], seed: int | None = None) -> ModelSpec:
    """Load a model document; ``seed`` overrides a ``random_env`` generator seed."""
    sys_doc = doc["system"]
    system = QubitAmplitudes(_cx(sys_doc["a"]), _cx(sys_doc["b"]))
    env_doc = doc["env"] if "env" in doc else {"random_env": doc["random_env"]}
    return ModelSpec(system, env_from_dict(env_doc, seed))


def model_to_dict(model: ModelSpec) -> dict[str, Any]:
    return {
        "system": {"a": _pair(model.system.a), "b": _pair(model.system.b)},
        "env": {
            "qubits": [
                {"alpha": _pair(q.alpha), "beta": _pair(q.beta), "g": q.g} for q in model.env.qubits
            ]
        },
    }


def dumps_model(model: ModelSpec) -> str:
    return json.dumps(model_to_dict(model))


def loads_model(text: str, seed: int | None = None) -> ModelSpec:
    return model_from_dict(json.loads(text), seed)


def equal_coupling_env(states: Iterable[tuple[complex, complex]], g: float) -> EnvironmentSpec:
    return EnvironmentSpec(tuple(EnvQubitSpec(a, b, g) for a, b in states))
