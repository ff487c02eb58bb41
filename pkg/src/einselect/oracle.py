"""Brute-force ground truth for the spin-bath model.

The joint Hamiltonian is diagonal in the product z-basis, so exact evolution of
the full ``2**(N+1)`` state vector is a phase per basis index. Nothing here
reuses the closed forms of :mod:`einselect.spinbath`; that independence is the
point of the module.

Basis ordering: index ``i`` of the joint vector encodes the system bit as the
most significant bit followed by bath qubits ``1..N``; bit value 0 means spin
up (``s = +1``).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BathTooLarge
from .spinbath import Direction, ModelSpec, QubitAmplitudes, ReducedState

MAX_DENSE_ENV = 24
_MAGIC = b"QJS1"


@dataclass(frozen=True)
class JointState:
    amplitudes: np.ndarray
    n_env: int

    def __post_init__(self):
        if self.n_env > MAX_DENSE_ENV:
            raise BathTooLarge(f"dense joint state needs N <= {MAX_DENSE_ENV}, got N = {self.n_env}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** (self.n_env + 1),):
            raise ValueError("amplitude vector length must be 2**(n_env + 1)")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
            raise ValueError("joint state is not normalized")
        object.__setattr__(self, "amplitudes", amps)

    def sectors(self) -> np.ndarray:
        """``(2, 2**N)`` view: row 0 is the system-up sector, row 1 system-down."""
        return self.amplitudes.reshape(2, -1)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


def _guard(n: int) -> None:
    if n > MAX_DENSE_ENV:
        raise BathTooLarge(
            f"dense evolution is capped at N <= {MAX_DENSE_ENV} bath qubits (got N = {n}); "
            "use the factorized routines for larger baths"
        )


def spin_signs(n: int) -> np.ndarray:
    """``(2**n, n)`` array of ``s_k = +-1`` for every bath basis index."""
    idx = np.arange(2**n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return 1 - 2 * bits


def coupling_sums(g: np.ndarray) -> np.ndarray:
    """``sum_k g_k s_k`` for every bath basis index.

    Built bit by bit with a running compensation term (Kahan), so each entry
    carries the rounding of an exactly summed result.
    """
    total = np.zeros(1)
    comp = np.zeros(1)
    for gk in g:
        y_plus = gk - comp
        y_minus = -gk - comp
        t_plus = total + y_plus
        t_minus = total + y_minus
        c_plus = (t_plus - total) - y_plus
        c_minus = (t_minus - total) - y_minus
        total = np.stack([t_plus, t_minus], axis=1).reshape(-1)
        comp = np.stack([c_plus, c_minus], axis=1).reshape(-1)
    return total


def product_state(system: np.ndarray, env_amps: np.ndarray) -> np.ndarray:
    out = np.asarray(system, dtype=complex)
    for row in env_amps:
        out = np.kron(out, row)
    return out


def evolve_full(model: ModelSpec, t: float, system: QubitAmplitudes | np.ndarray | None = None) -> JointState:
    """Joint state at ``t``: initial product amplitude times ``exp(i s_A t sum_k g_k s_k)``.

    ``system`` replaces the model's system amplitudes (used for counterfactual
    preparations).
    """
    n = model.env.N
    _guard(n)
    sys_vec = model.system.vector if system is None else np.asarray(
        system.vector if isinstance(system, QubitAmplitudes) else system, dtype=complex
    )
    psi0 = product_state(sys_vec, model.env.amplitudes)
    sums = coupling_sums(model.env.couplings)
    phase = np.concatenate([sums, -sums]) * t
    return JointState(psi0 * np.exp(1j * phase), n)


def partial_trace_system(joint: JointState) -> ReducedState:
    sec = joint.sectors()
    return ReducedState(sec @ sec.conj().T)


def env_density(joint: JointState) -> np.ndarray:
    """Dense ``rho_E`` obtained by tracing out the system."""
    sec = joint.sectors()
    return sec.T @ sec.conj()


def env_expectation(model: ModelSpec, t: float, ops: Sequence[np.ndarray]) -> complex:
    """``Tr[rho_E(t) (x)_k W_k]`` in O(N), valid for any bath size.

    ``rho_E(t) = |a|^2 |E_up><E_up| + |b|^2 |E_down><E_down|`` with both branch
    states products, so each term is a product of single-qubit brackets.
    """
    env = model.env
    ops = np.asarray(ops, dtype=complex)
    if ops.shape != (env.N, 2, 2):
        raise ValueError(f"need {env.N} single-qubit operators, got shape {ops.shape}")
    rot = np.exp(1j * env.couplings * t)
    total = 0j
    for weight, sign in ((abs(model.system.a) ** 2, 1), (abs(model.system.b) ** 2, -1)):
        if weight == 0.0:
            continue
        ph = rot if sign > 0 else np.conj(rot)
        v = env.amplitudes * np.stack([ph, np.conj(ph)], axis=1)
        brackets = np.einsum("ki,kij,kj->k", v.conj(), ops, v)
        total += weight * _log_product(brackets)
    return complex(total)


def _log_product(z: np.ndarray) -> complex:
    if np.any(z == 0):
        return 0j
    logmag = math.fsum(np.log(np.abs(z)).tolist())
    phase = math.fsum(np.angle(z).tolist())
    return complex(math.exp(logmag) * np.exp(1j * phase))


def dense_env_expectation(model: ModelSpec, t: float, ops: Sequence[np.ndarray]) -> complex:
    rho_e = env_density(evolve_full(model, t))
    big = np.ones((1, 1), dtype=complex)
    for w in ops:
        big = np.kron(big, np.asarray(w, dtype=complex))
    return complex(np.trace(rho_e @ big))


def lag_phase_ops(model: ModelSpec, eps: float) -> np.ndarray:
    """Per-qubit ``diag(exp(2 i g eps), exp(-2 i g eps))``.

    Their bath expectation is the coherence multiplier picked up by the system
    over an extra evolution time ``eps``.
    """
    w = np.exp(2j * model.env.couplings * eps)
    ops = np.zeros((model.env.N, 2, 2), dtype=complex)
    ops[:, 0, 0] = w
    ops[:, 1, 1] = np.conj(w)
    return ops


# ---------------------------------------------------------------------------
# Dense reference versions of the content-engine scores


def dense_record_distinguishability(model: ModelSpec, n: Direction, t: float) -> float:
    plus, minus = n.eigenvectors()
    prep = (plus + minus) / math.sqrt(2.0)
    sec = evolve_full(model, t, system=prep).sectors()
    f_plus = plus.conj() @ sec
    f_minus = minus.conj() @ sec
    w_plus, w_minus = np.vdot(f_plus, f_plus).real, np.vdot(f_minus, f_minus).real
    if w_plus < 1e-12 or w_minus < 1e-12:
        return 0.0
    return 1.0 - abs(np.vdot(f_plus, f_minus)) / math.sqrt(w_plus * w_minus)


def dense_agreement_probability(model: ModelSpec, n: Direction, t: float, eps: float) -> float:
    """Probability that an ``S_n`` record at ``t`` is repeated at ``t + eps``.

    Full density-matrix route: ``|+n><+n| (x) rho_E(t)`` evolved for ``eps``
    with the dense diagonal unitary, then traced over the bath.
    """
    _guard(model.env.N)
    rho_e = env_density(evolve_full(model, t))
    plus, _ = n.eigenvectors()
    joint = np.kron(np.outer(plus, plus.conj()), rho_e)
    sums = coupling_sums(model.env.couplings)
    u = np.exp(1j * np.concatenate([sums, -sums]) * eps)
    joint = joint * np.outer(u, u.conj())
    dim = rho_e.shape[0]
    rho_a = np.einsum("iaja->ij", joint.reshape(2, dim, 2, dim))
    return float(np.real(plus.conj() @ rho_a @ plus))


# ---------------------------------------------------------------------------
# Binary dump (debugging aid)


def dump_joint_state(joint: JointState, path: str | Path) -> None:
    """Write a 16-byte header (``QJS1``, u32 n_env, 8 reserved) then little-endian complex128."""
    header = _MAGIC + struct.pack("<I", joint.n_env) + bytes(8)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(joint.amplitudes.astype("<c16").tobytes())


def load_joint_state(path: str | Path) -> JointState:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError("not a QJS1 file")
    (n_env,) = struct.unpack("<I", raw[4:8])
    amps = np.frombuffer(raw[16:], dtype="<c16").astype(complex)
    return JointState(amps, n_env)
