"""Empirical content of spin magnitude claims and Born-rule gating.

A magnitude claim asserts that the spin component along a direction ``n``
takes a value in a subset of ``{+1/2, -1/2}`` (or is the trivial identity
claim). Its content score is the product of two factors, each in ``[0, 1]``:

record score ``R``
    Prepare the system in ``(|+n> + |-n>)/sqrt 2`` with the model's bath,
    evolve to ``t`` and split the joint state along the ``+-n`` basis. ``R`` is
    one minus the normalized overlap of the two bath branches: how well the
    bath has recorded ``S_n``.

stability score ``S``
    With the system prepared in ``|+n>`` and the bath in its reduced state at
    ``t``, ``P(eps)`` is the probability that an ``S_n`` record made at ``t`` is
    repeated at ``t + eps``. ``S = clip(2 min_eps P(eps) - 1, 0, 1)`` over a
    lag grid.

Both factors reduce to functions of the decoherence factor, so they are O(N)
for any bath size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Literal

import numpy as np

from . import oracle
from .errors import DegenerateState
from .spinbath import (
    X_AXIS,
    Z_AXIS,
    Direction,
    ModelSpec,
    QubitAmplitudes,
    ReducedState,
    decoherence_factor,
    direction_operator,
    reduced_state,
)

PLUS, MINUS = 0.5, -0.5
DEFAULT_THRESHOLD = 0.9
DEGENERATE_GAP = 1e-10
_WEIGHT_FLOOR = 1e-12

_SYMBOL = {"+": PLUS, "-": MINUS}
_TEXT = {PLUS: "+", MINUS: "-"}


@dataclass(frozen=True)
class MagnitudeClaim:
    kind: Literal["identity", "spin"]
    direction: Direction | None = None
    values: frozenset[float] = frozenset()
    label: str | None = None

    def __post_init__(self):
        vals = frozenset(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.kind == "identity":
            if self.direction is not None:
                raise ValueError("identity claims carry no direction")
        elif self.kind == "spin":
            if self.direction is None:
                raise ValueError("spin claims need a direction")
            if not vals or not vals <= {PLUS, MINUS}:
                raise ValueError(f"spin claim values must be a nonempty subset of {{+1/2, -1/2}}, got {sorted(vals)}")
        else:
            raise ValueError(f"unknown claim kind {self.kind!r}")

    @classmethod
    def identity(cls, label: str | None = "A") -> "MagnitudeClaim":
        return cls("identity", label=label)

    @classmethod
    def spin(cls, direction: Direction, values: Iterable[float] = (PLUS, MINUS), label: str | None = None) -> "MagnitudeClaim":
        return cls("spin", direction, frozenset(values), label)

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def complement(self) -> "MagnitudeClaim":
        rest = frozenset({PLUS, MINUS}) - self.values
        if self.is_identity or not rest:
            raise ValueError("claim has no nonempty complement")
        return MagnitudeClaim.spin(self.direction, rest)

    def relabeled(self) -> "MagnitudeClaim":
        """Same claim about the antipodal axis, value labels swapped."""
        d = self.direction
        flipped = Direction(math.pi - d.psi, d.chi + math.pi)
        return MagnitudeClaim.spin(flipped, {-v for v in self.values}, self.label)

    def to_dict(self) -> dict[str, Any]:
        if self.is_identity:
            return {"kind": "identity", "label": self.label}
        return {
            "kind": "spin",
            "psi": self.direction.psi,
            "chi": self.direction.chi,
            "values": [_TEXT[v] for v in sorted(self.values, reverse=True)],
            "label": self.label,
        }


@dataclass(frozen=True)
class ContentReport:
    record_score: float
    stability_score: float
    content: float
    window: float
    lag_samples: int
    vacuous: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "R": self.record_score,
            "S": self.stability_score,
            "content": self.content,
            "window": self.window,
            "lag_samples": self.lag_samples,
            "vacuous": self.vacuous,
        }


@dataclass(frozen=True)
class GateVerdict:
    verdict: Literal["licensed", "refused", "vacuous"]
    content: float
    threshold: float | None = None
    probability: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.verdict == "licensed" and self.threshold is not None and self.content < self.threshold:
            raise ValueError("licensed verdict below threshold")

    @property
    def licensed(self) -> bool:
        return self.verdict == "licensed"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"verdict": self.verdict, "content": self.content, "threshold": self.threshold}
        if self.probability is not None:
            out["probability"] = self.probability
        if self.label is not None:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class PointerBasisResult:
    direction: Direction
    eigenvalues: tuple[float, float]
    gap: float
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return u @ np.diag(self.eigenvalues) @ u.conj().T


# ---------------------------------------------------------------------------


def pointer_basis(rho: ReducedState) -> PointerBasisResult:
    """Eigenbasis of the reduced state; direction is the Bloch axis of the larger eigenvalue."""
    m = rho.matrix
    w, v = np.linalg.eigh(m)
    gap = float(w[1] - w[0])
    if gap < DEGENERATE_GAP:
        raise DegenerateState(f"eigenvalue gap {gap:.3g} < {DEGENERATE_GAP:g}: pointer basis undefined")
    bx, by, bz = rho.bloch_vector
    norm = math.sqrt(bx * bx + by * by + bz * bz)
    psi = math.acos(max(-1.0, min(1.0, bz / norm)))
    chi = math.atan2(by, bx) if math.hypot(bx, by) > 0 else 0.0
    return PointerBasisResult(
        Direction(psi, chi), (float(w[1]), float(w[0])), gap, v[:, ::-1].copy()
    )


def _record_from_r(n: Direction, r: complex) -> float:
    """``R`` for direction ``n`` given the decoherence factor ``r = <E_down|E_up>``."""
    plus, minus = n.eigenvectors()
    prep = (plus + minus) / math.sqrt(2.0)
    # F_pm = p_u |E_up> + p_d |E_down> with coefficients <pm n|z> z-amplitude
    cu_p, cd_p = np.conj(plus[0]) * prep[0], np.conj(plus[1]) * prep[1]
    cu_m, cd_m = np.conj(minus[0]) * prep[0], np.conj(minus[1]) * prep[1]
    # <E_up|E_down> = conj(r)
    w_p = abs(cu_p) ** 2 + abs(cd_p) ** 2 + 2 * (np.conj(cu_p) * cd_p * np.conj(r)).real
    w_m = abs(cu_m) ** 2 + abs(cd_m) ** 2 + 2 * (np.conj(cu_m) * cd_m * np.conj(r)).real
    if w_p < _WEIGHT_FLOOR or w_m < _WEIGHT_FLOOR:
        return 0.0
    ov = (
        np.conj(cu_p) * cu_m
        + np.conj(cd_p) * cd_m
        + np.conj(cu_p) * cd_m * np.conj(r)
        + np.conj(cd_p) * cu_m * r
    )
    return float(min(1.0, max(0.0, 1.0 - abs(ov) / math.sqrt(w_p * w_m))))


def record_distinguishability(model: ModelSpec, n: Direction, t: float) -> float:
    return _record_from_r(n, decoherence_factor(model.env, t).value)


def lag_grid(window: float, lags: int) -> np.ndarray:
    if not window > 0:
        raise ValueError("window must be positive")
    if lags < 2:
        raise ValueError("need at least 2 lags")
    return window * np.arange(1, lags + 1) / lags


def agreement_probability(model: ModelSpec, n: Direction, t: float, eps: float) -> float:
    """``P(eps) = <+n| rho_A'(eps) |+n>`` for ``|+n><+n| (x) rho_E(t)`` evolved by ``eps``."""
    plus, _ = n.eigenvectors()
    cm = oracle.env_expectation(model, t, oracle.lag_phase_ops(model, eps))
    pu, pd = abs(plus[0]) ** 2, abs(plus[1]) ** 2
    return float(pu * pu + pd * pd + 2 * pu * pd * cm.real)


def stability(model: ModelSpec, n: Direction, t: float, window: float, lags: int) -> float:
    p_min = min(agreement_probability(model, n, t, e) for e in lag_grid(window, lags))
    return float(min(1.0, max(0.0, 2 * p_min - 1)))


def claim_content(model: ModelSpec, claim: MagnitudeClaim, t: float, window: float, lags: int) -> ContentReport:
    """``R * S`` for the claim's axis; the value set does not enter."""
    if claim.is_identity:
        return ContentReport(0.0, 0.0, 0.0, float(window), int(lags), vacuous=True)
    n = claim.direction
    rec = record_distinguishability(model, n, t)
    stab = stability(model, n, t, window, lags)
    return ContentReport(rec, stab, rec * stab, float(window), int(lags))


def born_probability(rho: ReducedState, claim: MagnitudeClaim) -> float:
    if claim.is_identity:
        raise ValueError("identity claims get no Born probability; gate them instead")
    _, evals, evecs = direction_operator(claim.direction)
    proj = np.zeros((2, 2), dtype=complex)
    for val, vec in zip(evals, evecs.T):
        if val in claim.values:
            proj += np.outer(vec, vec.conj())
    return float(np.real(np.trace(rho.matrix @ proj)))


def gate_claim(
    model: ModelSpec,
    claim: MagnitudeClaim,
    t: float,
    threshold: float = DEFAULT_THRESHOLD,
    window: float = 1.0,
    lags: int = 16,
) -> GateVerdict:
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if claim.is_identity:
        return GateVerdict("vacuous", 0.0, threshold, label=claim.label)
    report = claim_content(model, claim, t, window, lags)
    if report.content >= threshold:
        p = born_probability(reduced_state(model, t), claim)
        return GateVerdict("licensed", report.content, threshold, p, claim.label)
    return GateVerdict("refused", report.content, threshold, label=claim.label)


# ---------------------------------------------------------------------------
# Named claims


KNOWN_LABELS = ("A", "B", "C", "C'", "D", "E", "E'", "F", "L", "M")


def named_claim(label: str, system: QubitAmplitudes | None = None) -> MagnitudeClaim:
    """The catalogue claims; ``F`` is the +1/2 claim along the initial state's axis."""
    table = {
        "B": (X_AXIS, (PLUS, MINUS)),
        "C": (X_AXIS, (PLUS,)),
        "C'": (X_AXIS, (MINUS,)),
        "D": (Z_AXIS, (PLUS, MINUS)),
        "E": (Z_AXIS, (PLUS,)),
        "E'": (Z_AXIS, (MINUS,)),
    }
    if label == "A":
        return MagnitudeClaim.identity("A")
    if label in table:
        d, vals = table[label]
        return MagnitudeClaim.spin(d, vals, label)
    if label == "F":
        if system is None:
            raise ValueError("claim F needs the system's initial state")
        return MagnitudeClaim.spin(system.direction(), (PLUS,), "F")
    raise ValueError(f"unknown claim label {label!r}; expected one of {', '.join(KNOWN_LABELS)}")


def claim_from_dict(doc: dict[str, Any], system: QubitAmplitudes | None = None) -> MagnitudeClaim:
    """Parse ``{"kind", "psi", "chi", "values", "label"}``; a bare label picks a catalogue claim."""
    label = doc.get("label")
    if label is not None and label not in KNOWN_LABELS:
        raise ValueError(f"unknown claim label {label!r}")
    kind = doc.get("kind")
    if kind is None:
        if label in (None, "L", "M"):
            raise ValueError("claim needs 'kind' (or a catalogue label)")
        return named_claim(label, system)
    if kind == "identity":
        return MagnitudeClaim.identity(label)
    vals = doc.get("values", ["+", "-"])
    try:
        values = [_SYMBOL[v] if isinstance(v, str) else float(v) for v in vals]
    except KeyError as exc:
        raise ValueError(f"bad claim value {exc.args[0]!r}") from None
    return MagnitudeClaim(kind, Direction(float(doc["psi"]), float(doc.get("chi", 0.0))), frozenset(values), label)
