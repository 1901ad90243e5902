"""Conditional Fock-state filtration: gate, atomic rotation, atomic measurement.

A round prepares the atom in (|g> + |s>)/sqrt(2), reflects the pulse off the
cavity, rotates the atom and measures it. Keeping the pulse only for the
heralded outcome multiplies the photon statistics by cos^2(n phi / 2) (outcome
g) or sin^2(n phi / 2) (outcome s) in the ideal limit.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cavity import (
    CavityParams,
    branch_channel_factors,
    controlled_reflection,
    detuning_for_phase,
    phase_for_detuning,
)
from .errors import HeraldingError
from .fock import FieldState, JointState, _loss_amplitudes, loss_channel, loss_distribution

log = logging.getLogger(__name__)

# (sigma_z - sigma_x)/sqrt(2) with |g> the lower level (sigma_z |g> = -|g>)
HADAMARD_ROTATION = np.array([[-1.0, -1.0], [-1.0, 1.0]], dtype=complex) / np.sqrt(2)
ATOM_PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
OUTCOMES = ("g", "s")
MIN_HERALD_PROBABILITY = 1e-12


@dataclass(frozen=True, eq=False)
class RoundSpec:
    detuning_ratio: float
    rotation: np.ndarray = field(default_factory=lambda: HADAMARD_ROTATION.copy())
    outcome: str = "g"

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=complex).reshape(2, 2)
        if np.max(np.abs(rot.conj().T @ rot - np.eye(2))) > 1e-10:
            raise ValueError("atomic rotation is not unitary")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be 'g' or 's', got {self.outcome!r}")
        rot.setflags(write=False)
        object.__setattr__(self, "rotation", rot)

    @classmethod
    def from_phase(cls, phi: float, outcome: str = "g", rotation=None) -> "RoundSpec":
        rot = HADAMARD_ROTATION if rotation is None else rotation
        return cls(detuning_for_phase(phi), rot, outcome)

    @property
    def phi(self) -> float:
        """Controlled phase of the ideal gate at this detuning."""
        return phase_for_detuning(self.detuning_ratio)

    @property
    def outcome_index(self) -> int:
        return OUTCOMES.index(self.outcome)

    def to_dict(self) -> dict:
        flat = []
        for z in self.rotation.ravel():
            flat += [float(z.real), float(z.imag)]
        x = self.detuning_ratio
        return {"detuning_ratio": x if math.isfinite(x) else str(x), "rotation": flat, "outcome": self.outcome}

    @classmethod
    def from_dict(cls, d: dict) -> "RoundSpec":
        x = float(d["detuning_ratio"])
        rot = d.get("rotation")
        if rot is None:
            rotation = HADAMARD_ROTATION
        else:
            if len(rot) != 8:
                raise ValueError("rotation must be 8 reals (re, im of a 2x2 matrix, row major)")
            rotation = (np.array(rot[0::2]) + 1j * np.array(rot[1::2])).reshape(2, 2)
        return cls(x, rotation, d.get("outcome", "g"))

    def __eq__(self, other):
        if not isinstance(other, RoundSpec):
            return NotImplemented
        return (
            self.detuning_ratio == other.detuning_ratio
            and self.outcome == other.outcome
            and np.array_equal(self.rotation, other.rotation)
        )

    def __repr__(self):
        return f"RoundSpec(phi={self.phi:.4f}, detuning_ratio={self.detuning_ratio:.6g}, outcome={self.outcome!r})"


class Schedule(list):
    """List of rounds; ``stalled`` marks an optimizer run that stopped early
    because no further round improved the target population."""

    stalled: bool = False


def schedule_to_json(schedule: Sequence[RoundSpec]) -> str:
    return json.dumps([r.to_dict() for r in schedule], indent=2)


def schedule_from_json(text: str) -> Schedule:
    return Schedule(RoundSpec.from_dict(d) for d in json.loads(text))


@dataclass(eq=False)
class FiltrationRecord:
    rounds: list  # of (RoundSpec, success probability)
    final_state: FieldState
    states: list = field(default_factory=list)  # conditional state after every round
    target_n: int | None = None

    @property
    def total_probability(self) -> float:
        return float(np.prod([p for _, p in self.rounds])) if self.rounds else 1.0

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def to_dict(self) -> dict:
        p = self.final_state.diagonal
        out = {
            "rounds": [dict(r.to_dict(), phi=r.phi, success_probability=prob) for r, prob in self.rounds],
            "total_probability": self.total_probability,
            "n_rounds": self.n_rounds,
            "dim": self.final_state.dim,
        }
        if self.target_n is not None:
            n = self.target_n
            out.update(target_n=n, p_target=float(p[n]), p_above_target=float(p[n + 1:].sum()))
        return out


def _rotate_measure(joint: JointState, rotation: np.ndarray, outcome: int) -> np.ndarray:
    """Unnormalized field operator <o| R rho R^dag |o>."""
    row = rotation[outcome]
    out = np.zeros((joint.space.dim, joint.space.dim), dtype=complex)
    for a in range(2):
        for b in range(2):
            c = row[a] * np.conj(row[b])
            if c != 0:
                out += c * joint.block(a, b)
    return out


def filtration_round(field_state: FieldState, round_spec: RoundSpec, params: CavityParams):
    """One heralded round; returns (conditional field state, outcome probability).

    Delay-loop loss ``params.tau`` acts on the pulse after the measurement.
    """
    joint = JointState.product(ATOM_PLUS, field_state)
    joint = controlled_reflection(joint, params.with_detuning(round_spec.detuning_ratio))
    sub = _rotate_measure(joint, round_spec.rotation, round_spec.outcome_index)
    prob = float(np.trace(sub).real)
    if prob < MIN_HERALD_PROBABILITY:
        raise HeraldingError(f"outcome {round_spec.outcome!r} has probability {prob:.3e}")
    out = FieldState(sub / prob, field_state.space)
    return loss_channel(out, params.tau), prob


def thermal_filtration_closed_form(p, phi: float, outcome: str):
    """Ideal-gate action on a photon distribution: p_n cos^2(n phi/2) or p_n sin^2(n phi/2).

    Returns the renormalized distribution and the outcome probability.
    """
    p = np.asarray(p, dtype=float)
    n = np.arange(p.size)
    if outcome == "g":
        w = np.cos(0.5 * n * phi) ** 2
    elif outcome == "s":
        w = np.sin(0.5 * n * phi) ** 2
    else:
        raise ValueError(f"outcome must be 'g' or 's', got {outcome!r}")
    q = p * w
    norm = q.sum()
    if norm < MIN_HERALD_PROBABILITY:
        raise HeraldingError(f"outcome {outcome!r} at phi={phi} has zero weight")
    return q / norm, float(norm)


def run_protocol(
    input_state: FieldState,
    schedule: Sequence[RoundSpec],
    params: CavityParams,
    between: Callable[[FieldState], FieldState] | None = None,
    target_n: int | None = None,
) -> FiltrationRecord:
    """Apply ``schedule`` round by round.

    ``between`` is applied to the pulse after every round except the last
    (e.g. a dephasing channel standing for the unlocked optical delay).
    """
    state = input_state
    rounds, states = [], []
    for i, rs in enumerate(schedule):
        state, prob = filtration_round(state, rs, params)
        rounds.append((rs, prob))
        states.append(state)
        if between is not None and i < len(schedule) - 1:
            state = between(state)
    return FiltrationRecord(rounds, state, states, target_n)


# ------------------------------------------------------- schedule search

class _DiagonalRound:
    """Exact photon-statistics transfer of one round.

    The output diagonal only depends on the input diagonal (each Kraus
    operator shifts the photon number by a fixed amount), which makes the
    schedule search independent of input coherences and cheap.
    """

    def __init__(self, dim: int, params: CavityParams, detuning_ratio: float):
        (Tg, thg), (Ts, ths) = branch_channel_factors(params.with_detuning(detuning_ratio))
        self.dim = dim
        self.tau = params.tau
        m = np.arange(dim)
        k = np.arange(dim)[:, None]
        idx = np.minimum(m[None, :] + k, dim - 1)
        valid = (m[None, :] + k) < dim
        amps = []
        for T in (Tg, Ts):
            a = _loss_amplitudes(T, dim)  # a[k, j], j = source level
            amps.append(np.where(valid, np.take_along_axis(a, idx, axis=1), 0.0))
        self._amps = amps
        self._idx, self._valid = idx, valid
        self._phase = [np.exp(1j * thg * m), np.exp(1j * ths * m)]

    def branch_terms(self, p: np.ndarray) -> list:
        """X_ab[m] = e^{i(th_a - th_b) m} sum_k amp_a amp_b p[m+k]."""
        shifted = np.where(self._valid, p[self._idx], 0.0)
        terms = [[None, None], [None, None]]
        for a in range(2):
            for b in range(2):
                x = (self._amps[a] * self._amps[b] * shifted).sum(axis=0)
                terms[a][b] = self._phase[a] * np.conj(self._phase[b]) * x
        return terms

    def apply(self, p: np.ndarray, rotation: np.ndarray, outcome: int, terms=None):
        terms = self.branch_terms(p) if terms is None else terms
        row = rotation[outcome]
        q = np.zeros(self.dim, dtype=complex)
        for a in range(2):
            for b in range(2):
                q += 0.5 * row[a] * np.conj(row[b]) * terms[a][b]
        q = np.clip(q.real, 0.0, None)
        prob = float(q.sum())
        if prob <= 0:
            return q, 0.0
        q = q / prob
        if self.tau < 1:
            q = loss_distribution(q, self.tau)
        return q, prob


def round_distribution(p, round_spec: RoundSpec, params: CavityParams):
    """Photon statistics after one round, without building the joint state."""
    p = np.asarray(p, dtype=float)
    q, prob = _DiagonalRound(p.size, params, round_spec.detuning_ratio).apply(
        p, round_spec.rotation, round_spec.outcome_index
    )
    if prob < MIN_HERALD_PROBABILITY:
        raise HeraldingError(f"outcome {round_spec.outcome!r} has probability {prob:.3e}")
    return q, prob


def phase_grid(n_points: int = 720) -> np.ndarray:
    """Uniform grid of controlled phases on (0, pi]."""
    return np.pi * np.arange(1, n_points + 1) / n_points


def optimize_schedule(
    input_state: FieldState,
    target_n: int,
    max_rounds: int,
    params: CavityParams,
    p_min: float = 0.05,
    stop_threshold: float = 0.93,
    n_phases: int = 720,
    rotation=None,
) -> Schedule:
    """Greedy round-by-round schedule search.

    Each round scans the controlled phase over (0, pi] and both outcomes with a
    fixed atomic rotation, keeping the choice that maximizes the target
    population among choices heralded with probability >= ``p_min``. The
    search stops once the target population exceeds ``stop_threshold``.
    """
    dim = input_state.dim
    if not 0 <= target_n < dim - 5:
        raise ValueError(f"target {target_n} too close to the truncation dim {dim}")
    rotation = HADAMARD_ROTATION if rotation is None else np.asarray(rotation, dtype=complex)
    grid = [(phi, detuning_for_phase(phi)) for phi in phase_grid(n_phases)]
    transfers = [_DiagonalRound(dim, params, x) for _, x in grid]

    p = input_state.diagonal.copy()
    schedule = Schedule()
    for _ in range(max_rounds):
        if p[target_n] > stop_threshold:
            break
        best = None
        for (phi, x), tr in zip(grid, transfers):
            terms = tr.branch_terms(p)
            for o in range(2):
                q, prob = tr.apply(p, rotation, o, terms)
                if prob < p_min:
                    continue
                if best is None or q[target_n] > best[0]:
                    best = (q[target_n], x, o, q)
        if best is None or best[0] <= p[target_n]:
            log.info("schedule search stalled after %d rounds", len(schedule))
            schedule.stalled = True
            break
        schedule.append(RoundSpec(best[1], rotation, OUTCOMES[best[2]]))
        p = best[3]
    return schedule


def filter_superposition_02(alpha: float, r: float, params: CavityParams, dim: int = 48):
    """Single even-parity round (phi = pi, outcome g) on a displaced squeezed vacuum.

    Suitable (alpha, r) leave approximately cos(theta)|0> + sin(theta)|2>.
    """
    from .gaussian import GaussianSpec, displaced_squeezed_thermal

    if r <= 0:
        raise ValueError(f"squeezing must be positive, got {r!r}")
    state = displaced_squeezed_thermal(GaussianSpec(alpha, r, 0.0), dim)
    return filtration_round(state, RoundSpec(0.0, HADAMARD_ROTATION, "g"), params)
