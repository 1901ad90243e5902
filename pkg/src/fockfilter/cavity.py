"""Atom-conditioned cavity reflection (controlled phase with scattering loss).

Each atomic branch reflects the pulse with a single-sided cavity coefficient.
The atom in |g> couples to the cavity and, for large cooperativity, the pulse
bounces off almost unchanged; with the atom in |s> the empty cavity imprints
the detuning-dependent phase. Loss is the part of |r|^2 missing from unity and
is modelled as a pure-loss channel per branch, with both branches leaking into
the same environment mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fock import JointState, cross_loss


@dataclass(frozen=True)
class CavityParams:
    cooperativity: float
    beta: float
    detuning_ratio: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        if not self.cooperativity > 0:
            raise ValueError(f"cooperativity must be > 0, got {self.cooperativity!r}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"cavity efficiency must lie in (0, 1], got {self.beta!r}")
        if not 0 < self.tau <= 1:
            raise ValueError(f"loop transmission must lie in (0, 1], got {self.tau!r}")

    @classmethod
    def ideal(cls, detuning_ratio: float = 0.0) -> "CavityParams":
        """Infinite cooperativity, lossless cavity and delay loop."""
        return cls(math.inf, 1.0, detuning_ratio, 1.0)

    @property
    def is_ideal(self) -> bool:
        return math.isinf(self.cooperativity) and self.beta == 1.0

    def with_detuning(self, detuning_ratio: float) -> "CavityParams":
        return replace(self, detuning_ratio=detuning_ratio)

    def to_dict(self) -> dict:
        return {
            "C": self.cooperativity,
            "beta": self.beta,
            "detuning_ratio": self.detuning_ratio,
            "tau": self.tau,
        }


@dataclass(frozen=True)
class ReflectionPair:
    r_coupled: complex
    r_uncoupled: complex

    def branch(self, atom_level: int) -> complex:
        """Reflection for atom level 0 (|g>, coupled) or 1 (|s>, uncoupled)."""
        return self.r_coupled if atom_level == 0 else self.r_uncoupled


def _reflect(beta: float, x: float, extra: float) -> complex:
    if math.isinf(x) or math.isinf(extra):
        return 1.0 + 0j
    return 1.0 - 2.0 * beta / complex(1.0 + extra, -2.0 * x)


def reflection_coefficients(params: CavityParams) -> ReflectionPair:
    """r_s = 1 - 2 beta / (1 - 2i x), r_g = 1 - 2 beta / (1 - 2i x + 4C), x = Delta/kappa."""
    x = params.detuning_ratio
    return ReflectionPair(
        r_coupled=_reflect(params.beta, x, 4.0 * params.cooperativity),
        r_uncoupled=_reflect(params.beta, x, 0.0),
    )


def phase_for_detuning(detuning_ratio: float) -> float:
    """Phase of 1 - 2/(1 - 2i x), wrapped to (-pi, pi]."""
    x = detuning_ratio
    if math.isinf(x):
        return 0.0
    t = 2.0 * math.atan(2.0 * x)
    return math.pi + t if x <= 0 else t - math.pi


def detuning_for_phase(phi: float) -> float:
    """Inverse of :func:`phase_for_detuning`; phi = 0 maps to infinite detuning."""
    phi = math.remainder(phi, 2 * math.pi)  # (-pi, pi]
    if phi == -math.pi:
        phi = math.pi
    if phi == 0:
        return math.inf
    if phi > 0:
        return 0.5 * math.tan(0.5 * (phi - math.pi))
    return 0.5 * math.tan(0.5 * (phi + math.pi))


def branch_channel_factors(params: CavityParams) -> tuple[tuple[float, float], tuple[float, float]]:
    """(transmittance, phase) of the field for the |g> and |s> branches."""
    pair = reflection_coefficients(params)
    out = []
    for a in range(2):
        r = pair.branch(a)
        out.append((min(1.0, abs(r) ** 2), float(np.angle(r))))
    return out[0], out[1]


def controlled_reflection(joint: JointState, params: CavityParams) -> JointState:
    """Apply the atom-conditioned reflection to an atom (x) field state.

    Block (a, b) of the joint matrix maps to
    e^{i arg r_a n} [sum_k A_k(|r_a|^2) rho_ab A_k(|r_b|^2)^dag] e^{-i arg r_b n}.
    """
    factors = branch_channel_factors(params)
    n = joint.space.levels
    blocks = [[None, None], [None, None]]
    for a in range(2):
        Ta, tha = factors[a]
        for b in range(2):
            Tb, thb = factors[b]
            X = cross_loss(joint.block(a, b), Ta, Tb)
            blocks[a][b] = np.exp(1j * tha * n)[:, None] * X * np.exp(-1j * thb * n)[None, :]
    return JointState.from_blocks(blocks, joint.space)
