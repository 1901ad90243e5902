"""Heralded Fock states from a two-mode squeezed vacuum with a number-resolving detector.

Loss beta acts on both modes; the heralding detector may add its own
inefficiency. With x = lambda^2 (1 - beta_A)(1 - beta_B), the signal photons
lost from the pair enter through the Legendre generating function
sum_k C(n+k, k)^2 x^k = P_n((1 + x)/(1 - x)) / (1 - x)^(n+1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre


@dataclass(frozen=True)
class TmsvSpec:
    lam: float
    beta: float
    n: int
    herald_efficiency: float = 1.0

    def __post_init__(self):
        if not 0 <= self.lam < 1:
            raise ValueError(f"lambda must lie in [0, 1), got {self.lam!r}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta!r}")
        if not 0 < self.herald_efficiency <= 1:
            raise ValueError(f"detector efficiency must lie in (0, 1], got {self.herald_efficiency!r}")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")

    @classmethod
    def from_squeezing(cls, r: float, beta: float, n: int, herald_efficiency: float = 1.0) -> "TmsvSpec":
        return cls(float(np.tanh(r)), beta, n, herald_efficiency)

    @property
    def herald_transmittance(self) -> float:
        return self.beta * self.herald_efficiency


def tmsv_herald_probability(spec: TmsvSpec) -> float:
    """Probability that the heralding detector counts exactly n photons."""
    l2, b = spec.lam ** 2, spec.herald_transmittance
    den = 1 - l2 * (1 - b)
    return float((1 - l2) / den * (l2 * b / den) ** spec.n)


def tmsv_herald_fidelity(spec: TmsvSpec) -> float:
    """Overlap <n| rho_signal |n> of the heralded signal mode."""
    l2, n = spec.lam ** 2, spec.n
    bA, bB = spec.beta, spec.herald_transmittance
    x = l2 * (1 - bA) * (1 - bB)
    if x == 0:
        return 1.0
    joint = (1 - l2) * (l2 * bA * bB) ** n * eval_legendre(n, (1 + x) / (1 - x)) / (1 - x) ** (n + 1)
    return float(min(1.0, joint / tmsv_herald_probability(spec)))


def optimal_lambda(n: int, beta: float = 1.0, grid: int = 20001):
    """Grid search of lambda maximizing the herald probability; returns (lambda, P)."""
    lams = np.linspace(0, 0.9999, grid)
    P = np.array([tmsv_herald_probability(TmsvSpec(l, beta, n)) for l in lams])
    i = int(np.argmax(P))
    return float(lams[i]), float(P[i])


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    success_probability: float
    fidelity: float


def compare_with_filtration(record, spec: TmsvSpec) -> list[ComparisonRow]:
    """Pair (success probability, target population) of a filtration run with the TMSV baseline."""
    target = record.target_n
    if target is None:
        raise ValueError("filtration record carries no target photon number")
    if target != spec.n:
        raise ValueError(f"targets differ: filtration {target}, TMSV {spec.n}")
    p = record.final_state.diagonal
    return [
        ComparisonRow("filtration", record.total_probability, float(p[target])),
        ComparisonRow("tmsv", tmsv_herald_probability(spec), tmsv_herald_fidelity(spec)),
    ]
