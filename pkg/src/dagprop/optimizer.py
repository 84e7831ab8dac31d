"""Gradient descent with adaptive momentum.

Per edge ``(i, j)`` and step ``k``::

    dv[k+1] = c * dv[k] - eta * q[k]
    c       = tau * ||q[k]|| / ||dv[k]||   if ||dv[k]|| != 0 else 0
    tau     = s * eta

so the momentum term always has magnitude ``tau * ||q[k]||``. One coefficient
is computed per edge matrix from Frobenius norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, KeyMismatch, NonFiniteUpdate
from .gradients import GradientSet
from .network import WeightSet
from .topology import DagTopology, Edge


@dataclass
class OptimizerState:
    eta: float
    s: float
    prev_delta: dict[Edge, np.ndarray]
    k: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        if not 0 < self.s < 1:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")

    @property
    def tau(self) -> float:
        return self.s * self.eta

    @classmethod
    def initial(cls, t: DagTopology, eta: float, s: float) -> "OptimizerState":
        return cls(eta, s, {e: np.zeros(t.shape(e)) for e in t.edges}, 0)


def momentum_coefficient(tau: float, q_edge: np.ndarray, prev_dv_edge: np.ndarray) -> float:
    dv_norm = float(np.linalg.norm(prev_dv_edge))
    if dv_norm == 0.0:
        return 0.0
    return tau * float(np.linalg.norm(q_edge)) / dv_norm


def step(
    state: OptimizerState, w: WeightSet, g: GradientSet | dict
) -> tuple[WeightSet, OptimizerState]:
    """Apply one update; returns new weights and state, inputs are untouched."""
    q = g.q if isinstance(g, GradientSet) else g
    if set(q) != set(w) or set(w) != set(state.prev_delta):
        raise KeyMismatch("weights, gradients and optimizer state must share one edge set")
    tau = state.tau
    new_w: WeightSet = {}
    new_delta: dict[Edge, np.ndarray] = {}
    for e in w:
        with np.errstate(invalid="ignore", over="ignore"):
            coef = momentum_coefficient(tau, q[e], state.prev_delta[e])
            dv = coef * state.prev_delta[e] - state.eta * q[e]
        if not np.all(np.isfinite(dv)):
            raise NonFiniteUpdate(f"non-finite increment on edge {e}")
        new_delta[e] = dv
        new_w[e] = w[e] + dv
    return new_w, OptimizerState(state.eta, state.s, new_delta, state.k + 1)


def max_eta(s: float, C: float) -> float:
    """Largest admissible learning rate ``(1 - s) / (C (s^2 + 1))`` (exclusive)."""
    if not 0 < s < 1:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    return (1.0 - s) / (C * (s * s + 1.0))


@dataclass
class FixedMomentumState:
    """Classical heavy-ball baseline ``dv[k+1] = beta dv[k] - eta q[k]``.

    Offered only as a labelled comparison mode; runs using it carry no
    convergence verdict.
    """

    eta: float
    beta: float
    prev_delta: dict[Edge, np.ndarray] = field(default_factory=dict)
    k: int = 0

    @classmethod
    def initial(cls, t: DagTopology, eta: float, beta: float) -> "FixedMomentumState":
        return cls(eta, beta, {e: np.zeros(t.shape(e)) for e in t.edges}, 0)


def fixed_momentum_step(
    state: FixedMomentumState, w: WeightSet, g: GradientSet | dict
) -> tuple[WeightSet, FixedMomentumState]:
    q = g.q if isinstance(g, GradientSet) else g
    new_delta = {e: state.beta * state.prev_delta[e] - state.eta * q[e] for e in w}
    new_w = {e: w[e] + new_delta[e] for e in w}
    return new_w, FixedMomentumState(state.eta, state.beta, new_delta, state.k + 1)
