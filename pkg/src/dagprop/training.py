"""Full-batch training loop that records one :class:`IterationRecord` per step."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .activations import Activation
from .convergence import (
    DEFAULT_TAIL_WINDOW,
    IterationRecord,
    check_descent_inequality,
    first_order_predictor,
    lemma2_increment_violations,
)
from .gradients import backward
from .network import WeightSet, error_from_output, forward, forward_increment, max_abs_weight
from .optimizer import (
    FixedMomentumState,
    OptimizerState,
    fixed_momentum_step,
    step,
)
from .topology import DagTopology

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    weights: WeightSet
    records: list[IterationRecord]
    final_error: float
    stopped_early: bool
    optimizer: str
    lemma2_violations: list[tuple[int, tuple[int, int]]] = field(default_factory=list)
    descent_violations: list[int] = field(default_factory=list)


def train(
    t: DagTopology,
    w: WeightSet,
    a: Activation,
    inputs,
    targets,
    eta: float,
    s: float,
    iterations: int,
    tail_threshold: Optional[float] = None,
    tail_window: int = DEFAULT_TAIL_WINDOW,
    optimizer: str = "adaptive",
    beta: float = 0.95,
    on_step: Optional[Callable[[int, WeightSet], None]] = None,
    log_every: int = 0,
) -> TrainResult:
    """Run ``iterations`` full-batch steps from weights ``w``.

    With ``tail_threshold`` set, training stops once the gradient norm stayed
    below it for ``tail_window`` consecutive iterations. ``optimizer`` is
    ``"adaptive"`` (the convergence-verified rule) or ``"fixed"``, a heavy-ball
    baseline with momentum ``beta``. The per-step increment bound and the
    first-order descent inequality are checked on every adaptive step and
    collected in the result rather than raised.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    d = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if optimizer == "adaptive":
        state = OptimizerState.initial(t, eta, s)
    elif optimizer == "fixed":
        state = FixedMomentumState.initial(t, eta, beta)
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")

    trace = forward(t, w, a, x)
    E = error_from_output(trace.output, d)
    records: list[IterationRecord] = []
    bound_bad: list[tuple[int, tuple[int, int]]] = []
    descent_bad: list[int] = []
    quiet = 0
    stopped = False

    for k in range(iterations):
        g = backward(t, w, a, trace, d)
        if optimizer == "adaptive":
            new_w, state = step(state, w, g)
        else:
            new_w, state = fixed_momentum_step(state, w, g)
        dv = state.prev_delta
        new_trace = forward(t, new_w, a, x)
        E_next = error_from_output(new_trace.output, d)
        _, inc = forward_increment(t, w, dv, a, trace)
        dy = inc[-1]
        dE = float(np.sum(dy * (trace.output - d + 0.5 * dy)))

        q_sq = {e: float(np.sum(np.square(m))) for e, m in g.q.items()}
        dv_sq = {e: float(np.sum(np.square(m))) for e, m in dv.items()}
        dH_sq = {
            n: float(np.sum(np.square(inc[n]))) for n in range(1, t.depth + 1)
        }
        rec = IterationRecord(
            k=k,
            E=E,
            sum_q_sq=math.fsum(q_sq.values()),
            sum_dv_sq=math.fsum(dv_sq.values()),
            sum_dH_sq=math.fsum(dH_sq.values()),
            Q_pred=first_order_predictor(g, dv),
            dE=dE,
            max_abs_weight=max_abs_weight(w),
            q_sq=q_sq,
            dv_sq=dv_sq,
            dH_sq=dH_sq,
        )
        records.append(rec)
        if optimizer == "adaptive":
            for e in lemma2_increment_violations(rec, eta, s):
                bound_bad.append((k, e))
            if not check_descent_inequality(rec, eta, s):
                descent_bad.append(k)
        if log_every and k % log_every == 0:
            log.info("k=%d E=%.6e |q|=%.3e", k, E, rec.grad_norm)
        if on_step is not None:
            on_step(k, new_w)

        w, trace, E = new_w, new_trace, E_next
        if tail_threshold is not None:
            quiet = quiet + 1 if rec.grad_norm < tail_threshold else 0
            if quiet >= tail_window:
                stopped = True
                break

    return TrainResult(
        weights=w,
        records=records,
        final_error=E,
        stopped_early=stopped,
        optimizer=optimizer,
        lemma2_violations=bound_bad,
        descent_violations=descent_bad,
    )
