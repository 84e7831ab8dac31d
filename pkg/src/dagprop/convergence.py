"""Empirical checks of the convergence guarantees over recorded trajectories.

Indexing used by :class:`IterationRecord` for row ``k``: ``E`` and the
gradient are taken at weights ``v[k]``; ``dv`` and ``dH`` are the increments
produced by the step taken at ``k`` (from ``v[k]`` to ``v[k+1]``); ``Q`` is
the first-order prediction ``sum_edges dv : q`` of the error change and
``dE = E[k+1] - E[k]`` is the realised change, computed from propagated
increments rather than by subtracting two errors so that it stays accurate
after the steps fall below the rounding error of ``E``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InsufficientData, KeyMismatch, UnboundedRatio
from .gradients import GradientSet
from .optimizer import max_eta
from .topology import Edge

CSV_COLUMNS = ("k", "E", "sum_q_sq", "sum_dv_sq", "sum_dH_sq", "Q_pred", "dE", "max_abs_weight")

MONOTONE_SLACK = 1e-12
DEFAULT_TAIL_THRESHOLD = 1e-4
DEFAULT_TAIL_WINDOW = 10


@dataclass
class IterationRecord:
    k: int
    E: float
    sum_q_sq: float
    sum_dv_sq: float
    sum_dH_sq: float
    Q_pred: float
    dE: Optional[float]
    max_abs_weight: float
    # per-edge / per-layer detail; absent when loaded back from CSV
    q_sq: dict[Edge, float] = field(default_factory=dict)
    dv_sq: dict[Edge, float] = field(default_factory=dict)
    dH_sq: dict[int, float] = field(default_factory=dict)

    @property
    def grad_norm(self) -> float:
        return math.sqrt(self.sum_q_sq)


def first_order_predictor(g: GradientSet | dict, next_delta: dict) -> float:
    """Frobenius inner product ``sum_edges dv[k+1] : q[k]``."""
    q = g.q if isinstance(g, GradientSet) else g
    if set(q) != set(next_delta):
        raise KeyMismatch("gradient and increment edge sets differ")
    return float(sum(np.sum(next_delta[e] * q[e]) for e in sorted(q)))


def descent_slack(lhs: float) -> float:
    return 1e-12 * (1.0 + abs(lhs))


def check_descent_inequality(record: IterationRecord, eta: float, s: float) -> bool:
    """``Q <= (-eta + s eta) * sum ||q||^2`` up to a rounding slack."""
    rhs = (-eta + s * eta) * record.sum_q_sq
    return record.Q_pred <= rhs + descent_slack(record.Q_pred)


def lemma2_increment_violations(
    record: IterationRecord, eta: float, s: float, slack: float = 1e-12
) -> list[Edge]:
    """Edges where ``||dv|| > (eta + tau) ||q||`` beyond ``slack``."""
    bound = eta + s * eta
    bad = []
    for e, dv_sq in record.dv_sq.items():
        lhs = math.sqrt(dv_sq)
        rhs = bound * math.sqrt(record.q_sq[e])
        if lhs > rhs + slack * (1.0 + rhs):
            bad.append(e)
    return bad


def lemma2_output_ratio(
    record: IterationRecord, eta: float, s: float, edges: Sequence[Edge]
) -> dict[int, float]:
    """Per layer ``n``: ``||dH_n|| / ((eta + tau) sum_{m<n} ||q_(m,n)||)``.

    Layers whose incoming gradients are all zero are omitted.
    """
    bound = eta + s * eta
    out = {}
    for n, dH_sq in record.dH_sq.items():
        denom = bound * sum(math.sqrt(record.q_sq[e]) for e in edges if e[1] == n)
        if denom > 0:
            out[n] = math.sqrt(dH_sq) / denom
    return out


def theorem2_ratios(
    trajectory: Sequence[IterationRecord], noise_floor: float = 0.0
) -> list[tuple[int, float]]:
    """``|Q - dE| / (sum ||dH||^2 + sum ||dv||^2)`` for every usable step.

    Steps with both parts zero are skipped, as are steps whose denominator is
    below ``noise_floor`` (useful for trajectories whose ``dE`` column was
    obtained by plain subtraction).

    Raises:
        UnboundedRatio: a step with zero denominator but nonzero numerator.
    """
    out = []
    for r in trajectory:
        if r.dE is None:
            continue
        num = abs(r.Q_pred - r.dE)
        den = r.sum_dH_sq + r.sum_dv_sq
        if den == 0.0:
            if num == 0.0:
                continue
            raise UnboundedRatio(f"step {r.k}: zero increments but |Q - dE| = {num:g}")
        if den < noise_floor:
            continue
        out.append((r.k, num / den))
    return out


def estimate_C(trajectory: Sequence[IterationRecord], noise_floor: float = 0.0) -> float:
    """Sup of the second-order residual ratio over the trajectory.

    Raises:
        InsufficientData: fewer than two records, or no step with a usable ratio.
        UnboundedRatio: see :func:`theorem2_ratios`.
    """
    if len(trajectory) < 2:
        raise InsufficientData("need at least two records")
    ratios = theorem2_ratios(trajectory, noise_floor)
    if not ratios:
        raise InsufficientData("no step with nonzero increments")
    return max(v for _, v in ratios)


def step_size_constant(
    trajectory: Sequence[IterationRecord], eta: float, s: float, resolution: float = 16.0
) -> float:
    """Smallest ``C >= 0`` with ``dE <= (-eta + tau + C (tau^2 + eta^2)) sum ||q||^2`` on every step.

    This is the constant that enters the admissible step size
    ``(1 - s) / (C (s^2 + 1))``; it bundles the second-order ratio with the
    output-increment bound. Steps whose squared gradient is below
    ``(resolution * eps)^2`` times the largest one are skipped: there the
    gradient itself is rounding noise and the ratio carries no information.
    """
    tau = s * eta
    lin = -eta + tau
    quad = tau * tau + eta * eta
    usable = [r for r in trajectory if r.dE is not None]
    if not usable:
        return 0.0
    floor = (resolution * np.finfo(np.float64).eps) ** 2 * max(r.sum_q_sq for r in usable)
    worst = 0.0
    for r in usable:
        if r.sum_q_sq == 0.0 or r.sum_q_sq <= floor:
            continue
        worst = max(worst, (r.dE - lin * r.sum_q_sq) / (quad * r.sum_q_sq))
    return worst


@dataclass
class ConvergenceVerdict:
    eta: float
    s: float
    C_used: float
    step_size_C: float
    theorem_applies: bool
    iterations: int
    monotone_descent: bool
    first_violation_k: Optional[int]
    descent_inequality_holds: list[bool]
    descent_inequality_violations: int
    graddif_holds: list[bool]
    graddif_violations: int
    gradient_tail_norm: float
    tail_threshold: float
    tail_converged: bool
    partial_sum_q_sq: float
    tail_increment_q_sq: float
    summable: bool
    estimated_C: float
    theorem2_residuals: list[tuple[int, float]]
    ratio_first_half_max: float
    ratio_last_half_max: float
    ratio_stable: bool
    max_abs_weight_initial: float
    max_abs_weight_final: float
    weights_bounded: bool
    notes: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return (
            self.monotone_descent
            and self.descent_inequality_violations == 0
            and self.tail_converged
        )

    def summary(self) -> dict:
        """JSON-ready report without the per-step lists."""
        d = asdict(self)
        for key in ("descent_inequality_holds", "graddif_holds", "theorem2_residuals"):
            d.pop(key)
        d["converged"] = self.converged
        return {k: _jsonable(v) for k, v in d.items()}


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _half_maxima(ratios: Sequence[tuple[int, float]], n_steps: int) -> tuple[float, float]:
    mid = n_steps / 2.0
    first = [v for k, v in ratios if k < mid]
    last = [v for k, v in ratios if k >= mid]
    return (max(first) if first else math.nan, max(last) if last else math.nan)


def verify_theorem1(
    trajectory: Sequence[IterationRecord],
    eta: float,
    s: float,
    C_used: Optional[float] = None,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    tail_window: int = DEFAULT_TAIL_WINDOW,
    stability_factor: float = 10.0,
    growth_factor: float = 10.0,
) -> ConvergenceVerdict:
    """Evaluate a recorded run against the convergence guarantees.

    The step size precondition ``eta < (1 - s) / (C (s^2 + 1))`` is checked
    with ``C_used``, or with the run's :func:`step_size_constant` when it is
    None; a violation is recorded in the verdict, never raised. The per-step
    error bound uses ``C_used`` when given, else the estimated second-order
    constant.
    """
    if not trajectory:
        raise InsufficientData("empty trajectory")
    notes: list[str] = []
    tau = s * eta
    explicit_C = C_used
    n = len(trajectory)

    try:
        ratios = theorem2_ratios(trajectory)
    except UnboundedRatio as exc:
        ratios = []
        notes.append(f"second-order ratio unbounded: {exc}")
    if ratios:
        C_est = max(v for _, v in ratios)
    else:
        C_est = 0.0
        notes.append("no resolvable step for the second-order ratio (stationary run?)")
    first_max, last_max = _half_maxima(ratios, trajectory[-1].k + 1)
    if math.isnan(first_max) or math.isnan(last_max):
        ratio_stable = bool(ratios) or C_est == 0.0
    else:
        ratio_stable = last_max <= stability_factor * first_max

    step_C = step_size_constant(trajectory, eta, s)
    if C_used is None:
        C_used = step_C
    if C_used > 0:
        theorem_applies = eta < max_eta(s, C_used)
    else:
        theorem_applies = True
    if not theorem_applies:
        notes.append(
            f"eta={eta:g} is not below (1-s)/(C(s^2+1)) = {max_eta(s, C_used):g} for C={C_used:g}; "
            "the convergence guarantee does not apply"
        )

    first_violation = None
    for a, b in zip(trajectory, trajectory[1:]):
        if b.E > a.E + MONOTONE_SLACK:
            first_violation = a.k
            break
    last = trajectory[-1]
    if first_violation is None and last.dE is not None and last.dE > MONOTONE_SLACK:
        first_violation = last.k

    descent = [check_descent_inequality(r, eta, s) for r in trajectory]
    C_graddif = C_est if explicit_C is None else explicit_C
    coef = -eta + tau + C_graddif * (tau * tau + eta * eta)
    graddif = [
        r.dE is None or r.dE <= coef * r.sum_q_sq + descent_slack(r.dE) for r in trajectory
    ]

    window = trajectory[-tail_window:]
    tail_norm = max(r.grad_norm for r in window)
    partial = math.fsum(r.sum_q_sq for r in trajectory)
    tail_inc = math.fsum(r.sum_q_sq for r in window)

    w0 = trajectory[0].max_abs_weight
    w1 = last.max_abs_weight
    bounded = w1 <= growth_factor * max(w0, 1.0)
    if not bounded:
        notes.append(f"max |v| grew from {w0:g} to {w1:g}; bounded-weight assumption in doubt")

    return ConvergenceVerdict(
        eta=eta,
        s=s,
        C_used=C_used,
        step_size_C=step_C,
        theorem_applies=theorem_applies,
        iterations=n,
        monotone_descent=first_violation is None,
        first_violation_k=first_violation,
        descent_inequality_holds=descent,
        descent_inequality_violations=descent.count(False),
        graddif_holds=graddif,
        graddif_violations=graddif.count(False),
        gradient_tail_norm=tail_norm,
        tail_threshold=tail_threshold,
        tail_converged=tail_norm < tail_threshold,
        partial_sum_q_sq=partial,
        tail_increment_q_sq=tail_inc,
        summable=math.isfinite(partial) and tail_inc <= len(window) * tail_threshold**2,
        estimated_C=C_est,
        theorem2_residuals=ratios,
        ratio_first_half_max=first_max,
        ratio_last_half_max=last_max,
        ratio_stable=ratio_stable,
        max_abs_weight_initial=w0,
        max_abs_weight_final=w1,
        weights_bounded=bounded,
        notes=notes,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def write_trajectory_csv(
    path: str | Path, trajectory: Iterable[IterationRecord], header: Optional[dict] = None
) -> None:
    """One row per iteration; ``header`` entries go in a leading ``#`` comment line.

    Floats are written with ``repr`` so a reload is exact.
    """
    with open(path, "w", newline="") as fh:
        if header:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in trajectory:
            writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_trajectory_csv(path: str | Path) -> tuple[list[IterationRecord], dict[str, str]]:
    header: dict[str, str] = {}
    records = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    k, v = token.split("=", 1)
                    header[k] = v
        elif line.strip():
            body.append(line)
    for row in csv.DictReader(body):
        records.append(
            IterationRecord(
                k=int(row["k"]),
                E=float(row["E"]),
                sum_q_sq=float(row["sum_q_sq"]),
                sum_dv_sq=float(row["sum_dv_sq"]),
                sum_dH_sq=float(row["sum_dH_sq"]),
                Q_pred=float(row["Q_pred"]),
                dE=float(row["dE"]) if row["dE"] else None,
                max_abs_weight=float(row["max_abs_weight"]),
            )
        )
    return records, header
