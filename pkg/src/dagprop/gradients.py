"""Reverse-mode gradients of the quadratic error, and a finite-difference oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .activations import Activation
from .errors import DimensionMismatch, KeyMismatch, NonFiniteValue, TraceMismatch
from .network import (
    ForwardTrace,
    WeightSet,
    batch_error,
    check_weights,
    forward,
)
from .topology import DagTopology, Edge


@dataclass
class GradientSet:
    """Per-edge ``dE/dv`` matrices plus the per-layer adjoints that produced them.

    ``delta[j]`` has one row per sample; ``delta[0]`` is None.
    """

    q: dict[Edge, np.ndarray]
    delta: list[Optional[np.ndarray]] = field(default_factory=list)

    def __getitem__(self, edge: Edge) -> np.ndarray:
        return self.q[edge]

    def norm_sq(self) -> float:
        return gradient_norm_sq(self)


def _check_trace(t: DagTopology, trace: ForwardTrace) -> None:
    if len(trace.H) != t.depth + 1 or len(trace.S) != t.depth + 1:
        raise TraceMismatch(f"trace has {len(trace.H)} layers, topology has {t.depth + 1}")
    for j, width in enumerate(t.layer_widths):
        if trace.H[j].shape[-1] != width:
            raise TraceMismatch(f"trace layer {j} has width {trace.H[j].shape[-1]}, expected {width}")
        if j and (trace.S[j] is None or trace.S[j].shape != trace.H[j].shape):
            raise TraceMismatch(f"trace pre-activation at layer {j} is missing or misshapen")


def backward(
    t: DagTopology, w: WeightSet, a: Activation, trace: ForwardTrace, d
) -> GradientSet:
    """Adjoint recursion for ``E = sum_p ||d_p - y_p||^2 / 2``.

    Layers are visited in descending order so every ``delta[n]`` with
    ``n > j`` is final before ``delta[j]`` is formed. For a batched trace the
    per-edge matrices are summed over samples.
    """
    check_weights(t, w)
    _check_trace(t, trace)
    L = t.depth
    H = [np.atleast_2d(h) for h in trace.H]
    S = [None] + [np.atleast_2d(s) for s in trace.S[1:]]
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    if d.shape != H[L].shape:
        raise DimensionMismatch(f"targets have shape {d.shape}, output has {H[L].shape}")

    delta: list[Optional[np.ndarray]] = [None] * (L + 1)
    delta[L] = a.d1(S[L]) * (H[L] - d)
    for j in range(L - 1, 0, -1):
        back = None
        for _, n in t.outgoing(j):
            term = delta[n] @ w[(j, n)].T
            back = term if back is None else back + term
        delta[j] = a.d1(S[j]) * back

    q = {(i, j): H[i].T @ delta[j] for i, j in t.edges}
    for e, m in q.items():
        if not np.all(np.isfinite(m)):
            raise NonFiniteValue(f"non-finite gradient on edge {e}")
    return GradientSet(q=q, delta=delta)


def gradients(t: DagTopology, w: WeightSet, a: Activation, inputs, targets) -> GradientSet:
    """Forward then backward over a batch."""
    trace = forward(t, w, a, np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
    return backward(t, w, a, trace, targets)


def finite_difference_gradients(
    t: DagTopology, w: WeightSet, a: Activation, inputs, targets, h: float = 1e-6
) -> GradientSet:
    """Central differences ``(E(v + h e) - E(v - h e)) / 2h`` for every weight entry.

    The error is evaluated in extended precision so cancellation in the
    numerator stays well below the truncation error at ``h = 1e-6``.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    ext = np.longdouble
    probe = {e: m.astype(ext) for e, m in w.items()}
    step = ext(h)
    q = {}
    for e in t.edges:
        m = probe[e]
        g = np.empty_like(m)
        for idx in np.ndindex(m.shape):
            orig = m[idx]
            hi, lo = orig + step, orig - step
            m[idx] = hi
            up = batch_error(t, probe, a, inputs, targets, dtype=ext)
            m[idx] = lo
            down = batch_error(t, probe, a, inputs, targets, dtype=ext)
            m[idx] = orig
            g[idx] = (up - down) / (hi - lo)
        q[e] = g.astype(np.float64)
    return GradientSet(q=q)


def gradient_norm_sq(g: GradientSet | dict) -> float:
    """Sum over edges of squared Frobenius norms."""
    q = g.q if isinstance(g, GradientSet) else g
    return float(sum(np.sum(np.square(m)) for m in q.values()))


def max_relative_error(
    exact: GradientSet, approx: GradientSet, floor: float = 1e-10
) -> float:
    """Largest ``|a - b| / max(|a|, |b|, floor)`` over all entries of all edges."""
    if set(exact.q) != set(approx.q):
        raise KeyMismatch("gradient sets have different edges")
    worst = 0.0
    for e, m in exact.q.items():
        other = approx.q[e]
        scale = np.maximum(np.maximum(np.abs(m), np.abs(other)), floor)
        if m.size:
            worst = max(worst, float(np.max(np.abs(m - other) / scale)))
    return worst
