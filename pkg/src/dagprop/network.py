"""Forward propagation over a layered DAG.

Row-vector convention throughout: a layer output ``H_i`` of width ``l_i``
multiplies the edge matrix ``v[(i, j)]`` of shape ``(l_i, l_j)``. Inputs may
be a single vector ``(l_0,)`` or a batch ``(J, l_0)``; every array in the
trace keeps the same leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .activations import Activation
from .errors import DimensionMismatch, KeyMismatch, NonFiniteValue
from .topology import DagTopology, Edge

WeightSet = dict[Edge, np.ndarray]


@dataclass
class ForwardTrace:
    """Pre-activations ``S[j]`` (``S[0]`` is None) and outputs ``H[j]``."""

    S: list[Optional[np.ndarray]]
    H: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.H[-1]


def check_weights(t: DagTopology, w: WeightSet) -> None:
    keys = set(w)
    expected = set(t.edges)
    if keys != expected:
        missing = sorted(expected - keys)
        extra = sorted(keys - expected)
        raise KeyMismatch(f"weights do not match edges (missing {missing}, extra {extra})")
    for e in t.edges:
        if w[e].shape != t.shape(e):
            raise DimensionMismatch(f"weight {e} has shape {w[e].shape}, expected {t.shape(e)}")


def zeros_like_topology(t: DagTopology) -> WeightSet:
    return {e: np.zeros(t.shape(e)) for e in t.edges}


def init_weights(t: DagTopology, rng: np.random.Generator, scale: float = 1.0) -> WeightSet:
    """Gaussian weights with std ``scale / sqrt(fan_in)`` per target layer.

    Fan-in counts every incoming edge, so skip connections do not inflate the
    variance of ``S_j``. Draws happen in edge order for reproducibility.
    """
    fan_in = {j: sum(t.layer_widths[i] for i, _ in t.incoming(j)) for j in range(1, t.depth + 1)}
    return {
        e: rng.normal(0.0, scale / np.sqrt(fan_in[e[1]]), size=t.shape(e)) for e in t.edges
    }


def copy_weights(w: WeightSet) -> WeightSet:
    return {e: m.copy() for e, m in w.items()}


def max_abs_weight(w: WeightSet) -> float:
    return max((float(np.max(np.abs(m))) for m in w.values()), default=0.0)


def _as_input(t: DagTopology, x, dtype=np.float64) -> np.ndarray:
    x = np.asarray(x, dtype=dtype)
    if x.ndim not in (1, 2) or x.shape[-1] != t.layer_widths[0]:
        raise DimensionMismatch(
            f"input has shape {x.shape}, expected (..., {t.layer_widths[0]})"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteValue("input contains non-finite values")
    return x


def propagate(
    t: DagTopology,
    w: WeightSet,
    a: Activation,
    known: dict[int, np.ndarray],
    layers: Iterable[int],
) -> tuple[dict[int, np.ndarray], dict[int, np.ndarray]]:
    """Evaluate ``layers`` in the given order, seeded with outputs in ``known``.

    Returns ``(S, H)`` dicts. Every source layer must be available by the time
    its target is evaluated; incoming edges are summed in ascending source
    order so results do not depend on the evaluation order of independent
    layers.
    """
    H = dict(known)
    S: dict[int, np.ndarray] = {}
    for j in layers:
        acc = None
        for i, _ in t.incoming(j):
            if i not in H:
                raise DimensionMismatch(f"layer {i} needed by layer {j} has not been evaluated")
            term = H[i] @ w[(i, j)]
            acc = term if acc is None else acc + term
        if not np.all(np.isfinite(acc)):
            raise NonFiniteValue(f"non-finite pre-activation at layer {j}")
        S[j] = acc
        H[j] = a.fn(acc)
    return S, H


def forward(
    t: DagTopology,
    w: WeightSet,
    a: Activation,
    x,
    order: Optional[Sequence[int]] = None,
    dtype=np.float64,
) -> ForwardTrace:
    """Run the network on ``x``.

    ``order`` optionally overrides the layer evaluation order; it must be a
    topological order of layers ``1..L``. ``dtype`` is float64 everywhere
    except the finite-difference oracle, which runs in extended precision.
    """
    x = _as_input(t, x, dtype)
    check_weights(t, w)
    layers = list(order) if order is not None else list(range(1, t.depth + 1))
    if sorted(layers) != list(range(1, t.depth + 1)):
        raise DimensionMismatch(f"order {layers} is not a permutation of layers 1..{t.depth}")
    S, H = propagate(t, w, a, {0: x}, layers)
    return ForwardTrace(
        S=[None] + [S[j] for j in range(1, t.depth + 1)],
        H=[H[j] for j in range(t.depth + 1)],
    )


def forward_increment(
    t: DagTopology, w: WeightSet, dv: WeightSet, a: Activation, trace: ForwardTrace
) -> tuple[list[Optional[np.ndarray]], list[np.ndarray]]:
    """Change of every ``S_j`` and ``H_j`` when the weights move from ``w`` to ``w + dv``.

    Increments are propagated directly (``dS_j = sum dH_i (v + dv) + H_i dv``,
    ``dH_j = g(S_j + dS_j) - g(S_j)`` via a cancellation-free identity), so
    they keep full relative precision even when they are far below the
    rounding error of ``H_j`` itself. ``trace`` must come from ``w``.
    """
    H = trace.H
    dH: list[np.ndarray] = [np.zeros_like(H[0])]
    dS: list[Optional[np.ndarray]] = [None]
    for j in range(1, t.depth + 1):
        acc = None
        for i, _ in t.incoming(j):
            e = (i, j)
            term = dH[i] @ (w[e] + dv[e]) + H[i] @ dv[e]
            acc = term if acc is None else acc + term
        dS.append(acc)
        dH.append(a.increment(trace.S[j], acc))
    return dS, dH


def predict(t: DagTopology, w: WeightSet, a: Activation, x) -> np.ndarray:
    return forward(t, w, a, x).output


def _as_targets(t: DagTopology, d, n_rows: int, dtype=np.float64) -> np.ndarray:
    d = np.atleast_2d(np.asarray(d, dtype=dtype))
    if d.shape != (n_rows, t.layer_widths[-1]):
        raise DimensionMismatch(
            f"targets have shape {d.shape}, expected ({n_rows}, {t.layer_widths[-1]})"
        )
    return d


def error_from_output(y, d):
    """``sum_p ||d_p - y_p||^2 / 2``; numpy's pairwise summation fixes the order."""
    r = np.asarray(d) - np.asarray(y)
    return 0.5 * np.sum(np.square(r))


def batch_error(
    t: DagTopology, w: WeightSet, a: Activation, inputs, targets, dtype=np.float64
):
    """Total quadratic error over a batch of samples.

    Returns a Python float for float64 and a numpy scalar of ``dtype`` otherwise.
    """
    x = np.atleast_2d(_as_input(t, inputs, dtype))
    if x.shape[0] < 1:
        raise DimensionMismatch("need at least one sample")
    d = _as_targets(t, targets, x.shape[0], dtype)
    E = error_from_output(forward(t, w, a, x, dtype=dtype).output, d)
    return float(E) if dtype == np.float64 else E


def save_weights(path: str | Path, t: DagTopology, w: WeightSet, kind: str = "weights") -> None:
    """Write an ``.npz`` container keyed ``v_i_j`` with the topology hash embedded."""
    check_weights(t, w)
    arrays = {f"v_{i}_{j}": np.ascontiguousarray(w[(i, j)]) for i, j in t.edges}
    np.savez(
        path,
        __topology__=np.array(t.serialize()),
        __topology_hash__=np.array(t.fingerprint()),
        __kind__=np.array(kind),
        **arrays,
    )


def load_weights(path: str | Path, t: DagTopology) -> WeightSet:
    with np.load(path, allow_pickle=False) as data:
        stored = str(data["__topology_hash__"])
        if stored != t.fingerprint():
            raise KeyMismatch(
                f"weight file was written for topology {stored}, not {t.fingerprint()}"
            )
        w = {}
        for name in data.files:
            if name.startswith("v_"):
                _, i, j = name.split("_")
                w[(int(i), int(j))] = data[name].astype(np.float64)
    check_weights(t, w)
    return w


def load_topology_from_weights(path: str | Path) -> DagTopology:
    from . import topology

    with np.load(path, allow_pickle=False) as data:
        return topology.loads(str(data["__topology__"]))
