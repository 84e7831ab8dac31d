"""Autoencoders on layered DAGs whose edges never cross the code layer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activations import Activation
from .errors import CodeCutViolation, DimensionMismatch, TopologyError
from .network import WeightSet, batch_error, check_weights, propagate
from .topology import DagTopology, validate


@dataclass
class CompressionModel:
    topology: DagTopology
    weights: WeightSet
    activation: Activation

    def __post_init__(self):
        t = self.topology
        if t.code_layer is None:
            raise TopologyError("compression models need a topology with a code layer")
        # re-run validation: catches hand-built topologies that skipped it
        validate(t.layer_widths, t.edges, t.code_layer)
        check_weights(t, self.weights)

    @property
    def code_layer(self) -> int:
        return self.topology.code_layer

    @property
    def code_width(self) -> int:
        return self.topology.layer_widths[self.code_layer]


def crossencoder_topology(widths: Sequence[int], code_layer: int) -> DagTopology:
    """All forward pairs inside the encoder block ``0..c`` and decoder block ``c..L``."""
    L = len(widths) - 1
    enc = [(i, j) for j in range(1, code_layer + 1) for i in range(j)]
    dec = [(i, j) for j in range(code_layer + 1, L + 1) for i in range(code_layer, j)]
    return validate(widths, enc + dec, code_layer)


def symmetric_widths(input_width: int, hidden: Sequence[int], code: int) -> list[int]:
    """``[input, *hidden, code, *reversed(hidden), input]``."""
    return [input_width, *hidden, code, *reversed(hidden), input_width]


def _batch(x, width: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != width or x.ndim not in (1, 2):
        raise DimensionMismatch(f"{what} has shape {x.shape}, expected (..., {width})")
    return x


def encode(m: CompressionModel, x) -> np.ndarray:
    """Code-layer output ``H_c``; only layers ``1..c`` are evaluated."""
    t = m.topology
    x = _batch(x, t.layer_widths[0], "input")
    _, H = propagate(t, m.weights, m.activation, {0: x}, range(1, m.code_layer + 1))
    return H[m.code_layer]


def decode(m: CompressionModel, code) -> np.ndarray:
    """Reconstruction from a code vector; only layers ``c+1..L`` are evaluated."""
    t = m.topology
    code = _batch(code, m.code_width, "code")
    _, H = propagate(t, m.weights, m.activation, {m.code_layer: code}, range(m.code_layer + 1, t.depth + 1))
    return H[t.depth]


def reconstruction_error(m: CompressionModel, dataset) -> float:
    """Quadratic error with each sample as its own target."""
    x = np.atleast_2d(_batch(getattr(dataset, "samples", dataset), m.topology.layer_widths[0], "dataset"))
    return batch_error(m.topology, m.weights, m.activation, x, x)


def assert_cut_respected(t: DagTopology, w: WeightSet) -> None:
    """Raise if any weight matrix sits on an edge crossing the code layer."""
    c = t.code_layer
    crossing = [e for e in w if e[0] < c < e[1]]
    if crossing:
        raise CodeCutViolation(f"weights exist on cut-crossing edges {crossing}")
