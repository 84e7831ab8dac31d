"""Layered DAG architectures and their validation.

Layers are numbered ``0..L`` in topological order; an edge ``(i, j)`` carries
a weight matrix of shape ``(widths[i], widths[j])`` and always has ``i < j``.
Edges that are absent are structural zeros and never trained.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import kvfile
from .errors import (
    CodeCutViolation,
    CodeDimension,
    CyclicOrBackwardEdge,
    DeadLayer,
    TopologyError,
)

Edge = tuple[int, int]


@dataclass(frozen=True)
class DagTopology:
    """A validated layered DAG. Build instances through :func:`validate`."""

    layer_widths: tuple[int, ...]
    edges: tuple[Edge, ...]
    code_layer: Optional[int] = None

    @property
    def depth(self) -> int:
        """Index ``L`` of the output layer."""
        return len(self.layer_widths) - 1

    def incoming(self, j: int) -> list[Edge]:
        """Edges into layer ``j``, ascending by source layer."""
        return [e for e in self.edges if e[1] == j]

    def outgoing(self, i: int) -> list[Edge]:
        """Edges out of layer ``i``, ascending by target layer."""
        return [e for e in self.edges if e[0] == i]

    def shape(self, edge: Edge) -> tuple[int, int]:
        return self.layer_widths[edge[0]], self.layer_widths[edge[1]]

    @property
    def n_weights(self) -> int:
        return sum(self.layer_widths[i] * self.layer_widths[j] for i, j in self.edges)

    @property
    def skip_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e[1] > e[0] + 1)

    def to_dict(self) -> dict:
        return {
            "widths": list(self.layer_widths),
            "edges": [list(e) for e in self.edges],
            "code_layer": self.code_layer,
        }

    def serialize(self) -> str:
        return kvfile.dumps(self.to_dict())

    def fingerprint(self) -> str:
        """Short stable hash, embedded in weight files to catch mismatched loads."""
        return hashlib.sha256(self.serialize().encode()).hexdigest()[:16]


def validate(
    layer_widths: Sequence[int],
    edges: Iterable[Sequence[int]],
    code_layer: Optional[int] = None,
) -> DagTopology:
    """Check a raw description and return an immutable :class:`DagTopology`.

    Raises:
        TopologyError: malformed widths or edges referencing missing layers.
        CyclicOrBackwardEdge: an edge ``(i, j)`` with ``i >= j``.
        DeadLayer: a layer without inputs (other than 0) or outputs (other than L).
        CodeCutViolation: with ``code_layer`` set, an edge crossing it.
        CodeDimension: the code layer is not narrower than the input, or the
            output width differs from the input width.
    """
    widths = tuple(int(w) for w in layer_widths)
    if len(widths) < 2:
        raise TopologyError("need at least an input and an output layer (L >= 1)")
    if any(w < 1 for w in widths):
        raise TopologyError(f"layer widths must be positive, got {list(widths)}")
    L = len(widths) - 1

    edge_set: set[Edge] = set()
    for raw in edges:
        if len(raw) != 2:
            raise TopologyError(f"edge must be a pair, got {raw!r}")
        i, j = int(raw[0]), int(raw[1])
        if i >= j:
            raise CyclicOrBackwardEdge(f"edge ({i},{j}) does not point to a higher layer")
        if i < 0 or j > L:
            raise TopologyError(f"edge ({i},{j}) references a layer outside 0..{L}")
        edge_set.add((i, j))
    ordered = tuple(sorted(edge_set, key=lambda e: (e[1], e[0])))

    for j in range(1, L + 1):
        if not any(e[1] == j for e in ordered):
            raise DeadLayer(f"layer {j} has no incoming edge")
    for i in range(L):
        if not any(e[0] == i for e in ordered):
            raise DeadLayer(f"layer {i} has no outgoing edge")

    if code_layer is not None:
        c = int(code_layer)
        if not 0 < c < L:
            raise CodeDimension(f"code layer must satisfy 0 < c < {L}, got {c}")
        crossing = [e for e in ordered if e[0] < c < e[1]]
        if crossing:
            raise CodeCutViolation(f"edges {crossing} cross code layer {c}")
        if widths[c] >= widths[0]:
            raise CodeDimension(f"code width {widths[c]} must be below input width {widths[0]}")
        if widths[L] != widths[0]:
            raise CodeDimension(f"output width {widths[L]} must equal input width {widths[0]}")
        code_layer = c

    return DagTopology(widths, ordered, code_layer)


def sequential_counterpart(t: DagTopology) -> DagTopology:
    """Same widths and code layer, edges reduced to the chain ``(i, i+1)``."""
    chain = [(i, i + 1) for i in range(t.depth)]
    return validate(t.layer_widths, chain, t.code_layer)


def dense(layer_widths: Sequence[int]) -> DagTopology:
    """Every forward pair ``(i, j)`` with ``i < j`` connected."""
    L = len(layer_widths) - 1
    return validate(layer_widths, [(i, j) for j in range(1, L + 1) for i in range(j)])


def chain(layer_widths: Sequence[int]) -> DagTopology:
    L = len(layer_widths) - 1
    return validate(layer_widths, [(i, i + 1) for i in range(L)])


def from_dict(entries: dict) -> DagTopology:
    try:
        widths = entries["widths"]
        edges = entries["edges"]
    except KeyError as exc:
        raise TopologyError(f"topology description is missing {exc.args[0]!r}") from None
    if not isinstance(widths, list) or not isinstance(edges, list):
        raise TopologyError("'widths' and 'edges' must be lists")
    return validate(widths, edges, entries.get("code_layer"))


def loads(text: str) -> DagTopology:
    return from_dict(kvfile.loads(text))


def load(path: str | Path) -> DagTopology:
    return from_dict(kvfile.load(path))


def save(t: DagTopology, path: str | Path) -> None:
    Path(path).write_text(t.serialize())
