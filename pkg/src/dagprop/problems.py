"""Small seeded regression problems used to exercise the convergence checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import Activation, TANH
from .network import WeightSet, init_weights, predict
from .topology import DagTopology


@dataclass
class Problem:
    topology: DagTopology
    activation: Activation
    inputs: np.ndarray
    targets: np.ndarray
    weights: WeightSet


def teacher_problem(
    t: DagTopology,
    n_samples: int,
    seed: int,
    activation: Activation = TANH,
    teacher_scale: float = 1.0,
    student_scale: float = 0.5,
) -> Problem:
    """Inputs uniform on ``[-1, 1]``, targets from a random teacher of the same shape.

    The student starts from an independent random draw, so the optimum is
    realisable but not the starting point.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n_samples, t.layer_widths[0]))
    teacher = init_weights(t, rng, teacher_scale)
    d = predict(t, teacher, activation, x)
    student = init_weights(t, rng, student_scale)
    return Problem(t, activation, x, d, student)


def vertex_problem(
    t: DagTopology,
    n_samples: int,
    seed: int,
    activation: Activation = TANH,
    target_range: float = 0.8,
    student_scale: float = 0.5,
) -> Problem:
    """Inputs drawn from the vertices of ``[-1, 1]^l0``, targets uniform in ``+-target_range``.

    Repeated vertices carry different targets, so the minimum error is
    positive and fits the per-vertex target means. A handful of distinct
    inputs keeps the curvature at the minimum well conditioned, which is what
    lets full-batch descent drive the gradient to round-off within a few
    thousand steps.
    """
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], size=(n_samples, t.layer_widths[0]))
    d = rng.uniform(-target_range, target_range, size=(n_samples, t.layer_widths[-1]))
    w = init_weights(t, rng, student_scale)
    return Problem(t, activation, x, d, w)
