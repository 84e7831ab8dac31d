"""Scalar activations with analytic first and second derivatives.

Only bounded functions with bounded first and second derivatives are offered
by default. ``linear`` exists for closed-form sanity checks and must be
requested with ``unchecked=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DomainError, NonFiniteInput

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Activation:
    name: str
    fn: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    # sup |g|, sup |g'|, sup |g''| over the real line
    bounds: tuple[float, float, float]
    # g(s + b) - g(s) without cancellation, for tiny b
    increment: Callable[[np.ndarray, np.ndarray], np.ndarray]
    checked: bool = True

    def __call__(self, s):
        return self.fn(s)


def _sech_sq(s):
    # 1 / cosh^2 keeps full relative precision in the tails, where 1 - tanh^2 cancels
    with np.errstate(over="ignore"):
        return 1.0 / np.square(np.cosh(s))


def _tanh_d1(s):
    return _sech_sq(s)


def _tanh_d2(s):
    return -2.0 * np.tanh(s) * _sech_sq(s)


def _tanh_inc(s, b):
    tb = np.tanh(b)
    return tb * _sech_sq(s) / (1.0 + np.tanh(s) * tb)


def _logistic_d1(s):
    return expit(s) * expit(-s)


def _logistic_d2(s):
    # 1 - 2 sigma(s) = -tanh(s / 2)
    return -expit(s) * expit(-s) * np.tanh(0.5 * s)


def _logistic_inc(s, b):
    return expit(s + b) * expit(-s) * -np.expm1(-b)


_ATAN_SCALE = 2.0 / math.pi


def _atan(s):
    return _ATAN_SCALE * np.arctan(s)


def _atan_d1(s):
    return _ATAN_SCALE / (1.0 + np.square(s))


def _atan_d2(s):
    return -_ATAN_SCALE * 2.0 * s / np.square(1.0 + np.square(s))


def _atan_inc(s, b):
    return _ATAN_SCALE * np.arctan2(b, 1.0 + s * (s + b))


TANH = Activation(
    "tanh", np.tanh, _tanh_d1, _tanh_d2, (1.0, 1.0, 4.0 / (3.0 * math.sqrt(3.0))), _tanh_inc
)
# sigma'' peaks at sigma = 1/2 -+ 1/(2 sqrt 3)
LOGISTIC = Activation(
    "logistic", expit, _logistic_d1, _logistic_d2, (1.0, 0.25, 1.0 / (6.0 * math.sqrt(3.0))), _logistic_inc
)
# g'' peaks at s = 1/sqrt(3)
SCALED_ARCTAN = Activation(
    "scaled-arctan",
    _atan,
    _atan_d1,
    _atan_d2,
    (1.0, _ATAN_SCALE, _ATAN_SCALE * 9.0 / (8.0 * math.sqrt(3.0))),
    _atan_inc,
)
LINEAR = Activation(
    "linear",
    lambda s: np.asarray(s, dtype=float) * 1.0,
    lambda s: np.ones_like(np.asarray(s, dtype=float)),
    lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    (math.inf, 1.0, 0.0),
    lambda s, b: np.asarray(b, dtype=float) * 1.0,
    checked=False,
)

_REGISTRY = {
    "tanh": TANH,
    "logistic": LOGISTIC,
    "logistic-sigmoid": LOGISTIC,
    "sigmoid": LOGISTIC,
    "scaled-arctan": SCALED_ARCTAN,
    "arctan": SCALED_ARCTAN,
    "linear": LINEAR,
}

CHECKED_NAMES = ("tanh", "logistic", "scaled-arctan")


def get(name: str, unchecked: bool = False) -> Activation:
    """Look up an activation by name.

    ``linear`` violates the boundedness requirement and is refused unless
    ``unchecked`` is set.
    """
    try:
        act = _REGISTRY[name.lower()]
    except KeyError:
        raise DomainError(f"unknown activation {name!r}; choose from {CHECKED_NAMES}") from None
    if not act.checked and not unchecked:
        raise DomainError(f"activation {name!r} is unbounded; pass unchecked=True to use it")
    return act


def _finite(s):
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("activation argument is not finite")
    return arr


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def apply(a: Activation, s):
    arr = _finite(s)
    return _unwrap(a.fn(arr), s)


def derivative(a: Activation, s):
    arr = _finite(s)
    return _unwrap(a.d1(arr), s)


def second_derivative(a: Activation, s):
    arr = _finite(s)
    return _unwrap(a.d2(arr), s)
