import math

import numpy as np
import pytest

import oracles
from dagprop import activations as act
from dagprop import gradients, network, topology as topo
from dagprop.errors import KeyMismatch, TraceMismatch


def sample(t, rng, n=3):
    return rng.uniform(-1, 1, (n, t.layer_widths[0])), rng.uniform(-0.8, 0.8, (n, t.layer_widths[-1]))


class TestBackward:
    def test_zero_residual(self, rng):
        t = topo.dense([3, 4, 2])
        w = network.init_weights(t, rng)
        x = rng.normal(size=(4, 3))
        g = gradients.gradients(t, w, act.TANH, x, network.predict(t, w, act.TANH, x))
        assert gradients.gradient_norm_sq(g) == 0.0

    def test_scalar_skip_net(self):
        t = topo.validate([1, 1, 1], [(0, 1), (1, 2), (0, 2)])
        w = {e: np.ones((1, 1)) for e in t.edges}
        g = gradients.gradients(t, w, act.TANH, [[1.0]], [[0.0]])
        fd = gradients.finite_difference_gradients(t, w, act.TANH, [[1.0]], [[0.0]])
        assert gradients.max_relative_error(g, fd) < 1e-6
        # closed form: y = tanh(tanh(v01) v12 + v02), dE/dv02 = y (1 - y^2)
        y = math.tanh(math.tanh(1.0) + 1.0)
        assert g[(0, 2)].item() == pytest.approx(y * (1 - y * y), rel=1e-14)
        assert g[(1, 2)].item() == pytest.approx(y * (1 - y * y) * math.tanh(1.0), rel=1e-14)

    def test_zero_source_layer(self, rng):
        t = topo.validate([2, 3, 2], [(0, 1), (1, 2), (0, 2)])
        w = network.init_weights(t, rng)
        w[(0, 1)] = np.zeros((2, 3))  # H_1 = tanh(0) = 0
        g = gradients.gradients(t, w, act.TANH, *sample(t, rng))
        assert np.all(g[(1, 2)] == 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_chain_matches_textbook(self, seed):
        rng = np.random.default_rng(seed)
        t = topo.chain([3, 4, 3, 2])
        w = network.init_weights(t, rng)
        x, d = rng.normal(size=3), rng.normal(size=2)
        g = gradients.gradients(t, w, act.TANH, x, d)
        ref = oracles.chain_backprop(
            [w[e].tolist() for e in t.edges], x.tolist(), d.tolist(),
            math.tanh, lambda s: 1 - math.tanh(s) ** 2,
        )
        for e, r in zip(t.edges, ref):
            np.testing.assert_allclose(g[e], np.array(r), rtol=1e-12, atol=1e-15)

    def test_batch_is_sum(self, rng):
        t = topo.dense([3, 3, 2])
        w = network.init_weights(t, rng)
        x, d = sample(t, rng, 8)
        total = gradients.gradients(t, w, act.TANH, x, d)
        parts = [gradients.gradients(t, w, act.TANH, x[p], d[p]) for p in range(8)]
        for e in t.edges:
            np.testing.assert_allclose(total[e], sum(p[e] for p in parts), rtol=1e-12, atol=1e-15)

    def test_output_adjoint_affine_in_target(self, rng):
        t = topo.dense([2, 3, 2])
        w = network.init_weights(t, rng)
        x = rng.normal(size=(1, 2))
        trace = network.forward(t, w, act.TANH, x)
        d1, d2 = rng.normal(size=(1, 2)), rng.normal(size=(1, 2))
        a, b = 0.3, 0.7
        L = t.depth
        mix = gradients.backward(t, w, act.TANH, trace, a * d1 + b * d2).delta[L]
        parts = a * gradients.backward(t, w, act.TANH, trace, d1).delta[L] + b * gradients.backward(
            t, w, act.TANH, trace, d2
        ).delta[L]
        np.testing.assert_allclose(mix, parts, rtol=1e-12, atol=1e-15)

    def test_trace_mismatch(self, rng):
        t = topo.dense([2, 3, 2])
        other = topo.dense([2, 4, 2])
        w = network.init_weights(other, rng)
        trace = network.forward(other, w, act.TANH, [[0.1, 0.2]])
        with pytest.raises((TraceMismatch, KeyMismatch)):
            gradients.backward(t, network.init_weights(t, rng), act.TANH, trace, [[0.0, 0.0]])


class TestFiniteDifference:
    def test_zero_residual(self, rng):
        t = topo.dense([2, 3, 1])
        w = network.init_weights(t, rng)
        x = rng.normal(size=(3, 2))
        fd = gradients.finite_difference_gradients(t, w, act.TANH, x, network.predict(t, w, act.TANH, x))
        assert max(np.max(np.abs(m)) for m in fd.q.values()) < 1e-12

    def test_linear_closed_form(self):
        t = topo.chain([2, 1])
        v = np.array([[0.5], [-1.5]])
        x, d = np.array([2.0, 1.0]), 3.0
        g = gradients.gradients(t, {(0, 1): v}, act.LINEAR, x, [d])
        fd = gradients.finite_difference_gradients(t, {(0, 1): v}, act.LINEAR, x, [d])
        closed = -x[:, None] * (d - x @ v)
        np.testing.assert_allclose(g[(0, 1)], closed, rtol=1e-15)
        np.testing.assert_allclose(fd[(0, 1)], closed, rtol=1e-9)

    def test_rejects_bad_step(self, rng):
        t = topo.chain([1, 1])
        with pytest.raises(ValueError):
            gradients.finite_difference_gradients(t, {(0, 1): np.ones((1, 1))}, act.TANH, [[1.0]], [[0.0]], h=0)


class TestNorms:
    def test_examples(self, rng):
        assert gradients.gradient_norm_sq({(0, 1): np.zeros((2, 2))}) == 0.0
        assert gradients.gradient_norm_sq({(0, 1): np.array([[3.0], [4.0]])}) == 25.0
        q = {(0, 1): rng.normal(size=(3, 2)), (1, 2): rng.normal(size=(2, 4))}
        brute = math.fsum(v * v for m in q.values() for v in m.ravel().tolist())
        assert gradients.gradient_norm_sq(q) == pytest.approx(brute, rel=1e-14)

    def test_relative_error_keys(self):
        a = gradients.GradientSet({(0, 1): np.ones((1, 1))})
        b = gradients.GradientSet({(0, 2): np.ones((1, 1))})
        with pytest.raises(KeyMismatch):
            gradients.max_relative_error(a, b)
