import math

import numpy as np
import pytest

from dagprop import activations as act
from dagprop import convergence as conv
from dagprop import network, problems, topology as topo, training
from dagprop.errors import InsufficientData, UnboundedRatio


def record(k=0, E=1.0, q=1.0, dv=0.0, dH=0.0, Q=-0.01, dE=-0.01, w=1.0):
    return conv.IterationRecord(k, E, q, dv, dH, Q, dE, w)


@pytest.fixture(scope="module")
def small_run():
    t = topo.dense([2, 4, 3, 1])
    p = problems.vertex_problem(t, 20, 0)
    return training.train(t, p.weights, p.activation, p.inputs, p.targets, 1e-2, 0.5, 300)


class TestPredictor:
    def test_first_step(self, rng):
        q = {(0, 1): rng.normal(size=(2, 3)), (1, 2): rng.normal(size=(3, 1))}
        eta = 0.03
        got = conv.first_order_predictor(q, {e: -eta * m for e, m in q.items()})
        assert got == pytest.approx(-eta * sum(np.sum(m * m) for m in q.values()), rel=1e-14)

    def test_zero(self):
        assert conv.first_order_predictor({(0, 1): np.zeros((2, 2))}, {(0, 1): np.ones((2, 2))}) == 0.0

    def test_brute_force(self, rng):
        q = {(0, 1): rng.normal(size=(2, 3)), (0, 2): rng.normal(size=(2, 2))}
        dv = {e: rng.normal(size=m.shape) for e, m in q.items()}
        brute = math.fsum(a * b for e in q for a, b in zip(q[e].ravel().tolist(), dv[e].ravel().tolist()))
        assert conv.first_order_predictor(q, dv) == pytest.approx(brute, rel=1e-13)


class TestDescentInequality:
    def test_first_step_holds(self):
        eta = 0.1
        assert conv.check_descent_inequality(record(q=2.0, Q=-eta * 2.0), eta, 0.5)

    def test_zero_gradient(self):
        assert conv.check_descent_inequality(record(q=0.0, Q=0.0), 0.1, 0.5)

    def test_adversarial(self):
        assert not conv.check_descent_inequality(record(q=1.0, Q=1.0), 0.1, 0.5)

    def test_increment_bound_checker(self):
        r = record()
        r.q_sq = {(0, 1): 1.0, (1, 2): 1.0}
        r.dv_sq = {(0, 1): 0.15**2, (1, 2): 0.16**2}
        assert conv.lemma2_increment_violations(r, 0.1, 0.5) == [(1, 2)]


class TestEstimateC:
    def test_stationary(self):
        traj = [record(k=k, q=0.0, Q=0.0, dE=0.0) for k in range(5)]
        with pytest.raises(InsufficientData):
            conv.estimate_C(traj)
        with pytest.raises(InsufficientData):
            conv.estimate_C([record()])

    def test_unbounded(self):
        traj = [record(k=0, dv=0.0, dH=0.0, Q=0.0, dE=1e-3), record(k=1, dv=1.0, dH=1.0)]
        with pytest.raises(UnboundedRatio):
            conv.estimate_C(traj)

    def test_value(self):
        traj = [record(k=0, dv=1.0, dH=1.0, Q=-1.0, dE=-0.5), record(k=1, dv=0.5, dH=0.5, Q=-0.2, dE=-0.1)]
        assert conv.estimate_C(traj) == pytest.approx(0.25)

    def test_step_size_scale_invariance(self):
        # halving eta on a fixed problem leaves the second-order ratio of the same order
        t = topo.dense([2, 4, 3, 1])
        p = problems.vertex_problem(t, 20, 1)
        cs = []
        for eta in (2e-3, 1e-3):
            r = training.train(t, p.weights, p.activation, p.inputs, p.targets, eta, 0.5, 50)
            cs.append(conv.estimate_C(r.records))
        assert 0.1 < cs[0] / cs[1] < 10


class TestVerdict:
    def test_standard_run(self, small_run):
        v = conv.verify_theorem1(small_run.records, 1e-2, 0.5)
        assert v.monotone_descent and v.descent_inequality_violations == 0
        assert v.theorem_applies and v.tail_converged and v.converged
        assert set(v.summary()) >= {"monotone_descent", "estimated_C", "converged"}

    def test_huge_eta_reported(self):
        t = topo.dense([2, 4, 3, 1])
        p = problems.vertex_problem(t, 20, 0)
        r = training.train(t, p.weights, p.activation, p.inputs, p.targets, 10.0, 0.5, 50)
        v = conv.verify_theorem1(r.records, 10.0, 0.5)
        assert not v.monotone_descent
        assert v.first_violation_k is not None
        assert not v.converged

    def test_critical_point(self):
        t = topo.dense([2, 3, 1])
        w = network.zeros_like_topology(t)
        x = np.random.default_rng(0).normal(size=(5, 2))
        r = training.train(t, w, act.TANH, x, np.zeros((5, 1)), 0.1, 0.5, 20)
        v = conv.verify_theorem1(r.records, 0.1, 0.5)
        assert v.monotone_descent and v.tail_converged and v.converged
        assert v.gradient_tail_norm == 0.0

    def test_explicit_C_precondition(self, small_run):
        assert not conv.verify_theorem1(small_run.records, 1e-2, 0.5, C_used=1e3).theorem_applies
        assert conv.verify_theorem1(small_run.records, 1e-2, 0.5, C_used=1.0).theorem_applies

    def test_empty(self):
        with pytest.raises(InsufficientData):
            conv.verify_theorem1([], 0.1, 0.5)


class TestCsv:
    def test_round_trip(self, small_run, tmp_path):
        conv.write_trajectory_csv(tmp_path / "t.csv", small_run.records, {"eta": 0.01, "s": 0.5})
        back, header = conv.read_trajectory_csv(tmp_path / "t.csv")
        assert header == {"eta": "0.01", "s": "0.5"}
        cols = conv.CSV_COLUMNS
        assert (tmp_path / "t.csv").read_text().splitlines()[1] == ",".join(cols)
        for a, b in zip(small_run.records, back):
            assert all(getattr(a, c) == getattr(b, c) for c in cols)
        v1 = conv.verify_theorem1(small_run.records, 0.01, 0.5)
        v2 = conv.verify_theorem1(back, 0.01, 0.5)
        assert v1.summary() == v2.summary()
