"""Control-law tests: barrier gain shape, scalar/matrix-form equivalence,
bias boundedness, rendezvous behavior (simulation oracle), and the obstacle
potential field."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from connsim import control, estimator, graph
from connsim.control import ControlParams, FormationSpec, ObstacleField


def connected_state(rng, n=5):
    params = graph.RangeParams()
    p = rng.uniform(-1.2, 1.2, size=(n, 2))
    g = graph.build_graph(p, params)
    nu = rng.normal(size=n)
    received = np.tile(nu, (n, 1))
    return p, g, nu, received, params.sigma


class TestCsch2:
    def test_known_value(self):
        assert control.csch2(1.0) == pytest.approx(1.0 / math.sinh(1.0) ** 2)

    def test_clamped_below_minimum(self):
        assert control.csch2(-5.0, 1e-3) == control.csch2(1e-3, 1e-3)
        assert control.csch2(0.0, 1e-3) == control.csch2(1e-3, 1e-3)

    def test_monotone_decreasing(self):
        x = np.linspace(0.1, 5.0, 50)
        y = control.csch2(x)
        assert np.all(np.diff(y) < 0.0)

    def test_vanishes_at_infinity(self):
        assert control.csch2(40.0) < 1e-30


class TestSaturate:
    @given(hnp.arrays(np.float64, (4, 2),
                      elements=st.floats(-1e6, 1e6)),
           st.floats(1e-3, 1e3))
    @settings(max_examples=50, deadline=None)
    def test_norms_bounded_and_direction_kept(self, u, cap):
        out = control.saturate(u, cap)
        norms = np.linalg.norm(out, axis=1)
        assert np.all(norms <= cap * (1.0 + 1e-12))
        for row_in, row_out in zip(u, out):
            n_in = np.linalg.norm(row_in)
            if n_in <= cap:
                assert np.array_equal(row_in, row_out)
            elif n_in > 0:
                cos = row_in @ row_out / (n_in * np.linalg.norm(row_out))
                assert cos == pytest.approx(1.0, abs=1e-9)


class TestParams:
    @pytest.mark.parametrize("kwargs", [dict(epsilon_bar=0.0),
                                        dict(epsilon_tilde=-1.0),
                                        dict(k_margin=1.0),
                                        dict(gamma=0.0),
                                        dict(u_c_max=0.0),
                                        dict(csch_arg_min=0.0)])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ControlParams(**kwargs)

    def test_default_bias_floor_above_barrier_floor(self):
        # the frozen bias argument k_margin*eps_tilde - eps_bar must stay
        # positive or the bias blows up through the csch^2 clamp
        p = ControlParams()
        assert p.k_margin * p.epsilon_tilde > p.epsilon_bar


class TestConnectivityControl:
    def test_scalar_equals_modified_laplacian_row(self):
        rng = np.random.default_rng(1)
        cp = ControlParams(u_c_max=1e12)  # saturation off for the identity
        for _ in range(20):
            p, g, nu, received, sigma = connected_state(rng)
            l2i = rng.uniform(0.3, 5.0, size=5)
            grads = estimator.lambda2_gradient_local_all(
                nu, received, p, g.weights, sigma)
            u = control.connectivity_control_all(l2i, grads, cp)
            abar = control.modified_weight_matrix(l2i, nu, received,
                                                  g.weights, cp, sigma)
            lbar = np.diag(abar.sum(1)) - abar
            assert np.max(np.abs(u - (-lbar @ p))) < 1e-12

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(2)
        p, g, nu, received, sigma = connected_state(rng)
        cp = ControlParams()
        l2i = rng.uniform(0.3, 5.0, size=5)
        grads = estimator.lambda2_gradient_local_all(
            nu, received, p, g.weights, sigma)
        u_all = control.connectivity_control_all(l2i, grads, cp)
        for i in range(5):
            u_i = control.connectivity_control(l2i[i], grads[i], cp)
            assert np.allclose(u_i, u_all[i], atol=1e-15)

    def test_attractive_toward_neighbors(self):
        # u^c is a nonnegative combination of (p_j - p_i): two agents always
        # pull together, never apart
        params = graph.RangeParams()
        p = np.array([[0.0, 0.0], [2.0, 0.0]])
        g = graph.build_graph(p, params)
        nu = np.array([0.5, -0.5])
        received = np.tile(nu, (2, 1))
        grads = estimator.lambda2_gradient_local_all(
            nu, received, p, g.weights, params.sigma)
        u = control.connectivity_control_all(np.array([0.5, 0.5]), grads,
                                             ControlParams())
        assert u[0, 0] > 0.0 and u[1, 0] < 0.0

    def test_saturation_respected(self):
        u = control.connectivity_control(0.05, np.array([1e9, 0.0]),
                                         ControlParams(u_c_max=7.0))
        assert np.linalg.norm(u) == pytest.approx(7.0)

    def test_gain_negligible_when_well_connected(self):
        u = control.connectivity_control(30.0, np.array([1.0, 1.0]),
                                         ControlParams())
        assert np.linalg.norm(u) < 1e-20


class TestModifiedWeights:
    def test_scalar_matches_matrix(self):
        rng = np.random.default_rng(3)
        p, g, nu, received, sigma = connected_state(rng)
        cp = ControlParams()
        l2i = rng.uniform(0.3, 5.0, size=5)
        abar = control.modified_weight_matrix(l2i, nu, received, g.weights,
                                              cp, sigma)
        for i in range(5):
            for j in range(5):
                w = control.modified_edge_weight(l2i[i], nu[i], received[i, j],
                                                 g.weights[i, j], cp, sigma)
                assert w == pytest.approx(abar[i, j], abs=1e-15)

    def test_zero_on_missing_edges(self):
        cp = ControlParams()
        assert control.modified_edge_weight(1.0, 0.3, -0.2, 0.0, cp, 1.0) == 0.0


class TestRendezvous:
    def test_two_agents_approach_each_other(self):
        params = graph.RangeParams()
        p = np.array([[0.0, 0.0], [2.0, 0.0]])
        dt = 1e-2
        for _ in range(200):
            g = graph.build_graph(p, params)
            p = p + dt * control.rendezvous_control(p, g)
        assert np.linalg.norm(p[0] - p[1]) < 0.1

    def test_consensus_preserves_centroid(self):
        rng = np.random.default_rng(4)
        p = rng.uniform(-1, 1, size=(4, 2))
        g = graph.build_graph(p, graph.RangeParams())
        u = control.rendezvous_control(p, g)
        assert np.allclose(u.sum(axis=0), 0.0, atol=1e-12)


class TestFormationControl:
    def make_args(self, rng, l2i_value):
        p, g, nu, received, sigma = connected_state(rng)
        spec = FormationSpec.regular_polygon(5, 0.8)
        l2i = np.full(5, l2i_value)
        return p, l2i, g, spec, ControlParams(), sigma, nu, received

    def test_bias_frozen_below_floor(self):
        # any estimate at or below k_margin*eps_tilde gives the same bias
        rng = np.random.default_rng(5)
        p, _, g, spec, cp, sigma, nu, received = self.make_args(rng, 0.0)
        floor = cp.k_margin * cp.epsilon_tilde
        u_floor = control.formation_control(p, np.full(5, floor), g, spec, cp,
                                            sigma, nu, received)
        for val in (floor, floor / 2, 0.0, -10.0):
            u = control.formation_control(p, np.full(5, val), g, spec, cp,
                                          sigma, nu, received)
            assert np.allclose(u, u_floor, atol=1e-12)

    def test_continuous_at_branch_point(self):
        rng = np.random.default_rng(6)
        p, _, g, spec, cp, sigma, nu, received = self.make_args(rng, 0.0)
        floor = cp.k_margin * cp.epsilon_tilde
        below = control.formation_control(p, np.full(5, floor - 1e-9), g, spec,
                                          cp, sigma, nu, received)
        above = control.formation_control(p, np.full(5, floor + 1e-9), g, spec,
                                          cp, sigma, nu, received)
        assert np.max(np.abs(below - above)) < 1e-6

    def test_reduces_to_rendezvous_plus_bias(self):
        # with abar ~ 0 (well connected) the bias is just the neighbor sum of
        # nominal offsets
        rng = np.random.default_rng(7)
        p, _, g, spec, cp, sigma, nu, received = self.make_args(rng, 1e3)
        u = control.formation_control(p, np.full(5, 1e3), g, spec, cp, sigma,
                                      nu, received)
        mask = g.weights > 0
        offs = spec.offsets
        bias = np.array([((offs[i] - offs) * mask[i][:, None]).sum(axis=0)
                         for i in range(5)])
        assert np.allclose(u, control.rendezvous_control(p, g) + bias,
                           atol=1e-10)

    def test_regular_polygon_offsets(self):
        spec = FormationSpec.regular_polygon(4, 2.0)
        assert spec.offsets.shape == (4, 2)
        assert np.allclose(np.linalg.norm(spec.offsets, axis=1), 2.0)
        assert np.allclose(spec.offsets.sum(axis=0), 0.0, atol=1e-12)


class TestObstacleAvoidance:
    def field(self, **kw):
        args = dict(points=np.array([[0.0, 0.0]]), influence_radius=1.0,
                    repulsion_gain=0.1, u_obst_max=5.0)
        args.update(kw)
        return ObstacleField(**args)

    def test_zero_outside_influence(self):
        f = self.field()
        u = control.obstacle_avoidance(np.array([2.0, 0.0]), f)
        assert np.array_equal(u, np.zeros(2))

    def test_continuous_at_boundary(self):
        f = self.field()
        u = control.obstacle_avoidance(np.array([1.0 - 1e-9, 0.0]), f)
        assert np.linalg.norm(u) < 1e-6

    def test_points_away_and_grows_toward_obstacle(self):
        f = self.field()
        near = control.obstacle_avoidance(np.array([0.1, 0.0]), f)
        far = control.obstacle_avoidance(np.array([0.5, 0.0]), f)
        assert near[0] > far[0] > 0.0
        assert near[1] == far[1] == 0.0

    def test_bounded_by_cap(self):
        f = self.field(u_obst_max=2.0)
        u = control.obstacle_avoidance(np.array([1e-8, 0.0]), f)
        assert np.linalg.norm(u) == pytest.approx(2.0)

    def test_on_obstacle_gets_max_push(self):
        f = self.field(u_obst_max=3.0)
        rng = np.random.default_rng(8)
        u = control.obstacle_avoidance(np.array([0.0, 0.0]), f, rng)
        assert np.linalg.norm(u) == pytest.approx(3.0)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(9)
        pts = rng.uniform(-1, 1, size=(30, 2))
        f = ObstacleField(points=pts, influence_radius=0.5,
                          repulsion_gain=0.05, u_obst_max=4.0)
        positions = rng.uniform(-1, 1, size=(6, 2))
        u_all = control.obstacle_avoidance_all(positions, f)
        for i in range(6):
            u_i = control.obstacle_avoidance(positions[i], f)
            assert np.allclose(u_i, u_all[i], atol=1e-12)

    def test_empty_field_is_zero(self):
        f = ObstacleField(points=np.empty((0, 2)), influence_radius=0.5,
                          repulsion_gain=0.05, u_obst_max=4.0)
        u = control.obstacle_avoidance_all(np.zeros((3, 2)), f)
        assert np.array_equal(u, np.zeros((3, 2)))


class TestTotalControl:
    def test_sum(self):
        a, b, c = np.ones((2, 2)), 2 * np.ones((2, 2)), 3 * np.ones((2, 2))
        assert np.array_equal(control.total_control(a, b, c), 6 * np.ones((2, 2)))
