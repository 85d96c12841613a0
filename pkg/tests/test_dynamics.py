import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spgpnav.dynamics import (
    AgentState,
    ControllerGains,
    InvalidStateError,
    clamp_to_ball,
    nominal_control,
    nominal_controls,
    step_agent,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vec = st.tuples(finite, finite)


def agent(p=(0.0, 0.0), v=(0.0, 0.0), g=(0.0, 0.0), r=0.2, a=1.0, i=0):
    return AgentState(id=i, position=p, velocity=v, safety_radius=r, accel_limit=a, goal=g)


class TestStep:
    def test_zero_acceleration_coasts(self):
        s = step_agent(agent(v=(1.0, 0.0)), (0.0, 0.0), 0.1)
        assert s.position == pytest.approx((0.1, 0.0))
        assert s.velocity == (1.0, 0.0)

    def test_semi_implicit_order(self):
        # velocity is updated first, so the position already sees the new velocity
        s = step_agent(agent(), (1.0, 0.0), 0.1)
        assert s.velocity == pytest.approx((0.1, 0.0))
        assert s.position == pytest.approx((0.01, 0.0))

    @given(vec)
    def test_rest_is_fixed_point(self, p):
        s = agent(p=p)
        for _ in range(5):
            s = step_agent(s, (0.0, 0.0), 0.05)
        assert s.position == (float(p[0]), float(p[1]))

    def test_other_fields_unchanged(self):
        a = agent(p=(1, 2), v=(0.5, -0.5), g=(3, 4), r=0.3, a=2.0, i=7)
        s = step_agent(a, (0.2, 0.1), 0.05)
        assert (s.id, s.safety_radius, s.accel_limit, s.goal) == (7, 0.3, 2.0, (3.0, 4.0))

    def test_deterministic(self):
        a = agent(p=(0.3, 0.1), v=(0.2, 0.7))
        assert step_agent(a, (0.3, -0.2), 0.05) == step_agent(a, (0.3, -0.2), 0.05)

    @pytest.mark.parametrize("u", [(math.nan, 0.0), (0.0, math.inf)])
    def test_non_finite_control_rejected(self, u):
        with pytest.raises(InvalidStateError):
            step_agent(agent(), u, 0.05)

    @pytest.mark.parametrize("dt", [0.0, -0.1, math.inf])
    def test_bad_dt_rejected(self, dt):
        with pytest.raises(InvalidStateError):
            step_agent(agent(), (0.0, 0.0), dt)


class TestAgentState:
    @pytest.mark.parametrize("kw", [dict(r=0.0), dict(a=-1.0), dict(p=(math.nan, 0.0))])
    def test_invalid(self, kw):
        with pytest.raises(InvalidStateError):
            agent(**kw)

    def test_gains_must_be_positive(self):
        with pytest.raises(ValueError):
            ControllerGains(kp=0.0)


class TestNominal:
    def test_at_goal_at_rest(self):
        assert np.array_equal(nominal_control(agent(p=(2, 3), g=(2, 3)), ControllerGains()),
                              [0.0, 0.0])

    def test_unsaturated(self):
        u = nominal_control(agent(g=(1.0, 0.0)), ControllerGains(kp=1, kd=2))
        assert u == pytest.approx([1.0, 0.0])

    def test_saturated(self):
        # raw PD gives (10, 0); the clamp scales it back onto the unit circle
        u = nominal_control(agent(g=(10.0, 0.0)), ControllerGains(kp=1, kd=2))
        assert u == pytest.approx([1.0, 0.0])

    def test_damping_term(self):
        u = nominal_control(agent(v=(0.1, 0.0), g=(0.5, 0.0)), ControllerGains(kp=1, kd=2))
        assert u == pytest.approx([0.5 - 0.2, 0.0])

    @given(vec, st.floats(0.1, 10), st.floats(0.1, 10))
    def test_zero_at_goal_for_any_gains(self, p, kp, kd):
        u = nominal_control(agent(p=p, g=p), ControllerGains(kp=kp, kd=kd))
        assert np.array_equal(u, [0.0, 0.0])

    def test_vectorized_matches_scalar(self, rng):
        gains = ControllerGains(kp=1.3, kd=1.7)
        P, V, G = rng.normal(size=(3, 6, 2))
        A = rng.uniform(0.5, 2.0, 6)
        batch = nominal_controls(P, V, G, A, gains)
        for i in range(6):
            single = nominal_control(agent(p=P[i], v=V[i], g=G[i], a=A[i]), gains)
            assert np.array_equal(batch[i], single)


class TestClamp:
    def test_inside(self):
        assert np.array_equal(clamp_to_ball((0.5, 0.0), 1.0), [0.5, 0.0])

    def test_outside(self):
        assert clamp_to_ball((3.0, 4.0), 1.0) == pytest.approx([0.6, 0.8])

    def test_zero(self):
        assert np.array_equal(clamp_to_ball((0.0, 0.0), 1.0), [0.0, 0.0])

    @given(vec, st.floats(1e-3, 1e3))
    def test_norm_bound(self, u, alpha):
        out = clamp_to_ball(u, alpha)
        assert math.hypot(*out) <= alpha

    @given(vec, st.floats(1e-3, 1e3))
    def test_identity_on_ball(self, u, alpha):
        if math.hypot(*u) <= alpha:
            assert np.array_equal(clamp_to_ball(u, alpha), np.asarray(u, dtype=float))

    @given(vec, st.floats(1e-3, 1e3))
    def test_direction_preserved(self, u, alpha):
        out = clamp_to_ball(u, alpha)
        # cross product of input and output vanishes for a radial projection
        assert abs(u[0] * out[1] - u[1] * out[0]) <= 1e-9 * max(1.0, math.hypot(*u)) ** 2
