import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_signed_distance, dense_boundary, servo_velocity
from riskspc.dynamics import (
    DEFAULT_SYSTEM,
    ModelParams,
    PushTSystem,
    State,
    TBlockGeometry,
    contact_force,
    kinetic_energy,
    rollout,
    signed_distance,
    step,
)
from riskspc.tape import KnotTape

GEOM = DEFAULT_SYSTEM.geometry
FAR = dict(px_p=0.5, py_p=0.5)


def test_geometry_validation():
    with pytest.raises(ValueError):
        TBlockGeometry(bar_half_extents=(0.0, 0.01))
    with pytest.raises(ValueError):
        TBlockGeometry(stem_offset=0.2)


def test_geometry_centroid_is_block_origin():
    rects = GEOM.rects
    areas = 4 * rects[:, 2] * rects[:, 3]
    # touching rectangles: no overlap, so the area-weighted centre is the union centroid
    assert np.allclose(areas @ rects[:, :2], 0.0, atol=1e-15)
    assert GEOM.area == pytest.approx(areas.sum())


def test_overlapping_geometry_boundary_matches_oracle():
    geom = TBlockGeometry(stem_offset=0.05)
    boundary = dense_boundary(geom.rects)
    rng = np.random.default_rng(3)
    for q in rng.uniform(-0.1, 0.1, (200, 2)):
        d = signed_distance(geom, ((0.0, 0.0), 0.0), q).distance
        assert abs(d - brute_signed_distance(geom.rects, boundary, ((0.0, 0.0), 0.0), q)) < 1e-3


def test_centroid_is_interior():
    assert signed_distance(GEOM, ((0.0, 0.0), 0.0), (0.0, 0.0)).distance < 0


@pytest.mark.parametrize("phi", [0.0, 0.7, -2.9])
@pytest.mark.parametrize("d", [1e-4, 3e-3, 0.02])
def test_face_normal_distance(phi, d):
    cx, cy, hx, hy = GEOM.rects[0]
    pose = ((0.03, -0.02), phi)
    c, s = math.cos(phi), math.sin(phi)
    local = np.array([cx, cy + hy + d])
    world = np.array(pose[0]) + np.array([c * local[0] - s * local[1], s * local[0] + c * local[1]])
    res = signed_distance(GEOM, pose, world)
    assert res.distance == pytest.approx(d, abs=1e-9)
    assert np.allclose(res.normal, [-s, c], atol=1e-9)


def test_signed_distance_vs_dense_boundary_oracle():
    boundary = dense_boundary(GEOM.rects)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        pose = (rng.uniform(-0.05, 0.05, 2), rng.uniform(-math.pi, math.pi))
        q = pose[0] + rng.uniform(-0.12, 0.12, 2)
        got = signed_distance(GEOM, pose, q).distance
        worst = max(worst, abs(got - brute_signed_distance(GEOM.rects, boundary, pose, q)))
    assert worst < 1e-3


def test_witness_lies_on_boundary_and_normal_is_unit():
    rng = np.random.default_rng(1)
    for _ in range(200):
        q = rng.uniform(-0.1, 0.1, 2)
        res = signed_distance(GEOM, ((0.0, 0.0), 0.0), q)
        assert np.linalg.norm(res.normal) == pytest.approx(1.0)
        assert abs(signed_distance(GEOM, ((0.0, 0.0), 0.0), res.witness).distance) < 1e-12
        assert np.linalg.norm(q - res.witness) == pytest.approx(abs(res.distance), abs=1e-12)


def _contact_state_above_bar(pen):
    _, cy, _, hy = GEOM.rects[0]
    return State(px_p=0.0, py_p=cy + hy + DEFAULT_SYSTEM.pusher_radius - pen)


def test_no_contact_means_no_force():
    f = contact_force(State(**FAR), ModelParams())
    assert np.all(f.force_on_block == 0) and f.torque_on_block == 0 and np.all(f.force_on_pusher == 0)


@pytest.mark.parametrize("tau", [0.01, 0.02, 0.03])
def test_static_penetration_spring_force(tau):
    pen = 2e-3
    params = ModelParams(time_constant=tau)
    f = contact_force(_contact_state_above_bar(pen), params)
    m_b, m_p = 0.1, 0.05
    m_eff = 2 * m_b * m_p / (m_b + m_p)
    expected = m_eff / tau**2 * pen
    assert f.force_on_pusher == pytest.approx(np.array([0.0, expected]), rel=1e-9, abs=1e-12)
    assert f.normal_force == pytest.approx(expected, rel=1e-9)


def test_contact_torque_matches_lever_arm():
    # pusher pressing down on the right end of the bar's top face
    _, cy, hx, hy = GEOM.rects[0]
    x = State(px_p=0.8 * hx, py_p=cy + hy + 0.008)
    f = contact_force(x, ModelParams())
    r = np.array([0.8 * hx, cy + hy])
    assert f.torque_on_block == pytest.approx(r[0] * f.force_on_block[1] - r[1] * f.force_on_block[0])
    assert f.torque_on_block < 0


def _random_contact_state(rng):
    pose = (rng.uniform(-0.05, 0.05, 2), rng.uniform(-math.pi, math.pi))
    while True:
        q = pose[0] + rng.uniform(-0.1, 0.1, 2)
        d = signed_distance(GEOM, pose, q).distance
        if 0.0 < d < DEFAULT_SYSTEM.pusher_radius:
            break
    v = rng.normal(0, 0.3, 5)
    return State(q[0], q[1], v[0], v[1], pose[0][0], pose[0][1], pose[1], v[2], v[3], 5 * v[4])


def test_newton_third_law_and_friction_cone():
    rng = np.random.default_rng(7)
    lam_range = (0.5, 1.5)
    touched = 0
    for _ in range(1000):
        x = _random_contact_state(rng)
        params = ModelParams(friction=rng.uniform(*lam_range), time_constant=rng.uniform(0.01, 0.03))
        f = contact_force(x, params)
        assert np.array_equal(f.force_on_pusher, -f.force_on_block)
        assert f.tangential_force <= params.friction * f.normal_force + 1e-9
        touched += f.normal_force > 0
    assert touched > 500


def test_rest_is_equilibrium():
    x = State(px_p=0.2, py_p=0.1, px_b=-0.03, py_b=0.01, phi=0.4)
    assert step(x, (0.0, 0.0), ModelParams()) == x


@pytest.mark.parametrize("gain_scale", [(1.0, 1.0), (0.8, 1.2)])
def test_servo_step_response(gain_scale):
    params = ModelParams(gain_scale=gain_scale)
    u = np.array([0.3, -0.5])
    x = State(**FAR)
    kv = np.array(gain_scale) * DEFAULT_SYSTEM.servo_gain
    for i in range(1, 101):
        x = step(x, u, params)
        t = i * DEFAULT_SYSTEM.dt
        for axis in range(2):
            ref = servo_velocity(u[axis], kv[axis], t)
            assert abs(x.v_p[axis] - ref) < 1e-3 * abs(u[axis])


def test_command_is_clamped():
    x = State(**FAR)
    for _ in range(200):
        x = step(x, (3.0, 4.0), ModelParams())
    assert np.linalg.norm(x.v_p) == pytest.approx(DEFAULT_SYSTEM.u_max, rel=1e-9)


def test_free_sliding_block_dissipates():
    params = ModelParams(friction=0.5)
    x = State(**FAR, vx_b=0.4, vy_b=-0.2, wb=3.0)
    ke = kinetic_energy(x, params)
    for _ in range(500):
        x = step(x, (0.0, 0.0), params)
        new = kinetic_energy(x, params)
        assert new <= ke
        ke = new
    assert ke == 0.0


@settings(max_examples=60, deadline=None)
@given(phi=st.floats(-10, 10), w=st.floats(-50, 50), ux=st.floats(-2, 2), uy=st.floats(-2, 2))
def test_angle_stays_normalized(phi, w, ux, uy):
    x = State(px_p=0.05, py_p=-0.09, phi=phi, wb=w)
    for _ in range(3):
        x = step(x, (ux, uy), ModelParams())
        assert -math.pi < x.phi <= math.pi
        assert np.all(np.isfinite(x.to_array()))


def test_zero_tape_rollout_is_static():
    x0 = State(px_p=0.1, py_p=0.1, px_b=-0.02, py_b=0.0, phi=1.0)
    final, trace = rollout(x0, KnotTape.zeros(), ModelParams())
    assert len(trace) == 50
    assert final == x0 and all(s == x0 for s, _ in trace)


def test_rollout_determinism_and_commands():
    knots = np.array([[0.1, 0.2], [0.3, -0.1], [0.0, 0.5], [-0.4, 0.0], [0.2, 0.2], [0.9, -0.9]])
    tape = KnotTape(knots, 0.5)
    x0 = State(px_p=0.0, py_p=-0.09)
    a = rollout(x0, tape, ModelParams())
    b = rollout(x0, tape, ModelParams())
    assert a == b
    cmds = np.array([c for _, c in a[1]])
    assert np.array_equal(cmds[0], knots[0]) and np.array_equal(cmds[-1], knots[5])


def test_push_moves_block_in_push_direction():
    # pusher below the stem, driving straight up along the block's symmetry axis
    x0 = State(px_p=0.0, py_p=-0.11)
    final, _ = rollout(x0, KnotTape(np.tile([0.0, 0.4], (6, 1)), 0.5), ModelParams())
    assert final.py_b > 0.01
    assert abs(final.px_b) < 1e-9


def test_pusher_reaction_option_slows_pusher():
    free = PushTSystem(pusher_reaction=False)
    reactive = PushTSystem(pusher_reaction=True)
    x0 = State(px_p=0.0, py_p=-0.11)
    tape = KnotTape(np.tile([0.0, 0.4], (6, 1)), 0.5)
    a, _ = rollout(x0, tape, ModelParams(), system=free)
    b, _ = rollout(x0, tape, ModelParams(), system=reactive)
    assert b.py_p < a.py_p
