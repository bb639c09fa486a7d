"""Arm sliding-mode controller and joint-reference construction."""
import math

import numpy as np
import pytest

from mobman.arm_control import (ArmGains, build_arm_reference, control_law,
                                sliding_surface, switch_term,
                                target_in_base_frame)
from mobman.errors import Unreachable
from mobman.kinematics import (ToolOffset, forward_kinematics,
                               inverse_kinematics, random_joint_angles)

DEG = math.pi / 180.0


def test_sliding_surface_and_switch():
    gains = ArmGains(surface_rate=20.0, boundary_layer=0.01)
    e = np.array([0.01, -0.02, 0.0, 0.005])
    ed = np.array([0.1, 0.0, -0.3, 0.0])
    np.testing.assert_allclose(sliding_surface(e, ed, gains), ed + 20.0 * e)
    # Inside the layer the switch is linear, outside it saturates.
    assert switch_term(np.array([0.005]), gains)[0] == pytest.approx(0.5)
    assert switch_term(np.array([5.0]), gains)[0] == 1.0
    hard = ArmGains(boundary_layer=0.0)
    np.testing.assert_array_equal(switch_term(np.array([0.0, -2.0, 3.0]), hard),
                                  [0.0, -1.0, 1.0])


def test_control_law_formula_recomposition(model, rng):
    gains = ArmGains()
    for _ in range(10):
        q = random_joint_angles(rng)
        qd = rng.uniform(-0.5, 0.5, 4)
        ref_q = q + rng.uniform(-0.05, 0.05, 4)
        ref_qd = rng.uniform(-0.5, 0.5, 4)
        ref_qdd = rng.uniform(-1.0, 1.0, 4)
        tau = control_law(q, qd, ref_q, ref_qd, ref_qdd, gains, model)

        e = ref_q - q
        ed = ref_qd - qd
        s = ed + gains.surface_rate * e
        sw = np.clip(s / gains.boundary_layer, -1.0, 1.0)
        inner = ref_qdd + gains.surface_rate * ed \
            + np.asarray(gains.switch_gain) * sw
        expect = model.mass_matrix(q) @ inner + model.gravity_vector(q) \
            + model.coriolis_matrix(q, qd) @ qd
        np.testing.assert_allclose(tau, expect, atol=1e-9)


def test_equilibrium_torque_is_gravity(model):
    q = np.array([0.2, 60.0 * DEG, -30.0 * DEG, -20.0 * DEG])
    tau = control_law(q, np.zeros(4), q, np.zeros(4), np.zeros(4),
                      ArmGains(), model)
    np.testing.assert_allclose(tau, model.gravity_vector(q), atol=1e-12)


def _track(model, gains, q0, ref_q, dt, steps):
    q = q0.copy()
    qd = np.zeros(4)
    vs, errs = [], []
    zero = np.zeros(4)
    for _ in range(steps):
        tau = control_law(q, qd, ref_q, zero, zero, gains, model)
        y = np.concatenate([q, qd])

        def f(y):
            return np.concatenate([y[4:],
                                   model.forward_dynamics(y[:4], y[4:], tau)])

        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        q, qd = y[:4], y[4:]
        s = (zero - qd) + gains.surface_rate * (ref_q - q)
        vs.append(0.5 * float(s @ s))
        errs.append(float(np.abs(ref_q - q).max()))
    return np.array(vs), np.array(errs)


def test_setpoint_regulation_surface_decay(model):
    """With the exact model the surface energy never grows and the error
    drops below 1e-4 rad in well under a second."""
    gains = ArmGains()
    ref_q = np.array([0.1, 70.0 * DEG, -30.0 * DEG, -20.0 * DEG])
    q0 = ref_q + np.array([0.05, -0.04, 0.05, -0.03])
    vs, errs = _track(model, gains, q0, ref_q, 1e-3, 1000)
    inc = np.diff(vs)
    assert inc.max() < 1e-9
    assert errs[-1] < 1e-4
    assert (errs < 1e-4).argmax() < 1000


def test_target_in_base_frame_round_trip(rng):
    for _ in range(25):
        pose = (rng.uniform(-3, 3), rng.uniform(-3, 3),
                rng.uniform(-math.pi, math.pi))
        target = rng.uniform(-2, 2, 3)
        pitch = rng.uniform(0.0, 0.5 * math.pi)
        local = target_in_base_frame(pose, target, pitch)
        c, s = math.cos(pose[2]), math.sin(pose[2])
        back_x = pose[0] + (c * local.x - s * local.y) * 1e-3
        back_y = pose[1] + (s * local.x + c * local.y) * 1e-3
        assert back_x == pytest.approx(target[0], abs=1e-12)
        assert back_y == pytest.approx(target[1], abs=1e-12)
        assert local.z == pytest.approx(target[2] * 1e3)
        assert local.phi == pitch


def test_build_arm_reference_solves_targets():
    dt = 0.01
    times = np.arange(0.0, 1.0 + 1e-12, dt)
    n = len(times)
    poses = np.column_stack([0.5 * times, np.zeros(n), np.zeros(n)])
    targets = np.tile([2.0, 0.0, 0.5], (n, 1))
    ref = build_arm_reference(times, poses, targets, 30.0 * DEG)
    assert ref.q.shape == (n, 4) and len(ref) == n
    # Every solved joint vector reproduces its base-frame target.
    for i in range(0, n, 20):
        pose = forward_kinematics(ref.q[i])
        local = target_in_base_frame(poses[i], targets[i], 30.0 * DEG)
        np.testing.assert_allclose(pose.position(), local.position(), atol=1e-9)
    # Differences are consistent with the sampled positions.
    mid_qd = (ref.q[2:] - ref.q[:-2]) / (2 * dt)
    np.testing.assert_allclose(ref.qd[1:-1], mid_qd, atol=1e-12)


def test_build_arm_reference_annotates_failures():
    times = np.array([0.0, 0.01, 0.02])
    poses = np.zeros((3, 3))
    targets = np.array([[2.0, 0.0, 0.5], [2.0, 0.0, 0.5], [9.0, 0.0, 0.5]])
    with pytest.raises(Unreachable) as err:
        build_arm_reference(times, poses, targets, 30.0 * DEG)
    assert "sample 2" in str(err.value)


def test_mission_sweep_references_stay_in_limits(default_mission):
    """The planned joint path of the stock mission respects every limit."""
    result, _ = default_mission
    log = result.log
    q = np.column_stack([log.values["q%d" % k] for k in range(1, 5)])
    from mobman.kinematics import check_joint_limits
    for i in range(0, len(q), 500):
        check_joint_limits(q[i], tol=1e-6)


def test_tool_offset_changes_solution():
    tool = ToolOffset(150.0)
    pose = forward_kinematics(np.array([0.0, 80.0 * DEG, -40.0 * DEG,
                                        -30.0 * DEG]), tool=tool)
    with_tool = inverse_kinematics(pose, tool=tool)
    bare = inverse_kinematics(pose)
    assert np.abs(with_tool - bare).max() > 1e-3
