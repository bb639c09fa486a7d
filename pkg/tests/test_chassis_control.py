"""Chassis sliding-mode controller: error frame, surfaces, law and plant."""
import math
from dataclasses import replace

import numpy as np
import pytest

from mobman.chassis_control import (ChassisError, ChassisGains,
                                    ChassisRefSample, ChassisState,
                                    ChassisVelocity, check_disturbance,
                                    control_law, error_rates, plant_step,
                                    reduced_dynamics_step, sliding_surface,
                                    tracking_error, wheel_speeds)
from mobman.errors import DisturbanceBoundViolation
from mobman.mission import CircuitSpec, build_circuit

DEG = math.pi / 180.0


def _ref(x=0.0, y=0.0, heading=0.0, v=0.88, w=0.0, **kw):
    return ChassisRefSample(x=x, y=y, heading=heading, v=v, w=w,
                            vdx=v * math.cos(heading), vdy=v * math.sin(heading),
                            **kw)


def test_tracking_error_rotation_oracle(rng):
    for _ in range(25):
        rx, ry, rh = rng.uniform(-3, 3, 2).tolist() + [rng.uniform(-3, 3)]
        ax, ay, ah = rng.uniform(-3, 3, 2).tolist() + [rng.uniform(-3, 3)]
        err = tracking_error(ChassisState(rx, ry, rh), ChassisState(ax, ay, ah))
        rot = np.array([[math.cos(ah), math.sin(ah)],
                        [-math.sin(ah), math.cos(ah)]])
        expect = rot @ np.array([rx - ax, ry - ay])
        assert err.e1 == pytest.approx(expect[0], abs=1e-12)
        assert err.e2 == pytest.approx(expect[1], abs=1e-12)
        wrapped = math.atan2(math.sin(rh - ah), math.cos(rh - ah))
        assert err.e3 == pytest.approx(wrapped, abs=1e-12)


def test_tracking_error_pure_lateral_case():
    err = tracking_error(ChassisState(0.0, -1.0, 0.0), ChassisState(0.0, 0.0, 0.0))
    assert (err.e1, err.e2, err.e3) == (0.0, -1.0, 0.0)


def test_tracking_error_heading_wrap():
    err = tracking_error(ChassisState(0.0, 0.0, math.pi - 0.01),
                         ChassisState(0.0, 0.0, -math.pi + 0.01))
    assert err.e3 == pytest.approx(-0.02, abs=1e-12)


def test_rigid_motion_invariance(rng):
    """Moving both poses by one planar rigid motion leaves the error alone."""
    ref = ChassisState(1.0, 2.0, 0.4)
    act = ChassisState(0.8, 2.3, 0.3)
    base = tracking_error(ref, act)
    for _ in range(10):
        tx, ty, th = rng.uniform(-2, 2, 3)
        c, s = math.cos(th), math.sin(th)

        def move(p):
            return ChassisState(tx + c * p.x - s * p.y, ty + s * p.x + c * p.y,
                                p.heading + th)

        moved = tracking_error(move(ref), move(act))
        assert moved.e1 == pytest.approx(base.e1, abs=1e-12)
        assert moved.e2 == pytest.approx(base.e2, abs=1e-12)
        assert moved.e3 == pytest.approx(base.e3, abs=1e-12)


def test_error_rates_formulas():
    err = ChassisError(0.1, -0.2, 0.3)
    v, w, vr, wr = 0.9, 0.2, 0.88, 0.1
    rates = error_rates(err, v, w, vr, wr)
    assert rates[0] == pytest.approx(w * err.e2 - v + vr * math.cos(err.e3))
    assert rates[1] == pytest.approx(-w * err.e1 + vr * math.sin(err.e3))
    assert rates[2] == pytest.approx(wr - w)


def test_sliding_surface_worked_case():
    gains = ChassisGains(k1=2.0)
    s = sliding_surface(ChassisError(0.1, 0.0, 0.0), np.zeros(3), gains)
    np.testing.assert_allclose(s, [0.2, 0.0], atol=1e-15)


def test_sliding_surface_lateral_coupling_sign():
    gains = ChassisGains(k1=2.0, k2=10.0, k3=3.0)
    err = ChassisError(-0.1, 0.05, 0.0)
    rates = np.array([0.0, 0.02, 0.01])
    s = sliding_surface(err, rates, gains)
    mag = abs(rates[1] + gains.k2 * err.e2)
    assert s[0] == pytest.approx(-0.2 - mag)
    assert s[1] == pytest.approx(rates[2] + gains.k3 * err.e3
                                 + rates[1] + gains.k2 * err.e2)


def test_control_law_term_by_term(rng):
    gains = ChassisGains()
    for _ in range(20):
        err = ChassisError(*rng.uniform(-0.2, 0.2, 3))
        rates = rng.uniform(-0.5, 0.5, 3)
        heading = rng.uniform(-math.pi, math.pi)
        yaw_rate = rng.uniform(-1.0, 1.0)
        ref = _ref(heading=rng.uniform(-math.pi, math.pi), w=0.3,
                   vdx_dot=rng.uniform(-1, 1), vdy_dot=rng.uniform(-1, 1),
                   w_dot=rng.uniform(-1, 1))
        u = control_law(err, rates, ref, heading, yaw_rate, gains)

        e1d, e2d, e3d = rates
        s = sliding_surface(err, rates, gains)
        sgn = np.sign
        u2 = gains.q2 * s[1] + gains.p2 * sgn(s[1]) \
            + gains.k3 * e3d + e2d + gains.k2 * e2d - ref.w_dot
        w_acc = ref.w_dot + u2
        u1 = (gains.q1 * s[0] + gains.p1 * sgn(s[0])
              + e2d * yaw_rate + (err.e2 + gains.offset_l) * w_acc
              - ref.v * e3d * math.sin(err.e3)
              + gains.k1 * e1d + sgn(err.e1) * abs(e2d + gains.k2 * e2d)
              - ref.vdx_dot * math.cos(heading) + ref.vdx * yaw_rate * math.sin(heading)
              - ref.vdy_dot * math.sin(heading) - ref.vdy * yaw_rate * math.cos(heading)
              + ref.w_dot * err.e2 + ref.w * e2d)
        np.testing.assert_allclose(u, [u1, u2], atol=1e-12)


def test_control_law_zero_on_reference():
    gains = ChassisGains()
    u = control_law(ChassisError(0.0, 0.0, 0.0), np.zeros(3), _ref(), 0.0, 0.0,
                    gains)
    np.testing.assert_array_equal(u, [0.0, 0.0])


def test_boundary_layer_softens_switch():
    hard = ChassisGains(boundary_layer=0.0)
    soft = ChassisGains(boundary_layer=0.5)
    err = ChassisError(1e-4, 0.0, 0.0)
    rates = np.zeros(3)
    s = sliding_surface(err, rates, hard)
    u_hard = control_law(err, rates, _ref(), 0.0, 0.0, hard)
    u_soft = control_law(err, rates, _ref(), 0.0, 0.0, soft)
    # Inside the layer the switch is proportional, so the command shrinks.
    assert abs(u_soft[0]) < abs(u_hard[0])
    assert np.sign(u_soft[0]) == np.sign(s[0])


def test_check_disturbance_bounds():
    check_disturbance((0.1, -0.1), (0.1, 0.1))
    with pytest.raises(DisturbanceBoundViolation):
        check_disturbance((0.11, 0.0), (0.1, 0.1))


def test_wheel_speeds_differential_split():
    vl, vr = wheel_speeds(1.0, 2.0, 0.8)
    assert (vl, vr) == (1.0 - 0.8, 1.0 + 0.8)
    vl, vr = wheel_speeds(0.88, 0.0, 0.8)
    assert vl == vr == 0.88


def test_reduced_dynamics_tracks_reference_deltas():
    z = ChassisVelocity(0.88, 0.0)
    now = ChassisVelocity(0.88, 0.0)
    nxt = ChassisVelocity(0.8796, 1.7)  # corner entry jump
    out = reduced_dynamics_step(z, now, nxt, np.zeros(2), np.zeros(2), 0.001)
    assert out.v == pytest.approx(0.8796, abs=1e-15)
    assert out.w == pytest.approx(1.7, abs=1e-15)


def test_reduced_dynamics_constant_accel_growth():
    z = ChassisVelocity(0.0, 0.0)
    still = ChassisVelocity(0.0, 0.0)
    dt, a = 1e-3, 0.7
    for _ in range(250):
        z = reduced_dynamics_step(z, still, still, np.array([a, 0.0]),
                                  np.zeros(2), dt)
    assert z.v == pytest.approx(a * 250 * dt, rel=1e-12)
    assert z.w == 0.0


def test_plant_step_on_reference_stays_exact():
    """Zero command, zero disturbance, straight reference: no drift."""
    spec = _ref()
    z = np.array([spec.x, spec.y, spec.heading, spec.v, spec.w])
    dt = 1e-3
    for i in range(200):
        now = replace(spec, x=spec.v * i * dt)
        nxt = replace(spec, x=spec.v * (i + 1) * dt)
        z = plant_step(z, now, nxt, np.zeros(2), np.zeros(2), dt)
    assert z[0] == pytest.approx(0.88 * 0.2, abs=1e-12)
    assert abs(z[1]) < 1e-15 and abs(z[2]) < 1e-15
    assert z[3] == pytest.approx(0.88, abs=1e-15)


def test_plant_step_euler_matches_hand_update():
    z = np.array([1.0, 2.0, 0.3, 0.8, 0.2])
    u = np.array([0.5, -0.4])
    f = np.array([0.05, -0.05])
    now = ChassisRefSample(0, 0, 0, v=0.8, w=0.2)
    nxt = ChassisRefSample(0, 0, 0, v=0.8, w=0.2)
    dt = 1e-3
    out = plant_step(z, now, nxt, u, f, dt, integrator="euler")
    assert out[0] == pytest.approx(1.0 + 0.8 * math.cos(0.3) * dt)
    assert out[1] == pytest.approx(2.0 + 0.8 * math.sin(0.3) * dt)
    assert out[2] == pytest.approx(0.3 + 0.2 * dt)
    assert out[3] == pytest.approx(0.8 + (0.5 - 0.05) * dt)
    assert out[4] == pytest.approx(0.2 + (-0.4 + 0.05) * dt)


def test_plant_step_rejects_out_of_bound_disturbance():
    z = np.zeros(5)
    ref = ChassisRefSample(0, 0, 0, 0.0, 0.0)
    with pytest.raises(DisturbanceBoundViolation):
        plant_step(z, ref, ref, np.zeros(2), np.array([0.5, 0.0]), 1e-3,
                   f_bounds=(0.1, 0.1))


def test_closed_loop_exact_lap_tracking():
    """Started on the reference, the loop holds the lap to micron level
    through every corner entry and exit."""
    gains = ChassisGains()
    circuit = build_circuit(CircuitSpec(), dt=1e-3)
    dt = 1e-3
    n = int(round(circuit.lap_time / dt))
    r0 = circuit.sample(0.0)
    z = np.array([r0.x, r0.y, r0.heading, r0.v, r0.w])
    worst = 0.0
    for i in range(n):
        ref = circuit.sample(i * dt)
        err = tracking_error(ref, ChassisState(z[0], z[1], z[2]))
        worst = max(worst, abs(err.e1), abs(err.e2))
        rates = error_rates(err, z[3], z[4], ref.v, ref.w)
        u = control_law(err, rates, ref, z[2], z[4], gains)
        z = plant_step(z, ref, circuit.sample((i + 1) * dt), u, np.zeros(2), dt)
    assert worst < 1e-4


def test_zero_speed_regulation_holds_position():
    """Frozen reference, start on it: the platform must not creep."""
    gains = ChassisGains()
    ref = ChassisRefSample(1.0, -2.0, 0.7, 0.0, 0.0)
    z = np.array([1.0, -2.0, 0.7, 0.0, 0.0])
    for _ in range(500):
        err = tracking_error(ref, ChassisState(z[0], z[1], z[2]))
        rates = error_rates(err, z[3], z[4], ref.v, ref.w)
        u = control_law(err, rates, ref, z[2], z[4], gains)
        z = plant_step(z, ref, ref, u, np.zeros(2), 1e-3)
    assert abs(z[0] - 1.0) < 1e-9 and abs(z[1] + 2.0) < 1e-9
    assert abs(z[3]) < 1e-9 and abs(z[4]) < 1e-9


def test_offset_converges_into_band():
    """Pose offset at speed: both surfaces reach and the error decays."""
    gains = ChassisGains()
    dt = 1e-3
    z = np.array([0.05, 0.05, 3.0 * DEG, 0.88, 0.0])
    hist = []
    for i in range(2500):
        now = _ref(x=0.88 * i * dt)
        nxt = _ref(x=0.88 * (i + 1) * dt)
        err = tracking_error(now, ChassisState(z[0], z[1], z[2]))
        rates = error_rates(err, z[3], z[4], now.v, now.w)
        u = control_law(err, rates, now, z[2], z[4], gains)
        hist.append((err.e1, err.e2, err.e3))
        z = plant_step(z, now, nxt, u, np.zeros(2), dt)
    tail = np.array(hist[-500:])
    assert np.abs(tail[:, 0]).max() < 0.020
    assert np.abs(tail[:, 1]).max() < 0.001
    assert np.abs(tail[:, 2]).max() < 0.6 * DEG
