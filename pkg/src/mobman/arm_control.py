"""Joint-space sliding-mode tracking for the arm.

The surface is the error rate plus a proportional term per joint; the control
inverts the rigid-body model and adds a switched term that dominates model
mismatch.  References are built by solving the closed-form IK for the spray
target expressed in the moving chassis base frame, sample by sample.

Joint vectors are radians; reference targets arrive in metres (world frame)
and are converted to the arm's millimetre convention internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ArmDynamics
from .errors import JointLimitViolation, Unreachable
from .kinematics import (DEFAULT_DH, DHTable, EndEffectorPose, ToolOffset,
                         inverse_kinematics)

_M_TO_MM = 1e3


@dataclass(frozen=True)
class ArmGains:
    """Surface slope (1/s), per-joint switching gains and the boundary-layer
    width; a zero width selects the pure switching sign."""

    surface_rate: float = 20.0
    switch_gain: tuple = (5.0, 5.0, 5.0, 5.0)
    boundary_layer: float = 0.01


@dataclass
class ArmReference:
    """Sampled joint reference with consistent first and second differences."""

    times: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    def __len__(self):
        return len(self.times)


def sliding_surface(e, edot, gains: ArmGains) -> np.ndarray:
    return np.asarray(edot, dtype=float) + gains.surface_rate * np.asarray(e, dtype=float)


def switch_term(s, gains: ArmGains) -> np.ndarray:
    """Componentwise sign, or saturation inside the boundary layer."""
    s = np.asarray(s, dtype=float)
    if gains.boundary_layer > 0.0:
        return np.clip(s / gains.boundary_layer, -1.0, 1.0)
    return np.sign(s)


def control_law(q, qd, ref_q, ref_qd, ref_qdd, gains: ArmGains,
                model: ArmDynamics) -> np.ndarray:
    """Model-inverting sliding-mode torque command."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    e = np.asarray(ref_q, dtype=float) - q
    edot = np.asarray(ref_qd, dtype=float) - qd
    s = sliding_surface(e, edot, gains)
    k = np.asarray(gains.switch_gain, dtype=float)
    inner = np.asarray(ref_qdd, dtype=float) + gains.surface_rate * edot + k * switch_term(s, gains)
    return (model.mass_matrix(q) @ inner
            + model.gravity_vector(q)
            + model.coriolis_matrix(q, qd) @ qd)


def target_in_base_frame(chassis_pose, target_xyz_m, pitch: float) -> EndEffectorPose:
    """Express a world-frame spray target in the chassis-mounted arm frame.

    chassis_pose is (X, Y, heading) in metres/radians; the result is in mm.
    The nozzle pitch is measured from horizontal and is invariant to the
    chassis yaw.
    """
    cx, cy, heading = (float(v) for v in chassis_pose)
    dx = float(target_xyz_m[0]) - cx
    dy = float(target_xyz_m[1]) - cy
    c, s = math.cos(heading), math.sin(heading)
    return EndEffectorPose(x=(c * dx + s * dy) * _M_TO_MM,
                           y=(-s * dx + c * dy) * _M_TO_MM,
                           z=float(target_xyz_m[2]) * _M_TO_MM,
                           phi=pitch)


def build_arm_reference(times, chassis_poses, targets_xyz_m, pitches,
                        geometry: DHTable = DEFAULT_DH,
                        tool: ToolOffset | None = None) -> ArmReference:
    """Solve IK along a target trail and difference it on the sample grid.

    chassis_poses is (N, 3) world poses of the platform, targets_xyz_m is
    (N, 3) world spray points, pitches is scalar or (N,) nozzle pitch.
    Raises the solver error annotated with the offending sample index.
    """
    times = np.asarray(times, dtype=float)
    chassis_poses = np.asarray(chassis_poses, dtype=float)
    targets = np.asarray(targets_xyz_m, dtype=float)
    n = len(times)
    pitch_arr = np.broadcast_to(np.asarray(pitches, dtype=float), (n,))

    q = np.empty((n, 4))
    for i in range(n):
        pose = target_in_base_frame(chassis_poses[i], targets[i], pitch_arr[i])
        try:
            q[i] = inverse_kinematics(pose, geometry, tool)
        except (Unreachable, JointLimitViolation) as exc:
            raise type(exc)("sample %d (t=%.4f s): %s" % (i, times[i], exc)) from exc

    if n >= 2:
        dt = float(times[1] - times[0])
        qd = np.gradient(q, dt, axis=0)
        qdd = np.gradient(qd, dt, axis=0)
    else:
        qd = np.zeros_like(q)
        qdd = np.zeros_like(q)
    return ArmReference(times=times, q=q, qd=qd, qdd=qdd)
