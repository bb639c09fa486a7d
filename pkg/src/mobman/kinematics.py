"""Arm geometry: link table, joint limits, closed-form FK/IK and workspace.

The arm is a 4-DOF palletizing linkage.  A parallelogram transmission keeps
the short link between the forearm and the wrist horizontal, which decouples
the planar joints: every link angle is measured from the horizontal of the
slewing plane ("absolute" angles) instead of accumulating along the chain.
The classic link-parameter table is kept for the link constants and for the
frame-by-frame transform, but the pose formulas below use absolute angles.

Units: millimetres and radians.  Joint vectors are numpy arrays of shape (4,)
ordered (base yaw, boom, forearm, wrist pitch).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, JointLimitViolation, Unreachable

DEG = math.pi / 180.0

# Joint ranges, radians: base yaw, boom, forearm, wrist pitch.
JOINT_LIMITS_LOW = np.array([-180.0, 0.0, -120.0, -90.0]) * DEG
JOINT_LIMITS_HIGH = np.array([180.0, 135.0, 15.5, 0.0]) * DEG
JOINT_NAMES = ("theta1", "theta2", "theta3", "theta4")

# Allowed elbow interior angle between boom and forearm.
INTERIOR_MIN = 30.0 * DEG
INTERIOR_MAX = 165.0 * DEG

_LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class DHRow:
    """One link-table row: a (mm), alpha (rad), d (mm) plus the theta slot.

    theta_index names which joint variable (1..4) occupies the theta column;
    0 marks a structurally fixed zero angle.
    """

    a: float
    alpha: float
    d: float
    theta_index: int = 0

    def __post_init__(self):
        if self.a < 0.0 or self.d < 0.0:
            raise GeometryError("link lengths and offsets must be non-negative")
        if not 0 <= int(self.theta_index) <= 4:
            raise GeometryError("theta_index must be 0 (fixed) or 1..4")


@dataclass(frozen=True)
class DHTable:
    """Five-row link table; the 4th row's theta is structurally fixed at 0."""

    rows: tuple

    def __post_init__(self):
        if len(self.rows) != 5:
            raise GeometryError("link table must have exactly 5 rows")
        if self.rows[3].theta_index != 0:
            raise GeometryError("row 4 carries the parallelogram link; theta is fixed")
        seen = [r.theta_index for r in self.rows if r.theta_index != 0]
        if sorted(seen) != [1, 2, 3, 4]:
            raise GeometryError("rows must cover joint variables 1..4 exactly once")

    @property
    def a(self):
        return tuple(r.a for r in self.rows)

    @property
    def d1(self) -> float:
        return self.rows[0].d


def default_dh_table() -> DHTable:
    """Link constants of the reference arm (mm / rad)."""
    return DHTable(rows=(
        DHRow(a=100.0, alpha=90.0 * DEG, d=185.0, theta_index=1),
        DHRow(a=1000.0, alpha=0.0, d=0.0, theta_index=2),
        DHRow(a=1700.0, alpha=0.0, d=0.0, theta_index=3),
        DHRow(a=100.0, alpha=0.0, d=0.0, theta_index=0),
        DHRow(a=80.0, alpha=0.0, d=0.0, theta_index=4),
    ))


DEFAULT_DH = default_dh_table()


@dataclass(frozen=True)
class ToolOffset:
    """Nozzle offset along the wrist frame y-axis (mm)."""

    y5p: float = 0.0

    def __post_init__(self):
        if self.y5p < 0.0:
            raise GeometryError("tool offset must be non-negative")


@dataclass(frozen=True)
class EndEffectorPose:
    """Tool point position (mm) and nozzle pitch above horizontal (rad)."""

    x: float
    y: float
    z: float
    phi: float

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def dh_transform(row: DHRow, theta: float) -> np.ndarray:
    """Homogeneous transform of one row: Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array([
        [ct, -st * ca, st * sa, row.a * ct],
        [st, ct * ca, -ct * sa, row.a * st],
        [0.0, sa, ca, row.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def interior_angle(q) -> float:
    """Elbow interior angle between boom and forearm links."""
    return math.pi - (q[1] - q[2])


def check_joint_limits(q, tol: float = _LIMIT_TOL) -> None:
    """Raise JointLimitViolation if any joint or the elbow angle is out of range."""
    q = np.asarray(q, dtype=float)
    for i in range(4):
        if q[i] < JOINT_LIMITS_LOW[i] - tol or q[i] > JOINT_LIMITS_HIGH[i] + tol:
            raise JointLimitViolation(
                "%s = %.6f deg outside [%.2f, %.2f] deg"
                % (JOINT_NAMES[i], q[i] / DEG, JOINT_LIMITS_LOW[i] / DEG,
                   JOINT_LIMITS_HIGH[i] / DEG))
    gamma = interior_angle(q)
    if gamma < INTERIOR_MIN - tol or gamma > INTERIOR_MAX + tol:
        raise JointLimitViolation(
            "interior angle = %.6f deg outside [30, 165] deg" % (gamma / DEG))


def joint_limits_ok(q, tol: float = _LIMIT_TOL) -> bool:
    try:
        check_joint_limits(q, tol)
    except JointLimitViolation:
        return False
    return True


def _planar_coords(q, geometry: DHTable, y5p: float):
    """Radial/vertical tool coordinates in the slewing plane (mm)."""
    a1, a2, a3, a4, a5 = geometry.a
    c2, s2 = math.cos(q[1]), math.sin(q[1])
    c3, s3 = math.cos(q[2]), math.sin(q[2])
    c4, s4 = math.cos(q[3]), math.sin(q[3])
    r = a1 + a2 * c2 + a3 * c3 + a4 + a5 * c4 - y5p * s4
    z = geometry.d1 + a2 * s2 + a3 * s3 + a5 * s4 + y5p * c4
    return r, z


def forward_kinematics(q, geometry: DHTable = DEFAULT_DH, tool: ToolOffset | None = None,
                       check_limits: bool = True) -> EndEffectorPose:
    """Tool pose from joint angles (absolute-angle convention).

    The nozzle pitch comes straight from the wrist joint: phi = -theta4.
    """
    q = np.asarray(q, dtype=float)
    if check_limits:
        check_joint_limits(q)
    y5p = tool.y5p if tool is not None else 0.0
    r, z = _planar_coords(q, geometry, y5p)
    return EndEffectorPose(x=r * math.cos(q[0]), y=r * math.sin(q[0]), z=z, phi=-q[3])


def inverse_kinematics(pose: EndEffectorPose, geometry: DHTable = DEFAULT_DH,
                       tool: ToolOffset | None = None,
                       check_limits: bool = True) -> np.ndarray:
    """Closed-form joint solution for a tool pose.

    The planar sub-problem reduces to a two-link triangle once the wrist and
    tool contributions are peeled off the radial/vertical target.  The boom
    takes the +acos branch and the forearm the -acos branch, which is the only
    branch compatible with the joint ranges (the boom always sits above the
    forearm).  Raises Unreachable when the triangle cannot close and
    JointLimitViolation when it closes outside the joint ranges.
    """
    a1, a2, a3, a4, a5 = geometry.a
    y5p = tool.y5p if tool is not None else 0.0

    theta1 = math.atan2(pose.y, pose.x)
    theta4 = -pose.phi

    r_p = math.hypot(pose.x, pose.y)
    dr3 = r_p - a1
    dz3 = pose.z - geometry.d1
    s4, c4 = math.sin(theta4), math.cos(theta4)
    dr2 = dr3 + y5p * s4 - a4 - a5 * c4
    dz2 = dz3 - a5 * s4 - y5p * c4

    rr = dr2 * dr2 + dz2 * dz2
    rho = math.sqrt(rr)
    if rho < 1e-12:
        raise Unreachable("wrist target coincides with the shoulder axis")
    beta = math.atan2(dz2, dr2)
    cos_b2 = (rr + a2 * a2 - a3 * a3) / (2.0 * a2 * rho)
    cos_b3 = (rr + a3 * a3 - a2 * a2) / (2.0 * a3 * rho)
    if abs(cos_b2) > 1.0 + 1e-12 or abs(cos_b3) > 1.0 + 1e-12:
        raise Unreachable(
            "planar target %.1f mm outside the two-link annulus" % rho)
    theta2 = math.acos(min(1.0, max(-1.0, cos_b2))) + beta
    theta3 = -math.acos(min(1.0, max(-1.0, cos_b3))) + beta

    q = np.array([theta1, theta2, theta3, theta4])
    if check_limits:
        check_joint_limits(q)
    return q


def random_joint_angles(rng, n: int | None = None):
    """Draw uniform in-range joint vectors (rejection on the elbow angle)."""
    single = n is None
    count = 1 if single else n
    out = np.empty((count, 4))
    filled = 0
    while filled < count:
        cand = rng.uniform(JOINT_LIMITS_LOW, JOINT_LIMITS_HIGH, size=(count, 4))
        gamma = math.pi - (cand[:, 1] - cand[:, 2])
        ok = (gamma >= INTERIOR_MIN) & (gamma <= INTERIOR_MAX)
        take = min(int(ok.sum()), count - filled)
        out[filled:filled + take] = cand[ok][:take]
        filled += take
    return out[0] if single else out


@dataclass(frozen=True)
class KeyPointCheck:
    """Reachability verdict for a named scenario point (position in mm)."""

    name: str
    position: tuple
    reachable: bool


@dataclass(frozen=True)
class WorkspaceSummary:
    """Grid-sweep summary of the reachable envelope.

    r_min/r_max are the radial extremes of the boom+forearm pair about the
    shoulder; full_reach_min/max add the base offset, the parallelogram link
    and the wrist.  boundary holds (r, z) samples of the planar envelope about
    the shoulder, cloud holds coarse 3-D tool positions.
    """

    r_min: float
    r_max: float
    full_reach_min: float
    full_reach_max: float
    boundary: np.ndarray
    cloud: np.ndarray
    key_points: tuple


def point_reachable(position, geometry: DHTable = DEFAULT_DH,
                    tool: ToolOffset | None = None, phi_candidates=None) -> bool:
    """True if some nozzle pitch in [0, 90] deg admits an in-range solution."""
    if phi_candidates is None:
        phi_candidates = np.arange(0.0, 90.0 + 1e-9, 5.0) * DEG
    x, y, z = (float(v) for v in position)
    for phi in phi_candidates:
        try:
            inverse_kinematics(EndEffectorPose(x, y, z, phi), geometry, tool)
            return True
        except (Unreachable, JointLimitViolation):
            continue
    return False


def workspace_analysis(resolution: float = 0.25 * DEG,
                       geometry: DHTable = DEFAULT_DH,
                       tool: ToolOffset | None = None,
                       key_points=(),
                       cloud_resolution: float = 5.0 * DEG,
                       azimuth_resolution: float = 30.0 * DEG) -> WorkspaceSummary:
    """Sweep the planar joints under the interior-angle constraint.

    key_points is an iterable of (name, (x, y, z)) entries in mm; each is
    checked for reachability with the closed-form solver.
    """
    a1, a2, a3, a4, a5 = geometry.a
    d1 = geometry.d1

    t2 = np.arange(JOINT_LIMITS_LOW[1], JOINT_LIMITS_HIGH[1] + 0.5 * resolution,
                   resolution)
    t3 = np.arange(JOINT_LIMITS_LOW[2], JOINT_LIMITS_HIGH[2] + 0.5 * resolution,
                   resolution)
    g2, g3 = np.meshgrid(t2, t3, indexing="ij")
    gamma = np.pi - (g2 - g3)
    mask = (gamma >= INTERIOR_MIN - 1e-12) & (gamma <= INTERIOR_MAX + 1e-12)

    rr = a2 * np.cos(g2) + a3 * np.cos(g3)
    zz = a2 * np.sin(g2) + a3 * np.sin(g3)
    radius = np.hypot(rr, zz)[mask]
    r_min = float(radius.min())
    r_max = float(radius.max())

    # Tool-point radial extent with the wrist stretched flat (theta4 = 0).
    full = a1 + rr[mask] + a4 + a5
    full_reach_min = float(full.min())
    full_reach_max = float(full.max())

    boundary = _boundary_samples(geometry, resolution)
    cloud = _cloud_samples(geometry, tool, cloud_resolution, azimuth_resolution)

    checks = []
    for name, position in key_points:
        checks.append(KeyPointCheck(name=str(name),
                                    position=tuple(float(v) for v in position),
                                    reachable=point_reachable(position, geometry, tool)))
    return WorkspaceSummary(r_min=r_min, r_max=r_max,
                            full_reach_min=full_reach_min,
                            full_reach_max=full_reach_max,
                            boundary=boundary, cloud=cloud,
                            key_points=tuple(checks))


def _boundary_samples(geometry: DHTable, resolution: float) -> np.ndarray:
    """(r, z) envelope about the shoulder: two joint-stop curves and two
    interior-angle arcs."""
    _, a2, a3, _, _ = geometry.a
    pieces = []

    def chain(th2, th3):
        return np.column_stack([a2 * np.cos(th2) + a3 * np.cos(th3),
                                a2 * np.sin(th2) + a3 * np.sin(th3)])

    for t2_fixed in (JOINT_LIMITS_HIGH[1], JOINT_LIMITS_LOW[1]):
        t3 = np.arange(JOINT_LIMITS_LOW[2], JOINT_LIMITS_HIGH[2] + 0.5 * resolution,
                       resolution)
        gamma = np.pi - (t2_fixed - t3)
        t3 = t3[(gamma >= INTERIOR_MIN - 1e-12) & (gamma <= INTERIOR_MAX + 1e-12)]
        pieces.append(chain(np.full_like(t3, t2_fixed), t3))
    for gamma_fixed in (INTERIOR_MIN, INTERIOR_MAX):
        delta = math.pi - gamma_fixed  # theta2 - theta3 along the arc
        t2 = np.arange(JOINT_LIMITS_LOW[1], JOINT_LIMITS_HIGH[1] + 0.5 * resolution,
                       resolution)
        t3 = t2 - delta
        ok = (t3 >= JOINT_LIMITS_LOW[2] - 1e-12) & (t3 <= JOINT_LIMITS_HIGH[2] + 1e-12)
        pieces.append(chain(t2[ok], t3[ok]))
    return np.vstack(pieces)


def _cloud_samples(geometry: DHTable, tool: ToolOffset | None,
                   planar_res: float, azimuth_res: float) -> np.ndarray:
    """Coarse 3-D tool positions over the in-range joint grid (theta4 = 0)."""
    a1, a2, a3, a4, a5 = geometry.a
    y5p = tool.y5p if tool is not None else 0.0
    t2 = np.arange(JOINT_LIMITS_LOW[1], JOINT_LIMITS_HIGH[1] + 0.5 * planar_res,
                   planar_res)
    t3 = np.arange(JOINT_LIMITS_LOW[2], JOINT_LIMITS_HIGH[2] + 0.5 * planar_res,
                   planar_res)
    g2, g3 = np.meshgrid(t2, t3, indexing="ij")
    gamma = np.pi - (g2 - g3)
    ok = (gamma >= INTERIOR_MIN - 1e-12) & (gamma <= INTERIOR_MAX + 1e-12)
    r = (a1 + a2 * np.cos(g2) + a3 * np.cos(g3) + a4 + a5)[ok]
    z = (geometry.d1 + a2 * np.sin(g2) + a3 * np.sin(g3) + y5p)[ok]
    t1 = np.arange(JOINT_LIMITS_LOW[0], JOINT_LIMITS_HIGH[0] + 0.5 * azimuth_res,
                   azimuth_res)
    pts = []
    for th1 in t1:
        pts.append(np.column_stack([r * math.cos(th1), r * math.sin(th1), z]))
    return np.vstack(pts)
