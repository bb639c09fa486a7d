"""Coverage mission around the crib: circuit, spray sweeps, residual stops.

Stage I drives a rounded-square circuit anti-clockwise around the burning
crib while the arm rasters extinguishant over the face nearest each leg.
Stage II revisits residual flames: each reported fire is grouped by its
nearest circuit tangency point, a stop is dropped on that group's straight
segment, and the stops are serviced in a single additional anti-clockwise
pass.

Planner units are metres and seconds in the world frame; the circuit is
centred on the crib.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chassis_control import ChassisRefSample
from .errors import (GeometryError, IllegalTransition, InfeasibleSweep,
                     JointLimitViolation, Unreachable)
from .kinematics import DEFAULT_DH, DHTable, ToolOffset, inverse_kinematics
from .arm_control import target_in_base_frame

DEG = math.pi / 180.0


@dataclass(frozen=True)
class FireTestSpec:
    """Rating under test: crib footprint and the timing budget."""

    label: str = "20A"
    crib_side: float = 1.0
    discharge_time: float = 15.0
    stage2_budget: float = 3.0


@dataclass(frozen=True)
class CircuitSpec:
    """Rounded-square circuit geometry.  edge_length is the straight-segment
    length between corner tangency points."""

    edge_length: float = 2.60128
    corner_radius: float = 0.5
    speed: float = 0.88
    center: tuple = (0.0, 0.0)
    min_corner_radius: float = 0.2


@dataclass(frozen=True)
class SweepSpec:
    """Serpentine raster over one crib face: horizontal passes stacked over a
    vertical span, traversed at constant tool speed."""

    passes: int = 4
    horizontal_span: float = 0.9
    vertical_span: float = 0.45
    base_height: float = 0.2
    speed: float = 1.4
    pitch: float = 30.0 * DEG


@dataclass(frozen=True)
class TopSpraySpec:
    """Arm posture for the overhead spray at circuit closure."""

    duration: float = 0.0
    joints: tuple = (0.0, 135.0 * DEG, 15.5 * DEG, -45.0 * DEG)


@dataclass(frozen=True)
class FireSpot:
    """A residual flame position in the world frame (m)."""

    ident: str
    position: tuple

    def planar(self) -> np.ndarray:
        return np.array([self.position[0], self.position[1]])


@dataclass(frozen=True)
class _Segment:
    kind: str           # "straight" | "arc"
    t0: float           # lap time at segment entry
    duration: float
    s0: float           # path length at segment entry
    length: float
    data: tuple         # straight: (x0, y0, heading); arc: (cx, cy, heading0)
    speed: float
    yaw_rate: float


class Circuit:
    """Time-parameterized lap starting at the first leg's midpoint.

    The lap runs anti-clockwise: half of the first straight, then alternating
    corners and straights, closing with the remaining half.  Leg midpoints are
    the K marks (K5 repeats K1 at closure); corner tangency points are the A
    marks, numbered so that consecutive pairs (A1 A2, A3 A4, ...) flank the
    full straights in path order.
    """

    def __init__(self, spec: CircuitSpec, dt: float | None = None):
        if spec.edge_length <= 0.0:
            raise GeometryError("circuit.edge_length: must be > 0")
        if spec.speed <= 0.0:
            raise GeometryError("circuit.speed: must be > 0")
        if spec.corner_radius < spec.min_corner_radius:
            raise GeometryError(
                "circuit.corner_radius: %.3f m is below the minimum %.3f m"
                % (spec.corner_radius, spec.min_corner_radius))
        if spec.corner_radius >= 0.5 * spec.edge_length:
            raise GeometryError(
                "circuit.corner_radius: must be below half the edge length")
        self.spec = spec
        ls = spec.edge_length
        r = spec.corner_radius
        v = spec.speed
        cx, cy = spec.center
        self.half_width = 0.5 * ls + r

        self.edge_time = ls / v
        self.half_edge_time = 0.5 * ls / v
        arc_len = 0.5 * math.pi * r
        corner_time = arc_len / v
        if dt is not None:
            # Stretch the corner onto the control grid so every tangency event
            # lands on a sample; the arc speed drops by well under 0.1 %.
            corner_time = math.ceil(corner_time / dt - 1e-9) * dt
        self.corner_time = corner_time
        self.arc_speed = arc_len / corner_time
        self.arc_rate = 0.5 * math.pi / corner_time
        self.lap_time = 4.0 * (self.edge_time + corner_time)
        self.lap_length = 4.0 * (ls + arc_len)

        # Square-side headings in lap order: +x, +y, -x, -y.
        headings = (0.0, 0.5 * math.pi, math.pi, -0.5 * math.pi)
        hw = self.half_width
        k_offsets = ((0.0, -hw), (hw, 0.0), (0.0, hw), (-hw, 0.0))
        corner_centers = ((0.5 * ls, -0.5 * ls), (0.5 * ls, 0.5 * ls),
                          (-0.5 * ls, 0.5 * ls), (-0.5 * ls, -0.5 * ls))

        segs = []
        t = 0.0
        s = 0.0

        def add(kind, duration, length, data, speed, yaw_rate):
            nonlocal t, s
            segs.append(_Segment(kind, t, duration, s, length, data, speed, yaw_rate))
            t += duration
            s += length

        x0 = cx + k_offsets[0][0]
        y0 = cy + k_offsets[0][1]
        add("straight", self.half_edge_time, 0.5 * ls, (x0, y0, headings[0]), v, 0.0)
        for i in range(4):
            ccx, ccy = corner_centers[i]
            add("arc", corner_time, arc_len,
                (cx + ccx, cy + ccy, headings[i]), self.arc_speed, self.arc_rate)
            if i < 3:
                ax, ay = self._arc_exit(cx + ccx, cy + ccy, headings[i])
                add("straight", self.edge_time, ls, (ax, ay, headings[i + 1]), v, 0.0)
        ax, ay = self._arc_exit(cx + corner_centers[3][0], cy + corner_centers[3][1],
                                headings[3])
        add("straight", self.half_edge_time, 0.5 * ls, (ax, ay, headings[0]), v, 0.0)
        self.segments = segs

        self.k_points = np.array([(cx + ox, cy + oy) for ox, oy in k_offsets]
                                 + [(cx + k_offsets[0][0], cy + k_offsets[0][1])])
        # K2..K4 sit mid-straight; K5 repeats K1 at lap closure.
        self.k_times = np.array(
            [0.0] + [segs[2 + 2 * i].t0 + self.half_edge_time for i in range(3)]
            + [self.lap_time])

        # Tangency marks: pairs flank the full straights; the opening leg's
        # straight is split by K1, so its exit mark A8 comes first in lap time.
        self.a_points = np.empty((8, 2))
        self.a_times = np.empty(8)
        for g in range(3):  # groups 1..3: the three full straights
            seg = segs[2 + 2 * g]
            self.a_points[2 * g] = seg.data[0], seg.data[1]
            self.a_times[2 * g] = seg.t0
            self.a_points[2 * g + 1] = self._straight_end(seg)
            self.a_times[2 * g + 1] = seg.t0 + seg.duration
        first, last = segs[0], segs[-1]
        self.a_points[6] = last.data[0], last.data[1]      # A7: opening-leg entry
        self.a_times[6] = last.t0
        self.a_points[7] = self._straight_end(first)       # A8: opening-leg exit
        self.a_times[7] = first.t0 + first.duration

    def _arc_exit(self, ccx, ccy, heading0):
        h1 = heading0 + 0.5 * math.pi
        r = self.spec.corner_radius
        return ccx + r * math.sin(h1), ccy - r * math.cos(h1)

    @staticmethod
    def _straight_end(seg: _Segment):
        x0, y0, h = seg.data
        return x0 + seg.length * math.cos(h), y0 + seg.length * math.sin(h)

    # -- sampling ---------------------------------------------------------

    def _locate(self, t: float) -> tuple:
        """Segment and local time for a lap-periodic clock value."""
        tm = math.fmod(t, self.lap_time)
        if tm < 0.0:
            tm += self.lap_time
        for seg in self.segments:
            if tm < seg.t0 + seg.duration - 1e-12:
                return seg, tm - seg.t0
        seg = self.segments[-1]
        return seg, tm - seg.t0

    def sample(self, t: float) -> ChassisRefSample:
        """Reference state at lap clock t (periodic)."""
        seg, tau = self._locate(t)
        if seg.kind == "straight":
            x0, y0, h = seg.data
            d = seg.speed * tau
            return ChassisRefSample(
                x=x0 + d * math.cos(h), y=y0 + d * math.sin(h), heading=h,
                v=seg.speed, w=0.0,
                vdx=seg.speed * math.cos(h), vdy=seg.speed * math.sin(h))
        ccx, ccy, h0 = seg.data
        h = h0 + seg.yaw_rate * tau
        r = self.spec.corner_radius
        return ChassisRefSample(
            x=ccx + r * math.sin(h), y=ccy - r * math.cos(h), heading=h,
            v=seg.speed, w=seg.yaw_rate,
            vdx=seg.speed * math.cos(h), vdy=seg.speed * math.sin(h),
            vdx_dot=-seg.speed * seg.yaw_rate * math.sin(h),
            vdy_dot=seg.speed * seg.yaw_rate * math.cos(h))

    def time_at_distance(self, s: float) -> float:
        """Lap clock at which the path length s (from the lap start) is reached."""
        sm = math.fmod(s, self.lap_length)
        if sm < 0.0:
            sm += self.lap_length
        for seg in self.segments:
            if sm < seg.s0 + seg.length - 1e-9:
                return seg.t0 + (sm - seg.s0) / seg.speed
        seg = self.segments[-1]
        return seg.t0 + (sm - seg.s0) / seg.speed

    # -- stage II geometry -------------------------------------------------

    def group_straight(self, group: int) -> tuple:
        """Endpoints (entry, exit) of the full straight of group 1..4.

        Group 4 is the opening leg's straight, split across the lap seam; its
        endpoints are still A7 (entry) and A8 (exit).
        """
        return (self.a_points[2 * (group - 1)].copy(),
                self.a_points[2 * (group - 1) + 1].copy())

    def group_heading(self, group: int) -> float:
        headings = (0.5 * math.pi, math.pi, -0.5 * math.pi, 0.0)
        return headings[group - 1]

    def path_distance_of(self, point, group: int) -> float:
        """Path length from the lap start to a point on a group's straight,
        mapped to (0, lap] so ordering starts just after the closure mark."""
        start, end = self.group_straight(group)
        heading = self.group_heading(group)
        along = ((point[0] - start[0]) * math.cos(heading)
                 + (point[1] - start[1]) * math.sin(heading))
        if group < 4:
            seg = self.segments[2 + 2 * (group - 1)]
            s = seg.s0 + along
        else:
            last = self.segments[-1]
            half = last.length
            if along >= half:    # exit half of the opening leg, right after K1
                s = along - half
            else:
                s = last.s0 + along
        if s <= 1e-12:
            s = self.lap_length
        return s


def build_circuit(spec: CircuitSpec, dt: float | None = None) -> Circuit:
    return Circuit(spec, dt=dt)


# -- sweeps ---------------------------------------------------------------


@dataclass
class SweepPath:
    """Piecewise-linear raster over one crib face."""

    edge_index: int
    vertices: np.ndarray      # (M, 3) world metres
    cum_lengths: np.ndarray   # (M,) arc length at each vertex
    speed: float
    pitch: float

    @property
    def length(self) -> float:
        return float(self.cum_lengths[-1])

    @property
    def duration(self) -> float:
        return self.length / self.speed

    def positions_at(self, times_rel) -> np.ndarray:
        """World positions at times from sweep start; holds the final point."""
        s = np.clip(np.asarray(times_rel, dtype=float) * self.speed,
                    0.0, self.length)
        out = np.empty((len(s), 3))
        for k in range(3):
            out[:, k] = np.interp(s, self.cum_lengths, self.vertices[:, k])
        return out


def build_sweep(edge_index: int, sweep: SweepSpec, fire: FireTestSpec,
                circuit: Circuit) -> SweepPath:
    """Raster for the crib face adjacent to a Stage I leg (1..4).

    Legs wrap the crib anti-clockwise starting from the face the opening leg
    runs along; the raster's first pass starts at the trailing end of the face
    so the tool leads the platform.  Raises InfeasibleSweep when the raster
    cannot finish within one edge's straight-segment time.
    """
    if not 1 <= edge_index <= 4:
        raise InfeasibleSweep("edge index must be 1..4")
    if sweep.passes < 1:
        raise InfeasibleSweep("sweep needs at least one pass")
    cx, cy = circuit.spec.center
    half = 0.5 * fire.crib_side
    hs = 0.5 * sweep.horizontal_span

    # Face frame: p0 is the pass start, u the horizontal travel direction.
    if edge_index == 1:      # face at -y, chassis travelling +x
        p0, u = np.array([cx - hs, cy - half]), np.array([1.0, 0.0])
    elif edge_index == 2:    # face at +x, chassis travelling +y
        p0, u = np.array([cx + half, cy - hs]), np.array([0.0, 1.0])
    elif edge_index == 3:    # face at +y, chassis travelling -x
        p0, u = np.array([cx + hs, cy + half]), np.array([-1.0, 0.0])
    else:                    # face at -x, chassis travelling -y
        p0, u = np.array([cx - half, cy + hs]), np.array([0.0, -1.0])

    rise = sweep.vertical_span / (sweep.passes - 1) if sweep.passes > 1 else 0.0
    far = p0 + sweep.horizontal_span * u
    verts = []
    for j in range(sweep.passes):
        z = sweep.base_height + j * rise
        start, stop = (p0, far) if j % 2 == 0 else (far, p0)
        verts.append([start[0], start[1], z])   # vertical hop between passes
        verts.append([stop[0], stop[1], z])
    vertices = np.array(verts)
    deltas = np.diff(vertices, axis=0)
    seg_len = np.sqrt((deltas ** 2).sum(axis=1))
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])

    path = SweepPath(edge_index=edge_index, vertices=vertices, cum_lengths=cum,
                     speed=sweep.speed, pitch=sweep.pitch)
    if path.duration > circuit.edge_time + 1e-9:
        raise InfeasibleSweep(
            "sweep over face %d needs %.3f s but the edge allows %.3f s"
            % (edge_index, path.duration, circuit.edge_time))
    return path


# -- stage II assignment --------------------------------------------------


@dataclass(frozen=True)
class Stop:
    """A chassis halt for one residual fire."""

    fire: FireSpot
    nearest_a: int          # 1..8
    group: int              # 1..4
    point: tuple            # stop position on the group straight (m)
    heading: float
    path_distance: float    # ordering key, metres after the closure mark


@dataclass
class StopPlan:
    stops: list


def assign_fires(fires, circuit: Circuit) -> StopPlan:
    """Group each fire by its nearest tangency mark and drop a stop on that
    group's straight at the clamped perpendicular projection of the fire.

    Stops come out ordered along the anti-clockwise path from the closure
    mark, so one extra pass services them all.  Distance ties go to the
    lower-numbered mark.
    """
    stops = []
    for fire in fires:
        p = fire.planar()
        d2 = ((circuit.a_points - p) ** 2).sum(axis=1)
        nearest = int(np.argmin(d2))  # argmin takes the first (lowest) index on ties
        group = nearest // 2 + 1
        start, end = circuit.group_straight(group)
        heading = circuit.group_heading(group)
        u = np.array([math.cos(heading), math.sin(heading)])
        length = float(np.hypot(*(end - start)))
        along = float(np.clip((p - start) @ u, 0.0, length))
        point = start + along * u
        stops.append(Stop(fire=fire, nearest_a=nearest + 1, group=group,
                          point=(float(point[0]), float(point[1])),
                          heading=heading,
                          path_distance=circuit.path_distance_of(point, group)))
    stops.sort(key=lambda s: (s.path_distance, s.fire.ident))
    return StopPlan(stops=stops)


@dataclass(frozen=True)
class MissionCommand:
    """One dispatched action: drive to a stop or spray a fire from it."""

    kind: str               # "drive" | "spray"
    stop: Stop
    dwell: float = 0.0
    pitch: float = 0.0


def dispatch(plan: StopPlan, budget: float,
             geometry: DHTable = DEFAULT_DH, tool: ToolOffset | None = None,
             pitch: float = 30.0 * DEG):
    """Expand a stop plan into drive/spray commands.

    The spray budget is split evenly over the reachable stops.  Fires the arm
    cannot reach from their stop are skipped and returned flagged rather than
    raised.  Returns (commands, flagged) where flagged is a list of
    (fire, reason) pairs.
    """
    reachable = []
    flagged = []
    pitch_scan = [pitch] + [k * 5.0 * DEG for k in range(19)]
    for stop in plan.stops:
        chassis_pose = (stop.point[0], stop.point[1], stop.heading)
        chosen = None
        reason = ""
        for cand in pitch_scan:
            target = target_in_base_frame(chassis_pose, stop.fire.position, cand)
            try:
                inverse_kinematics(target, geometry, tool)
                chosen = cand
                break
            except (Unreachable, JointLimitViolation) as exc:
                reason = str(exc)
        if chosen is None:
            flagged.append((stop.fire, "unreachable from stop: %s" % reason))
        else:
            reachable.append((stop, chosen))

    commands = []
    if reachable:
        dwell = budget / len(reachable)
        for stop, chosen in reachable:
            commands.append(MissionCommand(kind="drive", stop=stop))
            commands.append(MissionCommand(kind="spray", stop=stop,
                                           dwell=dwell, pitch=chosen))
    return commands, flagged


# -- mission state machine ------------------------------------------------


@dataclass(frozen=True)
class MissionState:
    """Mission phase with a leg or stop index and an intra-phase label."""

    phase: str = "home"     # home | stage1 | top_spray | stage2 | end
    index: int = 0
    sub: str = ""

    def label(self) -> str:
        if self.phase == "home":
            return "Home"
        if self.phase == "stage1":
            return "StageI.%d.%s" % (self.index, self.sub)
        if self.phase == "top_spray":
            return "TopSpray"
        if self.phase == "stage2":
            return "StageII.%d.%s" % (self.index, self.sub)
        return "End"


def mission_step(state: MissionState, event: str, n_edges: int = 4,
                 n_stops: int = 0) -> MissionState:
    """Advance the mission machine by one event; illegal events raise."""
    p, i = state.phase, state.index
    if p == "home" and event == "start":
        return MissionState("stage1", 1, "sweep")
    if p == "stage1" and state.sub == "sweep" and event == "sweep_done":
        return MissionState("stage1", i, "transit")
    if p == "stage1" and state.sub == "transit" and event == "edge_done":
        if i < n_edges:
            return MissionState("stage1", i + 1, "sweep")
        return MissionState("top_spray", 0, "")
    if p == "top_spray" and event == "top_spray_done":
        if n_stops > 0:
            return MissionState("stage2", 1, "drive")
        return MissionState("end", 0, "")
    if p == "stage2" and state.sub == "drive" and event == "arrived":
        return MissionState("stage2", i, "spray")
    if p == "stage2" and state.sub == "spray" and event == "spray_done":
        if i < n_stops:
            return MissionState("stage2", i + 1, "drive")
        return MissionState("end", 0, "")
    raise IllegalTransition("event %r is not legal in state %s"
                            % (event, state.label()))
