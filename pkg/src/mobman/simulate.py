"""Closed-loop mission simulation on a fixed control grid.

The run is assembled in two passes.  Planning lays out every phase on the
step grid — circuit reference samples, sweep windows, stage II stops — and
builds the arm's joint-space reference (tracked sweep targets, smooth blends
across transits, holds at stops).  Execution then marches both controllers
and plants step by step: the chassis follows its reduced velocity dynamics
with the pose integrated by the classic fourth-order rule, and the arm
integrates its full rigid-body dynamics the same way under zero-order-hold
torques.  Every step lands in a fixed-schema log that round-trips through
CSV bit for bit.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import metrics as metrics_mod
from .arm_control import (ArmGains, control_law as arm_control_law,
                          target_in_base_frame)
from .chassis_control import (ChassisGains, ChassisRefSample, ChassisState,
                              control_law as chassis_control_law, error_rates,
                              plant_step, sliding_surface, tracking_error,
                              wheel_speeds)
from .config import (ScenarioConfig, build_arm_gains, build_chassis_gains,
                     build_circuit_spec, build_fires, build_fire_test,
                     build_geometry, build_inertial, build_sweep_spec,
                     build_top_spray, disturbance_series)
from .dynamics import ArmDynamics
from .errors import EmptyLog, JointLimitViolation, ParseError, Unreachable
from .kinematics import forward_kinematics, inverse_kinematics
from .mission import (MissionState, StopPlan, assign_fires, build_circuit,
                      build_sweep, dispatch, mission_step)

CSV_NUMERIC = ["X", "Y", "phi", "v", "w", "e1", "e2", "e3", "s1", "s2",
               "u1", "u2", "vL", "vR",
               "q1", "q2", "q3", "q4", "qd1", "qd2", "qd3", "qd4",
               "tau1", "tau2", "tau3", "tau4",
               "eeX", "eeY", "eeZ", "tgtX", "tgtY", "tgtZ"]
CSV_COLUMNS = ["time", "state"] + CSV_NUMERIC + ["event"]


class SimLog:
    """Column-oriented run log with metadata and per-row event markers."""

    def __init__(self, meta, time, state, values, event):
        self.meta = dict(meta)
        self.time = np.asarray(time, dtype=float)
        self.state = list(state)
        self.values = {k: np.asarray(values[k], dtype=float)
                       for k in CSV_NUMERIC}
        self.event = list(event)

    @property
    def n_rows(self) -> int:
        return len(self.time)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            for key, value in self.meta.items():
                fh.write("#%s=%s\n" % (key, repr(value) if isinstance(
                    value, float) else value))
            fh.write(",".join(CSV_COLUMNS) + "\n")
            cols = [self.values[k] for k in CSV_NUMERIC]
            for i in range(self.n_rows):
                cells = [repr(float(self.time[i])), self.state[i]]
                cells += [repr(float(c[i])) for c in cols]
                cells.append(self.event[i])
                fh.write(",".join(cells) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SimLog":
        meta: dict = {}
        time = []
        state = []
        event = []
        values = {k: [] for k in CSV_NUMERIC}
        with open(path) as fh:
            header = None
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line:
                    continue
                if header is None and line.startswith("#"):
                    if "=" not in line:
                        raise ParseError("line %d: bad metadata line" % lineno)
                    key, _, val = line[1:].partition("=")
                    meta[key] = _parse_meta_value(val)
                    continue
                if header is None:
                    header = line.split(",")
                    if header != CSV_COLUMNS:
                        raise ParseError("line %d: unexpected header" % lineno)
                    continue
                cells = line.split(",")
                if len(cells) != len(CSV_COLUMNS):
                    raise ParseError("line %d: expected %d cells, got %d"
                                     % (lineno, len(CSV_COLUMNS), len(cells)))
                try:
                    time.append(float(cells[0]))
                    for k, cell in zip(CSV_NUMERIC, cells[2:-1]):
                        values[k].append(float(cell))
                except ValueError as exc:
                    raise ParseError("line %d: %s" % (lineno, exc)) from exc
                state.append(cells[1])
                event.append(cells[-1])
        if header is None:
            raise ParseError("no header line found")
        if not time:
            raise EmptyLog("log file has no data rows")
        return cls(meta, time, state, values, event)


def _parse_meta_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _frozen(sample: ChassisRefSample) -> ChassisRefSample:
    return replace(sample, v=0.0, w=0.0, vdx=0.0, vdy=0.0,
                   vdx_dot=0.0, vdy_dot=0.0, w_dot=0.0)


def _smoothstep(x: float) -> float:
    return x * x * (3.0 - 2.0 * x)


@dataclass
class Stage2Slot:
    """One serviced stop on the step grid."""

    stop: object
    pitch: float
    dwell: float
    clock: float          # lap clock at the parked pose (grid-snapped)
    arrive_step: int
    spray_end_step: int


@dataclass
class MissionPlan:
    """Everything laid out before the loop runs."""

    config: ScenarioConfig
    geometry: object
    tool: object
    circuit: object
    sweeps: list
    stop_plan: StopPlan
    flagged: list
    fire_test: object
    top_spray: object
    dt: float
    n_steps: int
    k_steps: list
    a_steps: list
    sweep_windows: list   # (start_step, end_step) per leg
    top_window: tuple     # (start_step, end_step); equal when unused
    stage2: list          # Stage2Slot per serviced stop


def plan_mission(config: ScenarioConfig) -> MissionPlan:
    dt = config.dt
    geometry, tool = build_geometry(config)
    circuit = build_circuit(build_circuit_spec(config), dt=dt)
    fire_test = build_fire_test(config)
    sweep_spec = build_sweep_spec(config)
    sweeps = [build_sweep(k, sweep_spec, fire_test, circuit)
              for k in range(1, 5)]
    top_spray = build_top_spray(config)

    fires = build_fires(config)
    stop_plan = assign_fires(fires, circuit) if fires else StopPlan(stops=[])
    commands, flagged = dispatch(stop_plan, fire_test.stage2_budget,
                                 geometry, tool, pitch=sweep_spec.pitch)

    k_steps = [int(round(t / dt)) for t in circuit.k_times]
    a_steps = [int(round(t / dt)) for t in circuit.a_times]
    sweep_windows = []
    for k in range(4):
        start = k_steps[k]
        steps = int(math.ceil(sweeps[k].duration / dt - 1e-9))
        sweep_windows.append((start, start + steps))

    lap_steps = k_steps[4]
    top_steps = int(round(top_spray.duration / dt))
    top_window = (lap_steps, lap_steps + top_steps)

    stage2 = []
    cursor = top_window[1]
    prev_clock_steps = 0
    sprays = [c for c in commands if c.kind == "spray"]
    for cmd in sprays:
        tt = circuit.time_at_distance(cmd.stop.path_distance)
        if tt <= 1e-9:
            tt = circuit.lap_time
        clock_steps = int(round(tt / dt))
        arrive = cursor + (clock_steps - prev_clock_steps)
        dwell_steps = int(round(cmd.dwell / dt))
        stage2.append(Stage2Slot(stop=cmd.stop, pitch=cmd.pitch,
                                 dwell=cmd.dwell, clock=clock_steps * dt,
                                 arrive_step=arrive,
                                 spray_end_step=arrive + dwell_steps))
        cursor = arrive + dwell_steps
        prev_clock_steps = clock_steps

    return MissionPlan(config=config, geometry=geometry, tool=tool,
                       circuit=circuit, sweeps=sweeps, stop_plan=stop_plan,
                       flagged=flagged, fire_test=fire_test,
                       top_spray=top_spray, dt=dt, n_steps=cursor,
                       k_steps=k_steps, a_steps=a_steps,
                       sweep_windows=sweep_windows, top_window=top_window,
                       stage2=stage2)


def _chassis_reference(plan: MissionPlan) -> list:
    """Per-sample reference; sample i holds the values active on [t_i, t_i+1)."""
    dt = plan.dt
    circuit = plan.circuit
    n = plan.n_steps
    refs = [None] * (n + 1)
    lap_end = plan.k_steps[4]
    for i in range(lap_end):
        refs[i] = circuit.sample(i * dt)
    for i in range(plan.top_window[0], plan.top_window[1]):
        refs[i] = _frozen(circuit.sample(circuit.lap_time))
    cursor = plan.top_window[1]
    prev_clock = 0.0
    for slot in plan.stage2:
        for i in range(cursor, slot.arrive_step):
            refs[i] = circuit.sample(prev_clock + (i - cursor) * dt)
        for i in range(slot.arrive_step, slot.spray_end_step):
            refs[i] = _frozen(circuit.sample(slot.clock))
        cursor = slot.spray_end_step
        prev_clock = slot.clock
    if plan.stage2:
        refs[n] = _frozen(circuit.sample(plan.stage2[-1].clock))
    else:
        refs[n] = _frozen(circuit.sample(circuit.lap_time))
    return refs


def _labels_and_events(plan: MissionPlan):
    """State label per sample plus marker lists, validated by the mission
    machine as it is pumped through the planned event sequence."""
    n = plan.n_steps
    labels = [""] * (n + 1)
    events = [[] for _ in range(n + 1)]
    n_stops = len(plan.stage2)

    state = MissionState()
    events[0].append("start")

    def fill(a, b, label):
        for i in range(a, b):
            labels[i] = label

    state = mission_step(state, "start", n_stops=n_stops)
    for k in range(1, 5):
        leg_end = plan.k_steps[k]
        sweep_start, sweep_end = plan.sweep_windows[k - 1]
        events[sweep_start].append("K%d" % k)
        events[sweep_start].append("sweep%d_start" % k)
        fill(sweep_start, min(sweep_end, leg_end), state.label())
        events[sweep_end].append("sweep%d_end" % k)
        state = mission_step(state, "sweep_done", n_stops=n_stops)
        fill(sweep_end, leg_end, state.label())
        state = mission_step(state, "edge_done", n_stops=n_stops)
    events[plan.k_steps[4]].append("K5")
    for a in range(8):
        events[plan.a_steps[a]].append("A%d" % (a + 1))

    if plan.top_window[1] > plan.top_window[0]:
        events[plan.top_window[0]].append("top_spray_start")
        events[plan.top_window[1]].append("top_spray_end")
        fill(plan.top_window[0], plan.top_window[1], state.label())
    state = mission_step(state, "top_spray_done", n_stops=n_stops)

    cursor = plan.top_window[1]
    for j, slot in enumerate(plan.stage2, start=1):
        fill(cursor, slot.arrive_step, state.label())
        state = mission_step(state, "arrived", n_stops=n_stops)
        events[slot.arrive_step].append("stop%d_arrive" % j)
        events[slot.arrive_step].append("spray%d_start" % j)
        fill(slot.arrive_step, slot.spray_end_step, state.label())
        events[slot.spray_end_step].append("spray%d_end" % j)
        state = mission_step(state, "spray_done", n_stops=n_stops)
        cursor = slot.spray_end_step

    if state.phase != "end":
        raise AssertionError("mission machine did not reach End")
    labels[n] = state.label()
    events[n].append("end")
    return labels, events


def _arm_reference(plan: MissionPlan, refs: list):
    """Joint reference over the whole run: tracked IK in sweep and spray
    windows, smooth joint-space blends across the gaps, holds elsewhere."""
    n = plan.n_steps
    dt = plan.dt
    geometry, tool = plan.geometry, plan.tool
    qr = np.zeros((n + 1, 4))
    anchors = []

    for k in range(4):
        a, b = plan.sweep_windows[k]
        sweep = plan.sweeps[k]
        rel = (np.arange(a, b + 1) - a) * dt
        points = sweep.positions_at(rel)
        for off, i in enumerate(range(a, b + 1)):
            pose = (refs[i].x, refs[i].y, refs[i].heading)
            target = target_in_base_frame(pose, points[off], sweep.pitch)
            try:
                qr[i] = inverse_kinematics(target, geometry, tool)
            except (Unreachable, JointLimitViolation) as exc:
                raise type(exc)("sweep %d sample %d (t=%.4f s): %s"
                                % (k + 1, i, i * dt, exc)) from exc
        anchors.append((a, b))

    if plan.top_window[1] > plan.top_window[0]:
        a, b = plan.top_window
        qr[a:b + 1] = np.asarray(plan.top_spray.joints)
        anchors.append((a, b))

    for j, slot in enumerate(plan.stage2, start=1):
        pose_ref = plan.circuit.sample(slot.clock)
        pose = (pose_ref.x, pose_ref.y, pose_ref.heading)
        target = target_in_base_frame(pose, slot.stop.fire.position, slot.pitch)
        try:
            q_spray = inverse_kinematics(target, geometry, tool)
        except (Unreachable, JointLimitViolation) as exc:
            raise type(exc)("stage II stop %d (%s): %s"
                            % (j, slot.stop.fire.ident, exc)) from exc
        qr[slot.arrive_step:slot.spray_end_step + 1] = q_spray
        anchors.append((slot.arrive_step, slot.spray_end_step))

    anchors.sort()
    for (a0, b0), (a1, b1) in zip(anchors[:-1], anchors[1:]):
        if a1 <= b0:
            continue
        q_from = qr[b0].copy()
        q_to = qr[a1].copy()
        span = a1 - b0
        for i in range(b0 + 1, a1):
            qr[i] = q_from + _smoothstep((i - b0) / span) * (q_to - q_from)
    last_end = anchors[-1][1]
    qr[last_end + 1:] = qr[last_end]

    qdr = np.gradient(qr, dt, axis=0)
    qddr = np.gradient(qdr, dt, axis=0)
    return qr, qdr, qddr


@dataclass
class MissionResult:
    log: SimLog
    report: metrics_mod.MetricsReport
    plan: MissionPlan


def run_mission(config: ScenarioConfig | None = None) -> MissionResult:
    """Plan and execute the full mission; returns the log, its metrics and
    the plan that produced them."""
    if config is None:
        config = ScenarioConfig()
    plan = plan_mission(config)
    dt = plan.dt
    n = plan.n_steps

    refs = _chassis_reference(plan)
    labels, event_lists = _labels_and_events(plan)
    qr, qdr, qddr = _arm_reference(plan, refs)

    model = ArmDynamics(params=build_inertial(config, plan.geometry),
                        geometry=plan.geometry, tool=plan.tool)
    arm_gains = build_arm_gains(config)
    gains = build_chassis_gains(config)
    dist = disturbance_series(config.disturbance, np.arange(n) * dt)

    cols = {k: np.zeros(n + 1) for k in CSV_NUMERIC}
    time = np.arange(n + 1) * dt

    off = config.initial_pose_offset
    z = np.array([refs[0].x + off[0], refs[0].y + off[1],
                  refs[0].heading + off[2] * math.pi / 180.0,
                  refs[0].v, refs[0].w])
    q = qr[0].copy()
    qd = qdr[0].copy()

    mm = 1e-3
    for i in range(n + 1):
        ref = refs[i]
        err = tracking_error(ref, ChassisState(z[0], z[1], z[2]))
        rates = error_rates(err, z[3], z[4], ref.v, ref.w)
        s = sliding_surface(err, rates, gains)
        u = chassis_control_law(err, rates, ref, z[2], z[4], gains)
        tau = arm_control_law(q, qd, qr[i], qdr[i], qddr[i], arm_gains, model)

        c, sn = math.cos(z[2]), math.sin(z[2])
        fk = forward_kinematics(q, plan.geometry, plan.tool, check_limits=False)
        tk = forward_kinematics(qr[i], plan.geometry, plan.tool,
                                check_limits=False)
        vl, vr = wheel_speeds(z[3], z[4], gains.track_width)

        cols["X"][i], cols["Y"][i], cols["phi"][i] = z[0], z[1], z[2]
        cols["v"][i], cols["w"][i] = z[3], z[4]
        cols["e1"][i], cols["e2"][i], cols["e3"][i] = err.e1, err.e2, err.e3
        cols["s1"][i], cols["s2"][i] = s
        cols["u1"][i], cols["u2"][i] = u
        cols["vL"][i], cols["vR"][i] = vl, vr
        for k in range(4):
            cols["q%d" % (k + 1)][i] = q[k]
            cols["qd%d" % (k + 1)][i] = qd[k]
            cols["tau%d" % (k + 1)][i] = tau[k]
        cols["eeX"][i] = z[0] + (fk.x * c - fk.y * sn) * mm
        cols["eeY"][i] = z[1] + (fk.x * sn + fk.y * c) * mm
        cols["eeZ"][i] = fk.z * mm
        cols["tgtX"][i] = ref.x + (tk.x * math.cos(ref.heading)
                                   - tk.y * math.sin(ref.heading)) * mm
        cols["tgtY"][i] = ref.y + (tk.x * math.sin(ref.heading)
                                   + tk.y * math.cos(ref.heading)) * mm
        cols["tgtZ"][i] = tk.z * mm

        if i == n:
            break
        z = plant_step(z, ref, refs[i + 1], u, dist[i], dt,
                       f_bounds=gains.f_bounds, integrator=config.integrator)
        q, qd = _arm_step(model, q, qd, tau, dt, integrator=config.integrator)

    meta = {
        "dt": float(dt),
        "discharge_time": float(plan.fire_test.discharge_time),
        "stage2_budget": float(plan.fire_test.stage2_budget),
        "top_spray_duration": float(plan.top_spray.duration),
        "band_e1_mm": float(config.band.e1_mm),
        "band_e2_mm": float(config.band.e2_mm),
        "band_e3_deg": float(config.band.e3_deg),
        "corner_time": float(plan.circuit.corner_time),
        "edge_time": float(plan.circuit.edge_time),
        "lap_time": float(plan.circuit.lap_time),
        "n_stops": len(plan.stage2),
        "n_flagged": len(plan.flagged),
        "flagged": ";".join(f.ident for f, _ in plan.flagged),
    }
    log = SimLog(meta, time, labels,
                 cols, [";".join(e) for e in event_lists])
    report = metrics_mod.compute_metrics(log)
    return MissionResult(log=log, report=report, plan=plan)


def _arm_step(model: ArmDynamics, q, qd, tau, dt, integrator: str = "rk4"):
    """One fixed step of the arm under zero-order-hold torque."""
    y = np.concatenate([q, qd])

    def f(y):
        return np.concatenate([y[4:], model.forward_dynamics(y[:4], y[4:], tau)])

    if integrator == "euler":
        y1 = y + dt * f(y)
    else:
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y1 = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y1[:4], y1[4:]


def run_line_scenario(gains: ChassisGains, duration: float, dt: float,
                      speed: float = 0.88, initial_offset=(0.0, 0.0, 0.0),
                      disturbance: np.ndarray | None = None) -> dict:
    """Chassis-only tracking of a straight constant-speed reference.

    The vehicle starts at the reference velocity with the given pose offset
    (dx, dy m; dheading rad).  Returns time histories keyed by name,
    including the switching-function energy 0.5*(s1^2 + s2^2).
    """
    n = int(round(duration / dt))
    ref = ChassisRefSample(x=0.0, y=0.0, heading=0.0, v=speed, w=0.0,
                           vdx=speed, vdy=0.0)
    out = {k: np.zeros(n + 1) for k in
           ("t", "e1", "e2", "e3", "s1", "s2", "u1", "u2", "V")}
    z = np.array([initial_offset[0], initial_offset[1], initial_offset[2],
                  speed, 0.0])
    for i in range(n + 1):
        t = i * dt
        ref_i = replace(ref, x=speed * t)
        err = tracking_error(ref_i, ChassisState(z[0], z[1], z[2]))
        rates = error_rates(err, z[3], z[4], ref_i.v, ref_i.w)
        s = sliding_surface(err, rates, gains)
        u = chassis_control_law(err, rates, ref_i, z[2], z[4], gains)
        out["t"][i] = t
        out["e1"][i], out["e2"][i], out["e3"][i] = err.e1, err.e2, err.e3
        out["s1"][i], out["s2"][i] = s
        out["u1"][i], out["u2"][i] = u
        out["V"][i] = 0.5 * (s[0] ** 2 + s[1] ** 2)
        if i == n:
            break
        f = disturbance[i] if disturbance is not None else np.zeros(2)
        ref_next = replace(ref, x=speed * (t + dt))
        z = plant_step(z, ref_i, ref_next, u, f, dt, f_bounds=gains.f_bounds)
    return out


def export(result: MissionResult, directory) -> list:
    """Write the run artifacts; returns the created paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []

    def emit(name, writer):
        path = os.path.join(directory, name)
        writer(path)
        paths.append(path)

    emit("timeseries.csv", result.log.to_csv)
    emit("metrics.json", lambda p: _write_json(p, result.report))
    subsets = {
        "trajectory.csv": ["X", "Y", "phi"],
        "tracking_errors.csv": ["e1", "e2", "e3", "s1", "s2"],
        "joint_torques.csv": ["tau1", "tau2", "tau3", "tau4"],
        "wheel_speeds.csv": ["vL", "vR"],
    }
    for name, fields in subsets.items():
        emit(name, lambda p, fields=fields: _write_subset(p, result.log, fields))
    return paths


def _write_json(path, report) -> None:
    with open(path, "w") as fh:
        json.dump(dataclasses.asdict(report), fh, indent=2)
        fh.write("\n")


def _write_subset(path, log: SimLog, fields) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(["time"] + fields) + "\n")
        for i in range(log.n_rows):
            cells = [repr(float(log.time[i]))]
            cells += [repr(float(log.values[k][i])) for k in fields]
            fh.write(",".join(cells) + "\n")
