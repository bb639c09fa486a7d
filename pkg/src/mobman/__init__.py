"""Simulation engine for a fire-suppression mobile manipulator: arm and
chassis models, sliding-mode tracking controllers, coverage mission planner
and a deterministic fixed-step simulation harness."""

from .errors import (DisturbanceBoundViolation, EmptyLog, GeometryError,
                     IllegalTransition, InfeasibleSweep, JointLimitViolation,
                     MobmanError, ParseError, SolveFailure, Unreachable,
                     ValidationError)
from .kinematics import (DEFAULT_DH, DHRow, DHTable, EndEffectorPose,
                         ToolOffset, forward_kinematics, inverse_kinematics,
                         workspace_analysis)
from .dynamics import ArmDynamics, LinkInertialParams, default_inertial_params
from .arm_control import ArmGains, ArmReference, build_arm_reference
from .chassis_control import (ChassisGains, ChassisRefSample, ChassisState,
                              tracking_error)
from .mission import (Circuit, CircuitSpec, FireSpot, FireTestSpec,
                      MissionState, SweepSpec, TopSpraySpec, assign_fires,
                      build_circuit, build_sweep, dispatch, mission_step)
from .config import (ScenarioConfig, default_scenario, load_config,
                     parse_config, save_config, serialize_config)
from .simulate import MissionResult, SimLog, export, plan_mission, run_mission
from .metrics import MetricsReport, compute_metrics

__version__ = "0.1.0"

__all__ = [
    "ArmDynamics", "ArmGains", "ArmReference", "Circuit", "CircuitSpec",
    "ChassisGains", "ChassisRefSample", "ChassisState", "DEFAULT_DH", "DHRow",
    "DHTable", "DisturbanceBoundViolation", "EmptyLog", "EndEffectorPose",
    "FireSpot", "FireTestSpec", "GeometryError", "IllegalTransition",
    "InfeasibleSweep", "JointLimitViolation", "LinkInertialParams",
    "MetricsReport", "MissionResult", "MissionState", "MobmanError",
    "ParseError", "ScenarioConfig", "SimLog", "SolveFailure", "SweepSpec",
    "ToolOffset", "TopSpraySpec", "Unreachable", "ValidationError",
    "assign_fires", "build_arm_reference", "build_circuit", "build_sweep",
    "compute_metrics", "default_inertial_params", "default_scenario",
    "dispatch", "export", "forward_kinematics", "inverse_kinematics",
    "load_config", "mission_step", "parse_config", "plan_mission",
    "run_mission", "save_config", "serialize_config", "tracking_error",
    "workspace_analysis",
]
