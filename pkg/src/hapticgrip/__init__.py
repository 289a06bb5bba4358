"""Haptic shared-control grasp simulator and analysis toolkit."""

from .arbiter import Arbiter, Group, SessionMode, SharedMode, TickEvents, reset_session
from .autonomy import (
    AutoStage,
    AutoState,
    ControllerParams,
    SlipBreak,
    capture_desired_grip,
    detect_contact,
    detect_slip_break,
    stage1_command,
    stage2_command,
    stage3_command,
)
from .analysis import (
    HemoSeries,
    MbllParams,
    OpticalSeries,
    apply_fir,
    design_fir,
    forward_intensity,
    mbll,
    neural_efficiency,
    zscore,
)
from .haptics import VibrationParams, disable_pulse, vibration_amplitude, vibration_sample
from .harness import (
    AttemptMode,
    AttemptRecord,
    ExperimentResult,
    Schedule,
    TrialDriver,
    TrialRecord,
    attempt_metrics,
    export_experiment,
    replay_metrics,
    replay_recorded_inputs,
    run_experiment,
    run_trial,
    segment_attempts,
)
from .operator_io import (
    MvcCalibration,
    OperatorInput,
    normalize,
    proportional_command,
    tracking_assessment,
)
from .plant import (
    HoldStatus,
    PlantParams,
    PlantState,
    hold_check,
    initial_state,
    load_voltage,
    reset_object,
    step_plant,
)
from .policies import PolicyParams, ScriptedOperator
from .session import Observation, SimulationSession
from .telemetry import Telemetry

__version__ = "0.1.0"
