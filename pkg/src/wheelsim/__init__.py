"""Deterministic smart-wheelchair simulation.

A fixed-timestep kernel drives a glove gesture controller, a safety-
overridden drive base, a vitals monitor with cloud upload and email
alerts, and a statistical object detector, all against a synthetic world.
Same scenario, same seed: byte-identical event log.
"""
from .base import (SAFETY_THRESHOLD_CM, BaseState, OverrideScope,
                   WheelchairBase, base_tick, execute_movement)
from .channels import (Channel, ChannelClosed, SerialLink, Subscription,
                       TelemetryBus)
from .commands import Command, Motor
from .gesture import (CalibrationOffsets, GestureThresholds, GyroSample,
                      apply_calibration, calibrate, classify_gesture)
from .harness import (DetectionReport, NoiseConfig, ObstacleReport,
                      SafetySweepReport, TrialReport,
                      calibrated_detector_params, find_obstacle_seed,
                      run_detection_eval, run_full_scenario,
                      run_gesture_trials, run_obstacle_trials,
                      run_safety_sweep)
from .health import (AlertState, HealthMonitor, PpgSample, PpgWindow,
                     VitalsFrame, alert_gate, c_to_f, compute_bpm,
                     compute_spo2, parse_sensor_frame, ratio_for_spo2,
                     spo2_from_ratio)
from .netproto import (AlertEvent, CloudPayload, CloudStub, DirectCloudLink,
                       FileSinkTransport, HttpCloudLink, InvalidFrame,
                       MemoryTransport, RejectedKey, TransportFailure,
                       Unreachable, decode_command, encode_command,
                       render_alert_email, render_query, send_email_alert)
from .perception import (Detection, DetectorParams, Metrics, Perceiver,
                         filter_detections, fp_rate_for_precision, iou,
                         score_detections, simulate_detections,
                         uniform_recall)
from .scenario import ConfigError, Scenario, load_scenario, parse_scenario
from .sensorhub import SensorHub, frame_csv
from .sim import SimResult, Simulation, run_simulation
from .world import (CLASS_LABELS, CircleObstacle, SceneObject,
                    SegmentObstacle, UltrasonicModel, UserProfile, World,
                    WorldState, measure_ultrasonic, step_world,
                    visible_objects)

__version__ = "0.1.0"

__all__ = [
    "AlertEvent", "AlertState", "BaseState", "CLASS_LABELS",
    "CalibrationOffsets", "Channel", "ChannelClosed", "CircleObstacle",
    "CloudPayload", "CloudStub", "Command", "ConfigError", "Detection",
    "DetectionReport", "DetectorParams", "DirectCloudLink",
    "FileSinkTransport", "GestureThresholds", "GyroSample", "HealthMonitor",
    "HttpCloudLink", "InvalidFrame", "MemoryTransport", "Metrics", "Motor",
    "NoiseConfig", "ObstacleReport", "OverrideScope", "Perceiver",
    "PpgSample", "PpgWindow", "RejectedKey", "SAFETY_THRESHOLD_CM",
    "SafetySweepReport", "Scenario", "SceneObject", "SegmentObstacle",
    "SensorHub", "SerialLink", "SimResult", "Simulation", "Subscription",
    "TelemetryBus", "TransportFailure", "TrialReport", "UltrasonicModel",
    "Unreachable", "UserProfile", "VitalsFrame", "WheelchairBase", "World",
    "WorldState", "alert_gate", "apply_calibration", "base_tick",
    "c_to_f", "calibrate", "calibrated_detector_params", "classify_gesture",
    "compute_bpm", "compute_spo2", "decode_command", "encode_command",
    "execute_movement", "filter_detections", "find_obstacle_seed",
    "fp_rate_for_precision", "frame_csv", "iou", "load_scenario",
    "measure_ultrasonic", "parse_scenario", "parse_sensor_frame",
    "ratio_for_spo2", "render_alert_email", "render_query",
    "run_detection_eval", "run_full_scenario", "run_gesture_trials",
    "run_obstacle_trials", "run_safety_sweep", "run_simulation",
    "score_detections", "send_email_alert", "simulate_detections",
    "spo2_from_ratio", "step_world", "uniform_recall", "visible_objects",
]
