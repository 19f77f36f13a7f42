"""Wheelchair base: command intake, per-tick ranging, and the 20 cm safety
override driving the five-state motor machine.

The transition function is pure; WheelchairBase wraps it with the command
channel and distance source for use inside the simulation loop.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable

from .channels import Channel
from .commands import Command, Motor

SAFETY_THRESHOLD_CM = 20.0
BASE_TICK_PERIOD_S = 0.1

_MOTOR_FOR_COMMAND = {
    Command.FORWARD: Motor.FORWARD,
    Command.BACKWARD: Motor.BACKWARD,
    Command.LEFT: Motor.LEFT,
    Command.RIGHT: Motor.RIGHT,
    Command.STOP: Motor.STOP,
}


class OverrideScope(enum.Enum):
    """Which movements the distance override may cancel.

    ALL is the literal pseudocode reading (stop even when reversing away
    from a forward obstacle); FORWARD_ONLY limits the override to motion
    toward the forward-facing sensor.
    """

    ALL = "all"
    FORWARD_ONLY = "forward_only"


def execute_movement(command: Command) -> Motor:
    """The five-way command-to-motor mapping."""
    return _MOTOR_FOR_COMMAND[command]


@dataclass(frozen=True)
class BaseState:
    last_command: Command = Command.STOP
    motor: Motor = Motor.STOP
    last_distance_cm: float = 400.0
    safety_threshold_cm: float = SAFETY_THRESHOLD_CM
    override_scope: OverrideScope = OverrideScope.ALL
    # True iff the most recent tick ended in a forced stop.
    override_active: bool = False

    def __post_init__(self) -> None:
        if self.safety_threshold_cm <= 0:
            raise ValueError("safety_threshold_cm must be positive")


def _override_applies(state: BaseState, pending: Command) -> bool:
    if state.override_scope is OverrideScope.ALL:
        return True
    return pending is Command.FORWARD


def base_tick(state: BaseState, incoming: Command | None, distance_cm: float) -> BaseState:
    """One control-loop iteration: intake, then measure, then act.

    The override is latching by construction: it rewrites last_command to
    Stop, so clearing the obstacle does not resume motion until a fresh
    command arrives.
    """
    if distance_cm < 0:
        raise ValueError("distance must be non-negative")
    pending = incoming if incoming is not None else state.last_command
    if distance_cm <= state.safety_threshold_cm and _override_applies(state, pending):
        return replace(
            state,
            last_command=Command.STOP,
            motor=Motor.STOP,
            last_distance_cm=distance_cm,
            override_active=True,
        )
    return replace(
        state,
        last_command=pending,
        motor=execute_movement(pending),
        last_distance_cm=distance_cm,
        override_active=False,
    )


class WheelchairBase:
    """Stateful wrapper stepped once per 100 ms tick.

    Commands arrive on a thread-safe channel; when several queued up during
    one tick only the newest is applied (single C per loop iteration), the
    rest are counted as coalesced.
    """

    def __init__(
        self,
        commands: Channel[Command],
        distance_source: Callable[[], float],
        state: BaseState | None = None,
    ):
        self.commands = commands
        self.distance_source = distance_source
        self.state = state or BaseState()
        self.commands_applied = 0
        self.commands_coalesced = 0

    def tick(self) -> BaseState:
        incoming, discarded = self.commands.take_latest()
        self.commands_coalesced += discarded
        if incoming is not None:
            self.commands_applied += 1
        distance_cm = self.distance_source()
        self.state = base_tick(self.state, incoming, distance_cm)
        return self.state
