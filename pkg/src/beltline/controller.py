"""Embedded supervisor: discrete PID speed loop, stabilization wait,
sensor arming and camera trigger generation, pass/fail indicators.

The supervisor is tick-driven (1 ms) by the service loop; the PID runs
once per control period on the encoder pulse count of the period that
just ended. Both are pure functions of (state, inputs).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .plant import SensorState

PHASE_INIT = "init"
PHASE_STABILIZING = "stabilizing"
PHASE_ARMED = "armed"
PHASE_TRIGGERING = "triggering"

# Inclusive bounds used for validation here and for the console's
# client-side checks (served by GET /config).
PARAM_RANGES = {
    "setpoint": (1.0, 500.0),
    "nivel_luz": (0, 255),
    "t_espera": (0, 600_000),       # ms
    "time_trig": (1, 1_000_000),    # us
    "kp": (0.0, 100.0),
    "ki": (0.0, 100.0),
    "kd": (0.0, 100.0),
    "control_period": (1, 10_000),  # ms
    "u_min": (0.0, 255.0),
    "u_max": (0.0, 255.0),
}


@dataclass(frozen=True)
class ControllerParams:
    setpoint: float = 200.0       # encoder pulses per control period
    nivel_luz: int = 255          # LED PWM byte
    t_espera: int = 6000          # stabilization wait, ms
    time_trig: int = 2000         # trigger pulse width, us
    kp: float = 0.90              # gains are per-period units, tuned by
    ki: float = 0.50              # step-response runs against the plant
    kd: float = 0.30              # (settles in under 2 s for setpoints 50..200)
    control_period: int = 150     # ms
    u_min: float = 0.0
    u_max: float = 255.0

    def validate(self) -> None:
        for name, (lo, hi) in PARAM_RANGES.items():
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise ValueError(f"{name} out of range [{lo}, {hi}]: {value}")
        if not isinstance(self.nivel_luz, int):
            raise ValueError(f"nivel_luz must be an integer, got {self.nivel_luz!r}")
        if self.u_min >= self.u_max:
            raise ValueError("u_min must be below u_max")


@dataclass
class ControllerState:
    phase: str = PHASE_INIT
    integrator: float = 0.0
    prev_error: float = 0.0
    phase_timer: int = 0          # ms in current phase
    trigger_remaining: int = 0    # us left in the active pulse
    green_led: bool = False
    red_led: bool = False


@dataclass(frozen=True)
class TriggerPulse:
    start_time: int               # simulation time, ms
    width: int                    # us


def pid_step(params: ControllerParams, measured_pulses: float,
             state: ControllerState) -> tuple[float, ControllerState]:
    """One PID update; returns the duty to hold for the next period.

    Positional form with conditional anti-windup: the integrator only
    accumulates while the output is inside [u_min, u_max], and is clamped
    so ki * integrator alone can never exceed the output span.
    """
    e = params.setpoint - measured_pulses
    u = params.kp * e + params.ki * state.integrator \
        + params.kd * (e - state.prev_error)
    integrator = state.integrator
    if params.u_min <= u <= params.u_max:
        duty = u
        integrator += e
    else:
        duty = min(max(u, params.u_min), params.u_max)
    bound = (params.u_max - params.u_min) / max(params.ki, 1e-9)
    integrator = min(max(integrator, -bound), bound)
    new = replace(state, integrator=integrator, prev_error=e)
    return duty, new


def supervisor_tick(state: ControllerState, params: ControllerParams,
                    sensor: SensorState, dt_ms: int,
                    ) -> tuple[ControllerState, list[str]]:
    """Advance the supervisor one tick; actions may contain "trigger".

    Phase order: init -> stabilizing (immediately, PID already running)
    -> armed once t_espera elapsed. While armed, a sensor rising edge
    emits one trigger and enters triggering; edges during the pulse are
    ignored, and the phase returns to armed when the pulse width elapses.
    """
    actions: list[str] = []
    phase = state.phase
    timer = state.phase_timer
    trig = state.trigger_remaining

    if phase == PHASE_INIT:
        phase = PHASE_STABILIZING
        timer = 0

    if phase == PHASE_STABILIZING:
        timer += dt_ms
        if timer >= params.t_espera:
            phase = PHASE_ARMED
            timer = 0
    elif phase == PHASE_TRIGGERING:
        timer += dt_ms
        trig -= dt_ms * 1000
        if trig <= 0:
            trig = 0
            phase = PHASE_ARMED
            timer = 0
    elif phase == PHASE_ARMED:
        timer += dt_ms
        if sensor.rising_edge:
            phase = PHASE_TRIGGERING
            timer = 0
            trig = params.time_trig
            actions.append("trigger")

    return replace(state, phase=phase, phase_timer=timer,
                         trigger_remaining=trig), actions


def set_params(current: ControllerParams, patch: dict) -> ControllerParams:
    """Validated merge of a parameter patch; rejects atomically."""
    unknown = set(patch) - set(PARAM_RANGES)
    if unknown:
        raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
    if "nivel_luz" in patch:
        value = patch["nivel_luz"]
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"nivel_luz must be an integer, got {value!r}")
    merged = replace(current, **patch)
    merged.validate()
    return merged


def apply_params(state: ControllerState, old: ControllerParams,
                 new: ControllerParams) -> ControllerState:
    """State transition for a parameter change: a new speed setpoint
    re-enters stabilization (timer reset); other fields apply silently."""
    if new.setpoint != old.setpoint:
        return replace(state, phase=PHASE_STABILIZING, phase_timer=0,
                             trigger_remaining=0)
    return state


def indicate(verdict: str) -> tuple[bool, bool]:
    """Map a verdict to the (green, red) status LEDs."""
    if verdict == "pass":
        return True, False
    if verdict == "fail":
        return False, True
    raise ValueError(f"verdict must be 'pass' or 'fail', got {verdict!r}")
