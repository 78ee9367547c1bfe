"""Virtual physical plant: DC gearmotor with encoder, belt, objects, sensor.

The plant is advanced by the service loop at a fixed 1 ms timestep. All
operations are deterministic; randomness enters only through object
appearance, which is decided at spawn time by the scenario generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MOTOR_MAX_RPM = 110.0      # output shaft, at full duty
MOTOR_TAU_S = 0.3          # first-order lag time constant
ENCODER_PPR = 748          # pulses per output-shaft revolution
DUTY_MAX = 255

DT_MS = 1                  # master simulation timestep


@dataclass
class MotorState:
    omega_out: float = 0.0      # output-shaft speed, rpm
    encoder_accum: float = 0.0  # fractional pulse remainder
    duty: float = 0.0           # last applied PWM duty, 0..255


@dataclass
class BeltGeometry:
    length: float = 50.0        # cm
    width: float = 4.0          # cm
    pulley_radius: float = 5.82  # cm; 110 rpm -> 67 cm/s belt speed
    sensor_pos: float = 10.0    # cm from belt start
    inspect_pos: float = 11.0   # cm, camera axis

    def __post_init__(self):
        if not 0 < self.sensor_pos <= self.inspect_pos < self.length:
            raise ValueError(
                "need 0 < sensor_pos <= inspect_pos < length, got "
                f"sensor={self.sensor_pos} inspect={self.inspect_pos} "
                f"length={self.length}")


@dataclass
class ObjectInstance:
    """One piece riding the belt; truth label fixed at spawn."""

    id: int
    case_kind: str              # "A" | "B" | "C"
    truth: str                  # "good" | "defective"
    x: float                    # leading-edge position, cm
    length: float               # cm
    appearance: dict = field(default_factory=dict)


@dataclass
class SensorState:
    blocked: bool = False
    prev_blocked: bool = False

    @property
    def rising_edge(self) -> bool:
        return self.blocked and not self.prev_blocked


@dataclass
class Illumination:
    nivel: int = 255            # PWM byte
    relative_lux: float = 1.0   # nivel / 255


def steady_state_rpm(duty: float) -> float:
    """Steady-state output speed for a held duty (linear map)."""
    return MOTOR_MAX_RPM * duty / DUTY_MAX


def motor_step(state: MotorState, duty: float, dt: float,
               tau: float = MOTOR_TAU_S) -> MotorState:
    """Advance the motor one step of dt seconds with duty held.

    Exact zero-order-hold discretization of the first-order lag
    d(omega)/dt = (omega_ss(duty) - omega) / tau, so a held duty follows
    the closed-form step response to rounding error.
    """
    w_ss = steady_state_rpm(duty)
    decay = math.exp(-dt / tau)
    omega = w_ss + (state.omega_out - w_ss) * decay
    omega = min(max(omega, 0.0), MOTOR_MAX_RPM)
    return MotorState(omega_out=omega, encoder_accum=state.encoder_accum,
                      duty=duty)


def encoder_pulses(state: MotorState, dt: float) -> tuple[int, MotorState]:
    """Whole pulses emitted over dt; the fractional remainder carries over.

    Summing over any partition of an interval loses less than one pulse
    versus 748 pulses per revolution of continuous rotation.
    """
    accum = state.encoder_accum + ENCODER_PPR * (state.omega_out / 60.0) * dt
    pulses = int(accum)
    return pulses, MotorState(omega_out=state.omega_out,
                              encoder_accum=accum - pulses, duty=state.duty)


def belt_speed_cmps(omega_out: float, geom: BeltGeometry) -> float:
    return omega_out * 2.0 * math.pi * geom.pulley_radius / 60.0


def belt_advance(objects: list[ObjectInstance], omega_out: float,
                 geom: BeltGeometry, dt: float,
                 ) -> tuple[list[ObjectInstance], list[ObjectInstance], float]:
    """Move every object with the belt; report objects carried off the end.

    Returns (objects still on or entering the belt, exited objects,
    belt speed in cm/s). An object exits once its trailing edge passes the
    belt end.
    """
    speed = belt_speed_cmps(omega_out, geom)
    remaining: list[ObjectInstance] = []
    exited: list[ObjectInstance] = []
    for obj in objects:
        obj.x += speed * dt
        if obj.x - obj.length > geom.length:
            exited.append(obj)
        else:
            remaining.append(obj)
    return remaining, exited, speed


def sensor_sample(objects: list[ObjectInstance], geom: BeltGeometry,
                  sensor: SensorState) -> SensorState:
    """Diffuse-reflection presence sensor: blocked while any object's span
    [x - length, x] covers the sensor position (closed interval)."""
    blocked = any(obj.x - obj.length <= geom.sensor_pos <= obj.x
                  for obj in objects)
    return SensorState(blocked=blocked, prev_blocked=sensor.blocked)


def set_illumination(nivel: int) -> Illumination:
    """LED intensity from a PWM byte; linear map to relative lux."""
    if not isinstance(nivel, int) or not 0 <= nivel <= 255:
        raise ValueError(f"nivel_luz must be an integer in 0..255, got {nivel!r}")
    return Illumination(nivel=nivel, relative_lux=nivel / 255.0)
