"""Fixed-step simulation loop wiring plant, supervisor, camera and
statistics, plus the command surface the HTTP/WebSocket server exposes.

One logical owner (the loop) holds all mutable state. Network handlers
talk to it through a command queue and read immutable telemetry
snapshots; commands are applied only between ticks. Headless runs are a
pure function of (config, seed, command schedule); two identical runs
produce byte-identical event logs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import replace

import numpy as np

from .camera import CaptureEvent, VirtualCamera, render, run_recipe
from .config import SimConfig
from .controller import (PHASE_ARMED, PHASE_TRIGGERING, ControllerState,
                         TriggerPulse, apply_params, indicate, pid_step,
                         set_params, supervisor_tick)
from .metrics import (ConfusionCounts, EventLog, RunSummary, record,
                      sensitivity, specificity, summarize)
from .plant import (DT_MS, MotorState, SensorState, belt_advance,
                    encoder_pulses, motor_step, sensor_sample,
                    set_illumination)
from .scenarios import recipe_for, spawn_stream

DT_S = DT_MS / 1000.0
PROTO_VERSION = 1
MAX_SIM_MS = 10_800_000  # 3 h simulated; guards count-limited runs


class SimLoop:
    """Deterministic 1 ms master loop for one inspection run."""

    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        self.geom = cfg.geometry
        self.params = cfg.controller
        self.cstate = ControllerState()
        self.motor = MotorState()
        self.sensor = SensorState()
        self.illum = set_illumination(self.params.nivel_luz)
        self.duty = 0.0
        self.camera = VirtualCamera(inspection_ms=cfg.inspection_ms)
        self.recipe = recipe_for(cfg.scenario.case_kind)

        count = cfg.run.object_count
        if count is None:
            reach = 67.1 * (cfg.run.duration_s or 0.0)
            count = int(reach / cfg.scenario.pitch) + 8
        self.target_count = cfg.run.object_count
        self.pending = deque(spawn_stream(cfg.scenario, count))
        self.objects = []
        self.by_id = {}
        self.spawned = 0
        self.feeder_travel = 0.0

        self.t_ms = 0
        self.period_pulses = 0
        self.last_measured = 0
        self.belt_speed = 0.0
        self.counts = ConfusionCounts()
        self.log = EventLog(cfg.run.log_path)
        self.verdict_queue: deque = deque()
        self.trace: dict[int, dict] = {}
        self.inspected = 0
        self.uninspected_exits = 0
        self.edge_count = 0
        self.trigger_count = 0
        self.capture_count = 0
        self.last_verdict = None
        self.last_frame = None      # (object_id, Frame)
        self.running = True
        self.finished = False
        self.telemetry_period_ms = max(1, round(1000 / cfg.server.telemetry_hz))
        self.telemetry: dict = self._telemetry_frame(terminal=False)

    # -- command surface -------------------------------------------------

    def handle_command(self, envelope: dict) -> dict:
        """Apply one console command between ticks; structured reply."""
        cmd_id = envelope.get("id")
        cmd = envelope.get("cmd")
        args = envelope.get("args") or {}
        try:
            if cmd == "start":
                self.running = True
                self.finished = False
                result = {}
            elif cmd == "stop":
                self.running = False
                self.finished = True
                result = {"summary": self.live_summary().to_dict()}
            elif cmd == "set_params":
                old = self.params
                new = set_params(old, args)
                self.cstate = apply_params(self.cstate, old, new)
                if new.nivel_luz != old.nivel_luz:
                    self.illum = set_illumination(new.nivel_luz)
                self.params = new
                result = {}
            elif cmd == "set_scenario":
                result = self._set_scenario(args)
            elif cmd == "snapshot_frame":
                if self.last_frame is None:
                    raise ValueError("no frame captured yet")
                result = {"object_id": self.last_frame[0],
                          "frame_ref": "/frame/latest"}
            else:
                return {"id": cmd_id, "ok": False,
                        "error": {"code": "protocol",
                                  "message": f"unknown command {cmd!r}"}}
        except ValueError as exc:
            return {"id": cmd_id, "ok": False,
                    "error": {"code": "range", "message": str(exc)}}
        reply = {"id": cmd_id, "ok": True}
        reply.update(result)
        self.telemetry = self._telemetry_frame(terminal=self.finished)
        return reply

    def _set_scenario(self, args: dict) -> dict:
        if self.running:
            raise ValueError("stop the line before changing scenario")
        scenario = replace(self.cfg.scenario, **args)
        self.cfg = replace(self.cfg, scenario=scenario)
        self.recipe = recipe_for(scenario.case_kind)
        count = self.target_count
        if count is None:
            count = len(self.pending) + self.spawned
        self.pending = deque(spawn_stream(scenario, count))
        self.objects = []
        self.by_id = {}
        self.spawned = 0
        self.feeder_travel = 0.0
        self.counts = ConfusionCounts()
        self.inspected = 0
        self.uninspected_exits = 0
        self.verdict_queue.clear()
        self.trace = {}
        self.last_frame = None
        self.last_verdict = None
        return {"case": scenario.case_kind}

    # -- core loop --------------------------------------------------------

    def tick(self) -> None:
        t = self.t_ms
        params = self.params

        if self.running and t % params.control_period == 0:
            self.duty, self.cstate = pid_step(params, self.period_pulses,
                                              self.cstate)
            self.last_measured = self.period_pulses
            self.period_pulses = 0
        if not self.running:
            self.duty = 0.0

        self.motor = motor_step(self.motor, self.duty, DT_S)
        pulses, self.motor = encoder_pulses(self.motor, DT_S)
        self.period_pulses += pulses
        self.objects, exited, self.belt_speed = belt_advance(
            self.objects, self.motor.omega_out, self.geom, DT_S)
        for obj in exited:
            if "verdict" not in self.trace.get(obj.id, {}):
                self.uninspected_exits += 1

        if self.running and self.cstate.phase in (PHASE_ARMED,
                                                  PHASE_TRIGGERING):
            self.feeder_travel += self.belt_speed * DT_S
            while self.pending and \
                    self.feeder_travel >= self.spawned * self.cfg.scenario.pitch:
                obj = self.pending.popleft()
                obj.x = self.feeder_travel - self.spawned * self.cfg.scenario.pitch
                self.objects.append(obj)
                self.by_id[obj.id] = obj
                self.spawned += 1

        self.sensor = sensor_sample(self.objects, self.geom, self.sensor)
        if self.sensor.rising_edge:
            self.edge_count += 1
        self.cstate, actions = supervisor_tick(self.cstate, params,
                                               self.sensor, DT_MS)
        if "trigger" in actions:
            self._on_trigger(t)

        pending_capture = self.camera.due(t)
        if pending_capture is not None:
            self._on_capture(pending_capture)

        while self.verdict_queue and self.verdict_queue[0][0] <= t:
            self._on_verdict(*self.verdict_queue.popleft())

        self.t_ms += 1
        if self.t_ms % self.telemetry_period_ms == 0:
            self.telemetry = self._telemetry_frame(terminal=self.finished)

    def _on_trigger(self, t: int) -> None:
        obj = next(o for o in self.objects
                   if o.x - o.length <= self.geom.sensor_pos <= o.x)
        tr = self.trace.setdefault(obj.id, {})
        tr["edge"] = t
        tr["trigger"] = t
        self.trigger_count += 1
        pulse = TriggerPulse(start_time=t, width=self.params.time_trig)
        self.camera.accept(pulse, obj.id)

    def _on_capture(self, pend) -> None:
        obj = self.by_id[pend.object_id]
        seed_seq = np.random.SeedSequence(
            [self.cfg.run.seed, 0xF7A3E, obj.id])
        frame = render(obj, self.illum, seed_seq)
        event = CaptureEvent(trigger_time=pend.trigger_time,
                             capture_time=pend.capture_time,
                             object_id=obj.id, frame=frame)
        verdict = run_recipe(frame, self.recipe)
        self.trace[obj.id]["capture"] = pend.capture_time
        self.capture_count += 1
        due = math.ceil(pend.capture_time + self.camera.inspection_ms)
        self.verdict_queue.append((due, event, verdict, obj))

    def _on_verdict(self, due, event, verdict, obj) -> None:
        t = self.t_ms
        self.counts = record(self.counts, verdict.outcome, obj.truth)
        green, red = indicate(verdict.outcome)
        self.cstate = replace(self.cstate, green_led=green, red_led=red)
        tr = self.trace[obj.id]
        tr["verdict"] = t
        tr["log"] = t
        self.log.append({
            "t_ms": t,
            "object_id": obj.id,
            "case": obj.case_kind,
            "truth": obj.truth,
            "verdict": verdict.outcome,
            "tools": [{"id": r.tool_id, "value": float(r.value),
                       "pass": bool(r.passed)} for r in verdict.tool_results],
            "latency_ms": t - tr["edge"],
        })
        self.inspected += 1
        self.last_verdict = verdict.outcome
        self.last_frame = (obj.id, event.frame)

    def done(self) -> bool:
        run = self.cfg.run
        if run.duration_s is not None:
            return self.t_ms >= round(run.duration_s * 1000)
        if self.inspected >= (run.object_count or 0):
            return True
        if not self.pending and not self.objects \
                and self.camera.pending is None and not self.verdict_queue:
            return True
        return self.t_ms >= MAX_SIM_MS

    def run_to_completion(self) -> RunSummary:
        while not self.done():
            self.tick()
        self.finished = True
        self.telemetry = self._telemetry_frame(terminal=True)
        self.log.close()
        return self.final_summary()

    def live_summary(self) -> RunSummary:
        elapsed = self.t_ms / 1000.0
        rate = 60.0 * self.inspected / elapsed if elapsed > 0 else 0.0
        return RunSummary(inspected=self.inspected, elapsed_s=elapsed,
                          sensitivity_pct=sensitivity(self.counts),
                          specificity_pct=specificity(self.counts),
                          throughput_per_min=round(rate, 2),
                          missed_triggers=self.camera.missed_triggers)

    def final_summary(self) -> RunSummary:
        return summarize(self.log.events,
                         missed_triggers=self.camera.missed_triggers)

    def _telemetry_frame(self, terminal: bool) -> dict:
        counts = self.counts
        return {
            "proto_version": PROTO_VERSION,
            "t_ms": self.t_ms,
            "phase": self.cstate.phase,
            "running": self.running,
            "belt_speed_cmps": round(self.belt_speed, 3),
            "pulses_per_period": self.last_measured,
            "duty": round(self.duty, 2),
            "nivel_luz": self.params.nivel_luz,
            "setpoint": self.params.setpoint,
            "case": self.cfg.scenario.case_kind,
            "last_verdict": self.last_verdict,
            "green_led": self.cstate.green_led,
            "red_led": self.cstate.red_led,
            "counts": {"vp": counts.vp, "fp": counts.fp,
                       "vn": counts.vn, "fn": counts.fn},
            "summary": self.live_summary().to_dict(),
            "last_frame_ref": "/frame/latest" if self.last_frame else None,
            "terminal": terminal,
        }


def run(cfg: SimConfig) -> RunSummary:
    """Execute one configured run to completion (headless)."""
    return SimLoop(cfg).run_to_completion()
