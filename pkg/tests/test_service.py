import json
import time

import pytest
from starlette.testclient import TestClient

from beltline.config import (ConfigError, RunSettings, ServerSettings,
                             SimConfig, config_from_dict, load_config)
from beltline.controller import ControllerParams
from beltline.metrics import parse_log, serialize_event, summarize
from beltline.scenarios import ScenarioConfig
from beltline.server import ServiceRuntime, build_app
from beltline.service import SimLoop, run


def small_cfg(case="A", objects=30, seed=1, **scenario_kw):
    return SimConfig(
        scenario=ScenarioConfig(case_kind=case, seed=seed, **scenario_kw),
        run=RunSettings(object_count=objects, seed=seed))


class TestConfig:
    def test_empty_controller_section_gets_defaults(self):
        cfg = config_from_dict({"controller": {}})
        p = cfg.controller
        assert (p.setpoint, p.nivel_luz, p.t_espera, p.time_trig) == \
            (200.0, 255, 6000, 2000)

    def test_pitch_below_length_reports_path(self):
        with pytest.raises(ConfigError, match="scenario"):
            config_from_dict({"scenario": {"pitch": 3.0,
                                           "object_length": 6.0}})

    def test_unknown_field_reports_path(self):
        with pytest.raises(ConfigError, match="controller.kq"):
            config_from_dict({"controller": {"kq": 1}})

    def test_exactly_one_run_bound(self):
        with pytest.raises(ConfigError, match="run"):
            config_from_dict({"run": {"duration_s": 5, "object_count": 5}})

    def test_round_trip(self, tmp_path):
        cfg = config_from_dict({
            "controller": {"setpoint": 150.0, "nivel_luz": 200},
            "scenario": {"case_kind": "C", "defect_fraction": 0.4},
            "run": {"object_count": 25, "seed": 9},
        })
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        again = load_config(path)
        assert again.to_dict() == cfg.to_dict()

    def test_run_seed_drives_scenario_seed(self):
        cfg = config_from_dict({"run": {"seed": 77, "object_count": 5}})
        assert cfg.scenario.seed == 77
        pinned = config_from_dict({"run": {"seed": 77, "object_count": 5},
                                   "scenario": {"seed": 3}})
        assert pinned.scenario.seed == 3

    def test_controller_range_violation(self):
        with pytest.raises(ConfigError, match="controller"):
            config_from_dict({"controller": {"nivel_luz": 300}})


class TestRun:
    def test_zero_duration_inspects_nothing(self):
        cfg = SimConfig(run=RunSettings(duration_s=0.0, object_count=None))
        summary = run(cfg)
        assert summary.inspected == 0

    def test_small_run_completes_with_one_verdict_each(self):
        cfg = small_cfg(objects=20)
        loop = SimLoop(cfg)
        summary = loop.run_to_completion()
        assert summary.inspected == 20
        assert loop.counts.total == 20
        assert summary.missed_triggers == 0
        assert len(loop.trace) == 20
        for tr in loop.trace.values():
            assert tr["edge"] == tr["trigger"]
            assert tr["trigger"] <= tr["capture"] <= tr["verdict"] == tr["log"]

    def test_log_replay_reproduces_summary(self, tmp_path):
        path = tmp_path / "run.jsonl"
        cfg = small_cfg(objects=25)
        cfg.run.log_path = str(path)
        original = run(cfg)
        with open(path) as f:
            events = parse_log(f)
        assert summarize(events) == original

    def test_determinism_byte_identical_logs(self):
        logs = []
        for _ in range(2):
            loop = SimLoop(small_cfg(case="C", objects=25, seed=5))
            loop.run_to_completion()
            logs.append("\n".join(serialize_event(e) for e in loop.log.events))
        assert logs[0] == logs[1]

    def test_seed_changes_log(self):
        loops = [SimLoop(small_cfg(case="C", objects=25, seed=s))
                 for s in (5, 6)]
        for lp in loops:
            lp.run_to_completion()
        a, b = ("\n".join(serialize_event(e) for e in lp.log.events)
                for lp in loops)
        assert a != b


class TestCommands:
    def test_set_params_light_echoes_in_telemetry(self):
        loop = SimLoop(small_cfg())
        reply = loop.handle_command({"id": 1, "cmd": "set_params",
                                     "args": {"nivel_luz": 128}})
        assert reply == {"id": 1, "ok": True}
        assert loop.telemetry["nivel_luz"] == 128
        assert loop.illum.relative_lux == pytest.approx(128 / 255)

    def test_set_params_range_error_leaves_state(self):
        loop = SimLoop(small_cfg())
        reply = loop.handle_command({"id": 2, "cmd": "set_params",
                                     "args": {"nivel_luz": 300}})
        assert reply["ok"] is False
        assert reply["error"]["code"] == "range"
        assert loop.params.nivel_luz == 255

    def test_setpoint_change_shows_stabilizing(self):
        loop = SimLoop(small_cfg())
        for _ in range(7000):
            loop.tick()
        assert loop.telemetry["phase"] == "armed"
        loop.handle_command({"id": 3, "cmd": "set_params",
                             "args": {"setpoint": 100.0}})
        assert loop.telemetry["phase"] == "stabilizing"

    def test_unknown_command_is_protocol_error(self):
        loop = SimLoop(small_cfg())
        reply = loop.handle_command({"id": 4, "cmd": "warp"})
        assert reply["ok"] is False and reply["error"]["code"] == "protocol"

    def test_stop_is_terminal_with_summary(self):
        loop = SimLoop(small_cfg())
        reply = loop.handle_command({"id": 5, "cmd": "stop"})
        assert reply["ok"] and "summary" in reply
        assert loop.telemetry["terminal"] is True

    def test_set_scenario_requires_stop(self):
        loop = SimLoop(small_cfg())
        reply = loop.handle_command({"id": 6, "cmd": "set_scenario",
                                     "args": {"case_kind": "B"}})
        assert reply["ok"] is False
        loop.handle_command({"id": 7, "cmd": "stop"})
        reply = loop.handle_command({"id": 8, "cmd": "set_scenario",
                                     "args": {"case_kind": "B"}})
        assert reply["ok"] and reply["case"] == "B"
        assert loop.telemetry["case"] == "B"


@pytest.fixture()
def live_service():
    cfg = SimConfig(
        controller=ControllerParams(t_espera=400),
        scenario=ScenarioConfig(case_kind="A", seed=2),
        run=RunSettings(duration_s=3600.0, object_count=None, seed=2),
        server=ServerSettings(bind="127.0.0.1:0", telemetry_hz=20))
    runtime = ServiceRuntime(cfg, real_time=False)
    runtime.start()
    client = TestClient(build_app(runtime))
    try:
        yield runtime, client
    finally:
        runtime.shutdown()


def _poll(predicate, timeout_s=15.0):
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(0.02)
    raise AssertionError("condition not reached in time")


class TestServer:
    def test_state_config_command_frame_stream(self, live_service):
        runtime, client = live_service

        state = client.get("/state").json()
        assert state["proto_version"] == 1
        assert state["phase"] in ("init", "stabilizing", "armed", "triggering")

        conf = client.get("/config").json()
        assert conf["ranges"]["nivel_luz"] == [0, 255]
        assert conf["config"]["scenario"]["case_kind"] == "A"

        reply = client.post("/command", json={"id": "a1", "cmd": "set_params",
                                              "args": {"nivel_luz": 90}}).json()
        assert reply == {"id": "a1", "ok": True}
        _poll(lambda: client.get("/state").json()["nivel_luz"] == 90)

        bad = client.post("/command", json={"id": "a2", "cmd": "set_params",
                                            "args": {"nivel_luz": 999}}).json()
        assert bad["ok"] is False and bad["error"]["code"] == "range"

        # Wait for the first inspection, then the latest frame is a PGM.
        _poll(lambda: client.get("/state").json()["summary"]["inspected"] >= 1)
        frame = client.get("/frame/latest")
        assert frame.status_code == 200
        assert frame.content.startswith(b"P5\n640 480\n255\n")

        with client.websocket_connect("/stream") as ws:
            first = ws.receive_json()
            second = ws.receive_json()
            assert second["t_ms"] >= first["t_ms"]
            assert "counts" in first and "summary" in first

        reply = client.post("/command",
                            json={"id": "a3", "cmd": "stop"}).json()
        assert reply["ok"] and "summary" in reply
        _poll(lambda: client.get("/state").json()["terminal"])

    def test_restabilization_visible_over_http(self, live_service):
        runtime, client = live_service
        _poll(lambda: client.get("/state").json()["phase"] == "armed")
        client.post("/command", json={"id": "s1", "cmd": "set_params",
                                      "args": {"setpoint": 120.0}})
        _poll(lambda: client.get("/state").json()["phase"] == "stabilizing")
        _poll(lambda: client.get("/state").json()["phase"] == "armed")


class TestCli:
    def test_run_prints_summary(self, capsys):
        from beltline.cli import main
        assert main(["run", "--objects", "6", "--seed", "3",
                     "--headless"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["inspected"] == 6

    def test_replay_round_trip(self, tmp_path, capsys):
        from beltline.cli import main
        log = tmp_path / "r.jsonl"
        assert main(["run", "--objects", "6", "--seed", "3", "--headless",
                     "--log", str(log)]) == 0
        run_out = json.loads(capsys.readouterr().out)
        assert main(["replay", "--log", str(log)]) == 0
        replay_out = json.loads(capsys.readouterr().out)
        assert replay_out == run_out

    def test_frame_writes_pgm(self, tmp_path, capsys):
        from beltline.cli import main
        out = tmp_path / "f.pgm"
        assert main(["frame", "--case", "C", "--defect", "0.8",
                     "--out", str(out)]) == 0
        data = out.read_bytes()
        assert data.startswith(b"P5\n640 480\n255\n")
        assert len(data) == len(b"P5\n640 480\n255\n") + 640 * 480
