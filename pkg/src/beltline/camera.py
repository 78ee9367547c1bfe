"""Virtual smart camera: trigger-aligned capture, synthetic rendering,
and recipe execution to a pass/fail verdict.

Capture is aligned to a free-running frame clock (60 fps from t=0), so
latency from trigger to capture is below one frame period. Rendering is
pure given (object, illumination, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rendering
from .controller import TriggerPulse
from .plant import Illumination, ObjectInstance
from .vision import (Frame, bar_runs, binarize, circularity,
                     connected_components, intensity_mean, opening)

FPS = 60
FRAME_PERIOD_MS = 1000.0 / FPS
INSPECTION_MS_DEFAULT = 5.0

TOOL_KINDS = ("bar_runs", "contrast", "blob_count", "circularity_max",
              "intensity_mean")


@dataclass(frozen=True)
class ToolSpec:
    tool_id: str
    kind: str
    roi: tuple[int, int, int, int]
    params: dict = field(default_factory=dict)
    criterion: dict = field(default_factory=dict)  # "min" and/or "max"


@dataclass
class InspectionRecipe:
    case_kind: str
    tools: list[ToolSpec]

    def validate(self, width: int = 640, height: int = 480) -> None:
        if not self.tools:
            raise ValueError("recipe needs at least one tool")
        for tool in self.tools:
            if tool.kind not in TOOL_KINDS:
                raise ValueError(f"unknown tool kind {tool.kind!r}")
            x0, y0, x1, y1 = tool.roi
            if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
                raise ValueError(f"tool {tool.tool_id}: ROI outside frame")

    def to_dict(self) -> dict:
        return {"case": self.case_kind,
                "tools": [{"id": t.tool_id, "kind": t.kind,
                           "roi": list(t.roi), "params": dict(t.params),
                           "criterion": dict(t.criterion)}
                          for t in self.tools]}

    @classmethod
    def from_dict(cls, doc: dict) -> "InspectionRecipe":
        tools = [ToolSpec(tool_id=t["id"], kind=t["kind"],
                          roi=tuple(t["roi"]), params=dict(t.get("params", {})),
                          criterion=dict(t.get("criterion", {})))
                 for t in doc.get("tools", [])]
        recipe = cls(case_kind=doc.get("case", "?"), tools=tools)
        recipe.validate()
        return recipe


@dataclass
class ToolResult:
    tool_id: str
    value: float
    passed: bool
    detail: str = ""


@dataclass
class Verdict:
    outcome: str                     # "pass" | "fail"
    tool_results: list[ToolResult]


@dataclass
class CaptureEvent:
    trigger_time: int                # ms
    capture_time: float              # ms, on a 60 fps boundary
    object_id: int
    frame: Frame


def render(obj: ObjectInstance, illum: Illumination, noise_seed) -> Frame:
    """Synthesize the inspection-zone view of one object.

    The scenario pattern is drawn over the fixed background, scaled by
    the illumination, then seeded Gaussian noise is added and the result
    clamped to 8 bits.
    """
    canvas = rendering.draw_object(obj.case_kind, obj.appearance,
                                   illum.relative_lux)
    sigma = float(obj.appearance.get("noise_sigma",
                                     rendering.NOISE_SIGMA_DEFAULT))
    if sigma > 0:
        rng = np.random.default_rng(noise_seed)
        canvas = canvas + rng.normal(0.0, sigma, size=canvas.shape)
    return Frame(pixels=np.clip(np.rint(canvas), 0, 255).astype(np.uint8))


def next_frame_boundary_ms(t_ms: int) -> float:
    """First 60 fps frame boundary at or after t (exact in integer math)."""
    k = (t_ms * FPS + 999) // 1000
    return k * 1000.0 / FPS


@dataclass
class PendingCapture:
    object_id: int
    trigger_time: int
    capture_time: float


class VirtualCamera:
    """Owns the capture pipeline state: one capture at a time.

    A trigger arriving while the previous capture (exposure plus
    inspection) is still in flight is dropped and counted.
    """

    def __init__(self, inspection_ms: float = INSPECTION_MS_DEFAULT):
        self.inspection_ms = inspection_ms
        self.busy_until = -1.0
        self.missed_triggers = 0
        self.pending: PendingCapture | None = None

    def accept(self, pulse: TriggerPulse, object_id: int) -> PendingCapture | None:
        if pulse.start_time < self.busy_until:
            self.missed_triggers += 1
            return None
        capture_time = next_frame_boundary_ms(pulse.start_time)
        self.busy_until = capture_time + self.inspection_ms
        self.pending = PendingCapture(object_id=object_id,
                                      trigger_time=pulse.start_time,
                                      capture_time=capture_time)
        return self.pending

    def due(self, t_ms: int) -> PendingCapture | None:
        if self.pending is not None and t_ms >= self.pending.capture_time:
            done = self.pending
            self.pending = None
            return done
        return None


def _threshold_blobs(frame: Frame, tool: ToolSpec):
    x0, y0, x1, y1 = tool.roi
    crop = frame.pixels[y0:y1, x0:x1]
    threshold = tool.params.get("threshold")
    if threshold is None:
        from .vision import histogram, otsu_threshold
        threshold = otsu_threshold(histogram(crop))
    binary = binarize(crop, int(threshold))
    open_iters = int(tool.params.get("open", 0))
    if open_iters:
        binary = opening(binary, open_iters)
    blobs = connected_components(binary)
    min_area = int(tool.params.get("min_area", 1))
    return [b for b in blobs if b.area >= min_area]


def _run_tool(frame: Frame, tool: ToolSpec) -> float:
    if tool.kind == "bar_runs":
        runs, _ = bar_runs(frame, tool.roi, tool.params["scan_row"])
        return float(runs)
    if tool.kind == "contrast":
        _, contrast = bar_runs(frame, tool.roi, tool.params["scan_row"])
        return contrast
    if tool.kind == "blob_count":
        return float(len(_threshold_blobs(frame, tool)))
    if tool.kind == "circularity_max":
        blobs = _threshold_blobs(frame, tool)
        return max((circularity(b) for b in blobs), default=0.0)
    if tool.kind == "intensity_mean":
        return intensity_mean(frame, tool.roi)
    raise ValueError(f"unknown tool kind {tool.kind!r}")


def _criterion_holds(value: float, criterion: dict) -> bool:
    lo = criterion.get("min")
    hi = criterion.get("max")
    if lo is not None and value < lo:
        return False
    if hi is not None and value > hi:
        return False
    return True


def run_recipe(frame: Frame, recipe: InspectionRecipe) -> Verdict:
    """Execute every tool in order; pass only if every criterion holds.

    A tool that raises (bad ROI, degenerate input) records a failed
    result with the reason instead of propagating.
    """
    results = []
    all_pass = True
    for tool in recipe.tools:
        try:
            value = _run_tool(frame, tool)
            passed = _criterion_holds(value, tool.criterion)
            results.append(ToolResult(tool.tool_id, value, passed))
        except Exception as exc:
            results.append(ToolResult(tool.tool_id, float("nan"), False,
                                      detail=str(exc)))
            passed = False
        all_pass = all_pass and passed
    return Verdict(outcome="pass" if all_pass else "fail",
                   tool_results=results)
