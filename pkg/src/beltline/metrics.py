"""Confusion counting, sensitivity/specificity, throughput, event log.

The positive class is "defective": a true positive is a defect the
recipe rejected. Percentages are computed with exact decimal rounding to
two places; undefined ratios (empty denominator) are reported as absent
(None), never as 0 or 100.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal


@dataclass(frozen=True)
class ConfusionCounts:
    vp: int = 0   # defect rejected (true positive)
    fp: int = 0   # good rejected
    vn: int = 0   # good passed (true negative)
    fn: int = 0   # defect passed

    @property
    def total(self) -> int:
        return self.vp + self.fp + self.vn + self.fn


@dataclass
class RunSummary:
    inspected: int
    elapsed_s: float
    sensitivity_pct: float | None
    specificity_pct: float | None
    throughput_per_min: float
    missed_triggers: int = 0

    def to_dict(self) -> dict:
        return {"inspected": self.inspected, "elapsed_s": self.elapsed_s,
                "sensitivity_pct": self.sensitivity_pct,
                "specificity_pct": self.specificity_pct,
                "throughput_per_min": self.throughput_per_min,
                "missed_triggers": self.missed_triggers}


def record(counts: ConfusionCounts, verdict: str, truth: str) -> ConfusionCounts:
    """Fold one (verdict, truth) pair into the counters."""
    if verdict not in ("pass", "fail"):
        raise ValueError(f"verdict must be 'pass' or 'fail', got {verdict!r}")
    if truth not in ("good", "defective"):
        raise ValueError(f"truth must be 'good' or 'defective', got {truth!r}")
    rejected = verdict == "fail"
    defective = truth == "defective"
    if rejected and defective:
        return ConfusionCounts(counts.vp + 1, counts.fp, counts.vn, counts.fn)
    if rejected:
        return ConfusionCounts(counts.vp, counts.fp + 1, counts.vn, counts.fn)
    if defective:
        return ConfusionCounts(counts.vp, counts.fp, counts.vn, counts.fn + 1)
    return ConfusionCounts(counts.vp, counts.fp, counts.vn + 1, counts.fn)


def _pct(numerator: int, denominator: int) -> float | None:
    # Exact rational percentage, rounded half-even to 2 decimals.
    if denominator <= 0:
        return None
    value = Decimal(100 * numerator) / Decimal(denominator)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def sensitivity(counts: ConfusionCounts) -> float | None:
    """Share of defects rejected: 100 * vp / (vp + fn), 2 decimals."""
    return _pct(counts.vp, counts.vp + counts.fn)


def specificity(counts: ConfusionCounts) -> float | None:
    """Share of good objects passed: 100 * vn / (vn + fp), 2 decimals."""
    return _pct(counts.vn, counts.vn + counts.fp)


def throughput(inspected: int, elapsed_s: float) -> float:
    """Inspected objects per minute."""
    if elapsed_s <= 0:
        raise ValueError("elapsed_s must be positive")
    return 60.0 * inspected / elapsed_s


class EventLog:
    """Append-only per-object event record, optionally mirrored to a
    JSON Lines file (one flushed line per object, so a cut-off file is
    still parseable up to the last complete record)."""

    def __init__(self, path=None):
        self.events: list[dict] = []
        self._path = path
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def append(self, event: dict) -> None:
        self.events.append(event)
        if self._fh is not None:
            try:
                self._fh.write(serialize_event(event) + "\n")
                self._fh.flush()
            except OSError:
                # Keep the record in memory; the sink is best-effort.
                self._fh = None
                raise
        return None

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def serialize_event(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


def parse_log(lines) -> list[dict]:
    """Parse JSONL event lines (iterable of strings, blank lines skipped)."""
    events = []
    for line in lines:
        line = line.strip()
        if line:
            events.append(json.loads(line))
    return events


def counts_from_events(events: list[dict]) -> ConfusionCounts:
    counts = ConfusionCounts()
    for event in events:
        counts = record(counts, event["verdict"], event["truth"])
    return counts


def summarize(events: list[dict], missed_triggers: int = 0) -> RunSummary:
    """Run summary from logged events alone, so a replayed log reproduces
    the original summary. Elapsed time is the last event's timestamp;
    the missed-trigger diagnostic is supplied by the live run (a replay
    assumes 0, matching every nominal run)."""
    counts = counts_from_events(events)
    inspected = len(events)
    elapsed_s = max(e["t_ms"] for e in events) / 1000.0 if events else 0.0
    rate = throughput(inspected, elapsed_s) if elapsed_s > 0 else 0.0
    return RunSummary(inspected=inspected, elapsed_s=elapsed_s,
                      sensitivity_pct=sensitivity(counts),
                      specificity_pct=specificity(counts),
                      throughput_per_min=round(rate, 2),
                      missed_triggers=missed_triggers)


def summary_csv(rows: list[tuple[str, RunSummary, ConfusionCounts]]) -> str:
    """Results table in the classic column order."""
    lines = ["case,inspected,elapsed_s,fp,fn,sensitivity_pct,specificity_pct"]
    for case, summary, counts in rows:
        sens = "" if summary.sensitivity_pct is None else f"{summary.sensitivity_pct:.2f}"
        spec = "" if summary.specificity_pct is None else f"{summary.specificity_pct:.2f}"
        lines.append(f"{case},{summary.inspected},{summary.elapsed_s:.3f},"
                     f"{counts.fp},{counts.fn},{sens},{spec}")
    return "\n".join(lines) + "\n"
