"""Object-stream generators and shipped recipes for the three case
studies: A barcode print quality, B resistor presence on a PCB, C screw
head type.

Ground truth is attached at spawn and never changes. Defect severity
controls how far an appearance sits from a good object; each case's
severity distribution is configuration, calibrated so seeded desk-scale
runs reproduce the intended difficulty ordering (A easiest, C hardest)
while staying perfectly separable on noise-free frames at severity 0.2
and above.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import InspectionRecipe, ToolSpec
from .plant import ObjectInstance
from .rendering import CASE_A, CASE_B, CASE_C, NOISE_SIGMA_DEFAULT

CASE_KINDS = ("A", "B", "C")

# Severity below these bounds is never generated; the low end and the
# power (u**power skews draws toward the low end when > 1) set how many
# near-good defects, the ones a recipe can miss, each case sees.
DEFECT_MODELS = {
    "A": {"severity": [0.05, 1.0], "power": 1.0, "contrast_weight": 0.06},
    "B": {"severity": [0.12, 1.0], "power": 1.0},
    "C": {"severity": [0.02, 1.0], "power": 1.3},
}


@dataclass
class ScenarioConfig:
    case_kind: str = "A"
    defect_fraction: float = 0.5
    pitch: float = 10.31            # cm between leading edges
    object_length: float = 6.0      # cm
    noise_sigma: float = NOISE_SIGMA_DEFAULT
    stratified: bool = False        # exact good/defect split
    seed: int = 1
    defect_model: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case_kind not in CASE_KINDS:
            raise ValueError(f"case_kind must be one of {CASE_KINDS}")
        if not 0.0 <= self.defect_fraction <= 1.0:
            raise ValueError("defect_fraction must be in [0, 1]")
        if self.pitch <= self.object_length:
            raise ValueError("pitch must exceed object_length")
        if not self.defect_model:
            self.defect_model = dict(DEFECT_MODELS[self.case_kind])


def _good_appearance(case_kind: str, rng: np.random.Generator,
                     noise_sigma: float) -> dict:
    app = {"noise_sigma": noise_sigma}
    if case_kind == "C":
        lo, hi = CASE_C["radius_range"]
        app["radii"] = [float(rng.uniform(lo, hi)) for _ in range(2)]
        app["rotations"] = [float(rng.uniform(0.0, 60.0)) for _ in range(2)]
        app["round_frac"] = [0.0, 0.0]
    return app


def defect_inject(case_kind: str, severity: float, base_appearance: dict) -> dict:
    """Derive a defective appearance from a good one.

    Case A: merge or delete a bar (structural, always visible) or wash
    out print contrast by the severity. Case B: displace the resistor;
    severity 1 shifts it entirely off the inspection site. Case C: round
    one hex head's corners; severity 1 is a fully round head.
    """
    if case_kind not in CASE_KINDS:
        raise ValueError(f"unknown case kind {case_kind!r}")
    if not 0.0 < severity <= 1.0:
        raise ValueError("severity must be in (0, 1]")
    app = dict(base_appearance)
    if case_kind == "A":
        kind = app.pop("defect_kind", "contrast")
        index = app.pop("defect_index", 0)
        if kind == "contrast":
            app["contrast_loss"] = severity
        elif kind == "merge":
            app["merged_gap"] = index % (CASE_A["bar_count"] - 1)
        elif kind == "delete":
            app["deleted_bar"] = index % CASE_A["bar_count"]
        else:
            raise ValueError(f"unknown case A defect kind {kind!r}")
    elif case_kind == "B":
        app["shift_px"] = int(round(severity * CASE_B["shift_scale"]))
    else:
        index = app.pop("defect_index", 0)
        round_frac = list(app.get("round_frac", [0.0, 0.0]))
        # Nonlinear map: mild severities round the corners just a little,
        # severity 0.2 already lands clearly on the round side of the
        # shape criterion, severity 1 is a full disc.
        round_frac[index % 2] = min(1.0, 1.5 * severity ** 0.70)
        app["round_frac"] = round_frac
    return app


def spawn_stream(cfg: ScenarioConfig, count: int) -> list[ObjectInstance]:
    """Seeded object stream at uniform pitch with ground-truth labels."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xBE17]))
    if cfg.stratified:
        n_defective = int(round(count * cfg.defect_fraction))
        labels = np.array([True] * n_defective + [False] * (count - n_defective))
        rng.shuffle(labels)
    else:
        labels = rng.random(count) < cfg.defect_fraction

    sev_lo, sev_hi = cfg.defect_model.get(
        "severity", DEFECT_MODELS[cfg.case_kind]["severity"])
    sev_power = cfg.defect_model.get("power", 1.0)
    contrast_weight = cfg.defect_model.get(
        "contrast_weight", DEFECT_MODELS["A"]["contrast_weight"])

    objects = []
    for i in range(count):
        app = _good_appearance(cfg.case_kind, rng, cfg.noise_sigma)
        defective = bool(labels[i])
        if defective:
            severity = sev_lo + (sev_hi - sev_lo) * float(rng.random()) ** sev_power
            if cfg.case_kind == "A":
                if rng.random() < contrast_weight:
                    app["defect_kind"] = "contrast"
                else:
                    app["defect_kind"] = "merge" if rng.random() < 0.5 else "delete"
                app["defect_index"] = int(rng.integers(0, 12))
            elif cfg.case_kind == "C":
                app["defect_index"] = int(rng.integers(0, 2))
            app = defect_inject(cfg.case_kind, severity, app)
        objects.append(ObjectInstance(
            id=i, case_kind=cfg.case_kind,
            truth="defective" if defective else "good",
            x=-i * cfg.pitch, length=cfg.object_length, appearance=app))
    return objects


def recipe_for(case_kind: str) -> InspectionRecipe:
    """The shipped, calibrated recipe for a case."""
    if case_kind == "A":
        g = CASE_A
        tools = [
            ToolSpec("bars", "bar_runs", g["roi"],
                     params={"scan_row": g["scan_row"]},
                     criterion={"min": g["bar_count"], "max": g["bar_count"]}),
            ToolSpec("print_contrast", "contrast", g["roi"],
                     params={"scan_row": g["scan_row"]},
                     criterion={"min": g["contrast_min"]}),
        ]
    elif case_kind == "B":
        g = CASE_B
        tools = [
            ToolSpec("resistor_site", "blob_count", g["roi"],
                     params={"threshold": g["threshold"],
                             "min_area": g["min_area"]},
                     criterion={"min": 1, "max": 1}),
        ]
    elif case_kind == "C":
        g = CASE_C
        blob_params = {"threshold": g["threshold"], "min_area": g["min_area"]}
        tools = [
            ToolSpec("head_count", "blob_count", g["roi"],
                     params=dict(blob_params),
                     criterion={"min": 2, "max": 2}),
            ToolSpec("head_shape", "circularity_max", g["roi"],
                     params=dict(blob_params),
                     criterion={"max": g["circ_max"]}),
        ]
    else:
        raise ValueError(f"unknown case kind {case_kind!r}")
    recipe = InspectionRecipe(case_kind=case_kind, tools=tools)
    recipe.validate()
    return recipe
