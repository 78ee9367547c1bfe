"""Synthetic frame renderers for the three inspection scenarios.

Each case draws its pattern onto a float canvas that starts at the
background level; feature intensities are offsets scaled by the relative
LED illumination, so lux 0 leaves only the background. Geometry constants
below are the shipped calibration shared between the renderers and the
matching recipes; inspection thresholds sit many noise sigmas away from
every intensity edge, so classification outcomes depend on geometry, not
on the noise draw.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

BACKGROUND_LEVEL = 30.0
NOISE_SIGMA_DEFAULT = 4.0

# Case A: serigraphy barcode on a container label.
CASE_A = {
    "label": (140, 170, 500, 310),
    "label_level": 175.0,
    "bar_level": 15.0,
    "bar_count": 12,
    "bar_width": 12,
    "bar_gap": 12,
    "bar_y": (190, 290),
    "roi": (150, 180, 490, 300),
    "scan_row": 240,
    "contrast_min": 0.55,
}

# Case B: resistor placement site on a PCB.
CASE_B = {
    "board": (120, 120, 520, 360),
    "board_level": 60.0,
    "pads": [(250, 220, 270, 260), (370, 220, 390, 260)],
    "pad_level": 120.0,
    "body": (265, 222, 375, 258),
    "body_level": 150.0,
    "roi": (272, 215, 368, 265),
    "threshold": 140,
    "min_area": 3000,
    "shift_scale": 120,   # px of displacement at severity 1
}

# Case C: two screws, hex heads expected.
CASE_C = {
    "positions": [(210, 240), (430, 240)],
    "head_level": 170.0,
    "radius_range": (42.0, 52.0),
    "roi": (130, 140, 510, 340),
    "threshold": 115,
    "min_area": 800,
    "circ_max": 0.95,
}


def _fill(canvas: np.ndarray, rect: tuple[int, int, int, int], value: float):
    x0, y0, x1, y1 = rect
    canvas[y0:y1, x0:x1] = value


def draw_case_a(canvas: np.ndarray, app: dict, lux: float) -> None:
    g = CASE_A
    base = BACKGROUND_LEVEL
    _fill(canvas, g["label"], base + g["label_level"] * lux)

    contrast_loss = float(app.get("contrast_loss", 0.0))
    bar_level = g["bar_level"] + contrast_loss * (g["label_level"] - g["bar_level"])
    bar_value = base + bar_level * lux

    count = int(app.get("bar_count", g["bar_count"]))
    width, gap = g["bar_width"], g["bar_gap"]
    span = count * width + (count - 1) * gap
    x = (g["label"][0] + g["label"][2]) // 2 - span // 2
    y0, y1 = g["bar_y"]
    deleted = app.get("deleted_bar")
    for i in range(count):
        if i != deleted:
            canvas[y0:y1, x + i * (width + gap):x + i * (width + gap) + width] = bar_value
    merged = app.get("merged_gap")
    if merged is not None:
        gx = x + merged * (width + gap) + width
        canvas[y0:y1, gx:gx + gap] = bar_value


def draw_case_b(canvas: np.ndarray, app: dict, lux: float) -> None:
    g = CASE_B
    base = BACKGROUND_LEVEL
    _fill(canvas, g["board"], base + g["board_level"] * lux)
    for pad in g["pads"]:
        _fill(canvas, pad, base + g["pad_level"] * lux)
    shift = int(app.get("shift_px", 0))
    x0, y0, x1, y1 = g["body"]
    x0 = max(0, min(x0 + shift, canvas.shape[1]))
    x1 = max(0, min(x1 + shift, canvas.shape[1]))
    if x1 > x0:
        canvas[y0:y1, x0:x1] = base + g["body_level"] * lux


def _head_mask(radius: float, rotation_deg: float, round_frac: float,
               size: int) -> np.ndarray:
    """Screw-head mask: regular hexagon, optionally corner-rounded.

    round_frac interpolates the shape from hexagon (0) to disc (1) by
    shrinking the hexagonal core and inflating it with a euclidean
    distance threshold, i.e. a Minkowski sum with a disc.
    """
    c = size // 2
    yy, xx = np.mgrid[0:size, 0:size]
    x = xx - c
    y = yy - c
    apothem = radius * np.sqrt(3.0) / 2.0
    rot = np.deg2rad(rotation_deg)

    def hex_core(ap: float) -> np.ndarray:
        inside = np.ones((size, size), dtype=bool)
        for k in range(3):
            ang = rot + k * np.pi / 3.0
            proj = x * np.cos(ang) + y * np.sin(ang)
            inside &= np.abs(proj) <= ap
        return inside

    if round_frac <= 0.0:
        return hex_core(apothem)
    # Keep at least the center pixel in the core so the distance
    # transform has an anchor even at round_frac 1.
    core = hex_core(max(apothem * (1.0 - round_frac), 0.8))
    dist = ndimage.distance_transform_edt(~core)
    return dist <= round_frac * apothem


def draw_case_c(canvas: np.ndarray, app: dict, lux: float) -> None:
    g = CASE_C
    value = BACKGROUND_LEVEL + g["head_level"] * lux
    radii = app["radii"]
    rotations = app["rotations"]
    round_frac = app.get("round_frac", [0.0, 0.0])
    for (cx, cy), radius, rot, rho in zip(g["positions"], radii, rotations,
                                          round_frac):
        size = int(2 * radius) + 13
        if size % 2 == 0:
            size += 1
        mask = _head_mask(radius, rot, rho, size)
        half = size // 2
        ys = slice(cy - half, cy + half + 1)
        xs = slice(cx - half, cx + half + 1)
        region = canvas[ys, xs]
        region[mask] = value


_DRAWERS = {"A": draw_case_a, "B": draw_case_b, "C": draw_case_c}


def draw_object(case_kind: str, appearance: dict, lux: float,
                width: int = 640, height: int = 480) -> np.ndarray:
    """Noise-free float canvas of one object centered in the view."""
    if case_kind not in _DRAWERS:
        raise ValueError(f"unknown case kind {case_kind!r}")
    canvas = np.full((height, width), BACKGROUND_LEVEL, dtype=np.float64)
    _DRAWERS[case_kind](canvas, appearance, lux)
    return canvas
