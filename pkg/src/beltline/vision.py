"""Grayscale image-processing primitives used by the inspection recipes.

Everything here is pure: same input, same output, no shared state. Images
are 2-D uint8 numpy arrays (rows = y, cols = x); binary images are uint8
arrays of 0/1. Regions of interest are half-open pixel boxes
(x0, y0, x1, y1), so ``pixels[y0:y1, x0:x1]`` is the ROI crop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

FRAME_WIDTH = 640
FRAME_HEIGHT = 480

# Perimeter is measured on the 8-connected outer boundary chain with
# corner-corrected step weights (Vossepoel-Smeulders: straight step 0.980,
# diagonal 1.406, -0.091 per direction change) plus a fixed +pi offset:
# the chain runs through pixel centers, half a pixel inside the region
# edge, and a closed boundary offset by 0.5 px is 2*pi*0.5 longer. A plain
# 1/sqrt(2) chain without these corrections misses a rasterized disc's
# 4*pi*A/P^2 by ~10%, ruining shape discrimination.
_W_STRAIGHT = 0.980
_W_DIAGONAL = 1.406
_W_CORNER = -0.091
_BOUNDARY_OFFSET = np.pi


@dataclass
class Frame:
    """One captured image: 8-bit grayscale, row-major."""

    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 2:
            raise ValueError("frame pixels must be a 2-D array")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class Blob:
    """A connected foreground region and its measurements."""

    label: int
    area: int
    perimeter: float
    centroid: tuple[float, float]  # (x, y)
    bbox: tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open
    first_pixel: tuple[int, int] = field(default=(0, 0))  # (x, y) raster-first


def _pixels(image) -> np.ndarray:
    if isinstance(image, Frame):
        return image.pixels
    return np.asarray(image)


def histogram(image) -> np.ndarray:
    """256-bin intensity histogram; bins sum to the pixel count."""
    px = _pixels(image)
    if px.dtype != np.uint8:
        raise ValueError("histogram expects 8-bit pixels")
    return np.bincount(px.ravel(), minlength=256).astype(np.int64)


def otsu_threshold(hist: np.ndarray) -> int:
    """Threshold maximizing between-class variance over splits {<=t}, {>t}.

    Ties resolve to the lowest t. A histogram with a single occupied bin
    returns that bin's value. Raises ValueError on an empty histogram.

    Cumulative sums are kept in int64 so equal-variance plateaus compare
    exactly and the argmax is reproducible.
    """
    hist = np.asarray(hist, dtype=np.int64)
    if hist.shape != (256,):
        raise ValueError("histogram must have 256 bins")
    total = int(hist.sum())
    if total == 0:
        raise ValueError("empty histogram")
    nonzero = np.flatnonzero(hist)
    if len(nonzero) == 1:
        return int(nonzero[0])

    values = np.arange(256, dtype=np.int64)
    w0 = np.cumsum(hist)                    # mass in {<=t}
    s0 = np.cumsum(values * hist)           # intensity sum in {<=t}
    w1 = total - w0
    s1 = int(s0[-1]) - s0

    # sigma_b(t) = w0*w1*(mu0-mu1)^2 = (s0*w1 - s1*w0)^2 / (w0*w1)
    diff = s0 * w1 - s1 * w0
    denom = w0 * w1
    sigma = np.full(256, -1.0)
    valid = denom > 0
    sigma[valid] = diff[valid].astype(float) ** 2 / denom[valid].astype(float)
    return int(np.argmax(sigma))


def binarize(image, threshold: int) -> np.ndarray:
    """Foreground (1) where pixel > threshold, else background (0)."""
    if not 0 <= threshold <= 255:
        raise ValueError("threshold out of range 0..255")
    return (_pixels(image) > threshold).astype(np.uint8)


def _shifted_stack(binary: np.ndarray) -> np.ndarray:
    # 3x3 neighborhoods with out-of-image pixels as background.
    padded = np.pad(binary, 1, mode="constant", constant_values=0)
    h, w = binary.shape
    return np.stack([padded[dy:dy + h, dx:dx + w]
                     for dy in range(3) for dx in range(3)])


def erode(binary: np.ndarray) -> np.ndarray:
    """3x3 box erosion; pixels outside the image count as background."""
    return _shifted_stack(binary).min(axis=0)


def dilate(binary: np.ndarray) -> np.ndarray:
    """3x3 box dilation; pixels outside the image count as background."""
    return _shifted_stack(binary).max(axis=0)


def opening(binary: np.ndarray, iterations: int = 1) -> np.ndarray:
    """Erosions then dilations; removes speckles smaller than the kernel."""
    out = binary
    for _ in range(iterations):
        out = erode(out)
    for _ in range(iterations):
        out = dilate(out)
    return out


_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)

# Moore neighborhood in clockwise order starting east: (dx, dy).
_MOORE = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def _trace_perimeter(mask: np.ndarray, start_rc: tuple[int, int]) -> float:
    """Chain-code length of the outer boundary, corner-corrected.

    Moore-neighbor tracing around the blob starting at its raster-first
    pixel, stopping when that pixel is re-entered from the starting
    backtrack (Jacob's criterion). Interior holes are ignored. Blobs too
    thin to enclose area floor at 4.0, the boundary of a lone pixel.
    """
    h, w = mask.shape

    def is_fg(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(mask[r, c])

    def next_move(p, b):
        # Clockwise scan of p's Moore neighborhood starting just past the
        # backtrack pixel b; returns (next pixel, new backtrack, direction).
        pr, pc = p
        start = _MOORE.index((b[1] - pc, b[0] - pr))
        prev = b
        for k in range(1, 9):
            d = (start + k) % 8
            dx, dy = _MOORE[d]
            cand = (pr + dy, pc + dx)
            if is_fg(*cand):
                return cand, prev, d
            prev = cand
        return None, None, None  # isolated pixel

    r0, c0 = start_rc
    start = (r0, c0)
    # Raster-first pixel has no foreground above or to its left, so its
    # west neighbor is guaranteed background and usable as the backtrack.
    state0 = (start, (r0, c0 - 1))
    p, b = state0
    dirs: list[int] = []
    limit = 4 * mask.size + 8
    while True:
        nxt, nb, d = next_move(p, b)
        if nxt is None:
            return 4.0
        dirs.append(d)
        p, b = nxt, nb
        if (p, b) == state0 or len(dirs) > limit:
            break

    diagonal = sum(1 for d in dirs if _MOORE[d][0] != 0 and _MOORE[d][1] != 0)
    straight = len(dirs) - diagonal
    corners = sum(1 for prev, cur in zip([dirs[-1]] + dirs[:-1], dirs)
                  if prev != cur)
    perim = (_W_STRAIGHT * straight + _W_DIAGONAL * diagonal
             + _W_CORNER * corners + _BOUNDARY_OFFSET)
    return max(perim, 4.0)


def connected_components(binary: np.ndarray) -> list[Blob]:
    """8-connected blobs in raster order of their first pixel."""
    binary = np.asarray(binary)
    labels, count = ndimage.label(binary != 0, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    flat = labels.ravel()
    order = []
    seen_first = np.full(count + 1, -1, dtype=np.int64)
    nz = np.flatnonzero(flat)
    for idx in nz:
        lab = flat[idx]
        if seen_first[lab] < 0:
            seen_first[lab] = idx
            order.append(lab)
            if len(order) == count:
                break

    h, w = binary.shape
    blobs = []
    slices = ndimage.find_objects(labels)
    for new_label, lab in enumerate(order, start=1):
        sl = slices[lab - 1]
        mask = labels[sl] == lab
        ys, xs = np.nonzero(mask)
        area = int(len(xs))
        y_off, x_off = sl[0].start, sl[1].start
        cx = float(xs.mean()) + x_off
        cy = float(ys.mean()) + y_off
        bbox = (int(xs.min()) + x_off, int(ys.min()) + y_off,
                int(xs.max()) + x_off + 1, int(ys.max()) + y_off + 1)
        first_idx = seen_first[lab]
        fr, fc = divmod(int(first_idx), w)
        perim = _trace_perimeter(mask, (fr - y_off, fc - x_off))
        blobs.append(Blob(label=new_label, area=area, perimeter=perim,
                          centroid=(cx, cy), bbox=bbox, first_pixel=(fc, fr)))
    return blobs


def circularity(blob: Blob) -> float:
    """Shape compactness 4*pi*A/P^2, capped at 1.0 (disc = 1)."""
    if blob.area <= 0:
        raise ValueError("blob area must be positive")
    value = 4.0 * np.pi * blob.area / (blob.perimeter ** 2)
    return min(value, 1.0)


def bar_runs(image, roi: tuple[int, int, int, int],
             scan_row: int) -> tuple[int, float]:
    """Count dark bar runs along one row of a thresholded ROI.

    The ROI is Otsu-binarized; a run is a maximal streak of below-threshold
    pixels on scan_row inside the ROI. Returns (run_count, contrast) where
    contrast = (mean(light) - mean(dark)) / 255 over the whole ROI. A ROI
    with a single intensity carries no bars: (0, 0.0).
    """
    px = _pixels(image)
    x0, y0, x1, y1 = roi
    h, w = px.shape
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError("ROI outside frame bounds")
    if not y0 <= scan_row < y1:
        raise ValueError("scan_row outside ROI")
    crop = px[y0:y1, x0:x1]
    if crop.min() == crop.max():
        return 0, 0.0
    t = otsu_threshold(histogram(crop))
    dark = crop <= t
    row = dark[scan_row - y0]
    # Maximal runs: rising edges of the boolean row.
    run_count = int(row[0]) + int(np.count_nonzero(row[1:] & ~row[:-1]))
    mean_dark = float(crop[dark].mean())
    mean_light = float(crop[~dark].mean())
    contrast = (mean_light - mean_dark) / 255.0
    return run_count, contrast


def intensity_mean(image, roi: tuple[int, int, int, int]) -> float:
    """Mean gray level over a ROI."""
    px = _pixels(image)
    x0, y0, x1, y1 = roi
    h, w = px.shape
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError("ROI outside frame bounds")
    return float(px[y0:y1, x0:x1].mean())


def write_pgm(path_or_file, image) -> None:
    """Write a binary PGM (P5, maxval 255) to a path or binary stream."""
    px = _pixels(image)
    if px.dtype != np.uint8:
        raise ValueError("PGM export expects 8-bit pixels")
    h, w = px.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    if hasattr(path_or_file, "write"):
        path_or_file.write(header)
        path_or_file.write(px.tobytes())
    else:
        with open(path_or_file, "wb") as f:
            f.write(header)
            f.write(px.tobytes())


def read_pgm(path) -> Frame:
    """Read a binary PGM (P5, maxval 255) written by write_pgm."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    # Header: magic, width, height, maxval; comments allowed after magic.
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    px = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
    return Frame(pixels=px.copy())
