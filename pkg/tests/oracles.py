"""Independent brute-force oracles the implementation is checked against.

These deliberately share no code with the package: the Otsu oracle scans
all 256 splits in exact rational arithmetic, and the labeling oracle is a
stack-based flood fill.
"""

from fractions import Fraction

import numpy as np


def otsu_exhaustive(hist) -> int:
    """Argmax of between-class variance over every split, exact math.

    Ties resolve to the lowest threshold; a single occupied bin returns
    that bin (matching the degenerate rule of the implementation).
    """
    hist = [int(h) for h in hist]
    total = sum(hist)
    assert total > 0, "oracle needs a nonempty histogram"
    occupied = [v for v in range(256) if hist[v]]
    if len(occupied) == 1:
        return occupied[0]
    grand_sum = sum(v * hist[v] for v in range(256))
    best_t = 0
    best = Fraction(-1)
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += hist[t]
        s0 += t * hist[t]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        d = s0 * w1 - (grand_sum - s0) * w0
        sigma = Fraction(d * d, w0 * w1)
        if sigma > best:
            best = sigma
            best_t = t
    return best_t


def flood_fill_labels(binary) -> np.ndarray:
    """8-connected labeling by stack-based flood fill, raster label order."""
    binary = np.asarray(binary)
    h, w = binary.shape
    labels = np.zeros((h, w), dtype=np.int32)
    next_label = 1
    for r in range(h):
        for c in range(w):
            if binary[r, c] and labels[r, c] == 0:
                stack = [(r, c)]
                labels[r, c] = next_label
                while stack:
                    rr, cc = stack.pop()
                    for dr in (-1, 0, 1):
                        for dc in (-1, 0, 1):
                            nr, nc = rr + dr, cc + dc
                            if 0 <= nr < h and 0 <= nc < w \
                                    and binary[nr, nc] and labels[nr, nc] == 0:
                                labels[nr, nc] = next_label
                                stack.append((nr, nc))
                next_label += 1
    return labels


def pct_rational(numerator: int, denominator: int):
    """Exact 2-decimal half-even rounding of 100 * n / d, as a float."""
    if denominator <= 0:
        return None
    scaled = Fraction(100 * numerator, denominator) * 100  # in 0.01 units
    floor = scaled.numerator // scaled.denominator
    rem = scaled - floor
    if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and floor % 2 == 1):
        floor += 1
    return floor / 100.0
