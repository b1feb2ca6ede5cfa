"""Vectorized numpy versions of the compiled kernels.

Same signatures and per-element arithmetic as ``_kernels_numba``; used
when numba is unavailable or ``FREIGHTEJ_DISABLE_NUMBA=1``.
"""

import numpy as np

_POINT_CHUNK = 4096


def ring_signed_area(xy):
    if xy.shape[0] < 3:
        return 0.0
    dx = xy[:, 0] - xy[0, 0]
    dy = xy[:, 1] - xy[0, 1]
    return 0.5 * float(np.sum(dx * np.roll(dy, -1) - np.roll(dx, -1) * dy))


def _clip_half(src, axis, bound, keep_greater):
    if src.shape[0] == 0:
        return src
    prev = np.roll(src, 1, axis=0)
    sv = prev[:, axis]
    ev = src[:, axis]
    if keep_greater:
        s_in = sv >= bound
        e_in = ev >= bound
    else:
        s_in = sv <= bound
        e_in = ev <= bound
    crossing = s_in != e_in
    other = 1 - axis
    inter = np.empty_like(src)
    inter[:, axis] = bound
    # t is only used on crossing edges, where ev != sv
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (bound - sv) / (ev - sv)
        inter[:, other] = prev[:, other] + t * (src[:, other] - prev[:, other])
    # per edge: [intersection if crossing] then [end vertex if inside]
    pts = np.stack([inter, src], axis=1)
    keep = np.stack([crossing, e_in], axis=1)
    return pts[keep]


def clip_ring_rect(xy, xmin, ymin, xmax, ymax):
    out = _clip_half(xy, 0, xmin, True)
    out = _clip_half(out, 0, xmax, False)
    out = _clip_half(out, 1, ymin, True)
    out = _clip_half(out, 1, ymax, False)
    return np.ascontiguousarray(out)


def ring_cell_areas(xy, x0, y0, cell, c0, c1, r0, r1):
    out = np.zeros((r1 - r0, c1 - c0))
    for col in range(c0, c1):
        strip = _clip_half(xy, 0, x0 + col * cell, True)
        strip = _clip_half(strip, 0, x0 + (col + 1) * cell, False)
        if strip.shape[0] < 3:
            continue
        for row in range(r0, r1):
            piece = _clip_half(strip, 1, y0 + row * cell, True)
            piece = _clip_half(piece, 1, y0 + (row + 1) * cell, False)
            if piece.shape[0] >= 3:
                out[row - r0, col - c0] = ring_signed_area(piece)
    return out


def _locate_chunk(px, py, ax, ay, bx, by):
    x = px[:, None]
    y = py[:, None]
    cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
    on_edge = (
        (cross == 0.0)
        & (np.minimum(ax, bx) <= x) & (x <= np.maximum(ax, bx))
        & (np.minimum(ay, by) <= y) & (y <= np.maximum(ay, by))
    )
    straddle = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (y - ay) * (bx - ax) / (by - ay)
    hits = straddle & (x < xint)
    inside = (np.count_nonzero(hits, axis=1) % 2) == 1
    res = np.where(inside, 1, 0).astype(np.int8)
    res[on_edge.any(axis=1)] = 2
    return res


def points_ring_location(px, py, xy):
    ax = xy[:, 0]
    ay = xy[:, 1]
    bx = np.roll(ax, -1)
    by = np.roll(ay, -1)
    out = np.empty(px.shape[0], dtype=np.int8)
    for s in range(0, px.shape[0], _POINT_CHUNK):
        e = s + _POINT_CHUNK
        out[s:e] = _locate_chunk(px[s:e], py[s:e], ax, ay, bx, by)
    return out
