"""Compiled geometry kernels.

Every function here has a twin in ``_kernels_numpy`` with the same
signature and the same arithmetic per element; ``kernels`` picks one.
Rings are ``(n, 2)`` float64 arrays without a repeated closing vertex.
"""

import numpy as np
from numba import njit

_OUTSIDE = 0
_INSIDE = 1
_BOUNDARY = 2


@njit(cache=True, nogil=True)
def ring_signed_area(xy):
    n = xy.shape[0]
    if n < 3:
        return 0.0
    # relative to the first vertex: keeps cross products small for
    # projected coordinates in the 1e6 m range
    x0 = xy[0, 0]
    y0 = xy[0, 1]
    s = 0.0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        xi = xy[i, 0] - x0
        yi = xy[i, 1] - y0
        xj = xy[j, 0] - x0
        yj = xy[j, 1] - y0
        s += xi * yj - xj * yi
    return 0.5 * s


@njit(cache=True, nogil=True)
def _clip_half(src, n, axis, bound, keep_greater, out):
    if n == 0:
        return 0
    m = 0
    sx = src[n - 1, 0]
    sy = src[n - 1, 1]
    sv = sx if axis == 0 else sy
    s_in = sv >= bound if keep_greater else sv <= bound
    for i in range(n):
        ex = src[i, 0]
        ey = src[i, 1]
        ev = ex if axis == 0 else ey
        e_in = ev >= bound if keep_greater else ev <= bound
        if e_in != s_in:
            t = (bound - sv) / (ev - sv)
            if axis == 0:
                out[m, 0] = bound
                out[m, 1] = sy + t * (ey - sy)
            else:
                out[m, 0] = sx + t * (ex - sx)
                out[m, 1] = bound
            m += 1
        if e_in:
            out[m, 0] = ex
            out[m, 1] = ey
            m += 1
        sx = ex
        sy = ey
        sv = ev
        s_in = e_in
    return m


@njit(cache=True, nogil=True)
def clip_ring_rect(xy, xmin, ymin, xmax, ymax):
    n = xy.shape[0]
    cap = 2 * n + 8
    a = np.empty((cap, 2))
    b = np.empty((cap, 2))
    m = _clip_half(xy, n, 0, xmin, True, a)
    m = _clip_half(a, m, 0, xmax, False, b)
    m = _clip_half(b, m, 1, ymin, True, a)
    m = _clip_half(a, m, 1, ymax, False, b)
    return b[:m].copy()


@njit(cache=True, nogil=True)
def ring_cell_areas(xy, x0, y0, cell, c0, c1, r0, r1):
    """Signed area of ``xy`` inside each cell of columns [c0, c1) x rows [r0, r1)."""
    n = xy.shape[0]
    cap = 2 * n + 8
    a = np.empty((cap, 2))
    strip = np.empty((cap, 2))
    b = np.empty((cap, 2))
    c = np.empty((cap, 2))
    out = np.zeros((r1 - r0, c1 - c0))
    for col in range(c0, c1):
        xl = x0 + col * cell
        xr = x0 + (col + 1) * cell
        m = _clip_half(xy, n, 0, xl, True, a)
        ms = _clip_half(a, m, 0, xr, False, strip)
        if ms < 3:
            continue
        for row in range(r0, r1):
            yb = y0 + row * cell
            yt = y0 + (row + 1) * cell
            k = _clip_half(strip, ms, 1, yb, True, b)
            k = _clip_half(b, k, 1, yt, False, c)
            if k >= 3:
                out[row - r0, col - c0] = ring_signed_area(c[:k])
    return out


@njit(cache=True, nogil=True)
def points_ring_location(px, py, xy):
    """0 outside, 1 strictly inside, 2 on the boundary."""
    npts = px.shape[0]
    n = xy.shape[0]
    res = np.zeros(npts, dtype=np.int8)
    for p in range(npts):
        x = px[p]
        y = py[p]
        inside = False
        on_edge = False
        for i in range(n):
            j = i + 1
            if j == n:
                j = 0
            ax = xy[i, 0]
            ay = xy[i, 1]
            bx = xy[j, 0]
            by = xy[j, 1]
            cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            if (cross == 0.0 and min(ax, bx) <= x <= max(ax, bx)
                    and min(ay, by) <= y <= max(ay, by)):
                on_edge = True
                break
            if (ay > y) != (by > y):
                xint = ax + (y - ay) * (bx - ax) / (by - ay)
                if x < xint:
                    inside = not inside
        if on_edge:
            res[p] = _BOUNDARY
        elif inside:
            res[p] = _INSIDE
    return res
