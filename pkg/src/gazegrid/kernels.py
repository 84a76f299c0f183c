"""Compiled grid kernels for the vision/occlusion/control stack.

These evaluate the same formulas as the reference NumPy operations cell for
cell, but divide by multiplying with reciprocals, fuse the two field-of-view
exponentials, and use numba's transcendentals. Results agree with the
reference to a few ulps, so agreement is checked to a tolerance rather than
bit-for-bit. Underflow cut-offs are exact: skipped terms would round to the
same value.

All kernels release the GIL so frames can be processed on threads.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_PI = math.pi
_TAU = 2.0 * math.pi
# exp(-38) * alpha < 2**-54, so 1 - alpha * exp(-e) rounds to exactly 1.0
_SHADOW_CUTOFF = 38.0
_EXP_UNDERFLOW = -746.0


@numba.njit(cache=True, nogil=True)
def _wrap_abs(a):
    if a > _PI:
        a -= _TAU
    if a <= -_PI:
        a += _TAU
    return abs(a)


@numba.njit(cache=True, nogil=True)
def _angle_between(ax, ay, bx, by):
    c = (ax * bx + ay * by) / (math.hypot(ax, ay) * math.hypot(bx, by))
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c)


@numba.njit(cache=True, nogil=True)
def pair_tables(px, py, shoulder, hw, hd, min_dist, diagonal):
    """Per-pair distance, ray angle, unit direction, shadow scale and skip flag.

    ``shoulder[i, j]`` is j's torso angle as seen by i, already reduced
    modulo pi (the fallback for a missing angle depends on the observer).
    """
    n = px.shape[0]
    delta = np.zeros((n, n))
    ray = np.zeros((n, n))
    ux = np.zeros((n, n))
    uy = np.zeros((n, n))
    cq = np.zeros((n, n))
    skip = np.ones((n, n), dtype=np.bool_)
    lx = np.array([hw, -hw, -hw, hw])
    ly = np.array([hd, hd, -hd, -hd])
    vx = np.empty(4)
    vy = np.empty(4)
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            c = math.cos(shoulder[i, j])
            s = math.sin(shoulder[i, j])
            dx = px[j] - px[i]
            dy = py[j] - py[i]
            d = math.hypot(dx, dy)
            if d < min_dist:
                continue
            for k in range(4):
                vx[k] = (c * lx[k] - s * ly[k] + px[j]) - px[i]
                vy[k] = (s * lx[k] + c * ly[k] + py[j]) - py[i]
            if diagonal:
                w = max(
                    _angle_between(vx[0], vy[0], vx[2], vy[2]),
                    _angle_between(vx[1], vy[1], vx[3], vy[3]),
                )
            else:
                w = 0.0
                for a in range(4):
                    for b in range(a + 1, 4):
                        w = max(w, _angle_between(vx[a], vy[a], vx[b], vy[b]))
            delta[i, j] = d
            ray[i, j] = math.atan2(dy, dx)
            ux[i, j] = dx / d
            uy[i, j] = dy / d
            cq[i, j] = d / w
            skip[i, j] = False
    return delta, ray, ux, uy, cq, skip


@numba.njit(cache=True, nogil=True)
def vision_map_kernel(
    i, xs, ys, px, py, head, c_r, c_a, own_col, own_row,
    sigma_r, sigma_a, half_fov, max_dist, half_len, half_wid,
    delta, ray, ux, uy, cq, skip, sigma_q, alpha, out,
):
    """Vision map of observer ``i`` written into ``out`` (rows, cols)."""
    n = px.shape[0]
    # occluders whose shadow cone (cut at _SHADOW_CUTOFF) can reach the wedge;
    # the rest multiply every wedge cell by exactly 1 and are dropped there
    a_ux = np.empty(n)
    a_uy = np.empty(n)
    a_delta = np.empty(n)
    a_ray = np.empty(n)
    a_cq = np.empty(n)
    m = 0
    for j in range(n):
        if skip[i, j]:
            continue
        reach = sigma_q * math.sqrt(_SHADOW_CUTOFF / cq[i, j])
        if half_fov < _PI and _wrap_abs(ray[i, j] - head[i]) > half_fov + reach + 1e-6:
            continue
        a_ux[m] = ux[i, j]
        a_uy[m] = uy[i, j]
        a_delta[m] = delta[i, j]
        a_ray[m] = ray[i, j]
        a_cq[m] = cq[i, j]
        m += 1
    inv_sr = 1.0 / sigma_r
    inv_sa = 1.0 / sigma_a
    inv_sq = 1.0 / sigma_q
    hx = math.cos(head[i])
    hy = math.sin(head[i])
    # conservative wedge reject: dot < k * d with k > 0, tested on squares
    k_rej = math.cos(half_fov) - 1e-6
    use_rej = k_rej > 0.0
    k_rej2 = k_rej * k_rej
    for r in range(ys.shape[0]):
        dy = ys[r] - py[i]
        for c in range(xs.shape[0]):
            dx = xs[c] - px[i]
            if r == own_row and c == own_col:
                # outside-wedge bearings possible here: use every occluder
                ang = math.atan2(dy, dx)
                vis = 1.0
                for j in range(n):
                    if skip[i, j]:
                        continue
                    if dx * ux[i, j] + dy * uy[i, j] > delta[i, j]:
                        q = _wrap_abs(ang - ray[i, j]) / sigma_q
                        e = cq[i, j] * (q * q)
                        if e < _SHADOW_CUTOFF:
                            vis = vis * (1.0 - math.exp(-e) * alpha)
                out[r, c] = vis
                continue
            else:
                if use_rej:
                    dot = dx * hx + dy * hy
                    if dot < 0.0 or dot * dot < k_rej2 * (dx * dx + dy * dy):
                        out[r, c] = 0.0
                        continue
                if abs(xs[c]) > half_len or abs(ys[r]) > half_wid:
                    out[r, c] = 0.0
                    continue
                d = math.hypot(dx, dy)
                if d > max_dist:
                    out[r, c] = 0.0
                    continue
                ang = math.atan2(dy, dx)
                off = 0.0
                if d > 0.0:
                    off = _wrap_abs(ang - head[i])
                if off > half_fov:
                    out[r, c] = 0.0
                    continue
                rr = d * inv_sr
                aa = off * inv_sa
                fov = math.exp(-c_r * (rr * rr) - c_a * (aa * aa))
                if fov == 0.0:
                    out[r, c] = 0.0
                    continue
            vis = 1.0
            for k in range(m):
                if dx * a_ux[k] + dy * a_uy[k] > a_delta[k]:
                    q = _wrap_abs(ang - a_ray[k]) * inv_sq
                    e = a_cq[k] * (q * q)
                    if e < _SHADOW_CUTOFF:
                        vis = vis * (1.0 - math.exp(-e) * alpha)
            out[r, c] = vis * fov


@numba.njit(cache=True, nogil=True)
def influence_kernel(xs, ys, mux, muy, cosh, sinh, s_major, s_minor, out):
    inv_major = 1.0 / s_major
    inv_minor = 1.0 / s_minor
    for r in range(ys.shape[0]):
        dy = ys[r] - muy
        for c in range(xs.shape[0]):
            dx = xs[c] - mux
            u = (cosh * dx + sinh * dy) * inv_major
            w = (-sinh * dx + cosh * dy) * inv_minor
            e = -0.5 * (u * u + w * w)
            # exp underflows to exactly 0 below this
            out[r, c] = 0.0 if e < _EXP_UNDERFLOW else math.exp(e)


@numba.njit(cache=True, nogil=True)
def team_control_kernel(xs, ys, mux, muy, cosh, sinh, s_major, s_minor, is_att, steepness, infl, att_sum, att_out):
    """Per-player influences into ``infl``, attacking sum and control into the outputs."""
    n = mux.shape[0]
    H = ys.shape[0]
    W = xs.shape[0]
    for k in range(n):
        influence_kernel(xs, ys, mux[k], muy[k], cosh[k], sinh[k], s_major[k], s_minor[k], infl[k])
    for r in range(H):
        for c in range(W):
            a = 0.0
            d = 0.0
            for k in range(n):
                if is_att[k]:
                    a = a + infl[k, r, c]
                else:
                    d = d + infl[k, r, c]
            att_sum[r, c] = a
            x = steepness * (a - d)
            z = math.exp(-abs(x))
            if x >= 0:
                att_out[r, c] = 1.0 / (1.0 + z)
            else:
                att_out[r, c] = z / (1.0 + z)
