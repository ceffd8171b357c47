"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

The candidate search evaluates the separator and the search metric
1 + T*K times per problem, so the elementwise blend and the metric
reductions dominate runtime. Each kernel exists twice: a numpy
implementation (``_np_*``) and, when numba is importable, a jitted
one (``_nb_*``). The public names bind to one path at import time.

Set ``REMIXSEP_NO_NUMBA=1`` to force the numpy path. ``fastmath`` is
deliberately off: the refinement loop relies on IEEE semantics
(``1.0*x + 0.0*y == x`` bit-exactly for finite ``y``).
"""

from __future__ import annotations

import os

import numpy as np

HAS_NUMBA = False
if os.environ.get("REMIXSEP_NO_NUMBA", "").strip() not in ("1", "true", "yes"):
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA


# ---------------------------------------------------------------------------
# numpy path


def _np_blend(x0, y_prev, r):
    return r * x0 + (1.0 - r) * y_prev


def _np_mean_sq(a):
    return float(np.mean(np.square(a))) if a.size else 0.0


def _np_mean_sq_diff(a, b):
    return float(np.mean(np.square(a - b))) if a.size else 0.0


def _np_energy_pair(ref, est):
    sig = float(np.sum(np.square(ref)))
    err = float(np.sum(np.square(ref - est)))
    return sig, err


def _np_sisnr_stats(ref, est):
    a = ref - ref.mean()
    b = est - est.mean()
    saa = float(a @ a)
    sab = float(a @ b)
    sbb = float(b @ b)
    proj = (sab * sab / saa) if saa > 0.0 else 0.0
    resid = sbb - proj
    if resid < 0.0:
        resid = 0.0
    return saa, proj, resid


def _np_overlap_add(frames, window, hop):
    num_frames, width = frames.shape
    length = width + (num_frames - 1) * hop if num_frames else 0
    acc = np.zeros(length)
    wsq = np.zeros(length)
    w2 = window * window
    for m in range(num_frames):
        start = m * hop
        acc[start : start + width] += frames[m] * window
        wsq[start : start + width] += w2
    return acc, wsq


# ---------------------------------------------------------------------------
# numba path

if HAS_NUMBA:

    @njit(cache=True)
    def _nb_blend(x0, y_prev, r):
        out = np.empty_like(x0)
        for c in range(x0.shape[0]):
            for i in range(x0.shape[1]):
                out[c, i] = r * x0[c, i] + (1.0 - r) * y_prev[c, i]
        return out

    @njit(cache=True)
    def _nb_mean_sq(a):
        n = a.shape[0] * a.shape[1]
        if n == 0:
            return 0.0
        s = 0.0
        for c in range(a.shape[0]):
            for i in range(a.shape[1]):
                s += a[c, i] * a[c, i]
        return s / n

    @njit(cache=True)
    def _nb_mean_sq_diff(a, b):
        n = a.shape[0] * a.shape[1]
        if n == 0:
            return 0.0
        s = 0.0
        for c in range(a.shape[0]):
            for i in range(a.shape[1]):
                d = a[c, i] - b[c, i]
                s += d * d
        return s / n

    @njit(cache=True)
    def _nb_energy_pair(ref, est):
        sig = 0.0
        err = 0.0
        for c in range(ref.shape[0]):
            for i in range(ref.shape[1]):
                sig += ref[c, i] * ref[c, i]
                d = ref[c, i] - est[c, i]
                err += d * d
        return sig, err

    @njit(cache=True)
    def _nb_sisnr_stats(ref, est):
        n = ref.shape[0]
        mr = 0.0
        me = 0.0
        for i in range(n):
            mr += ref[i]
            me += est[i]
        mr /= n
        me /= n
        saa = 0.0
        sab = 0.0
        sbb = 0.0
        for i in range(n):
            a = ref[i] - mr
            b = est[i] - me
            saa += a * a
            sab += a * b
            sbb += b * b
        proj = (sab * sab / saa) if saa > 0.0 else 0.0
        resid = sbb - proj
        if resid < 0.0:
            resid = 0.0
        return saa, proj, resid

    @njit(cache=True)
    def _nb_overlap_add(frames, window, hop):
        num_frames, width = frames.shape
        length = width + (num_frames - 1) * hop if num_frames else 0
        acc = np.zeros(length)
        wsq = np.zeros(length)
        for m in range(num_frames):
            start = m * hop
            for j in range(width):
                acc[start + j] += frames[m, j] * window[j]
                wsq[start + j] += window[j] * window[j]
        return acc, wsq


# ---------------------------------------------------------------------------
# public bindings

if USE_NUMBA:
    blend_arrays = _nb_blend
    mean_sq = _nb_mean_sq
    mean_sq_diff = _nb_mean_sq_diff
    energy_pair = _nb_energy_pair
    sisnr_stats = _nb_sisnr_stats
    overlap_add = _nb_overlap_add
else:
    blend_arrays = _np_blend
    mean_sq = _np_mean_sq
    mean_sq_diff = _np_mean_sq_diff
    energy_pair = _np_energy_pair
    sisnr_stats = _np_sisnr_stats
    overlap_add = _np_overlap_add

BACKEND = "numba" if USE_NUMBA else "numpy"
