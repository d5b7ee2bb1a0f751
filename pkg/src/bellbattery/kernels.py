"""Hot numeric kernels, each in two interchangeable forms.

``*_loop`` functions are scalar loops compiled with numba when it is
enabled; ``*_numpy`` functions are vectorized numpy equivalents.  The
enumeration and simulation kernels agree bit for bit across the two forms;
the beta kernels agree to floating-point rounding (libm vs LLVM intrinsics).
The public dispatchers pick a form according to
:data:`bellbattery._accel.USE_NUMBA` unless ``use_numba`` is given.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit
from .rng import DRAW_OUTPUTS, DRAW_PAD, DRAW_QUESTIONS, DRAWS_PER_ROUND, GAMMA, MIX1, MIX2

VARIANT_FEEDFORWARD = 0
VARIANT_REVERSIBLE = 1

_INV_2_53 = 1.0 / 9007199254740992.0
_CF_EPS = 1e-15
_CF_FPMIN = 1e-300
_CF_MAXIT = 1000
_NUMPY_BLOCK = 1 << 20


def _pick(use_numba):
    if use_numba is None:
        return _accel.USE_NUMBA
    if use_numba and not _accel.NUMBA_AVAILABLE:
        raise RuntimeError("numba path requested but numba is disabled or missing")
    return bool(use_numba)


# --------------------------------------------------------------------------
# deterministic-strategy enumeration


@njit
def _local_enum_loop(nu, nv, su, sv, sw, sf):
    best = -1.0
    best_idx = 0
    bob_mask = (1 << nv) - 1
    total = 1 << (nu + nv)
    for s in range(total):
        alice = s >> nv
        bob = s & bob_mask
        val = 0.0
        for j in range(sw.shape[0]):
            abit = (alice >> (nu - 1 - su[j])) & 1
            bbit = (bob >> (nv - 1 - sv[j])) & 1
            if (abit ^ bbit) == sf[j]:
                val += sw[j]
        if val > best:
            best = val
            best_idx = s
    return best, best_idx


def _bit_table(count, width):
    idx = np.arange(count, dtype=np.int64)[:, None]
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)[None, :]
    return ((idx >> shifts) & 1).astype(np.int8)


def _local_enum_numpy(nu, nv, su, sv, sw, sf):
    n_bob = 1 << nv
    bob_bits = _bit_table(n_bob, nv)
    block = max(1, _NUMPY_BLOCK // n_bob)
    best = -1.0
    best_idx = 0
    for start in range(0, 1 << nu, block):
        stop = min(start + block, 1 << nu)
        alice_bits = (
            (np.arange(start, stop, dtype=np.int64)[:, None] >> np.arange(nu - 1, -1, -1)[None, :]) & 1
        ).astype(np.int8)
        vals = np.zeros((stop - start, n_bob))
        for j in range(sw.shape[0]):
            win = (alice_bits[:, su[j]][:, None] ^ bob_bits[:, sv[j]][None, :]) == sf[j]
            vals += np.where(win, sw[j], 0.0)
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            best = float(vals.flat[k])
            best_idx = start * n_bob + k
    return best, best_idx


def local_enumeration(nu, nv, su, sv, sw, sf, use_numba=None):
    """Best deterministic strategy over all ``2**(nu+nv)`` assignments.

    Strategy index ``s = alice * 2**nv + bob`` with question 0 in the most
    significant bit, so increasing ``s`` is lexicographic order over Alice's
    bits then Bob's.  Returns ``(value, s)`` for the first maximum.
    """
    su = np.ascontiguousarray(su, dtype=np.int64)
    sv = np.ascontiguousarray(sv, dtype=np.int64)
    sw = np.ascontiguousarray(sw, dtype=np.float64)
    sf = np.ascontiguousarray(sf, dtype=np.int64)
    if _pick(use_numba):
        best, idx = _local_enum_loop(int(nu), int(nv), su, sv, sw, sf)
    else:
        best, idx = _local_enum_numpy(int(nu), int(nv), su, sv, sw, sf)
    return float(best), int(idx)


# --------------------------------------------------------------------------
# protocol rounds driven by counter-based randomness


@njit
def _mix64_loop(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


@njit
def _simulate_loop(key, first, n, cdf_q, sf, cdf_ab, variant):
    setting = np.empty(n, dtype=np.int64)
    a_out = np.empty(n, dtype=np.uint8)
    b_out = np.empty(n, dtype=np.uint8)
    r_out = np.empty(n, dtype=np.uint8)
    work = np.empty(n, dtype=np.uint8)
    n_set = cdf_q.shape[0]
    gamma = np.uint64(GAMMA)
    for i in range(n):
        base = np.uint64(first + i) * np.uint64(DRAWS_PER_ROUND)

        w = _mix64_loop(key + (base + np.uint64(DRAW_QUESTIONS + 1)) * gamma)
        u = np.float64(w >> np.uint64(11)) * _INV_2_53
        s = n_set - 1
        for j in range(n_set):
            if u < cdf_q[j]:
                s = j
                break

        w = _mix64_loop(key + (base + np.uint64(DRAW_OUTPUTS + 1)) * gamma)
        u = np.float64(w >> np.uint64(11)) * _INV_2_53
        o = 3
        for j in range(4):
            if u < cdf_ab[s, j]:
                o = j
                break

        w = _mix64_loop(key + (base + np.uint64(DRAW_PAD + 1)) * gamma)
        r = np.int64(w >> np.uint64(63))

        a = o >> 1
        b = o & 1
        f = sf[s]
        fuel = 1
        bat = 0
        if variant == 0:
            x = f ^ r
            g = a ^ b ^ r
            if x == g:
                fuel, bat = bat, fuel
        else:
            m = 1 ^ a ^ b ^ f
            if m == 1:
                fuel, bat = bat, fuel
            m ^= 1 ^ a ^ b ^ f
            if m != 0:
                raise RuntimeError("controller memory not restored")
        setting[i] = s
        a_out[i] = a
        b_out[i] = b
        r_out[i] = r
        work[i] = bat
    return setting, a_out, b_out, r_out, work


def _mix64_numpy(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def _simulate_numpy_block(key, first, n, cdf_q, sf, cdf_ab, variant):
    idx = np.arange(first, first + n, dtype=np.uint64)
    base = idx * np.uint64(DRAWS_PER_ROUND)
    gamma = np.uint64(GAMMA)
    key = np.uint64(key)

    w = _mix64_numpy(key + (base + np.uint64(DRAW_QUESTIONS + 1)) * gamma)
    u = (w >> np.uint64(11)).astype(np.float64) * _INV_2_53
    s = np.minimum(np.searchsorted(cdf_q, u, side="right"), cdf_q.shape[0] - 1).astype(np.int64)

    w = _mix64_numpy(key + (base + np.uint64(DRAW_OUTPUTS + 1)) * gamma)
    u = (w >> np.uint64(11)).astype(np.float64) * _INV_2_53
    o = np.minimum((u[:, None] >= cdf_ab[s]).sum(axis=1), 3).astype(np.int64)

    w = _mix64_numpy(key + (base + np.uint64(DRAW_PAD + 1)) * gamma)
    r = (w >> np.uint64(63)).astype(np.int64)

    a = o >> 1
    b = o & 1
    f = sf[s]
    if variant == VARIANT_FEEDFORWARD:
        x = f ^ r
        g = a ^ b ^ r
        swap = x == g
    else:
        m = 1 ^ a ^ b ^ f
        swap = m == 1
        m = m ^ (1 ^ a ^ b ^ f)
        if m.any():
            raise RuntimeError("controller memory not restored")
    fuel = np.where(swap, 0, 1)
    bat = 1 - fuel
    return (
        s,
        a.astype(np.uint8),
        b.astype(np.uint8),
        r.astype(np.uint8),
        bat.astype(np.uint8),
    )


def _simulate_numpy(key, first, n, cdf_q, sf, cdf_ab, variant):
    parts = [
        _simulate_numpy_block(key, first + start, min(_NUMPY_BLOCK, n - start), cdf_q, sf, cdf_ab, variant)
        for start in range(0, n, _NUMPY_BLOCK)
    ]
    if not parts:
        return tuple(np.empty(0, dtype=t) for t in (np.int64,) + (np.uint8,) * 4)
    return tuple(np.concatenate(cols) for cols in zip(*parts))


def simulate_rounds(key, first, n, cdf_q, sf, cdf_ab, variant, use_numba=None):
    """Sample ``n`` rounds starting at round index ``first``.

    Returns ``(setting, a, b, r, work)`` arrays, ``setting`` indexing the
    support arrays behind ``cdf_q``/``sf``/``cdf_ab``.
    """
    cdf_q = np.ascontiguousarray(cdf_q, dtype=np.float64)
    sf = np.ascontiguousarray(sf, dtype=np.int64)
    cdf_ab = np.ascontiguousarray(cdf_ab, dtype=np.float64)
    if _pick(use_numba):
        return _simulate_loop(np.uint64(key), int(first), int(n), cdf_q, sf, cdf_ab, int(variant))
    return _simulate_numpy(int(key), int(first), int(n), cdf_q, sf, cdf_ab, int(variant))


# --------------------------------------------------------------------------
# regularized incomplete beta and its quantile


@njit
def _betacf_loop(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _CF_EPS:
            break
    return h


@njit
def _betainc_scalar(a, b, x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    bt = math.exp(lbt)
    if x < (a + 1.0) / (a + b + 2.0):
        val = bt * _betacf_loop(a, b, x) / a
    else:
        val = 1.0 - bt * _betacf_loop(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, val))


@njit
def _betainc_loop(a, b, x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _betainc_scalar(a[i], b[i], x[i])
    return out


@njit
def _beta_quantile_loop(q, a, b, tol, maxiter):
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        lo = 0.0
        hi = 1.0
        for _ in range(maxiter):
            mid = 0.5 * (lo + hi)
            if _betainc_scalar(a[i], b[i], mid) < q[i]:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol:
                break
        out[i] = 0.5 * (lo + hi)
    return out


_lgamma = np.vectorize(math.lgamma, otypes=[np.float64])


def _fix_tiny(v):
    return np.where(np.abs(v) < _CF_FPMIN, _CF_FPMIN, v)


def _betacf_numpy(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 / _fix_tiny(1.0 - qab * x / qap)
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d1 = 1.0 / _fix_tiny(1.0 + aa * d)
        c1 = _fix_tiny(1.0 + aa / c)
        h1 = h * d1 * c1
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d2 = 1.0 / _fix_tiny(1.0 + aa * d1)
        c2 = _fix_tiny(1.0 + aa / c1)
        step = d2 * c2
        h = np.where(active, h1 * step, h)
        d = np.where(active, d2, d)
        c = np.where(active, c2, c)
        active &= ~(np.abs(step - 1.0) < _CF_EPS)
        if not active.any():
            break
    return h


def _betainc_numpy(a, b, x):
    a, b, x = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(x, float))
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    lbt = _lgamma(a + b) - _lgamma(a) - _lgamma(b) + a * np.log(xs) + b * np.log1p(-xs)
    bt = np.exp(lbt)
    flip = ~(xs < (a + 1.0) / (a + b + 2.0))
    aa = np.where(flip, b, a)
    bb = np.where(flip, a, b)
    xx = np.where(flip, 1.0 - xs, xs)
    with np.errstate(all="ignore"):
        part = bt * _betacf_numpy(aa, bb, xx) / aa
    val = np.clip(np.where(flip, 1.0 - part, part), 0.0, 1.0)
    return np.where(inside, val, np.where(x >= 1.0, 1.0, 0.0))


def _beta_quantile_numpy(q, a, b, tol, maxiter):
    lo = np.zeros(q.shape)
    hi = np.ones(q.shape)
    live = np.ones(q.shape, dtype=bool)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        below = _betainc_numpy(a, b, mid) < q
        lo = np.where(live & below, mid, lo)
        hi = np.where(live & ~below, mid, hi)
        live &= ~(hi - lo <= tol)
        if not live.any():
            break
    return 0.5 * (lo + hi)


def _as_lanes(*arrays):
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in arrays))
    shape = arrs[0].shape
    return shape, [np.ascontiguousarray(v).ravel() for v in arrs]


def betainc(a, b, x, use_numba=None):
    """Regularized incomplete beta ``I_x(a, b)`` (continued-fraction evaluation)."""
    shape, (a1, b1, x1) = _as_lanes(a, b, x)
    if _pick(use_numba):
        out = _betainc_loop(a1, b1, x1)
    else:
        out = _betainc_numpy(a1, b1, x1)
    return float(out[0]) if shape == () else out.reshape(shape)


def beta_quantile(q, a, b, tol=1e-12, maxiter=200, use_numba=None):
    """Quantile of Beta(a, b) by bisection on :func:`betainc`."""
    shape, (q1, a1, b1) = _as_lanes(q, a, b)
    if _pick(use_numba):
        out = _beta_quantile_loop(q1, a1, b1, float(tol), int(maxiter))
    else:
        out = _beta_quantile_numpy(q1, a1, b1, float(tol), int(maxiter))
    return float(out[0]) if shape == () else out.reshape(shape)
