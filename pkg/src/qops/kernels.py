"""Per-pixel quaternion kernels over ``(..., 4)`` float64 arrays.

Each hot loop exists twice: a numba kernel over a flattened ``(N, 4)`` buffer
and a vectorised numpy fallback.  :func:`get_backend` / :func:`set_backend`
pick between them; the default follows :mod:`qops._numba`.

Array layout: last axis is ``(w, x, y, z)``; images are ``(H, W, 4)`` with
``x, y, z`` holding red, green and blue.
"""

from __future__ import annotations

import math

import numpy as np

from ._numba import HAVE_NUMBA, njit, prange

_BACKENDS = ("numba", "numpy")
_backend = "numba" if HAVE_NUMBA else "numpy"


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the previous one."""
    global _backend
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {_BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is disabled or missing")
    previous, _backend = _backend, name
    return previous


def as_quat_array(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-1:] != (4,):
        raise ValueError(f"expected trailing axis of length 4, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# numpy reference versions (broadcasting over leading axes)
# ---------------------------------------------------------------------------


def hamilton(p, q) -> np.ndarray:
    p = as_quat_array(p)
    q = as_quat_array(q)
    a1, b1, c1, d1 = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    a2, b2, c2, d2 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        (
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ),
        axis=-1,
    )


def conjugate(q) -> np.ndarray:
    q = as_quat_array(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm(q) -> np.ndarray:
    q = as_quat_array(q)
    return np.sqrt(np.sum(q * q, axis=-1))


def qinv(q) -> np.ndarray:
    q = as_quat_array(q)
    n2 = np.sum(q * q, axis=-1, keepdims=True)
    return conjugate(q) / n2


def right_divide(p, q) -> np.ndarray:
    return hamilton(p, qinv(q))


def _vec_norm(q: np.ndarray) -> np.ndarray:
    v = q[..., 1:]
    return np.sqrt(np.sum(v * v, axis=-1))


def qexp(q) -> np.ndarray:
    q = as_quat_array(q)
    ew = np.exp(q[..., 0])
    vn = _vec_norm(q)
    safe = np.where(vn > 0.0, vn, 1.0)
    s = np.where(vn > 0.0, ew * np.sin(vn) / safe, 0.0)
    out = np.empty(np.broadcast_shapes(q.shape), dtype=np.float64)
    out[..., 0] = ew * np.cos(vn)
    out[..., 1:] = s[..., None] * q[..., 1:]
    return out


def qln(q) -> np.ndarray:
    """Principal logarithm; zero quaternions and negative reals give nan."""
    q = as_quat_array(q)
    vn = _vec_norm(q)
    qn = np.hypot(q[..., 0], vn)
    safe = np.where(vn > 0.0, vn, 1.0)
    c = np.where(vn > 0.0, np.arctan2(vn, q[..., 0]) / safe, 0.0)
    out = np.empty(q.shape, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[..., 0] = np.log(qn)
        out[..., 0] = np.where((vn == 0.0) & (q[..., 0] < 0.0), np.nan, out[..., 0])
    out[..., 1:] = c[..., None] * q[..., 1:]
    return out


def qpow(q, n: float) -> np.ndarray:
    q = as_quat_array(q)
    vn = _vec_norm(q)
    qn = np.hypot(q[..., 0], vn)
    theta = np.arctan2(vn, q[..., 0])
    rn = qn**n
    safe = np.where(vn > 0.0, vn, 1.0)
    s = np.where(vn > 0.0, rn * np.sin(n * theta) / safe, 0.0)
    out = np.empty(q.shape, dtype=np.float64)
    out[..., 0] = rn * np.cos(n * theta)
    out[..., 1:] = s[..., None] * q[..., 1:]
    return out


def _pure4(d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.shape == (3,):
        return np.concatenate(([0.0], d))
    return as_quat_array(d)


def sandwich_numpy(q, f, g) -> np.ndarray:
    """``f * (q * g)`` for single quaternions ``f``, ``g`` over an array ``q``."""
    return hamilton(_pure4(f), hamilton(q, _pure4(g)))


def split_numpy(q, f, g, sign: int) -> np.ndarray:
    q = as_quat_array(q)
    plus = 0.5 * (q + sandwich_numpy(q, f, g))
    if sign > 0:
        return plus
    return q - plus


def log_exp_numpy(q) -> np.ndarray:
    return hamilton(qln(q), qexp(q))


def contrast_numpy(q, alpha, beta, gamma, delta, cu, cl) -> np.ndarray:
    q = as_quat_array(q)
    e = qexp(q)
    denom_inv = qinv(q + e)
    h = (
        alpha * (q / 2.0)
        - beta * qinv(e)
        + gamma * hamilton(e, denom_inv)
        + delta * hamilton(qpow(q, 0.5), denom_inv)
    )
    return 0.5 * (h + sandwich_numpy(q, cu, cl))


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ham(a1, b1, c1, d1, a2, b2, c2, d2):
    return (
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


@njit(cache=True)
def _exp1(w, x, y, z):
    ew = math.exp(w)
    vn = math.sqrt(x * x + y * y + z * z)
    if vn > 0.0:
        s = ew * math.sin(vn) / vn
    else:
        s = 0.0
    return ew * math.cos(vn), s * x, s * y, s * z


@njit(cache=True)
def _ln1(w, x, y, z):
    vn = math.sqrt(x * x + y * y + z * z)
    qn = math.hypot(w, vn)
    if vn > 0.0:
        c = math.atan2(vn, w) / vn
    else:
        c = 0.0
    if qn > 0.0 and not (vn == 0.0 and w < 0.0):
        lw = math.log(qn)
    elif qn == 0.0:
        lw = -np.inf
    else:
        lw = np.nan
    return lw, c * x, c * y, c * z


@njit(cache=True)
def _pow1(w, x, y, z, n):
    vn = math.sqrt(x * x + y * y + z * z)
    qn = math.hypot(w, vn)
    theta = math.atan2(vn, w)
    rn = qn**n
    if vn > 0.0:
        s = rn * math.sin(n * theta) / vn
    else:
        s = 0.0
    return rn * math.cos(n * theta), s * x, s * y, s * z


@njit(cache=True)
def _inv1(w, x, y, z):
    n2 = w * w + x * x + y * y + z * z
    return w / n2, -x / n2, -y / n2, -z / n2


@njit(cache=True)
def _sandwich1(w, x, y, z, f, g):
    t0, t1, t2, t3 = _ham(w, x, y, z, g[0], g[1], g[2], g[3])
    return _ham(f[0], f[1], f[2], f[3], t0, t1, t2, t3)


@njit(cache=True)
def _split_pixel(q, f, g, sign, out, i):
    m0, m1, m2, m3 = _sandwich1(q[i, 0], q[i, 1], q[i, 2], q[i, 3], f, g)
    p0 = 0.5 * (q[i, 0] + m0)
    p1 = 0.5 * (q[i, 1] + m1)
    p2 = 0.5 * (q[i, 2] + m2)
    p3 = 0.5 * (q[i, 3] + m3)
    if sign > 0:
        out[i, 0] = p0
        out[i, 1] = p1
        out[i, 2] = p2
        out[i, 3] = p3
    else:
        out[i, 0] = q[i, 0] - p0
        out[i, 1] = q[i, 1] - p1
        out[i, 2] = q[i, 2] - p2
        out[i, 3] = q[i, 3] - p3


@njit(parallel=True, cache=True)
def _split_par(q, f, g, sign, out):
    for i in prange(q.shape[0]):
        _split_pixel(q, f, g, sign, out, i)


@njit(cache=True, nogil=True)
def _split_ser(q, f, g, sign, out):
    for i in range(q.shape[0]):
        _split_pixel(q, f, g, sign, out, i)


@njit(cache=True)
def _log_exp_pixel(q, out, i):
    l0, l1, l2, l3 = _ln1(q[i, 0], q[i, 1], q[i, 2], q[i, 3])
    e0, e1, e2, e3 = _exp1(q[i, 0], q[i, 1], q[i, 2], q[i, 3])
    r0, r1, r2, r3 = _ham(l0, l1, l2, l3, e0, e1, e2, e3)
    out[i, 0] = r0
    out[i, 1] = r1
    out[i, 2] = r2
    out[i, 3] = r3


@njit(parallel=True, cache=True)
def _log_exp_par(q, out):
    for i in prange(q.shape[0]):
        _log_exp_pixel(q, out, i)


@njit(cache=True, nogil=True)
def _log_exp_ser(q, out):
    for i in range(q.shape[0]):
        _log_exp_pixel(q, out, i)


@njit(cache=True)
def _contrast_pixel(q, params, cu, cl, out, i):
    alpha, beta, gamma, delta = params[0], params[1], params[2], params[3]
    w, x, y, z = q[i, 0], q[i, 1], q[i, 2], q[i, 3]
    e0, e1, e2, e3 = _exp1(w, x, y, z)
    ei0, ei1, ei2, ei3 = _inv1(e0, e1, e2, e3)
    di0, di1, di2, di3 = _inv1(w + e0, x + e1, y + e2, z + e3)
    g0, g1, g2, g3 = _ham(e0, e1, e2, e3, di0, di1, di2, di3)
    s0, s1, s2, s3 = _pow1(w, x, y, z, 0.5)
    r0, r1, r2, r3 = _ham(s0, s1, s2, s3, di0, di1, di2, di3)
    m0, m1, m2, m3 = _sandwich1(w, x, y, z, cu, cl)
    h0 = alpha * (w / 2.0) - beta * ei0 + gamma * g0 + delta * r0
    h1 = alpha * (x / 2.0) - beta * ei1 + gamma * g1 + delta * r1
    h2 = alpha * (y / 2.0) - beta * ei2 + gamma * g2 + delta * r2
    h3 = alpha * (z / 2.0) - beta * ei3 + gamma * g3 + delta * r3
    out[i, 0] = 0.5 * (h0 + m0)
    out[i, 1] = 0.5 * (h1 + m1)
    out[i, 2] = 0.5 * (h2 + m2)
    out[i, 3] = 0.5 * (h3 + m3)


@njit(parallel=True, cache=True)
def _contrast_par(q, params, cu, cl, out):
    for i in prange(q.shape[0]):
        _contrast_pixel(q, params, cu, cl, out, i)


@njit(cache=True, nogil=True)
def _contrast_ser(q, params, cu, cl, out):
    for i in range(q.shape[0]):
        _contrast_pixel(q, params, cu, cl, out, i)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _flat(q) -> tuple[np.ndarray, tuple]:
    q = np.ascontiguousarray(as_quat_array(q))
    return q.reshape(-1, 4), q.shape


def split_image(q, f, g, sign: int, *, parallel: bool = True, backend: str | None = None) -> np.ndarray:
    """One half of the orthogonal planes split, ``(q +/- f q g) / 2``, per pixel.

    ``sign`` is +1 for the invariant half and -1 for the sign-flipping half.
    The minus half is formed as ``q - plus`` so both halves come from one
    product.
    """
    backend = backend or _backend
    if backend == "numpy":
        return split_numpy(q, f, g, sign)
    flat, shape = _flat(q)
    out = np.empty_like(flat)
    run = _split_par if parallel else _split_ser
    run(flat, _pure4(f), _pure4(g), 1 if sign > 0 else -1, out)
    return out.reshape(shape)


def log_exp(q, *, parallel: bool = True, backend: str | None = None) -> np.ndarray:
    """``ln(q) * exp(q)`` per pixel, scalar part kept."""
    backend = backend or _backend
    if backend == "numpy":
        return log_exp_numpy(q)
    flat, shape = _flat(q)
    out = np.empty_like(flat)
    (_log_exp_par if parallel else _log_exp_ser)(flat, out)
    return out.reshape(shape)


def contrast(q, alpha, beta, gamma, delta, cu, cl, *, parallel: bool = True, backend: str | None = None) -> np.ndarray:
    backend = backend or _backend
    if backend == "numpy":
        return contrast_numpy(q, alpha, beta, gamma, delta, _pure4(cu), _pure4(cl))
    flat, shape = _flat(q)
    out = np.empty_like(flat)
    params = np.array([alpha, beta, gamma, delta], dtype=np.float64)
    (_contrast_par if parallel else _contrast_ser)(flat, params, _pure4(cu), _pure4(cl), out)
    return out.reshape(shape)
