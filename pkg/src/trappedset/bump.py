"""Smooth compactly supported bump and its Fourier-Laplace transform.

``phi(t) = S((t + 1)/h) S((1 - t)/h)`` with the smoothed step
``S(x) = g(x) / (g(x) + g(1 - x))``, ``g(x) = exp(-1/x)`` for ``x > 0``,
and ``h = 1/4``: ``phi`` is 1 on ``[-3/4, 3/4]``, vanishes outside
``[-1, 1]`` and is even.  Derivatives are exact (truncated Taylor series
arithmetic), which also gives rigorous Paley-Wiener envelopes
``|phi_hat(z)| <= e^{|Im z|} ||phi^{(K)}||_1 / |z|^K``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 8
PLATEAU = 0.75
RAMP = 0.25
GL_ORDER = 16
IMAG_GUARD = 700.0


# ---------------------------------------------------------------------------
# truncated Taylor series ("jets"); arrays of shape (order + 1, npoints)


def _jet_mul(a, b):
    k = a.shape[0]
    out = np.zeros_like(a)
    for i in range(k):
        out[i] = np.einsum("j...,j...->...", a[: i + 1], b[i::-1])
    return out


def _jet_recip(a):
    k = a.shape[0]
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for i in range(1, k):
        out[i] = -np.einsum("j...,j...->...", a[1 : i + 1], out[i - 1 :: -1]) / a[0]
    return out


def _jet_exp(a):
    k = a.shape[0]
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for i in range(1, k):
        j = np.arange(1, i + 1).reshape((-1,) + (1,) * (a.ndim - 1))
        out[i] = np.sum(j * a[1 : i + 1] * out[i - 1 :: -1], axis=0) / i
    return out


def _g_jet(x):
    """Jet of ``exp(-1/x)``; zero where ``x <= 0``."""
    pos = x[0] > 0
    safe = x.copy()
    safe[0] = np.where(pos, x[0], 1.0)
    out = _jet_exp(-_jet_recip(safe))
    return np.where(pos, out, 0.0)


def _step_jet(x):
    """Jet of the smoothed step ``S`` at a jet argument."""
    one_minus = -x
    one_minus[0] = 1.0 - x[0]
    gx, g1 = _g_jet(x), _g_jet(one_minus)
    out = _jet_mul(gx, _jet_recip(gx + g1))
    # S is exactly 1 with vanishing derivatives for x >= 1
    flat = x[0] >= 1.0
    out[:, flat] = 0.0
    out[0, flat] = 1.0
    return out


def _phi_jet(t, order):
    t = np.atleast_1d(np.asarray(t, float))
    k = order + 1
    left = np.zeros((k,) + t.shape)
    left[0] = (t + 1.0) / RAMP
    if k > 1:
        left[1] = 1.0 / RAMP
    right = np.zeros((k,) + t.shape)
    right[0] = (1.0 - t) / RAMP
    if k > 1:
        right[1] = -1.0 / RAMP
    return _jet_mul(_step_jet(left), _step_jet(right))


def phi(t):
    """The bump, vectorised."""
    t = np.asarray(t, float)
    return _phi_jet(t, 0)[0].reshape(t.shape)


def phi_derivative(t, order: int):
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order must be in [0, {MAX_ORDER}]")
    t = np.asarray(t, float)
    return (math.factorial(order) * _phi_jet(t, order)[order]).reshape(t.shape)


# ---------------------------------------------------------------------------
# quadrature on the ramp [3/4, 1]


@lru_cache(maxsize=64)
def _ramp_nodes(panels: int):
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    edges = np.linspace(PLATEAU, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights * phi(nodes)


@lru_cache(maxsize=1)
def derivative_l1_norms() -> tuple[float, ...]:
    """``||phi^{(K)}||_1`` for ``K = 0..MAX_ORDER``."""
    nodes, _ = _ramp_nodes(512)
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    half = 0.5 * (1.0 - PLATEAU) / 512
    weights = np.tile(w * half, 512)
    jet = _phi_jet(nodes, MAX_ORDER)
    norms = []
    for k in range(MAX_ORDER + 1):
        dk = math.factorial(k) * jet[k]
        ramp = float(np.sum(weights * np.abs(dk)))
        norms.append(2.0 * ramp + (2.0 * PLATEAU if k == 0 else 0.0))
    return tuple(norms)


def _ramp_integral(z, panels):
    nodes, wphi = _ramp_nodes(panels)
    return np.cos(np.multiply.outer(z, nodes)) @ wphi


def phi_hat(z, tol: float = 1e-13):
    """``phi_hat(z) = int phi(t) e^{-i z t} dt`` for complex ``z``.

    Uses the closed form on the plateau and adaptive composite Gauss-Legendre
    on the ramps (panel count doubled until two successive values agree to
    ``tol * e^{|Im z|}``).
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    if z.size and np.max(np.abs(z.imag)) > IMAG_GUARD:
        raise ValueError(f"|Im z| exceeds the overflow guard {IMAG_GUARD}")
    out = np.empty(z.size, dtype=complex)
    small = np.abs(z) < 1e-8
    zz = np.where(small, 1.0, z)
    plateau = np.where(small, 2.0 * PLATEAU, 2.0 * np.sin(PLATEAU * zz) / zz)
    # group by magnitude so high frequencies do not inflate the work for all points
    mag = np.abs(z.real)
    bins = np.floor(np.log2(np.maximum(mag, 16.0))).astype(int)
    for b in np.unique(bins):
        idx = np.nonzero(bins == b)[0]
        zb = z[idx]
        panels = max(4, int(2 ** b) // 64)
        prev = _ramp_integral(zb, panels)
        for _ in range(8):
            panels *= 2
            cur = _ramp_integral(zb, panels)
            scale = np.exp(np.abs(zb.imag))
            done = np.max(np.abs(cur - prev) / scale) <= tol
            prev = cur
            if done:
                break
        out[idx] = plateau[idx] + 2.0 * prev
    return out.reshape(shape)


def phi_hat_rows(x, y, tol: float = 1e-13):
    """``phi_hat(x_i + 1j * y_k)`` as a ``(len(x), len(y))`` array.

    Same quadrature as :func:`phi_hat`, but the trigonometric factors are
    shared by all imaginary parts, which makes evaluation on a few
    horizontal lines nearly as cheap as on one.
    """
    x = np.asarray(x, float).ravel()
    y = np.asarray(y, float).ravel()
    if y.size and np.max(np.abs(y)) > IMAG_GUARD:
        raise ValueError(f"|Im z| exceeds the overflow guard {IMAG_GUARD}")
    z = x[:, None] + 1j * y[None, :]
    small = np.abs(z) < 1e-8
    zz = np.where(small, 1.0, z)
    out = np.where(small, 2.0 * PLATEAU, 2.0 * np.sin(PLATEAU * zz) / zz).astype(complex)
    scale = np.exp(np.abs(y))
    bins = np.floor(np.log2(np.maximum(np.abs(x), 16.0))).astype(int)
    for b in np.unique(bins):
        idx = np.nonzero(bins == b)[0]
        panels = max(4, int(2 ** b) // 64)
        prev = _ramp_rows(x[idx], y, panels)
        for _ in range(8):
            panels *= 2
            cur = _ramp_rows(x[idx], y, panels)
            done = np.max(np.abs(cur - prev) / scale) <= tol
            prev = cur
            if done:
                break
        out[idx] += 2.0 * prev
    return out


def _ramp_rows(x, y, panels):
    # cos((x + iy) t) = cos(xt) cosh(yt) - i sin(xt) sinh(yt)
    nodes, wphi = _ramp_nodes(panels)
    xt = np.multiply.outer(x, nodes)
    yt = np.multiply.outer(nodes, y)
    return np.cos(xt) @ (wphi[:, None] * np.cosh(yt)) - 1j * (np.sin(xt) @ (wphi[:, None] * np.sinh(yt)))


def phi_integral() -> float:
    return float(phi_hat(0.0).real)


def pw_envelope(z):
    """Rigorous bound ``e^{|Im z|} min_K ||phi^{(K)}||_1 / |z|^K``."""
    z = np.asarray(z, dtype=complex)
    norms = np.array(derivative_l1_norms())
    r = np.abs(z)[..., None]
    k = np.arange(MAX_ORDER + 1)
    cand = norms * np.where(r > 0, r, 1.0) ** (-k)
    cand[..., 1:] = np.where(r > 0, cand[..., 1:], np.inf)
    return np.exp(np.abs(z.imag)) * np.min(cand, axis=-1)


def pw_envelope_real(x):
    """Envelope on the real line as a function of ``|Re z|`` (lower bound for ``|z|``)."""
    return pw_envelope(np.abs(np.asarray(x, float)) + 0j)


def window(t, center: float, half_width: float):
    """``phi((t - center) / half_width)``."""
    return phi((np.asarray(t, float) - center) / half_width)


def fit_pw_constant(order: int, grid) -> float:
    """``max |phi_hat(tau)| (1 + |tau|)^order e^{-|Im tau|}`` over a grid of complex points."""
    grid = np.asarray(grid, dtype=complex)
    vals = np.abs(phi_hat(grid)) * (1.0 + np.abs(grid)) ** order * np.exp(-np.abs(grid.imag))
    return float(np.max(vals))
