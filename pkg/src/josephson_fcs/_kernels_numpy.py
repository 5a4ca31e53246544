"""Pure-numpy implementations of the hot kernels.

Same call surface as ``_kernels_numba``.  The stationary solver is
batch-vectorized over counting points (masked Newton on stacked 4x4 systems)
instead of per-point JIT loops; the trajectory integrator is the same
Dormand-Prince scheme driven from plain Python.
"""
from __future__ import annotations

import numpy as np

from ._rk_tableau import (
    _A21, _A31, _A32, _A41, _A42, _A43, _A51, _A52, _A53, _A54,
    _A61, _A62, _A63, _A64, _A65, _B1, _B3, _B4, _B5, _B6,
    _E1, _E3, _E4, _E5, _E6, _E7,
    STATUS_OK, STATUS_STEP_UNDERFLOW, STATUS_MAX_STEPS,
)


def wigner_rhs(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc):
    sc, sh, s, m = y[0], y[1], y[2], y[3]
    common = kc * xipc * sc - 0.5 * kc * ximc + kh * xiph * sh - 0.5 * kh * ximh
    out = np.empty(5, np.complex128)
    out[0] = (2 * g * (s - gamma * m) + kc * (nc + 0.5 - sc) - 2j * lam * g * sc * s
              + kc * xipc * (sc * sc + 0.25) - kc * ximc * sc + kh * xiph * (m * m + s * s))
    out[1] = (-2 * g * (s - gamma * m) + kh * (nh + 0.5 - sh) - 2j * lam * g * sh * s
              + kh * xiph * (sh * sh + 0.25) - kh * ximh * sh + kc * xipc * (m * m + s * s))
    out[2] = (g * (sh - sc) - 0.5 * (kc + kh) * s
              - 1j * lam * g * (sc * sh + s * s - m * m - 0.25) + s * common)
    out[3] = (-gamma * g * (sh - sc) - 0.5 * (kc + kh) * m - 2j * lam * g * m * s + m * common)
    out[4] = common - 2j * lam * g * s
    return out


def integrate_checkpoints(y0, t_checkpoints, g, kh, kc, nh, nc, gamma, lam,
                          xiph, ximh, xipc, ximc, rtol, atol, h0, max_steps):
    def f(y):
        return wigner_rhs(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)

    ncp = len(t_checkpoints)
    Y = np.zeros((ncp, 5), np.complex128)
    y = y0.astype(np.complex128).copy()
    t = 0.0
    h = h0
    k1 = f(y)
    steps = 0
    for icp in range(ncp):
        t_target = float(t_checkpoints[icp])
        if t_target <= t:
            Y[icp] = y
            continue
        while t < t_target:
            if steps >= max_steps:
                return Y, STATUS_MAX_STEPS, steps, t, y
            h = min(h, t_target - t)
            if h < 1e-14 * max(1.0, abs(t_target)):
                return Y, STATUS_STEP_UNDERFLOW, steps, t, y
            k2 = f(y + h * (_A21 * k1))
            k3 = f(y + h * (_A31 * k1 + _A32 * k2))
            k4 = f(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
            k5 = f(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
            k6 = f(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
            ynew = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = f(ynew)
            err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
            enorm = np.sqrt(np.mean(np.abs(err / scale) ** 2))
            steps += 1
            if enorm <= 1.0:
                t += h
                y = ynew
                k1 = k7
                fac = 5.0 if enorm == 0.0 else 0.9 * enorm ** -0.2
                h *= min(5.0, max(0.2, fac))
            else:
                h *= max(0.2, 0.9 * enorm ** -0.2)
        Y[icp] = y
    return Y, STATUS_OK, steps, t, y


def _xi_pm_arr(chi, nb):
    p = (nb + 1.0) * (np.exp(1j * chi) - 1.0)
    m = nb * (np.exp(-1j * chi) - 1.0)
    return p + m, p - m


def _residual_jacobian_batch(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc):
    sc, sh, s, m = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    common = kc * xipc * sc - 0.5 * kc * ximc + kh * xiph * sh - 0.5 * kh * ximh
    n = y.shape[0]
    F = np.empty((n, 4), np.complex128)
    F[:, 0] = (2 * g * (s - gamma * m) + kc * (nc + 0.5 - sc) - 2j * lam * g * sc * s
               + kc * xipc * (sc**2 + 0.25) - kc * ximc * sc + kh * xiph * (m**2 + s**2))
    F[:, 1] = (-2 * g * (s - gamma * m) + kh * (nh + 0.5 - sh) - 2j * lam * g * sh * s
               + kh * xiph * (sh**2 + 0.25) - kh * ximh * sh + kc * xipc * (m**2 + s**2))
    F[:, 2] = (g * (sh - sc) - 0.5 * (kc + kh) * s
               - 1j * lam * g * (sc * sh + s**2 - m**2 - 0.25) + s * common)
    F[:, 3] = (-gamma * g * (sh - sc) - 0.5 * (kc + kh) * m - 2j * lam * g * m * s + m * common)
    J = np.zeros((n, 4, 4), np.complex128)
    J[:, 0, 0] = -kc - 2j * lam * g * s + 2 * kc * xipc * sc - kc * ximc
    J[:, 0, 2] = 2 * g - 2j * lam * g * sc + 2 * kh * xiph * s
    J[:, 0, 3] = -2 * g * gamma + 2 * kh * xiph * m
    J[:, 1, 1] = -kh - 2j * lam * g * s + 2 * kh * xiph * sh - kh * ximh
    J[:, 1, 2] = -2 * g - 2j * lam * g * sh + 2 * kc * xipc * s
    J[:, 1, 3] = 2 * g * gamma + 2 * kc * xipc * m
    J[:, 2, 0] = -g - 1j * lam * g * sh + s * kc * xipc
    J[:, 2, 1] = g - 1j * lam * g * sc + s * kh * xiph
    J[:, 2, 2] = -0.5 * (kc + kh) - 2j * lam * g * s + common
    J[:, 2, 3] = 2j * lam * g * m
    J[:, 3, 0] = m * kc * xipc
    J[:, 3, 1] = -gamma * g + m * kh * xiph
    J[:, 3, 2] = -2j * lam * g * m
    J[:, 3, 3] = -0.5 * (kc + kh) - 2j * lam * g * s + common
    return F, J


def _slice_param(v, rows):
    return v[rows] if np.ndim(v) else v


def _newton_batch(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc, tol, max_iter):
    """Masked damped Newton on a batch of stationarity systems.  Returns (y, ok)."""

    def fj(yy, rows):
        return _residual_jacobian_batch(
            yy, g, kh, kc, nh, nc, gamma,
            _slice_param(lam, rows), _slice_param(xiph, rows), _slice_param(ximh, rows),
            _slice_param(xipc, rows), _slice_param(ximc, rows))

    n = y.shape[0]
    all_rows = np.arange(n)
    F, J = fj(y, all_rows)
    fnorm = np.abs(F).max(axis=1)
    failed = np.zeros(n, bool)
    for _ in range(max_iter):
        active = (fnorm >= tol) & ~failed
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        step = np.linalg.solve(J[idx], F[idx][..., None])[..., 0]
        damping = np.ones(len(idx))
        accepted = np.zeros(len(idx), bool)
        y_next = y[idx].copy()
        for _try in range(9):
            todo = np.nonzero(~accepted)[0]
            if not len(todo):
                break
            rows = idx[todo]
            cand = y[rows] - damping[todo, None] * step[todo]
            Fc, _ = fj(cand, rows)
            fc = np.abs(Fc).max(axis=1)
            better = (fc < fnorm[rows]) | (fc < tol)
            y_next[todo[better]] = cand[better]
            accepted[todo[better]] = True
            damping[todo[~better]] *= 0.5
        failed[idx[~accepted]] = True
        rows = idx[accepted]
        if len(rows):
            y[rows] = y_next[accepted]
            Fn, Jn = fj(y[rows], rows)
            F[rows], J[rows] = Fn, Jn
            fnorm[rows] = np.abs(Fn).max(axis=1)
    return y, (fnorm < tol)


def stationary_grid(chi_h, chi_c, lam, gamma, g, kh, kc, nh, nc, zero_seed, tol):
    """Batch continuation from the zero-field steady state for all points."""
    chi_h = np.asarray(chi_h, np.complex128)
    chi_c = np.asarray(chi_c, np.complex128)
    lam = np.asarray(lam, np.complex128)
    n = chi_h.shape[0]
    ok = np.zeros(n, bool)
    y = np.tile(zero_seed.astype(np.complex128), (n, 1))
    n_steps = 8
    pending = np.arange(n)
    while len(pending) and n_steps <= 512:
        yp = np.tile(zero_seed.astype(np.complex128), (len(pending), 1))
        good = np.ones(len(pending), bool)
        for istep in range(1, n_steps + 1):
            tau = istep / n_steps
            xiph, ximh = _xi_pm_arr(tau * chi_h[pending], nh)
            xipc, ximc = _xi_pm_arr(tau * chi_c[pending], nc)
            yp, step_ok = _newton_batch(yp, g, kh, kc, nh, nc, tau * gamma,
                                        tau * lam[pending], xiph, ximh, xipc, ximc, tol, 40)
            good &= step_ok
        y[pending[good]] = yp[good]
        ok[pending[good]] = True
        pending = pending[~good]
        n_steps *= 2
    xiph, ximh = _xi_pm_arr(chi_h, nh)
    xipc, ximc = _xi_pm_arr(chi_c, nc)
    common = kc * xipc * y[:, 0] - 0.5 * kc * ximc + kh * xiph * y[:, 1] - 0.5 * kh * ximh
    rates = np.where(ok, common - 2j * lam * g * y[:, 2], np.nan + 0j)
    return y, rates, ok
