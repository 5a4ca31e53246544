"""Numba implementations of the hot kernels.

Per-point algorithms compiled with @njit: the adaptive Dormand-Prince
integrator for the five complex covariance-flow ODEs, and the damped-Newton
continuation solver for their stationary point.  The pure-numpy twin lives in
``_kernels_numpy`` (same call signatures, batch-vectorized Newton).
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ._rk_tableau import (
    _A21, _A31, _A32, _A41, _A42, _A43, _A51, _A52, _A53, _A54,
    _A61, _A62, _A63, _A64, _A65, _B1, _B3, _B4, _B5, _B6,
    _E1, _E3, _E4, _E5, _E6, _E7,
    STATUS_OK, STATUS_STEP_UNDERFLOW, STATUS_MAX_STEPS,
)


@njit(cache=True)
def wigner_rhs(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc):
    """Time derivative of (sigma_c, sigma_h, s_ch, sigma_ch, logS)."""
    sc = y[0]
    sh = y[1]
    s = y[2]
    m = y[3]
    common = kc * xipc * sc - 0.5 * kc * ximc + kh * xiph * sh - 0.5 * kh * ximh
    out = np.empty(5, np.complex128)
    out[0] = (2.0 * g * (s - gamma * m) + kc * (nc + 0.5 - sc)
              - 2.0j * lam * g * sc * s
              + kc * xipc * (sc * sc + 0.25) - kc * ximc * sc
              + kh * xiph * (m * m + s * s))
    out[1] = (-2.0 * g * (s - gamma * m) + kh * (nh + 0.5 - sh)
              - 2.0j * lam * g * sh * s
              + kh * xiph * (sh * sh + 0.25) - kh * ximh * sh
              + kc * xipc * (m * m + s * s))
    out[2] = (g * (sh - sc) - 0.5 * (kc + kh) * s
              - 1.0j * lam * g * (sc * sh + s * s - m * m - 0.25)
              + s * common)
    out[3] = (-gamma * g * (sh - sc) - 0.5 * (kc + kh) * m
              - 2.0j * lam * g * m * s + m * common)
    out[4] = common - 2.0j * lam * g * s
    return out


@njit(cache=True)
def _err_norm(e, y0, y1, rtol, atol):
    acc = 0.0
    for i in range(5):
        scale = atol + rtol * max(abs(y0[i]), abs(y1[i]))
        r = abs(e[i]) / scale
        acc += r * r
    return np.sqrt(acc / 5.0)


@njit(cache=True)
def integrate_checkpoints(y0, t_checkpoints, g, kh, kc, nh, nc, gamma, lam,
                          xiph, ximh, xipc, ximc, rtol, atol, h0, max_steps):
    """Integrate from t=0 through the sorted checkpoint times.

    Returns (Y, status, n_steps, t_reached, y_last) with Y[i] the state at
    t_checkpoints[i].  FSAL Dormand-Prince with standard step control.
    """
    ncp = t_checkpoints.shape[0]
    Y = np.zeros((ncp, 5), np.complex128)
    y = y0.copy()
    t = 0.0
    h = h0
    k1 = wigner_rhs(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
    steps = 0
    for icp in range(ncp):
        t_target = t_checkpoints[icp]
        if t_target <= t:
            for i in range(5):
                Y[icp, i] = y[i]
            continue
        while t < t_target:
            if steps >= max_steps:
                return Y, STATUS_MAX_STEPS, steps, t, y
            if h > t_target - t:
                h = t_target - t
            if h < 1e-14 * max(1.0, abs(t_target)):
                return Y, STATUS_STEP_UNDERFLOW, steps, t, y
            y2 = y + h * (_A21 * k1)
            k2 = wigner_rhs(y2, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
            y3 = y + h * (_A31 * k1 + _A32 * k2)
            k3 = wigner_rhs(y3, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
            y4 = y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3)
            k4 = wigner_rhs(y4, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
            y5 = y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4)
            k5 = wigner_rhs(y5, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
            y6 = y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5)
            k6 = wigner_rhs(y6, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
            ynew = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = wigner_rhs(ynew, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
            err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            enorm = _err_norm(err, y, ynew, rtol, atol)
            steps += 1
            if enorm <= 1.0:
                t += h
                y = ynew
                k1 = k7  # first-same-as-last
                fac = 5.0 if enorm == 0.0 else 0.9 * enorm ** (-0.2)
                h *= min(5.0, max(0.2, fac))
            else:
                h *= max(0.2, 0.9 * enorm ** (-0.2))
        for i in range(5):
            Y[icp, i] = y[i]
    return Y, STATUS_OK, steps, t, y


@njit(cache=True)
def _xi_pm(chi, nb):
    p = (nb + 1.0) * (np.exp(1j * chi) - 1.0)
    m = nb * (np.exp(-1j * chi) - 1.0)
    return p + m, p - m


@njit(cache=True)
def _residual_jacobian(y4, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc):
    sc = y4[0]
    sh = y4[1]
    s = y4[2]
    m = y4[3]
    common = kc * xipc * sc - 0.5 * kc * ximc + kh * xiph * sh - 0.5 * kh * ximh
    F = np.empty(4, np.complex128)
    F[0] = (2.0 * g * (s - gamma * m) + kc * (nc + 0.5 - sc) - 2.0j * lam * g * sc * s
            + kc * xipc * (sc * sc + 0.25) - kc * ximc * sc + kh * xiph * (m * m + s * s))
    F[1] = (-2.0 * g * (s - gamma * m) + kh * (nh + 0.5 - sh) - 2.0j * lam * g * sh * s
            + kh * xiph * (sh * sh + 0.25) - kh * ximh * sh + kc * xipc * (m * m + s * s))
    F[2] = (g * (sh - sc) - 0.5 * (kc + kh) * s - 1.0j * lam * g * (sc * sh + s * s - m * m - 0.25)
            + s * common)
    F[3] = (-gamma * g * (sh - sc) - 0.5 * (kc + kh) * m - 2.0j * lam * g * m * s + m * common)
    J = np.zeros((4, 4), np.complex128)
    J[0, 0] = -kc - 2.0j * lam * g * s + 2.0 * kc * xipc * sc - kc * ximc
    J[0, 2] = 2.0 * g - 2.0j * lam * g * sc + 2.0 * kh * xiph * s
    J[0, 3] = -2.0 * g * gamma + 2.0 * kh * xiph * m
    J[1, 1] = -kh - 2.0j * lam * g * s + 2.0 * kh * xiph * sh - kh * ximh
    J[1, 2] = -2.0 * g - 2.0j * lam * g * sh + 2.0 * kc * xipc * s
    J[1, 3] = 2.0 * g * gamma + 2.0 * kc * xipc * m
    J[2, 0] = -g - 1.0j * lam * g * sh + s * kc * xipc
    J[2, 1] = g - 1.0j * lam * g * sc + s * kh * xiph
    J[2, 2] = -0.5 * (kc + kh) - 2.0j * lam * g * s + common
    J[2, 3] = 2.0j * lam * g * m
    J[3, 0] = m * kc * xipc
    J[3, 1] = -gamma * g + m * kh * xiph
    J[3, 2] = -2.0j * lam * g * m
    J[3, 3] = -0.5 * (kc + kh) - 2.0j * lam * g * s + common
    return F, J


@njit(cache=True)
def _newton(y4, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc, tol, max_iter):
    y = y4.copy()
    F, J = _residual_jacobian(y, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc)
    fnorm = np.abs(F).max()
    for _ in range(max_iter):
        if fnorm < tol:
            return y, True
        step = np.linalg.solve(J, F)
        damping = 1.0
        for _try in range(8):
            y_new = y - damping * step
            F_new, J_new = _residual_jacobian(y_new, g, kh, kc, nh, nc, gamma, lam,
                                              xiph, ximh, xipc, ximc)
            fnorm_new = np.abs(F_new).max()
            if fnorm_new < fnorm or fnorm_new < tol:
                y, F, J, fnorm = y_new, F_new, J_new, fnorm_new
                break
            damping *= 0.5
        else:
            return y, False
    return y, fnorm < tol


@njit(cache=True)
def _stationary_single(chi_h, chi_c, lam, gamma, g, kh, kc, nh, nc, seed, zero_seed, tol):
    """Stationary covariance at one counting point.

    Tries Newton from the warm seed first; on failure, continues along the
    straight path tau*(chi_h, chi_c, lam, gamma) from the zero-field steady
    state with adaptively refined steps.
    """
    xiph, ximh = _xi_pm(chi_h, nh)
    xipc, ximc = _xi_pm(chi_c, nc)
    y, ok = _newton(seed, g, kh, kc, nh, nc, gamma, lam, xiph, ximh, xipc, ximc, tol, 30)
    if ok:
        return y, True
    n_steps = 4
    while n_steps <= 512:
        y = zero_seed.copy()
        ok = True
        for istep in range(1, n_steps + 1):
            tau = istep / n_steps
            xiph, ximh = _xi_pm(tau * chi_h, nh)
            xipc, ximc = _xi_pm(tau * chi_c, nc)
            y, ok = _newton(y, g, kh, kc, nh, nc, tau * gamma, tau * lam,
                            xiph, ximh, xipc, ximc, tol, 30)
            if not ok:
                break
        if ok:
            return y, True
        n_steps *= 2
    return y, False


@njit(cache=True)
def stationary_grid(chi_h, chi_c, lam, gamma, g, kh, kc, nh, nc, zero_seed, tol):
    """Stationary covariances and CGF rates for arrays of counting points.

    Points are processed in order with warm starts from the previous
    solution.  Returns (y4s, rates, ok).
    """
    n = chi_h.shape[0]
    y4s = np.zeros((n, 4), np.complex128)
    rates = np.zeros(n, np.complex128)
    ok = np.zeros(n, np.bool_)
    seed = zero_seed.copy()
    for i in range(n):
        y, success = _stationary_single(chi_h[i], chi_c[i], lam[i], gamma,
                                        g, kh, kc, nh, nc, seed, zero_seed, tol)
        y4s[i] = y
        ok[i] = success
        if success:
            seed = y.copy()
            xiph, ximh = _xi_pm(chi_h[i], nh)
            xipc, ximc = _xi_pm(chi_c[i], nc)
            common = kc * xipc * y[0] - 0.5 * kc * ximc + kh * xiph * y[1] - 0.5 * kh * ximh
            rates[i] = common - 2.0j * lam[i] * g * y[2]
        else:
            rates[i] = complex(np.nan, np.nan)
    return y4s, rates, ok
