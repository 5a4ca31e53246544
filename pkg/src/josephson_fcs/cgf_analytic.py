"""Closed-form long-time cumulant generating function (CGF) of the joint
photon/Cooper-pair transfer statistics, its limiting forms, and the affinity
symmetry behind the fluctuation theorem.

All rates are per unit time: ``cgf_rate`` returns S(chi, lambda)/t.  The
nested square roots are evaluated on the branch reached by analytic
continuation from (chi, lambda) = (0, 0), where the rate vanishes.  For real
counting fields the function Psi has non-positive real part, which pins both
root arguments to the right half-plane, so the principal branch *is* the
continued branch; complex arguments go through explicit path tracking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchTrackingError, SingularInputError
from .model import EngineParams, affinity, require_valid

_POLE_TOL = 1e-12
_MAX_PATH_STEPS = 1 << 14


@dataclass(frozen=True)
class CountingPoint:
    """A point in counting-field space.

    chi counts net hot-to-cold photon transfer (single-field long-time gauge,
    chi = chi_h - chi_c), lam counts Cooper pairs, gamma is the measurement
    back-action parameter.  chi and lam may be complex (symmetry tests,
    tilted inversion contours); distribution inversion uses real values.
    """

    chi: complex = 0.0
    lam: complex = 0.0
    gamma: float = 0.0


def _check_poles(lam) -> None:
    lam = np.asarray(lam, dtype=complex)
    if np.any(np.abs(lam - 2j) < _POLE_TOL) or np.any(np.abs(lam + 2j) < _POLE_TOL):
        raise SingularInputError("lambda too close to the poles at +/-2i")


def psi(chi, lam, params: EngineParams):
    """The jump-weight function Psi(chi, lambda); vanishes at the origin.

    First term: hot-to-cold transfers; second: cold-to-hot.  Accepts arrays.
    """
    _check_poles(lam)
    chi = np.asarray(chi, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    a = params.nb_h * (params.nb_c + 1.0)
    b = params.nb_c * (params.nb_h + 1.0)
    r = (1.0 - 0.5j * lam) / (1.0 + 0.5j * lam)
    return a * (np.exp(-1j * chi) * r - 1.0) + b * (np.exp(1j * chi) / r - 1.0)


def _g_lambda_sq(lam, g):
    return g * g * (4.0 + np.asarray(lam, dtype=complex) ** 2)


def _root_args(chi, lam, params: EngineParams):
    """Arguments of the inner and outer square roots of the closed form."""
    kh, kc = params.kappa_h, params.kappa_c
    gl2 = _g_lambda_sq(lam, params.g)
    a1 = (gl2 + kh * kc) ** 2 - 4.0 * gl2 * kh * kc * psi(chi, lam, params)
    return gl2, a1


def _principal_rate(chi, lam, params: EngineParams):
    """Principal-branch evaluation; correct whenever Re(Psi) <= 0 holds on the
    straight path from the origin (in particular for all real chi, lam)."""
    kh, kc = params.kappa_h, params.kappa_c
    gl2, a1 = _root_args(chi, lam, params)
    r1 = np.sqrt(a1)
    a2 = kh * kh + kc * kc - 2.0 * gl2 + 2.0 * r1
    return 0.5 * (kh + kc) - 0.5 * np.sqrt(a2)


def _segment_near_poles(lam) -> bool:
    # distance from the segment [0, lam] to the poles +/-2i
    lam = complex(lam)
    for pole in (2j, -2j):
        if lam == 0:
            d = abs(pole)
        else:
            t = np.clip((pole.real * lam.real + pole.imag * lam.imag) / abs(lam) ** 2, 0.0, 1.0)
            d = abs(pole - t * lam)
        if d < 1e-9:
            return True
    return False


def _tracked_rate(chi_targets, lam_targets, params: EngineParams, n_steps: int = 64):
    """CGF rate by analytic continuation along straight paths from the origin.

    Vectorized over flat target arrays.  Each path step must rotate both root
    arguments by less than pi/2; otherwise the number of steps is doubled.
    """
    chi_t = np.atleast_1d(np.asarray(chi_targets, dtype=complex))
    lam_t = np.atleast_1d(np.asarray(lam_targets, dtype=complex))
    chi_t, lam_t = np.broadcast_arrays(chi_t, lam_t)
    _check_poles(lam_t)
    for lam in np.unique(lam_t):
        if _segment_near_poles(lam):
            raise SingularInputError(
                f"continuation path to lambda={lam} passes too close to the poles +/-2i")
    kh, kc = params.kappa_h, params.kappa_c

    while n_steps <= _MAX_PATH_STEPS:
        taus = np.linspace(0.0, 1.0, n_steps + 1)
        r1 = np.full(chi_t.shape, params.g**2 * 4.0 + kh * kc, dtype=complex)
        r2 = np.full(chi_t.shape, kh + kc, dtype=complex)
        _, a1_prev = _root_args(0.0, 0.0, params)
        a1_prev = np.broadcast_to(a1_prev, chi_t.shape).astype(complex)
        a2_prev = np.full(chi_t.shape, (kh + kc) ** 2, dtype=complex)
        ok = True
        for tau in taus[1:]:
            gl2, a1 = _root_args(tau * chi_t, tau * lam_t, params)
            if np.any(np.abs(a1) < 1e-300) or np.any(np.abs(a1_prev) < 1e-300):
                ok = False
                break
            ratio1 = a1 / a1_prev
            if np.max(np.abs(np.angle(ratio1))) >= 0.5 * np.pi:
                ok = False
                break
            r1 = r1 * np.sqrt(ratio1)
            a2 = kh * kh + kc * kc - 2.0 * gl2 + 2.0 * r1
            if np.any(np.abs(a2) < 1e-300) or np.any(np.abs(a2_prev) < 1e-300):
                ok = False
                break
            ratio2 = a2 / a2_prev
            if np.max(np.abs(np.angle(ratio2))) >= 0.5 * np.pi:
                ok = False
                break
            r2 = r2 * np.sqrt(ratio2)
            a1_prev, a2_prev = a1, a2
        if ok:
            return 0.5 * (kh + kc) - 0.5 * r2
        n_steps *= 2
    raise BranchTrackingError(
        "root-argument rotation stayed >= pi/2 per step after refining the "
        f"continuation path to {_MAX_PATH_STEPS} steps")


def _is_real(x) -> bool:
    return np.all(np.abs(np.imag(np.asarray(x, dtype=complex))) == 0.0)


def cgf_rate_grid(chi, lam, params: EngineParams):
    """Vectorized S(chi, lambda)/t.  Real arrays take the principal fast path."""
    if _is_real(chi) and _is_real(lam):
        return _principal_rate(np.asarray(chi, dtype=complex),
                               np.asarray(lam, dtype=complex), params)
    return _tracked_rate(chi, lam, params)


def cgf_rate(point: CountingPoint, params: EngineParams) -> complex:
    """Long-time CGF per unit time at one counting point (gamma must be 0).

    The branch is the analytic continuation from the origin, where the rate
    vanishes identically.
    """
    require_valid(params)
    if point.gamma != 0.0:
        raise ValueError("the closed form holds at gamma=0; use wigner_flow for gamma != 0")
    if _is_real(point.chi) and _is_real(point.lam):
        return complex(_principal_rate(complex(point.chi), complex(point.lam), params))
    return complex(_tracked_rate(point.chi, point.lam, params)[0])


def plateau_rate(chi, params: EngineParams):
    """Limit of S(chi, lambda)/t as |lambda| -> infinity (the work-integrand
    plateau).  Vectorized in chi; real chi uses the principal branch."""
    chi_arr = np.asarray(chi, dtype=complex)
    a = params.nb_h * (params.nb_c + 1.0)
    b = params.nb_c * (params.nb_h + 1.0)
    kh, kc = params.kappa_h, params.kappa_c
    psi_inf = a * (-np.exp(-1j * chi_arr) - 1.0) + b * (-np.exp(1j * chi_arr) - 1.0)
    arg = (kh + kc) ** 2 - 4.0 * kh * kc * psi_inf
    if _is_real(chi):
        return 0.5 * (kh + kc) - 0.5 * np.sqrt(arg)
    # continuation in chi from 0 for complex contours
    flat = chi_arr.ravel()
    n_steps = 64
    while n_steps <= _MAX_PATH_STEPS:
        # at chi=0: psi_inf = -2(a+b), so arg = (kh+kc)^2 + 8 kh kc (a+b) > 0
        arg_prev = np.full(flat.shape, (kh + kc) ** 2 + 8.0 * kh * kc * (a + b), complex)
        root = np.sqrt(arg_prev)
        ok = True
        for tau in np.linspace(0.0, 1.0, n_steps + 1)[1:]:
            pinf = (a * (-np.exp(-1j * tau * flat) - 1.0)
                    + b * (-np.exp(1j * tau * flat) - 1.0))
            arg_now = (kh + kc) ** 2 - 4.0 * kh * kc * pinf
            ratio = arg_now / arg_prev
            if np.max(np.abs(np.angle(ratio))) >= 0.5 * np.pi or np.any(np.abs(arg_now) < 1e-300):
                ok = False
                break
            root = root * np.sqrt(ratio)
            arg_prev = arg_now
        if ok:
            return (0.5 * (kh + kc) - 0.5 * root).reshape(chi_arr.shape)
        n_steps *= 2
    raise BranchTrackingError("plateau-root continuation failed")


def cgf_rate_limit(point: CountingPoint, params: EngineParams, regime: str) -> complex:
    """Closed-form limiting CGF rates.

    regime="small_g":      g << kappa_h, kappa_c  (sequential-jump form)
    regime="small_kappa":  kappa_h, kappa_c << g  (single-resonator-like form)
    """
    require_valid(params)
    kh, kc = params.kappa_h, params.kappa_c
    p = psi(point.chi, point.lam, params)
    if regime == "small_g":
        return complex(_g_lambda_sq(point.lam, params.g) / (kh + kc) * p)
    if regime == "small_kappa":
        return complex(0.5 * (kh + kc) * (1.0 - np.sqrt(1.0 - 4.0 * kh * kc * p / (kh + kc) ** 2)))
    raise ValueError(f"unknown regime {regime!r}; expected 'small_g' or 'small_kappa'")


def symmetry_defect(point: CountingPoint, params: EngineParams) -> float:
    """Defect of the affinity symmetry that generates the joint fluctuation
    theorem: |S(chi,lam) - S(-chi - iA, -lam)|/t with A the affinity.

    This mirrored-argument form is the one that vanishes; see
    symmetry_defect_variants for the non-vanishing sign/mirror alternatives.
    """
    A = affinity(params)
    s0 = cgf_rate(point, params)
    s1 = cgf_rate(CountingPoint(-point.chi - 1j * A, -point.lam), params)
    return abs(s0 - s1)


def symmetry_defect_variants(point: CountingPoint, params: EngineParams) -> dict[str, float]:
    """All four shift-sign/mirror combinations of the symmetry defect."""
    A = affinity(params)
    s0 = cgf_rate(point, params)

    def d(chi2):
        return abs(s0 - cgf_rate(CountingPoint(chi2, -point.lam), params))

    return {
        "shift_minus": d(point.chi - 1j * A),
        "shift_plus": d(point.chi + 1j * A),
        "mirrored_shift_minus": d(-point.chi - 1j * A),
        "mirrored_shift_plus": d(-point.chi + 1j * A),
    }
