"""Gaussian phase-space flow of the counting-field master equation.

The Gaussian ansatz closes the Wigner-function equation of motion into five
coupled nonlinear complex ODEs for (sigma_c, sigma_h, s_ch, sigma_ch, logS).
This module integrates them (finite-time generating functions, long-time
slopes, and the gamma != 0 back-action regime where no closed form exists)
and solves their stationary point directly, which reproduces the long-time
CGF rate without time integration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._rk_tableau import STATUS_MAX_STEPS, STATUS_OK, STATUS_STEP_UNDERFLOW
from .cgf_analytic import CountingPoint
from .errors import ConvergenceError, IntegrationError
from .model import EngineParams, require_valid


@dataclass(frozen=True)
class GaussianWignerState:
    """The five dynamical quantities of the Gaussian ansatz plus elapsed time.

    At zero counting fields the covariances are real with sigma_alpha >= 1/2
    and sigma_ch = 0, and logS stays 0 for all times.
    """

    sigma_c: complex
    sigma_h: complex
    s_ch: complex
    sigma_ch: complex
    logS: complex
    t: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.sigma_c, self.sigma_h, self.s_ch, self.sigma_ch, self.logS],
                        dtype=np.complex128)

    @classmethod
    def from_vector(cls, y: np.ndarray, t: float) -> "GaussianWignerState":
        return cls(complex(y[0]), complex(y[1]), complex(y[2]), complex(y[3]),
                   complex(y[4]), t)


@dataclass(frozen=True)
class XiWeights:
    """Counting-field weights xi_+/- per bath; all vanish at zero fields."""

    xi_plus_h: complex
    xi_minus_h: complex
    xi_plus_c: complex
    xi_minus_c: complex


def xi_weights(chi_h, chi_c, params: EngineParams) -> XiWeights:
    def pm(chi, nb):
        p = (nb + 1.0) * (np.exp(1j * chi) - 1.0)
        m = nb * (np.exp(-1j * chi) - 1.0)
        return p + m, p - m

    ph, mh = pm(complex(chi_h), params.nb_h)
    pc, mc = pm(complex(chi_c), params.nb_c)
    return XiWeights(complex(ph), complex(mh), complex(pc), complex(mc))


@dataclass(frozen=True)
class SlopeInfo:
    """Diagnostics of a long-time slope extraction."""

    slope: complex
    slope_half_horizon: complex
    horizon: float
    defect: float
    n_steps: int


def _g0_seed(params: EngineParams) -> np.ndarray:
    # decoupled thermal modes; exact at g=0 and the Newton seed otherwise
    return np.array([params.nb_c + 0.5, params.nb_h + 0.5, 0.0, 0.0], dtype=np.complex128)


def _zero_field_covariances(params: EngineParams, tol: float = 1e-13) -> np.ndarray:
    zeros = np.zeros(1, dtype=np.complex128)
    y4, _, ok = kernels.stationary_grid(zeros, zeros, zeros, 0.0,
                                        params.g, params.kappa_h, params.kappa_c,
                                        params.nb_h, params.nb_c, _g0_seed(params), tol)
    if not ok[0]:
        raise ConvergenceError("zero-field steady-state Newton did not converge")
    return y4[0]


def _stationarity_residual(y4: np.ndarray, point: CountingPoint, params: EngineParams) -> float:
    xw = xi_weights(point.chi, 0.0, params)
    y5 = np.concatenate([y4, [0.0]]).astype(np.complex128)
    rhs = kernels.wigner_rhs(y5, params.g, params.kappa_h, params.kappa_c,
                             params.nb_h, params.nb_c, point.gamma, complex(point.lam),
                             xw.xi_plus_h, xw.xi_minus_h, xw.xi_plus_c, xw.xi_minus_c)
    return float(np.abs(rhs[:4]).max())


def steady_state(params: EngineParams, tol: float = 1e-13) -> GaussianWignerState:
    """Zero-counting-field steady state with logS = 0.

    Damped Newton seeded from the exact g=0 solution; the residual of the
    stationarity equations is verified below 1e-12.
    """
    require_valid(params)
    y4 = _zero_field_covariances(params, tol)
    res = _stationarity_residual(y4, CountingPoint(), params)
    if res > 1e-12:
        raise ConvergenceError(f"steady-state residual {res:.2e} exceeds 1e-12")
    return GaussianWignerState.from_vector(np.concatenate([y4, [0.0]]), 0.0)


def thermal_product_state(params: EngineParams) -> GaussianWignerState:
    """Uncorrelated thermal covariances (the g=0 steady state); logS = 0."""
    return GaussianWignerState(params.nb_c + 0.5, params.nb_h + 0.5, 0.0, 0.0, 0.0, 0.0)


def _integrate(y0: np.ndarray, point: CountingPoint, params: EngineParams,
               checkpoints: np.ndarray, tol: float):
    xw = xi_weights(point.chi, 0.0, params)
    scale = params.kappa_h + params.kappa_c + params.g * (4.0 + abs(point.lam) ** 2) ** 0.5
    h0 = 0.01 / scale
    Y, status, n_steps, t_reached, y_last = kernels.integrate_checkpoints(
        y0.astype(np.complex128), np.asarray(checkpoints, dtype=np.float64),
        params.g, params.kappa_h, params.kappa_c, params.nb_h, params.nb_c,
        float(point.gamma), complex(point.lam),
        xw.xi_plus_h, xw.xi_minus_h, xw.xi_plus_c, xw.xi_minus_c,
        tol, tol * 1e-2, h0, 2_000_000)
    if status == STATUS_STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t={t_reached:.6g} (stiffness or branch blowup)",
            last_state=GaussianWignerState.from_vector(y_last, t_reached),
            last_time=t_reached)
    if status == STATUS_MAX_STEPS:
        raise IntegrationError(
            f"step budget exhausted at t={t_reached:.6g}",
            last_state=GaussianWignerState.from_vector(y_last, t_reached),
            last_time=t_reached)
    assert status == STATUS_OK
    return Y, n_steps


def evolve(state: GaussianWignerState, point: CountingPoint, params: EngineParams,
           duration: float, tol: float = 1e-10) -> GaussianWignerState:
    """Propagate a Gaussian state for the given duration at one counting point.

    Local error per step is controlled at `tol` (relative); at zero counting
    fields the covariances stay at their steady values and logS stays at 0
    within this tolerance.
    """
    require_valid(params)
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if duration == 0:
        return state
    Y, _ = _integrate(state.as_vector(), point, params, np.array([duration]), tol)
    return GaussianWignerState.from_vector(Y[0], state.t + duration)


def sample_logS(point: CountingPoint, params: EngineParams, times,
                initial: GaussianWignerState | None = None,
                tol: float = 1e-10) -> np.ndarray:
    """logS(t) at the requested times, starting from `initial` (default: the
    zero-field steady state) at t=0."""
    require_valid(params)
    state0 = initial if initial is not None else steady_state(params)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    Y, _ = _integrate(state0.as_vector(), point, params, times, tol)
    return Y[:, 4]


def cgf_rate_numeric(point: CountingPoint, params: EngineParams,
                     horizon: float | None = None, tol: float = 1e-10,
                     full_output: bool = False):
    """Long-time CGF rate from the trajectory slope of logS.

    The slope is a least-squares fit over the final 10% of the horizon and is
    compared against the same estimate at half the horizon; disagreement
    beyond 10*tol (relative) raises, recommending a larger horizon.
    """
    require_valid(params)
    if horizon is None:
        horizon = 60.0 / min(params.kappa_h, params.kappa_c)
    state0 = steady_state(params)
    t_half = np.linspace(0.45 * horizon, 0.5 * horizon, 17)
    t_full = np.linspace(0.9 * horizon, horizon, 33)
    Y, n_steps = _integrate(state0.as_vector(), point, params,
                            np.concatenate([t_half, t_full]), tol)

    def fitted_slope(ts, ys):
        dt = ts - ts.mean()
        return (dt @ (ys - ys.mean())) / (dt @ dt)

    slope_half = complex(fitted_slope(t_half, Y[: len(t_half), 4]))
    slope = complex(fitted_slope(t_full, Y[len(t_half):, 4]))
    defect = abs(slope - slope_half)
    if defect > 10.0 * tol * (1.0 + abs(slope)):
        raise ConvergenceError(
            f"slope estimates at T and T/2 differ by {defect:.2e}; "
            f"increase the horizon (currently {horizon:g})")
    if full_output:
        return slope, SlopeInfo(slope, slope_half, horizon, defect, n_steps)
    return slope


def stationary_rate_grid(chi, lam, params: EngineParams, gamma: float = 0.0,
                         tol: float = 1e-13, return_mask: bool = False):
    """Long-time CGF rates from the stationary point of the covariance flow.

    Equivalent to the trajectory slope (the covariance flow is attracted to
    this fixed point) but solved directly by Newton continuation; this is the
    fast path for gamma != 0 grids.  chi and lam broadcast.
    """
    require_valid(params)
    chi_b, lam_b = np.broadcast_arrays(np.asarray(chi, dtype=complex),
                                       np.asarray(lam, dtype=complex))
    shape = chi_b.shape
    flat_chi = np.ascontiguousarray(chi_b.ravel())
    flat_lam = np.ascontiguousarray(lam_b.ravel())
    zeros = np.zeros_like(flat_chi)
    _, rates, ok = kernels.stationary_grid(flat_chi, zeros, flat_lam, float(gamma),
                                           params.g, params.kappa_h, params.kappa_c,
                                           params.nb_h, params.nb_c,
                                           _zero_field_covariances(params), tol)
    if return_mask:
        return rates.reshape(shape), ok.reshape(shape)
    if not ok.all():
        bad = np.nonzero(~ok)[0]
        raise ConvergenceError(
            f"stationary solve failed at {len(bad)} of {ok.size} counting points; "
            f"first failure at chi={flat_chi[bad[0]]}, lam={flat_lam[bad[0]]}")
    return rates.reshape(shape)


def cgf_rate_stationary(point: CountingPoint, params: EngineParams,
                        tol: float = 1e-13) -> complex:
    """Stationary-point CGF rate at a single counting point."""
    return complex(stationary_rate_grid(point.chi, point.lam, params,
                                        gamma=point.gamma, tol=tol).ravel()[0])
