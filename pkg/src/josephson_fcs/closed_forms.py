"""Closed-form limiting distributions: the bi-directional Poissonian of the
weak-coupling bottleneck, the Gaussian work density, and the cubic-CGF Airy
approximation to P(Delta).

The Airy prefactor follows the standard convention Ai(x) =
(1/2pi) Integral exp(i(t^3/3 + x t)) dt; re-deriving the approximation from
the third-cumulant truncation shows this is the normalization under which
the stated form integrates to one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import airy, ive

from .model import EngineParams, require_valid


@dataclass(frozen=True)
class PoissonRates:
    """Directed photon-transfer rates in the g << kappa bottleneck limit."""

    gamma_ch: float   # hot -> cold
    gamma_hc: float   # cold -> hot

    def detailed_balance_log_ratio(self) -> float:
        return float(np.log(self.gamma_ch / self.gamma_hc))


def poisson_rates(params: EngineParams) -> PoissonRates:
    """Directed rates 4 g^2 n_B^from (n_B^to + 1) / (kappa_c + kappa_h).

    Their log-ratio equals the affinity (detailed balance).
    """
    require_valid(params)
    pref = 4.0 * params.g**2 / (params.kappa_c + params.kappa_h)
    return PoissonRates(gamma_ch=pref * params.nb_h * (params.nb_c + 1.0),
                        gamma_hc=pref * params.nb_c * (params.nb_h + 1.0))


def bidirectional_poisson(q, rates: PoissonRates, t: float):
    """Net-transfer distribution of two competing Poisson processes.

    Evaluated in log space via the exponentially scaled Bessel function, so
    large rate-time products do not overflow.  Vectorized in q.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    q = np.asarray(q)
    x = 2.0 * t * np.sqrt(rates.gamma_ch * rates.gamma_hc)
    log_p = (-(rates.gamma_ch + rates.gamma_hc) * t
             + 0.5 * q * np.log(rates.gamma_ch / rates.gamma_hc)
             + np.log(ive(np.abs(q), x)) + x)
    return np.exp(log_p)


def gaussian_work(w, mean: float, variance: float):
    """Normal density; the work marginal in the g << kappa limit."""
    if variance <= 0:
        raise ValueError("variance must be > 0")
    w = np.asarray(w, float)
    return np.exp(-((w - mean) ** 2) / (2.0 * variance)) / np.sqrt(2.0 * np.pi * variance)


def airy_approx(delta, mean_q: float):
    """Third-cumulant (cubic-CGF) approximation to P(Delta).

    (4/|<<q>>|)^(1/3) Ai(Delta / (<<q>>/4)^(1/3)) with the standard Airy
    function; mirror-symmetric in Delta under sign reversal of the mean.
    """
    if mean_q == 0:
        raise ValueError("mean_q must be nonzero")
    delta = np.asarray(delta, float)
    scale = (4.0 / abs(mean_q)) ** (1.0 / 3.0)
    ai = airy(np.sign(mean_q) * delta * scale)[0]
    return scale * ai
