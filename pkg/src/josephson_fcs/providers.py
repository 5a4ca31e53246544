"""Uniform CGF-rate providers over the three backends.

A provider is a callable (chi, lam) -> S/t (complex, broadcasting over
arrays) so that inversions and cumulant extraction can consume the analytic
closed form, the covariance-flow stationary solve, or the Fock-space oracle
interchangeably.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import cgf_analytic, fock_oracle, wigner_flow
from .model import EngineParams


@dataclass(frozen=True)
class CGFProvider:
    rate: Callable = field(repr=False)
    label: str
    params: EngineParams
    gamma: float = 0.0

    def __call__(self, chi, lam):
        return self.rate(chi, lam)


def analytic_provider(params: EngineParams) -> CGFProvider:
    def rate(chi, lam):
        return cgf_analytic.cgf_rate_grid(chi, lam, params)

    return CGFProvider(rate, "analytic", params)


def ode_provider(params: EngineParams, gamma: float = 0.0, tol: float = 1e-13) -> CGFProvider:
    """Stationary-point solve of the Gaussian covariance flow (supports gamma != 0)."""

    def rate(chi, lam):
        return wigner_flow.stationary_rate_grid(chi, lam, params, gamma=gamma, tol=tol)

    return CGFProvider(rate, "ode", params, gamma=gamma)


def fock_provider(params: EngineParams, n_max: int = 12, gamma: float = 0.0,
                  tol: float = 1e-12) -> CGFProvider:
    """Dominant eigenvalue of the truncated Liouvillian, point by point (slow)."""

    def rate(chi, lam):
        chi_b, lam_b = np.broadcast_arrays(np.asarray(chi, complex), np.asarray(lam, complex))
        out = np.empty(chi_b.shape, complex)
        v0 = fock_oracle.thermal_product_vec(params, n_max)
        for idx in np.ndindex(chi_b.shape):
            point = cgf_analytic.CountingPoint(chi_b[idx], lam_b[idx], gamma)
            liou = fock_oracle.build_liouvillian(params, point, n_max=n_max)
            out[idx] = fock_oracle.dominant_eigenvalue(liou, tol=tol, v0=v0)
        return out

    return CGFProvider(rate, "fock", params, gamma=gamma)


def make_provider(backend: str, params: EngineParams, *, n_max: int = 12,
                  gamma: float = 0.0) -> CGFProvider:
    if backend == "analytic":
        if gamma != 0.0:
            raise ValueError("the analytic backend is derived at gamma=0")
        return analytic_provider(params)
    if backend == "ode":
        return ode_provider(params, gamma=gamma)
    if backend == "fock":
        return fock_provider(params, n_max=n_max, gamma=gamma)
    raise ValueError(f"unknown backend {backend!r}; expected analytic, ode or fock")
