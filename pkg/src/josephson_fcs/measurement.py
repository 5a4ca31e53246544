"""Detector model: weak-measurement convolution, the cumulant-noise shift,
and the general finite-strength path mixing back-action (gamma != 0) branches
over the detector's momentum marginal.

The detector has no internal dynamics; its Gaussian Wigner function
contributes position noise of width sigma = sigma_x / s (in work units) and a
back-action spread gamma ~ s * sigma_p.  Under the purity constraint
sigma_x * sigma_p = 1/2 the coupling s cancels identically and sigma is the
only free parameter; the weak limit s -> 0 therefore requires a fixed
(non-pure) momentum width.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, replace

import numpy as np

from . import inversion as _inv
from .cumulants import CumulantTable, CumulantEntry
from .errors import ConvergenceError, GridError, NumericsError
from .inversion import JointQPD
from .model import EngineParams, require_valid
from .providers import analytic_provider, ode_provider


@dataclass(frozen=True)
class DetectorParams:
    """Gaussian detector: sigma is the measurement-noise width in work units.

    purity=True enforces sigma_x * sigma_p = 1/2 (minimum-uncertainty
    detector); otherwise sigma_p must be given explicitly.
    """

    sigma: float
    s: float = 1.0
    purity: bool = True
    sigma_p: float | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.s <= 0:
            raise ValueError("s must be > 0")
        if not self.purity and self.sigma_p is None:
            raise ValueError("a non-pure detector needs an explicit sigma_p")

    @property
    def sigma_x(self) -> float:
        return self.sigma * self.s

    @property
    def momentum_width(self) -> float:
        if self.purity:
            return 1.0 / (2.0 * self.sigma_x)
        return float(self.sigma_p)

    @property
    def gamma_width(self) -> float:
        """Width of the back-action parameter gamma = s * pi."""
        return self.s * self.momentum_width


def _gaussian_kernel(spacing: float, sigma: float) -> np.ndarray:
    half = int(np.ceil(8.0 * sigma / spacing))
    x = spacing * np.arange(-half, half + 1)
    k = np.exp(-x**2 / (2.0 * sigma**2))
    return k / (k.sum() * spacing)


def weak_measured_joint(qpd: JointQPD, detector: DetectorParams) -> JointQPD:
    """Measured joint distribution in the weak limit: Gaussian convolution of
    the quasi-probability along w only (heat is counted exactly).

    Imprecision renders the output non-negative up to quadrature tolerance
    while preserving the oscillatory structure and the off-diagonal
    (first-law-violating) weight.
    """
    h = qpd.w_spacing
    if h > detector.sigma / 4.0:
        raise GridError(
            f"w-grid spacing {h} under-resolves the measurement kernel "
            f"(sigma = {detector.sigma}); need spacing <= sigma/4")
    kernel = _gaussian_kernel(h, detector.sigma)
    values = np.empty_like(qpd.values)
    for i in range(qpd.values.shape[0]):
        values[i] = np.convolve(qpd.values[i], kernel, mode="same") * h
    meta = dict(qpd.meta, measurement="weak-limit convolution",
                sigma=detector.sigma)
    return JointQPD(qpd.q_values.copy(), qpd.w_values.copy(), values,
                    qpd.imag_residue, qpd.tail_atom, meta)


def measured_cumulant_shift(table: CumulantTable, detector: DetectorParams) -> CumulantTable:
    """Weak-measurement cumulant map: only the pure second work cumulant
    shifts, by sigma^2; every other entry is unchanged."""
    entries = dict(table.entries)
    e = entries.get((0, 2))
    if e is None:
        raise KeyError("table has no (0, 2) entry to shift")
    entries[(0, 2)] = CumulantEntry(e.value + detector.sigma**2, e.uncertainty,
                                    e.provenance, e.imag_residue, e.flags,
                                    note="shifted by detector noise sigma^2")
    return CumulantTable(params=table.params, entries=entries,
                         delta_entries=dict(table.delta_entries),
                         meta=dict(table.meta, measured=True, sigma=detector.sigma))


def general_measured_joint(params: EngineParams, detector: DetectorParams, t: float,
                           q_range: tuple[int, int] | None = None,
                           w_grid: np.ndarray | None = None, *,
                           n_gamma: int = 21, gamma_grid: np.ndarray | None = None,
                           max_workers: int | None = None) -> JointQPD:
    """Measured joint distribution at finite coupling: back-action branches
    P_gamma mixed over the detector's Gaussian momentum marginal.

    Each gamma node is an independent covariance-flow (stationary) inversion;
    the position-noise convolution is applied spectrally inside the
    inversion, so the reported values are exactly the sigma-convolved
    density at the grid's resolution.  Nodes are Gauss-Hermite by default.
    """
    require_valid(params)
    if q_range is None:
        q_range = _inv.default_q_range(params, t)
    if w_grid is None:
        w_grid = _inv.default_w_grid(params, t)
    w_grid = np.asarray(w_grid, float)
    h = float(w_grid[1] - w_grid[0])
    if h > detector.sigma / 4.0:
        raise GridError(
            f"w-grid spacing {h} under-resolves the measurement kernel "
            f"(sigma = {detector.sigma}); need spacing <= sigma/4")
    eps_total = float(np.hypot(detector.sigma, h))
    gw = detector.gamma_width

    if gamma_grid is not None:
        gammas = np.asarray(gamma_grid, float)
        dens = np.exp(-gammas**2 / (2.0 * gw**2))
        weights = dens / dens.sum()
    elif gw < 1e-9:
        gammas = np.array([0.0])
        weights = np.array([1.0])
    else:
        nodes, wts = np.polynomial.hermite.hermgauss(n_gamma)
        gammas = np.sqrt(2.0) * gw * nodes
        weights = wts / np.sqrt(np.pi)

    def one_node(gamma: float) -> np.ndarray:
        provider = analytic_provider(params) if gamma == 0.0 else \
            ode_provider(params, gamma=float(gamma))
        part = _inv.joint(params, t, q_range, w_grid, provider, epsilon=eps_total)
        return part.values

    results: list[np.ndarray | None] = [None] * len(gammas)
    failures: list[str] = []
    if max_workers and max_workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
            futs = {pool.submit(one_node, g): i for i, g in enumerate(gammas)}
            for fut, i in futs.items():
                try:
                    results[i] = fut.result()
                except (ConvergenceError, NumericsError) as exc:
                    failures.append(f"gamma={gammas[i]:.4g}: {exc}")
    else:
        for i, g in enumerate(gammas):
            try:
                results[i] = one_node(g)
            except (ConvergenceError, NumericsError) as exc:
                failures.append(f"gamma={g:.4g}: {exc}")
    if failures:
        raise NumericsError("back-action nodes failed: " + " | ".join(failures))

    # fixed-order reduction keeps the result independent of scheduling
    values = np.zeros((q_range[1] - q_range[0] + 1, len(w_grid)))
    for wgt, vals in zip(weights, results):
        values += wgt * vals

    q_values = np.arange(q_range[0], q_range[1] + 1)
    meta = {"measurement": "general (gamma-mixed)", "sigma": detector.sigma,
            "gamma_width": gw, "n_gamma": len(gammas), "t": t,
            "backend": "ode", "params": params,
            "convention": "q is a probability mass index, w a density coordinate"}
    residue = 0.0  # rows realified inside each node's inversion
    return JointQPD(q_values, w_grid, values, residue, None, meta)
