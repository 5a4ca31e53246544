"""Fourier inversion of counting-field CGFs into distributions.

The photon index q lives on the periodic chi-domain [0, 2pi), so the
chi-integral is an N-point discrete transform (exact up to aliasing, which is
monitored as boundary mass).  The Cooper-pair variable w needs the full real
lambda-line, where exp(S) does not decay to zero: it approaches a
chi-dependent plateau as |lambda| -> infinity.  The plateau constant is
subtracted and re-added as an explicit atom at w = 0 (one grid cell wide),
and the remainder is integrated on a uniform lambda grid extended panel by
panel (width 2pi) until new panels stop contributing.  Pointwise integrand
magnitude is NOT a usable stopping rule here: along the Delta line and near
chi = pi the integrand magnitude returns to O(1) in recurring bumps whose
contributions are killed only by intra-bump phase oscillation, which the
panel rule integrates through.

Uniform lambda sampling makes the quadrature a Poisson summation: errors are
aliased images a period 2pi/dl away in w, so dl is chosen from the output
span.  Exponentially tilted chi-contours (chi -> chi - i s) provide uniform
relative accuracy deep in the q-tails for fluctuation-theorem tests; they are
evaluated by branch continuation along the shifted contour with a closure
check around the full period.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import cumulants as _cum
from .cgf_analytic import plateau_rate, _root_args
from .errors import (BranchTrackingError, GridError, LongTimeAssumptionError,
                     QuadratureError)
from .model import EngineParams, require_valid
from .providers import CGFProvider, analytic_provider

RESIDUE_TOL = 1e-8
ATOM_REPORT_THRESHOLD = 1e-12
PLATEAU_WEIGHT_LIMIT = 1e-6
ALIAS_MASS_LIMIT = 1e-8
_PANEL_TOL = 1e-12
_MAX_PANELS = 128
_PANEL_TOL_DELTA = 1e-13
_MAX_PANELS_DELTA = 256


# ---------------------------------------------------------------------------
# output containers

def _meta_lines(meta: dict) -> list[str]:
    return [f"# {key} = {meta[key]}" for key in sorted(meta)]


@dataclass
class IntegerDistribution:
    """Probability masses over integer photon numbers."""

    q_values: np.ndarray
    probabilities: np.ndarray
    imag_residue: float
    meta: dict = field(default_factory=dict)

    def normalization(self) -> float:
        return float(self.probabilities.sum())

    def mean(self) -> float:
        return float((self.q_values * self.probabilities).sum())

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(_meta_lines(self.meta)) + "\n")
            fh.write("q,probability\n")
            for q, p in zip(self.q_values, self.probabilities):
                fh.write(f"{int(q)},{p:.17g}\n")


@dataclass
class RealDensity:
    """Density over a uniform real grid (w or Delta)."""

    grid: np.ndarray
    values: np.ndarray
    imag_residue: float
    tail_atom: float | None = None
    meta: dict = field(default_factory=dict)
    column: str = "w"

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def normalization(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def moment(self, k: int) -> float:
        return float(np.trapezoid(self.grid**k * self.values, self.grid))

    def central_moment(self, k: int) -> float:
        mu = self.moment(1) / self.normalization()
        return float(np.trapezoid((self.grid - mu) ** k * self.values, self.grid))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(_meta_lines(self.meta)) + "\n")
            fh.write(f"{self.column},density\n")
            for x, v in zip(self.grid, self.values):
                fh.write(f"{x:.12g},{v:.17g}\n")


@dataclass
class DeltaDistribution(RealDensity):
    column: str = "delta"


@dataclass
class JointQPD:
    """Joint quasi-probability: mass in integer q, density in w.

    Values may be negative; nothing is ever clipped.  tail_atom records the
    total absolute weight of the w = 0 plateau atom (spread over one grid
    cell when added).
    """

    q_values: np.ndarray
    w_values: np.ndarray
    values: np.ndarray
    imag_residue: float
    tail_atom: float | None
    meta: dict = field(default_factory=dict)

    @property
    def w_spacing(self) -> float:
        return float(self.w_values[1] - self.w_values[0])

    def normalization(self) -> float:
        return float(np.trapezoid(self.values, self.w_values, axis=1).sum())

    def min_value(self) -> float:
        return float(self.values.min())

    def marginal_q(self) -> IntegerDistribution:
        masses = np.trapezoid(self.values, self.w_values, axis=1)
        return IntegerDistribution(self.q_values.copy(), masses, self.imag_residue,
                                   dict(self.meta, derived="marginalized from joint"))

    def marginal_w(self) -> RealDensity:
        return RealDensity(self.w_values.copy(), self.values.sum(axis=0),
                           self.imag_residue, self.tail_atom,
                           dict(self.meta, derived="marginalized from joint"))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(_meta_lines(self.meta)) + "\n")
            fh.write("q,w,value\n")
            for i, q in enumerate(self.q_values):
                for j, w in enumerate(self.w_values):
                    fh.write(f"{int(q)},{w:.12g},{self.values[i, j]:.17g}\n")

    def to_json(self, path) -> None:
        payload = {
            "meta": {k: str(v) for k, v in self.meta.items()},
            "q_values": [int(q) for q in self.q_values],
            "w_grid": {"start": float(self.w_values[0]), "spacing": self.w_spacing,
                       "count": int(len(self.w_values))},
            "imag_residue": self.imag_residue,
            "tail_atom": self.tail_atom,
            "values": self.values.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)


def offdiagonal_mass(qpd: JointQPD, margin: float = 1.0) -> float:
    """Total absolute mass at |w - q| > margin (first-law violation weight)."""
    mask = np.abs(qpd.w_values[None, :] - qpd.q_values[:, None]) > margin
    return float(np.trapezoid(np.abs(qpd.values) * mask, qpd.w_values, axis=1).sum())


# ---------------------------------------------------------------------------
# grid defaults

def _scales(params: EngineParams, t: float) -> tuple[float, float]:
    mu = _cum.mean_rate(params) * t
    sigma = np.sqrt(max(_cum.variance_rate(params) * t, 1e-12))
    return mu, sigma


def default_q_range(params: EngineParams, t: float, n_sigma: float = 8.0) -> tuple[int, int]:
    mu, sigma = _scales(params, t)
    return int(np.floor(mu - n_sigma * sigma)), int(np.ceil(mu + n_sigma * sigma))


def default_w_grid(params: EngineParams, t: float, n_sigma: float = 8.0,
                   spacing: float = 0.05) -> np.ndarray:
    mu, sigma = _scales(params, t)
    lo = np.floor((mu - n_sigma * sigma) / spacing) * spacing
    n = int(np.ceil(2 * n_sigma * sigma / spacing)) + 1
    return lo + spacing * np.arange(n)


def default_delta_grid(params: EngineParams, t: float,
                       spacing: float = 0.02) -> np.ndarray:
    """Delta grid spanning both the oscillatory body and the plateau comb.

    The large-|lambda| plateau of exp(S) maps onto a sign-alternating comb of
    near-atoms centered at Delta ~ -t*(a-b)*kh*kc/(kh+kc), with a and b the
    directed jump weights; its net mass cancels, but moments computed from
    the grid need it covered.
    """
    a = params.nb_h * (params.nb_c + 1.0)
    b = params.nb_c * (params.nb_h + 1.0)
    kt = params.kappa_h * params.kappa_c / (params.kappa_h + params.kappa_c)
    center = t * kt * (a - b)
    width = np.sqrt(max(t * kt * (a + b), 1.0))
    lo = min(-24.0, -(center + 7.0 * width + 8.0))
    hi = max(24.0, -(center - 7.0 * width - 8.0))
    lo = np.floor(lo / spacing) * spacing
    n = int(np.ceil((hi - lo) / spacing)) + 1
    return lo + spacing * np.arange(n)


def _next_pow2(n: int) -> int:
    return 1 << max(8, int(np.ceil(np.log2(max(n, 2)))))


# ---------------------------------------------------------------------------
# shifted-contour evaluation (analytic provider only)

def _shifted_contour_rates(x_nodes: np.ndarray, lam: np.ndarray, tilt: float,
                           params: EngineParams) -> np.ndarray:
    """S/t on chi = x - i*tilt for the full periodic x grid; lam real.

    Branch continuation runs first down the imaginary axis 0 -> -i*tilt
    (vectorized over lam), then along the x grid, inserting substeps when a
    root argument rotates too fast.  A final step back to x = 2pi must
    reproduce the x = 0 values (closure), otherwise the shift is rejected.
    """
    kh, kc = params.kappa_h, params.kappa_c
    lam = np.asarray(lam, dtype=complex)

    def root_args_at(chi):
        gl2, a1 = _root_args(chi, lam, params)
        return gl2, a1

    # start at chi = 0 (principal branch, real lam)
    gl2, a1 = root_args_at(np.zeros((), complex))
    r1 = np.sqrt(a1)
    a2 = kh * kh + kc * kc - 2.0 * gl2 + 2.0 * r1
    r2 = np.sqrt(a2)
    a1_prev, a2_prev = a1, a2

    def advance(chi_new, r1, r2, a1_prev, a2_prev):
        gl2, a1 = root_args_at(chi_new)
        ratio1 = a1 / a1_prev
        if np.max(np.abs(np.angle(ratio1))) >= 0.5 * np.pi:
            return None
        r1 = r1 * np.sqrt(ratio1)
        a2 = kh * kh + kc * kc - 2.0 * gl2 + 2.0 * r1
        ratio2 = a2 / a2_prev
        if np.max(np.abs(np.angle(ratio2))) >= 0.5 * np.pi:
            return None
        r2 = r2 * np.sqrt(ratio2)
        return r1, r2, a1, a2

    def advance_adaptive(chi_old, chi_new, r1, r2, a1_prev, a2_prev):
        n_sub = 1
        while n_sub <= 1024:
            state = (r1, r2, a1_prev, a2_prev)
            ok = True
            for k in range(1, n_sub + 1):
                chi_k = chi_old + (chi_new - chi_old) * k / n_sub
                res = advance(chi_k, *state)
                if res is None:
                    ok = False
                    break
                state = res
            if ok:
                return state
            n_sub *= 2
        raise BranchTrackingError(
            f"contour continuation stalled between chi={chi_old} and chi={chi_new}")

    # phase 1: descend to -i*tilt
    r1, r2, a1_prev, a2_prev = advance_adaptive(0.0, -1j * tilt, r1, r2, a1_prev, a2_prev)
    start_r2 = np.array(r2, copy=True)

    out = np.empty((len(x_nodes),) + lam.shape, dtype=complex)
    chi_prev = -1j * tilt
    for j, x in enumerate(x_nodes):
        chi_new = x - 1j * tilt
        if j > 0 or x != 0.0:
            r1, r2, a1_prev, a2_prev = advance_adaptive(chi_prev, chi_new, r1, r2,
                                                        a1_prev, a2_prev)
            chi_prev = chi_new
        out[j] = 0.5 * (kh + kc) - 0.5 * r2

    # closure check around the period
    r1c, r2c, _, _ = advance_adaptive(chi_prev, 2.0 * np.pi - 1j * tilt, r1, r2,
                                      a1_prev, a2_prev)
    defect = np.max(np.abs(r2c - start_r2)) / (1.0 + np.max(np.abs(start_r2)))
    if defect > 1e-9:
        raise BranchTrackingError(
            f"shifted contour is not single-valued (closure defect {defect:.2e}); "
            f"tilt {tilt} crosses a branch structure")
    return out


def _shifted_plateau(x_nodes: np.ndarray, tilt: float, params: EngineParams) -> np.ndarray:
    """Plateau rate on the shifted contour, continued along the same path."""
    if tilt == 0.0:
        return plateau_rate(x_nodes, params)
    kh, kc = params.kappa_h, params.kappa_c
    a = params.nb_h * (params.nb_c + 1.0)
    b = params.nb_c * (params.nb_h + 1.0)

    def arg_at(chi):
        pinf = a * (-np.exp(-1j * chi) - 1.0) + b * (-np.exp(1j * chi) - 1.0)
        return (kh + kc) ** 2 - 4.0 * kh * kc * pinf

    arg_prev = arg_at(0.0)
    root = np.sqrt(arg_prev)

    def advance_adaptive(chi_old, chi_new, root, arg_prev):
        n_sub = 1
        while n_sub <= 1024:
            rr, ap = root, arg_prev
            ok = True
            for k in range(1, n_sub + 1):
                chi_k = chi_old + (chi_new - chi_old) * k / n_sub
                an = arg_at(chi_k)
                ratio = an / ap
                if np.abs(np.angle(ratio)) >= 0.5 * np.pi:
                    ok = False
                    break
                rr = rr * np.sqrt(ratio)
                ap = an
            if ok:
                return rr, ap
            n_sub *= 2
        raise BranchTrackingError("plateau continuation stalled on the shifted contour")

    root, arg_prev = advance_adaptive(0.0, -1j * tilt, root, arg_prev)
    root0 = root
    out = np.empty(len(x_nodes), dtype=complex)
    chi_prev = -1j * tilt
    for j, x in enumerate(x_nodes):
        chi_new = x - 1j * tilt
        if j > 0 or x != 0.0:
            root, arg_prev = advance_adaptive(chi_prev, chi_new, root, arg_prev)
            chi_prev = chi_new
        out[j] = 0.5 * (kh + kc) - 0.5 * root
    root_c, _ = advance_adaptive(chi_prev, 2.0 * np.pi - 1j * tilt, root, arg_prev)
    if abs(root_c - root0) > 1e-9 * (1.0 + abs(root0)):
        raise BranchTrackingError("plateau root not single-valued on the shifted contour")
    return out


# ---------------------------------------------------------------------------
# lambda-panel engine

def _lambda_engine(t_block_fn, n_rows: int, out_grid: np.ndarray, epsilon: float,
                   tol_panel: float, max_panels: int, label: str,
                   dl_cap: float = 0.02, pad: float = 64.0):
    """(1/2pi) * Integral T(lambda) K_eps(lambda) e^{i lambda w} dlambda.

    K_eps = exp(-eps^2 lambda^2 / 2) is the Fourier kernel of a Gaussian of
    width eps: the result is the exact eps-smoothed density sampled on
    out_grid.  This matched-resolution apodization is what makes the integral
    absolutely convergent: exp(S) approaches a non-decaying plateau at large
    |lambda| (a delta atom in w, rendered as its one-cell-wide Gaussian), and
    the plateau's phase relaxes only like 1/lambda, which no bare quadrature
    could truncate.

    t_block_fn(lam_nodes) -> (n_rows, n_nodes) complex; both lambda signs are
    evaluated explicitly so the imaginary residue is an honest reality check.
    The lambda grid is commensurate with out_grid (dl * h = 2pi / M), so the
    final transform is an exact wrapped FFT; panels of width 2pi are added
    until two consecutive panels contribute below tol_panel of the running
    scale at probe outputs.
    """
    h = float(out_grid[1] - out_grid[0])
    w_span = float(out_grid[-1] - out_grid[0])
    M = _next_pow2(int(np.ceil(max((w_span + pad) / h, 2.0 * np.pi / (dl_cap * h)))))
    dl = 2.0 * np.pi / (M * h)
    n_per = int(round(2.0 * np.pi / dl))
    n_w = len(out_grid)
    probe_idx = np.unique(np.linspace(0, n_w - 1, 16).astype(int))
    w0 = float(out_grid[0])

    Z = np.zeros((n_rows, M), dtype=complex)
    probe_acc = np.zeros((n_rows, len(probe_idx)), dtype=complex)
    scale = 0.0
    quiet = 0
    panels_used = 0
    tail = 0.0
    for p in range(max_panels):
        j_pos = np.arange(p * n_per, (p + 1) * n_per)
        j_all = np.concatenate([-j_pos[:0:-1], j_pos]) if p == 0 else \
            np.concatenate([-j_pos[::-1], j_pos])
        nodes = dl * j_all
        T = np.asarray(t_block_fn(nodes))
        U = T * np.exp(-0.5 * (epsilon * nodes) ** 2 + 1j * nodes * w0)[None, :]
        np.add.at(Z.T, np.mod(j_all, M), U.T)
        E_probe = np.exp(1j * np.outer(nodes, out_grid[probe_idx] - w0))
        contrib = (dl / (2.0 * np.pi)) * (U @ E_probe)
        probe_acc += contrib
        panels_used = p + 1
        scale = max(scale, float(np.abs(probe_acc.real).max()))
        tail = float(np.abs(contrib).max())
        if p >= 2 and scale > 0 and tail < tol_panel * scale:
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        raise QuadratureError(
            f"{label}: lambda integral not converged after {max_panels} panels "
            f"(last panel contribution {tail:.2e} vs scale {scale:.2e})")
    acc = (dl / (2.0 * np.pi)) * M * np.fft.ifft(Z, axis=1)[:, :n_w]
    meta = {"lambda_max": dl * panels_used * n_per, "lambda_spacing": dl,
            "lambda_panels": panels_used, "last_panel_contribution": tail,
            "smoothing_epsilon": epsilon}
    return acc, meta


def _realify(values: np.ndarray, label: str, residue_tol: float = RESIDUE_TOL):
    residue = float(np.abs(values.imag).max())
    scale = float(np.abs(values.real).max())
    if residue > residue_tol * max(1.0, scale):
        raise QuadratureError(
            f"{label}: imaginary residue {residue:.2e} exceeds tolerance "
            f"{residue_tol:.0e} (scale {scale:.2e})")
    return values.real.copy(), residue


def _base_meta(params: EngineParams, t: float, provider: CGFProvider, **extra) -> dict:
    meta = {"g": params.g, "kappa_h": params.kappa_h, "kappa_c": params.kappa_c,
            "nb_h": params.nb_h, "nb_c": params.nb_c, "t": t,
            "backend": provider.label, "gamma": provider.gamma,
            "convention": "q is a probability mass index, w a density coordinate"}
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# public inversions

def marginal_q(params: EngineParams, t: float, q_range: tuple[int, int] | None = None,
               provider: CGFProvider | None = None, n_chi: int | None = None,
               tilt: float = 0.0) -> IntegerDistribution:
    """Photon-transfer distribution P(q) from the periodic chi-transform.

    With tilt = s != 0 the contour chi -> chi - i s is used and the result
    carries uniform *relative* accuracy around the tilted saddle; the
    normalization and aliasing checks are then skipped (the full-range sum is
    dominated by amplified roundoff away from the saddle).
    """
    require_valid(params)
    if t <= 0:
        raise ValueError("t must be > 0")
    provider = provider or analytic_provider(params)
    if q_range is None:
        q_range = default_q_range(params, t)
    q_values = np.arange(q_range[0], q_range[1] + 1)
    n = n_chi or _next_pow2(8 * len(q_values))
    x = 2.0 * np.pi * np.arange(n) / n
    if tilt == 0.0:
        rates = np.asarray(provider(x, 0.0))
    else:
        if provider.label != "analytic":
            raise ValueError("tilted contours require the analytic provider")
        rates = _shifted_contour_rates(x, np.zeros(1), tilt, params)[:, 0]
    F = np.exp(t * rates)
    rows = np.fft.ifft(F)
    values = rows[np.mod(q_values, n)]
    if tilt != 0.0:
        values = values * np.exp(tilt * q_values)
    probs, residue = _realify(values[None, :], "marginal_q")
    probs = probs[0]
    meta = _base_meta(params, t, provider, n_chi=n, tilt=tilt,
                      q_min=q_values[0], q_max=q_values[-1])
    if tilt == 0.0:
        edge_mass = max(abs(probs[0]), abs(probs[-1]))
        if edge_mass > ALIAS_MASS_LIMIT:
            raise GridError(
                f"q_range too small: boundary mass {edge_mass:.2e} exceeds "
                f"{ALIAS_MASS_LIMIT:.0e} (aliasing)")
        norm = probs.sum()
        meta["normalization"] = norm
        if abs(norm - 1.0) > 1e-6:
            raise QuadratureError(f"P(q) sums to {norm}, off by more than 1e-6")
    return IntegerDistribution(q_values, probs, residue, meta)


def _atom_weights(params: EngineParams, t: float, x: np.ndarray, tilt: float,
                  provider: CGFProvider, q_idx, tilt_factor):
    """Weights of the w = 0 plateau atom per q (metadata; analytic CGF only).

    The atom itself enters the gridded values through the apodized quadrature
    as its one-cell-wide Gaussian; this reports its exact weights.
    """
    if provider.label != "analytic" or provider.gamma != 0.0:
        return None
    nu_inf = _shifted_plateau(x, tilt, params) if tilt != 0.0 else plateau_rate(x, params)
    C = np.exp(t * nu_inf)
    atoms = np.fft.ifft(C)[q_idx]
    if tilt_factor is not None:
        atoms = atoms * tilt_factor
    return atoms


def joint(params: EngineParams, t: float, q_range: tuple[int, int] | None = None,
          w_grid: np.ndarray | None = None, provider: CGFProvider | None = None,
          *, n_chi: int | None = None, epsilon: float | None = None,
          tilt: float = 0.0, tol_panel: float = _PANEL_TOL,
          max_panels: int = _MAX_PANELS) -> JointQPD:
    """Joint quasi-probability P(q, w): chi-transform first, then the
    apodized lambda quadrature row by row in q.

    Values are the exact Gaussian-smoothed density at resolution epsilon
    (default: the w-grid spacing); normalization, the q-marginal and the
    affinity symmetry behind the fluctuation theorem are preserved exactly by
    this smoothing.  The non-decaying plateau of exp(S) appears as a
    one-cell-wide atom at w = 0 whose exact weights are reported via
    tail_atom (total absolute weight; sizeable at the stationary-phase q
    near the plateau's peak even at long times).
    """
    require_valid(params)
    if t <= 0:
        raise ValueError("t must be > 0")
    provider = provider or analytic_provider(params)
    if q_range is None:
        q_range = default_q_range(params, t)
    if w_grid is None:
        w_grid = default_w_grid(params, t)
    w_grid = np.asarray(w_grid, float)
    q_values = np.arange(q_range[0], q_range[1] + 1)
    n = n_chi or _next_pow2(8 * len(q_values))
    x = 2.0 * np.pi * np.arange(n) / n
    eps = epsilon if epsilon is not None else float(w_grid[1] - w_grid[0])
    if tilt != 0.0 and provider.label != "analytic":
        raise ValueError("tilted contours require the analytic provider")

    q_idx = np.mod(q_values, n)
    tilt_factor = np.exp(tilt * q_values) if tilt != 0.0 else None

    def t_block(nodes):
        if tilt == 0.0:
            rates = np.asarray(provider(x[:, None], nodes[None, :]))
        else:
            rates = _shifted_contour_rates(x, nodes, tilt, params)
        rows = np.fft.ifft(np.exp(t * rates), axis=0)[q_idx]
        if tilt_factor is not None:
            rows = rows * tilt_factor[:, None]
        return rows

    acc, qmeta = _lambda_engine(t_block, len(q_values), w_grid, eps,
                                tol_panel, max_panels, "joint")

    atoms = _atom_weights(params, t, x, tilt, provider, q_idx, tilt_factor)
    tail_atom = float(np.abs(atoms).sum()) if atoms is not None else None

    values, residue = _realify(acc, "joint")
    meta = _base_meta(params, t, provider, n_chi=n, tilt=tilt, **qmeta)
    out = JointQPD(q_values, w_grid, values, residue, tail_atom, meta)
    meta["normalization"] = out.normalization() if tilt == 0.0 else "tilted (partial)"
    meta["params"] = params
    return out


def marginal_w(params: EngineParams, t: float, w_grid: np.ndarray | None = None,
               provider: CGFProvider | None = None, *, epsilon: float | None = None,
               tol_panel: float = _PANEL_TOL, max_panels: int = _MAX_PANELS) -> RealDensity:
    """Work (Cooper-pair) density P(w) from the lambda-line quadrature.

    The density is reported at the grid's resolution (Gaussian smoothing of
    width epsilon, default one grid spacing).  The plateau of the integrand
    at chi = 0 is the weight of a w = 0 atom; above 1e-6 it signals that t is
    too small for a clean long-time inversion and the construction fails.
    """
    require_valid(params)
    if t <= 0:
        raise ValueError("t must be > 0")
    provider = provider or analytic_provider(params)
    if w_grid is None:
        w_grid = default_w_grid(params, t)
    w_grid = np.asarray(w_grid, float)
    eps = epsilon if epsilon is not None else float(w_grid[1] - w_grid[0])

    tail_atom = None
    if provider.label == "analytic" and provider.gamma == 0.0:
        tail_atom = float(abs(np.exp(t * plateau_rate(np.zeros(1), params)[0])))
        if tail_atom > PLATEAU_WEIGHT_LIMIT:
            raise LongTimeAssumptionError(
                f"plateau weight {tail_atom:.2e} exceeds {PLATEAU_WEIGHT_LIMIT:.0e}: "
                f"t too small for a clean long-time inversion")

    def t_block(nodes):
        return np.exp(t * np.asarray(provider(0.0, nodes)))[None, :]

    acc, qmeta = _lambda_engine(t_block, 1, w_grid, eps, tol_panel, max_panels, "marginal_w")
    values, residue = _realify(acc, "marginal_w")
    meta = _base_meta(params, t, provider, **qmeta)
    out = RealDensity(w_grid, values[0], residue, tail_atom, meta, column="w")
    norm = out.normalization()
    meta["normalization"] = norm
    if abs(norm - 1.0) > 1e-4:
        raise QuadratureError(f"P(w) integrates to {norm}, off by more than 1e-4")
    return out


def delta_dist(params: EngineParams, t: float, delta_grid: np.ndarray | None = None,
               provider: CGFProvider | None = None, *, epsilon: float | None = None,
               tol_panel: float = _PANEL_TOL_DELTA,
               max_panels: int = _MAX_PANELS_DELTA) -> DeltaDistribution:
    """Distribution of Delta = w - q from the CGF on the line (chi, lam) = (-lam, lam).

    No single plateau constant exists along this line: at large |lambda| the
    integrand magnitude recurs to O(1) in bumps near odd multiples of pi,
    whose contribution is killed by intra-bump phase oscillation and by the
    resolution kernel; the panel rule integrates through them.
    """
    require_valid(params)
    if t <= 0:
        raise ValueError("t must be > 0")
    provider = provider or analytic_provider(params)
    if delta_grid is None:
        delta_grid = default_delta_grid(params, t)
    delta_grid = np.asarray(delta_grid, float)
    eps = epsilon if epsilon is not None else float(delta_grid[1] - delta_grid[0])

    def t_block(nodes):
        rates = np.asarray(provider(-nodes, nodes))
        return np.exp(t * rates)[None, :]

    acc, qmeta = _lambda_engine(t_block, 1, delta_grid, eps, tol_panel, max_panels, "delta")
    values, residue = _realify(acc, "delta")
    meta = _base_meta(params, t, provider, **qmeta)
    out = DeltaDistribution(delta_grid, values[0], residue, None, meta, column="delta")
    norm = out.normalization()
    meta["normalization"] = norm
    if abs(norm - 1.0) > 1e-4:
        raise QuadratureError(f"P(Delta) integrates to {norm}, off by more than 1e-4")
    return out
