"""Thermodynamic-law verdicts with quantitative margins.

Entropies are in units of k_B = 1.  The first law holds on average but is
predicted to fail at the distribution level starting from the third
Delta-cumulant; that expected failure gets its own verdict
("violated-as-predicted") so it can be asserted as a positive result.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import cumulants as _cum
from . import inversion as _inv
from .cgf_analytic import cgf_rate_grid
from .errors import NumericsError
from .model import EngineParams, affinity, require_valid
from .providers import CGFProvider, analytic_provider

VERDICT_HOLDS = "holds"
VERDICT_VIOLATED = "violated"
VERDICT_VIOLATED_AS_PREDICTED = "violated-as-predicted"
VERDICT_INCONCLUSIVE_PASS = "inconclusive-pass"


@dataclass
class LawReport:
    law: str
    relation: str
    margins: dict[str, float]
    tolerance: float
    verdict: str
    context: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"law": self.law, "relation": self.relation, "margins": self.margins,
                "tolerance": self.tolerance, "verdict": self.verdict,
                "context": {k: str(v) for k, v in self.context.items()}}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)


def _context(params: EngineParams, **extra) -> dict:
    ctx = {"g": params.g, "kappa_h": params.kappa_h, "kappa_c": params.kappa_c,
           "nb_h": params.nb_h, "nb_c": params.nb_c}
    ctx.update(extra)
    return ctx


def first_law_report(params: EngineParams, provider: CGFProvider | None = None,
                     tol_mean: float = 1e-8, tol_delta: float = 1e-6,
                     max_delta_order: int = 5) -> tuple[LawReport, LawReport]:
    """Mean-level first law plus the distribution-level violation detector.

    Report 1: |<<q>> - <<w>>| relative margin (expected to hold).
    Report 2: smallest k with a nonvanishing Delta-cumulant rate; k = 3 with
    <<Delta^3>> = <<q>>/2 is the predicted violation.
    """
    require_valid(params)
    provider = provider or analytic_provider(params)
    table = _cum.cumulants_fd(provider, max_order=1, delta_max_order=max_delta_order)
    q1, w1 = table.value(1, 0), table.value(0, 1)
    scale = abs(q1) if q1 != 0 else 1.0
    mean_margin = abs(q1 - w1) / scale
    rep1 = LawReport(
        law="first-law-average",
        relation="<<q>> == <<w>> (per unit time)",
        margins={"relative_defect": mean_margin, "q_rate": q1, "w_rate": w1},
        tolerance=tol_mean,
        verdict=VERDICT_HOLDS if mean_margin < tol_mean else VERDICT_VIOLATED,
        context=_context(params))

    threshold = tol_delta * (1.0 + abs(q1))
    first_k = None
    for k in range(1, max_delta_order + 1):
        if abs(table.delta_value(k)) > threshold:
            first_k = k
            break
    if first_k is None:
        verdict = VERDICT_HOLDS  # equilibrium: no detectable violation
    else:
        verdict = VERDICT_VIOLATED_AS_PREDICTED if first_k == 3 else VERDICT_VIOLATED
    rep2 = LawReport(
        law="first-law-distribution",
        relation="exists k with <<(w-q)^k>> != 0 (predicted: first at k = 3, value <<q>>/2)",
        margins={"first_nonvanishing_order": float(first_k or 0),
                 "delta3_rate": table.delta_value(3),
                 "half_mean_rate": 0.5 * q1,
                 "threshold": threshold},
        tolerance=tol_delta,
        verdict=verdict,
        context=_context(params))
    return rep1, rep2


def fluctuation_theorem_report(params: EngineParams, t: float, *,
                               q_floor: float = 1e-10, joint_floor: float = 1e-8,
                               tol: float = 1e-4, include_joint: bool = True,
                               joint_q_limit: int = 24,
                               joint_w_window: float = 3.0) -> LawReport:
    """Affinity fluctuation theorem on P(q) and on the joint quasi-probability.

    Marginal: P(-q)/P(q) = e^{-qA} for every q >= 1 whose mass exceeds the
    floor; the exponentially small partner masses are computed on saddle-
    tilted contours, which carry uniform relative accuracy however deep the
    tail.  Joint: P(-q,-w)/P(q,w) = e^{-qA} on w windows |w - q| <= window,
    wherever the accessible side exceeds joint_floor; the far quadrant comes
    from tilted contours in bands of q (one saddle per band), since at
    nonequilibrium parameters it lies far below any plain-transform floor.
    """
    require_valid(params)
    A = affinity(params)

    probs: dict[int, float] = {}
    base = _inv.marginal_q(params, t)
    for q, pr in zip(base.q_values, base.probabilities):
        probs[int(q)] = float(pr)

    def saddle_tilt(q_target: float) -> float | None:
        # tilt whose shifted measure is centered at q_target; generically != A,
        # so the tilted quadrature does not presuppose the symmetry under test.
        # Tilts stay inside (0, A): the tilted mean sweeps +<<q>> .. -<<q>>
        # there, and larger shifts can cross branch points of the nested roots.
        if A < 1e-9:
            return None

        def tilted_mean(s):
            h = 1e-4
            vals = cgf_rate_grid(np.array([-1j * s - h, -1j * s + h]), 0.0, params)
            return float(np.real(1j * (vals[1] - vals[0]) / (2 * h))) * t

        try:
            return brentq(lambda s: tilted_mean(s) - q_target, 1e-6, A - 1e-9, xtol=1e-3)
        except (ValueError, NumericsError):
            return None

    def tail_value(q: int) -> float | None:
        s = saddle_tilt(q)
        if s is None:
            return None
        dist = _inv.marginal_q(params, t, q_range=(q - 2, q + 2), tilt=s)
        return float(dist.probabilities[2])

    defects = {}
    for q in range(1, max(probs) + 1):
        p_plus = probs.get(q)
        if p_plus is None or p_plus < q_floor:
            continue
        p_minus = probs.get(-q, 0.0)
        if abs(p_minus) < 1e-6:  # roundoff-dominated in the plain transform
            p_minus = tail_value(-q)
            if p_plus < 1e-6:
                p_plus = tail_value(q) or p_plus
        if p_minus is None or p_minus <= 0.0:
            continue
        defects[q] = abs((p_minus / p_plus) / np.exp(-q * A) - 1.0)
    if not defects:
        raise NumericsError("no q with mass above the floor; "
                            "fluctuation-theorem test inconclusive")
    margins = {"max_marginal_defect": max(defects.values()),
               "tested_q": float(len(defects))}

    if include_joint:
        q_max_j = min(max(defects.keys()), joint_q_limit)
        L = q_max_j + joint_w_window
        w_grid = np.arange(-L, L + 1e-9, 0.05)
        plus = _inv.joint(params, t, q_range=(1, q_max_j), w_grid=w_grid)
        joint_defects = []
        pairs = 0
        band = 8
        for q_lo in range(1, q_max_j + 1, band):
            q_hi = min(q_lo + band - 1, q_max_j)
            s_band = saddle_tilt(-0.5 * (q_lo + q_hi))
            if s_band is None:
                minus = plus if A < 1e-9 else None
                if minus is None:
                    continue
                minus_rows = {int(-q): plus.values[i][::-1]
                              for i, q in enumerate(plus.q_values)}
            else:
                minus = _inv.joint(params, t, q_range=(-q_hi, -q_lo),
                                   w_grid=w_grid, tilt=s_band)
                minus_rows = {int(q): minus.values[i][::-1]
                              for i, q in enumerate(minus.q_values)}
            for i, q in enumerate(plus.q_values):
                if not (q_lo <= q <= q_hi) or int(-q) not in minus_rows:
                    continue
                row_p = plus.values[i]
                row_m = minus_rows[int(-q)]  # value at -w on the symmetric grid
                mask = (row_p > joint_floor) & (row_m > 0.0) & \
                       (np.abs(plus.w_values - q) <= joint_w_window)
                if mask.any():
                    ratio = row_m[mask] / row_p[mask]
                    joint_defects.append(float(np.abs(ratio / np.exp(-q * A) - 1.0).max()))
                    pairs += 1
        margins["max_joint_defect"] = max(joint_defects) if joint_defects else 0.0
        margins["joint_pairs_tested"] = float(pairs)

    worst = max(v for k, v in margins.items() if k.endswith("defect"))
    return LawReport(
        law="fluctuation-theorem",
        relation="P(-q)/P(q) = e^{-qA}; P(-q,-w)/P(q,w) = e^{-qA}",
        margins=margins,
        tolerance=tol,
        verdict=VERDICT_HOLDS if worst < tol else VERDICT_VIOLATED,
        context=_context(params, t=t, affinity=A))


def tur_and_second_law_report(params: EngineParams, t: float) -> tuple[LawReport, LawReport]:
    """Thermodynamic uncertainty relation and the mean-level second law.

    TUR: <<q^2>>/<<q>>^2 >= 2/<<Sigma>> with <<Sigma>> = <<q>>*A (time
    integrated).  Second law: <<q>>*A >= 0.  Equilibrium margins degenerate
    to 0 and are reported as inconclusive-pass.
    """
    require_valid(params)
    A = affinity(params)
    q1 = _cum.mean_rate(params) * t
    q2 = _cum.variance_rate(params) * t
    if q1 == 0.0:
        tur = LawReport("thermodynamic-uncertainty", "var/mean^2 >= 2/(mean*A)",
                        {"lhs": np.inf, "rhs": np.inf, "margin": 0.0}, 0.0,
                        VERDICT_INCONCLUSIVE_PASS, _context(params, t=t))
        second = LawReport("second-law-average", "<<q>>*A >= 0",
                           {"entropy_rate": 0.0}, 0.0,
                           VERDICT_INCONCLUSIVE_PASS, _context(params, t=t))
        return tur, second
    lhs = q2 / q1**2
    rhs = 2.0 / (q1 * A)
    margin = lhs - rhs
    tur = LawReport(
        law="thermodynamic-uncertainty",
        relation="<<q^2>>/<<q>>^2 >= 2/(<<q>>*A)",
        margins={"lhs": lhs, "rhs": rhs, "margin": margin},
        tolerance=0.0,
        verdict=VERDICT_HOLDS if margin >= 0.0 else VERDICT_VIOLATED,
        context=_context(params, t=t, affinity=A))
    entropy = q1 * A
    second = LawReport(
        law="second-law-average",
        relation="<<q>>*(beta_c*Omega_c - beta_h*Omega_h) >= 0",
        margins={"entropy_production": entropy},
        tolerance=0.0,
        verdict=VERDICT_HOLDS if entropy >= 0.0 else VERDICT_VIOLATED,
        context=_context(params, t=t, affinity=A))
    return tur, second


def tur_sweep(g_over_kappa: np.ndarray, nb_h_values: np.ndarray,
              nb_c_fractions: np.ndarray, t: float = 150.0) -> dict:
    """TUR margin over a parameter sweep; returns the minimum margin found."""
    margins = []
    for r in np.atleast_1d(g_over_kappa):
        for nh in np.atleast_1d(nb_h_values):
            for frac in np.atleast_1d(nb_c_fractions):
                params = EngineParams(g=float(r), kappa_h=1.0, kappa_c=1.0,
                                      nb_h=float(nh), nb_c=float(frac * nh))
                rep, _ = tur_and_second_law_report(params, t)
                margins.append(rep.margins["margin"])
    margins = np.asarray(margins)
    return {"min_margin": float(margins.min()), "n_points": int(margins.size),
            "all_nonnegative": bool((margins >= 0).all())}
