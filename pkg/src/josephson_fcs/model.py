"""Engine parameters, derived thermodynamic quantities and validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import SingularInputError

# Advisory bound on g/Omega and kappa/Omega for the local master equation.
WEAK_COUPLING_RATIO = 0.1


class InfiniteAffinityError(SingularInputError):
    """A vanishing bath occupation corresponds to zero temperature, where the
    thermodynamic affinity diverges."""


@dataclass(frozen=True)
class EngineParams:
    """Rates and bath occupations of the two-resonator engine.

    All rates share one arbitrary inverse-time unit.  The occupations are the
    canonical thermal inputs; resonator frequencies are optional and only used
    to report heat and work in energy units (heat per transferred photon is
    omega_h - omega_c, work per Cooper pair the same by the bias condition).
    """

    g: float
    kappa_h: float
    kappa_c: float
    nb_h: float
    nb_c: float
    omega_h: float | None = None
    omega_c: float | None = None

    def beta_omega_h(self) -> float:
        """Inverse-temperature--frequency product of the hot bath."""
        if self.nb_h <= 0:
            raise InfiniteAffinityError(
                "nb_h = 0 corresponds to zero temperature: beta*Omega diverges"
            )
        return math.log1p(1.0 / self.nb_h)

    def beta_omega_c(self) -> float:
        if self.nb_c <= 0:
            raise InfiniteAffinityError(
                "nb_c = 0 corresponds to zero temperature: beta*Omega diverges"
            )
        return math.log1p(1.0 / self.nb_c)

    @property
    def work_energy_scale(self) -> float | None:
        """Energy carried per Cooper pair (2eV), if frequencies are given."""
        if self.omega_h is None or self.omega_c is None:
            return None
        return self.omega_h - self.omega_c


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def affinity(params: EngineParams) -> float:
    """Entropy production per transferred photon, A = beta_c*Omega_c - beta_h*Omega_h.

    Positive iff nb_h > nb_c; antisymmetric under swapping the baths.
    """
    return params.beta_omega_c() - params.beta_omega_h()


def validate(params: EngineParams) -> ValidationReport:
    """Check hard invariants (errors) and weak-coupling advisories (warnings).

    Never raises; an empty report means fully valid.
    """
    report = ValidationReport()
    for name in ("g", "kappa_h", "kappa_c"):
        value = getattr(params, name)
        if not value > 0:
            report.errors.append(f"{name} must be > 0 (got {value})")
    for name in ("nb_h", "nb_c"):
        value = getattr(params, name)
        if value < 0:
            report.errors.append(f"{name} must be >= 0 (got {value})")
    has_h = params.omega_h is not None
    has_c = params.omega_c is not None
    if has_h != has_c:
        report.errors.append("omega_h and omega_c must be given together or not at all")
    elif has_h and has_c:
        if not (params.omega_h > params.omega_c > 0):
            report.errors.append(
                f"engine convention requires omega_h > omega_c > 0 "
                f"(got omega_h={params.omega_h}, omega_c={params.omega_c})"
            )
        else:
            for rate_name in ("g", "kappa_h", "kappa_c"):
                rate = getattr(params, rate_name)
                for om_name in ("omega_h", "omega_c"):
                    om = getattr(params, om_name)
                    if om > 0 and rate / om > WEAK_COUPLING_RATIO:
                        report.warnings.append(
                            f"{rate_name}/{om_name} = {rate / om:.3g} exceeds the "
                            f"weak-coupling advisory {WEAK_COUPLING_RATIO}; the local "
                            f"master equation assumes g, kappa << Omega"
                        )
    return report


def require_valid(params: EngineParams) -> None:
    """Raise ValueError listing all hard invariant breaches."""
    report = validate(params)
    if not report.ok:
        raise ValueError("invalid engine parameters: " + "; ".join(report.errors))
