"""Physical parameters of the photon-phonon model.

All rates are expressed in units of the cavity decay rate kappa, and times
in units of 1/kappa, so kappa = 1.0 in every standard run.  The five model
parameters are the Lamb-Dicke parameter eta, the phonon frequency nu, the
effective detuning delta_eff, the effective coupling g_eff, and kappa
itself.  Raw drive parameters (Omega, g, Delta, delta) of the pre-eliminated
two-level model can be attached for provenance; only their combination
enters the dynamics:

    g_eff = -g * Omega / (2 * Delta),   delta_eff = delta - g**2 / Delta.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .errors import RegimeWarning

# Lamb-Dicke expansions are used up to second order; beyond eta ~ 0.2 the
# neglected eta^3 terms are no longer clearly subdominant.
ETA_REGIME_LIMIT = 0.2

# |Delta| must dominate the other raw rates by this factor before the
# adiabatic elimination behind (g_eff, delta_eff) is trustworthy.
DEFAULT_DOMINANCE = 10.0


def effective_params(
    Omega: float,
    g: float,
    Delta: float,
    delta: float,
    *,
    dominance: float = DEFAULT_DOMINANCE,
) -> tuple[float, float]:
    """Map raw drive parameters onto (g_eff, delta_eff).

    Raises ZeroDivisionError when Delta == 0.  Emits a RegimeWarning when
    |Delta| does not dominate Omega, |delta| and g by the given factor.
    """
    if Delta == 0:
        raise ZeroDivisionError("Delta = 0: no far-detuned elimination")
    g_eff = -g * Omega / (2.0 * Delta)
    delta_eff = delta - g**2 / Delta
    if abs(Delta) < dominance * max(abs(Omega), abs(delta), abs(g)):
        warnings.warn(
            f"|Delta| = {abs(Delta):g} does not dominate (Omega, delta, g) "
            f"by a factor {dominance:g}; effective parameters are unreliable",
            RegimeWarning,
            stacklevel=2,
        )
    return g_eff, delta_eff


@dataclass(frozen=True)
class RawParams:
    """Pre-elimination drive parameters, kept for provenance only."""

    Omega: float
    g: float
    Delta: float
    delta: float


@dataclass(frozen=True)
class SystemParams:
    """The five effective parameters of the cooling model (kappa units)."""

    eta: float
    nu: float
    delta_eff: float
    g_eff: float
    kappa: float = 1.0
    raw: RawParams | None = None

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.eta > ETA_REGIME_LIMIT:
            warnings.warn(
                f"eta = {self.eta:g} exceeds the Lamb-Dicke regime "
                f"(eta <= {ETA_REGIME_LIMIT}); eta^2-truncated dynamics "
                "may be inaccurate",
                RegimeWarning,
                stacklevel=3,
            )
        if self.raw is not None:
            scale = max(
                abs(self.raw.Omega),
                abs(self.raw.delta),
                abs(self.raw.g),
                self.nu,
                self.kappa,
            )
            if abs(self.raw.Delta) < DEFAULT_DOMINANCE * scale:
                warnings.warn(
                    "raw detuning Delta does not dominate the other rates; "
                    "the effective two-mode model is marginal",
                    RegimeWarning,
                    stacklevel=3,
                )

    @classmethod
    def from_raw(
        cls,
        eta: float,
        nu: float,
        Omega: float,
        g: float,
        Delta: float,
        delta: float,
        kappa: float = 1.0,
    ) -> "SystemParams":
        """Build SystemParams from raw drive parameters via effective_params."""
        g_eff, delta_eff = effective_params(Omega, g, Delta, delta)
        return cls(
            eta=eta,
            nu=nu,
            delta_eff=delta_eff,
            g_eff=g_eff,
            kappa=kappa,
            raw=RawParams(Omega=Omega, g=g, Delta=Delta, delta=delta),
        )
