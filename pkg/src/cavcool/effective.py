"""Closed-form reduced models of the cooling dynamics.

Three layers, each obtained from the 25-moment system by adiabatic
elimination of fast variables:

* weak-confinement 5x5 model over (n2, k7, k8, k9, k10), valid for
  nu << kappa, with eta-graded matrix entries alpha_ij and drives beta_i;
* strong-confinement scalar law dn2/dt = -gamma_c n2 + c, with sideband
  rates A+- and steady phonon number m_ss = c/gamma_c, which in practice
  holds in both confinement regimes;
* the eliminated fast-moment expressions themselves (n1, k11, k12, ...) at
  zeroth and first order in eta.

The printed closed forms neglect nu^2-suppressed terms; the exact linear
subsystem solves live in subsystem_stationary so that this neglect stays
measurable instead of baked in.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NonPositiveRate, SingularSystem, RegimeWarning
from .params import SystemParams

__all__ = [
    "WeakModel",
    "StrongModel",
    "DetuningOptimum",
    "WeakElimination",
    "StrongElimination",
    "weak_model",
    "weak_stationary",
    "strong_model",
    "m_of_t",
    "steady_phonon_zeroth",
    "optimal_detuning",
    "elim_weak",
    "elim_strong",
    "subsystem_stationary",
]

WEAK_STATE = ("n2", "k7", "k8", "k9", "k10")


# ---------------------------------------------------------------------------
# weak confinement: 5x5 model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeakModel:
    """Linear model d/dt v = M v + beta over (n2, k7, k8, k9, k10)."""

    M: np.ndarray
    beta: np.ndarray
    params: SystemParams
    eta_order: int = 2


def weak_model(params: SystemParams, eta_order: int = 2) -> WeakModel:
    """Populate the 5x5 weak-confinement matrix and drive vector.

    Entries scale as indicated by their eta order: the four equal diagonal
    damping entries and the n2<->k9 couplings are O(eta^2), the remaining
    off-diagonal entries O(eta), and the rotation entries +-nu, +-2nu are
    eta-free.  Intended for nu << kappa; constructed regardless, with a
    regime warning outside that domain.
    """
    eta, nu, kap, d, g = params.eta, params.nu, params.kappa, params.delta_eff, params.g_eff
    if nu > 0.2 * kap:
        warnings.warn(
            f"weak-confinement model outside its regime (nu = {nu:g} not << "
            f"kappa = {kap:g})",
            RegimeWarning,
            stacklevel=2,
        )
    den = kap**2 + 4 * d**2

    a12 = a13 = a42 = a43 = a52 = a53 = 0.0
    a11 = a14 = a41 = 0.0
    b1 = b2 = b3 = 0.0
    if eta_order >= 1:
        a12 = -8 * eta * nu * g**2 * (kap**2 - 4 * d**2) / den**2
        a13 = -4 * eta * kap * g**2 / den
        a42 = 32 * eta * kap**2 * nu * g**2 / den**2
        a43 = 8 * eta * kap * g**2 / den
        a52 = -a43
        a53 = a42
        b2 = 8 * eta * nu * g**2 / den
        b3 = -8 * eta * kap * g**2 / den
    if eta_order >= 2:
        a11 = -64 * eta**2 * kap * nu * d * g**2 / den**2
        a14 = 32 * eta**2 * kap * nu * d * g**2 / den**2
        a41 = 128 * eta**2 * kap * nu * d * g**2 / den**2
        b1 = (4 * eta**2 * kap * g**2 / den**3) * (
            den * (den - 8 * d * nu) + 8 * g**2 * (3 * kap**2 - 4 * d**2)
        )

    M = np.array(
        [
            [a11, a12, a13, a14, 0.0],
            [0.0, 0.0, -nu, 0.0, 0.0],
            [0.0, nu, a11, 0.0, 0.0],
            [a41, a42, a43, a11, -2 * nu],
            [0.0, a52, a53, 2 * nu, a11],
        ]
    )
    beta = np.array([b1, b2, b3, 0.0, 0.0])
    return WeakModel(M=M, beta=beta, params=params, eta_order=eta_order)


def weak_stationary(model: WeakModel) -> np.ndarray:
    """Steady state -M^-1 beta; its n2 component estimates the steady m."""
    try:
        v = np.linalg.solve(model.M, -model.beta)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"weak model is singular: {exc}") from exc
    residual = np.linalg.norm(model.M @ v + model.beta)
    scale = np.linalg.norm(model.M) * np.linalg.norm(v) + np.linalg.norm(model.beta)
    if not np.isfinite(v).all() or residual > 1e-10 * max(scale, 1e-300):
        raise SingularSystem("weak model is effectively singular (eta = 0?)")
    return v


# ---------------------------------------------------------------------------
# strong confinement: scalar cooling law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrongModel:
    """Scalar cooling law dn2/dt = -gamma_c n2 + c with sideband rates A+-.

    gamma_c = eta^2 (A- - A+) and m_ss = c/gamma_c hold identically.  For
    delta_eff <= 0 the rate gamma_c is non-positive (heating) and m_ss is
    undefined.
    """

    gamma_c: float
    c_drive: float
    a_plus: float
    a_minus: float
    params: SystemParams

    @property
    def m_ss(self) -> float:
        if self.gamma_c <= 0:
            raise NonPositiveRate(
                f"gamma_c = {self.gamma_c:.3e} <= 0 (delta_eff <= 0 heats); "
                "steady phonon number undefined"
            )
        return self.c_drive / self.gamma_c


def strong_model(params: SystemParams) -> StrongModel:
    eta, nu, kap, d, g = params.eta, params.nu, params.kappa, params.delta_eff, params.g_eff
    mu4 = (kap**2 + 4 * (d + nu) ** 2) * (kap**2 + 4 * (d - nu) ** 2)
    gamma_c = 64 * eta**2 * kap * nu * d * g**2 / mu4
    c = 4 * eta**2 * kap * g**2 / (kap**2 + 4 * (d + nu) ** 2)
    a_plus = 4 * kap * g**2 / (kap**2 + 4 * (d + nu) ** 2)
    a_minus = 4 * kap * g**2 / (kap**2 + 4 * (d - nu) ** 2)
    return StrongModel(gamma_c=gamma_c, c_drive=c, a_plus=a_plus, a_minus=a_minus, params=params)


def m_of_t(model: StrongModel, m0: float, t):
    """Exponential cooling curve m(t) = (m0 - m_ss) exp(-gamma_c t) + m_ss."""
    if model.gamma_c <= 0:
        raise NonPositiveRate("m_of_t requires gamma_c > 0")
    m_ss = model.m_ss
    return (m0 - m_ss) * np.exp(-model.gamma_c * np.asarray(t, dtype=float)) + m_ss


def steady_phonon_zeroth(nu: float, delta_eff: float, kappa: float = 1.0) -> float:
    """Zeroth-order steady phonon number (kappa^2 + 4(d-nu)^2) / (16 nu d).

    Independent of g_eff and eta.  Raises NonPositiveRate for delta_eff <= 0.
    """
    if delta_eff <= 0:
        raise NonPositiveRate("steady phonon number undefined for delta_eff <= 0")
    return (kappa**2 + 4 * (delta_eff - nu) ** 2) / (16 * nu * delta_eff)


# ---------------------------------------------------------------------------
# optimal detuning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetuningOptimum:
    """Detuning that minimizes the zeroth-order steady phonon number.

    delta_regime/m_ss_regime are the regime-limit formulas (kappa/2 with
    m_ss = kappa/4 nu in weak confinement; sqrt(kappa^2+4 nu^2)/2 in strong
    confinement).  delta_exact is the exact minimizer of the steady-state
    formula, valid in both regimes, with delta_numeric its independent
    numeric confirmation.
    """

    regime: str
    delta_regime: float
    m_ss_regime: float
    delta_exact: float
    m_ss_exact: float
    delta_numeric: float
    m_ss_numeric: float


def optimal_detuning(params: SystemParams, regime: str = "auto") -> DetuningOptimum:
    """Closed-form and numeric minimization of m_ss over delta_eff > 0.

    The exact stationarity condition is delta^2 = (kappa^2 + 4 nu^2)/4; the
    weak-regime value kappa/2 is its nu << kappa limit.
    """
    nu, kap = params.nu, params.kappa
    if regime == "auto":
        regime = "weak" if nu < kap else "strong"
    if regime not in ("weak", "strong"):
        raise ValueError("regime must be 'weak', 'strong' or 'auto'")

    delta_exact = 0.5 * np.sqrt(kap**2 + 4 * nu**2)
    m_exact = steady_phonon_zeroth(nu, delta_exact, kap)

    if regime == "weak":
        delta_regime = 0.5 * kap
        m_regime = kap / (4 * nu)
    else:
        delta_regime = delta_exact
        m_regime = m_exact

    # independent 1-D minimizer of the m_ss formula
    res = minimize_scalar(
        lambda d: steady_phonon_zeroth(nu, d, kap),
        bounds=(1e-6 * max(kap, nu), 10 * (kap + nu)),
        method="bounded",
        options={"xatol": 1e-13 * max(kap, nu)},
    )
    return DetuningOptimum(
        regime=regime,
        delta_regime=float(delta_regime),
        m_ss_regime=float(m_regime),
        delta_exact=float(delta_exact),
        m_ss_exact=float(m_exact),
        delta_numeric=float(res.x),
        m_ss_numeric=float(res.fun),
    )


# ---------------------------------------------------------------------------
# adiabatic eliminations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeakElimination:
    """Fast moments in the weak regime, split by eta order."""

    n1_0: float
    n1_1: float
    k11_0: float
    k11_1: float
    k12_0: float
    k12_1: float

    @property
    def n1(self) -> float:
        return self.n1_0 + self.n1_1

    @property
    def k11(self) -> float:
        return self.k11_0 + self.k11_1

    @property
    def k12(self) -> float:
        return self.k12_0 + self.k12_1


def elim_weak(params: SystemParams, y_moments: dict[str, float]) -> WeakElimination:
    """Closed-form n1, k11, k12 driven by the slow y moments (nu << kappa).

    y_moments supplies k7, k8, k9, k10, n2 (missing keys default to 0).
    The first-order pieces neglect nu^2-suppressed contributions, matching
    the printed forms; subsystem_stationary provides the exact solves.
    """
    eta, nu, kap, d, g = params.eta, params.nu, params.kappa, params.delta_eff, params.g_eff
    k7 = y_moments.get("k7", 0.0)
    k8 = y_moments.get("k8", 0.0)
    k9 = y_moments.get("k9", 0.0)
    k10 = y_moments.get("k10", 0.0)
    n2 = y_moments.get("n2", 0.0)
    den = kap**2 + 4 * d**2

    n1_0 = 4 * g**2 / den
    amp = 4 * g**2 / den
    rot = 4 * nu * g**2 * (3 * kap**2 - 4 * d**2) / (kap * den**2)
    k11_0 = amp * k7 - rot * k8
    k12_0 = rot * k7 + amp * k8

    n1_1 = 32 * eta * nu * d * g**2 / den**2 * k8
    k11_1 = (16 * eta * nu * g**2 / den**2) * (2 * d * k10 + kap) + (
        64 * eta * nu * g**4 / (kap * den**4)
    ) * (5 * kap**4 - 16 * kap**2 * d**2 - 16 * d**4)
    k12_1 = (32 * eta * nu * d * g**2 / den**2) * (2 * n2 - k9 + 1) - (
        32 * eta * g**4 * (3 * kap**2 - 4 * d**2) / den**3
    )
    return WeakElimination(n1_0, n1_1, k11_0, k11_1, k12_0, k12_1)


@dataclass(frozen=True)
class StrongElimination:
    """Fast moments when the y coherences are eliminated as well.

    k7..k12 all vanish at zeroth order; the k13, k14 zeroth-order values
    and the first-order pieces below are exact in nu (no nu^2 neglect).
    """

    k7_1: float
    k8_1: float
    k11_1: float
    k12_1: float
    k13_0: float
    k14_0: float
    k11_0: float = 0.0
    k12_0: float = 0.0

    @property
    def k11(self) -> float:
        return self.k11_0 + self.k11_1

    @property
    def k12(self) -> float:
        return self.k12_0 + self.k12_1


def elim_strong(params: SystemParams, n2: float) -> StrongElimination:
    """Closed-form fast moments with the y coherences eliminated too.

    Valid in both confinement regimes once the coherences k7..k10 are
    replaced by their time averages.  k7_1 carries 1/nu, so nu = 0 raises
    ZeroDivisionError.
    """
    eta, nu, kap, d, g = params.eta, params.nu, params.kappa, params.delta_eff, params.g_eff
    if nu == 0:
        raise ZeroDivisionError("k7 first-order value diverges at nu = 0")
    den = kap**2 + 4 * d**2
    plus = kap**2 + 4 * (d + nu) ** 2
    mu4 = plus * (kap**2 + 4 * (d - nu) ** 2)

    k7_1 = 8 * eta * kap * g**2 / (nu * den)
    k8_1 = 8 * eta * g**2 / den

    k13_0 = -8 * d * g / den * n2
    k14_0 = 4 * kap * g / den * n2

    k11_1 = (
        -256 * eta * kap * nu**2 * d * g**2 / (den * mu4) * n2
        + 32 * eta * kap * g**4 / (nu * den**2)
        + 16 * eta * kap * nu * g**2 / (den * plus)
    )
    k12_1 = (
        64 * eta * nu * d * g**2 * (den - 4 * nu**2) / (den * mu4) * n2
        + 32 * eta * nu * g**2 * (d + nu) / (den * plus)
        + 32 * eta * g**4 / den**2
    )
    return StrongElimination(
        k7_1=k7_1, k8_1=k8_1, k11_1=k11_1, k12_1=k12_1, k13_0=k13_0, k14_0=k14_0
    )


# ---------------------------------------------------------------------------
# exact subsystem solves (oracle for the printed closed forms)
# ---------------------------------------------------------------------------

def _solve(M: np.ndarray, b: np.ndarray, label: str) -> np.ndarray:
    try:
        v = np.linalg.solve(M, -b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"{label} subsystem singular: {exc}") from exc
    return v


def subsystem_stationary(
    params: SystemParams,
    context: dict[str, float] | None = None,
    *,
    first_order: bool = True,
    y_first_order: bool = False,
) -> dict[str, float]:
    """Exact stationary values of the closed fast subsystems.

    Solves the x-operator block (n1, n3, k1..k6), the mixed blocks
    (k11, k12, k15..k18) and (k13, k14, k19..k22) at zeroth order in eta,
    then the first-order chains (n1, k1, k2) and (k11, k12, k15..k18),
    exactly (no nu^2 neglect).  Context supplies the slow moments k7, k8,
    k9, k10, n2; with y_first_order=True the first-order mixed block is
    also driven by the eliminated coherence values k7_1, k8_1 (the variant
    used when the y coherences are fast variables themselves).

    Keys in the result carry an order suffix: n1_0, k11_0, ..., n1_1, ...
    Used as the oracle for the printed closed forms and to measure their
    nu^2-neglect error.
    """
    eta, nu, kap, d, g = params.eta, params.nu, params.kappa, params.delta_eff, params.g_eff
    ctx = context or {}
    k7 = ctx.get("k7", 0.0)
    k8 = ctx.get("k8", 0.0)
    k9 = ctx.get("k9", 0.0)
    k10 = ctx.get("k10", 0.0)
    n2 = ctx.get("n2", 0.0)

    out: dict[str, float] = {}

    # x block: state (n1, n3, k1, k2, k3, k4, k5, k6)
    Mx = np.array(
        [
            [-kap, 0, 0, g, 0, 0, 0, 0],
            [kap, -2 * kap, 0, g, 0, 0, 0, 2 * g],
            [0, 0, -kap / 2, -d, 0, 0, 0, 0],
            [0, 0, d, -kap / 2, 0, 0, 0, 0],
            [0, 0, 0, -2 * g, -kap, -2 * d, 0, 0],
            [0, 0, 2 * g, 0, 2 * d, -kap, 0, 0],
            [0, 0, 0, 0, 0, g, -3 * kap / 2, -d],
            [4 * g, 0, 0, 0, -g, 0, d, -3 * kap / 2],
        ]
    )
    bx = np.array([0, 0, 0, 2 * g, 0, 0, 0, 0], dtype=float)
    vx = _solve(Mx, bx, "x-block")
    for name, val in zip(("n1", "n3", "k1", "k2", "k3", "k4", "k5", "k6"), vx):
        out[f"{name}_0"] = float(val)

    # mixed block: state (k11, k12, k15, k16, k17, k18), slow k7, k8 as drive
    Mm = np.array(
        [
            [-kap, -nu, 0, 0, 0, g],
            [nu, -kap, -g, 0, 0, 0],
            [0, 0, -kap / 2, -d, 0, -nu],
            [0, 0, d, -kap / 2, nu, 0],
            [0, 0, 0, -nu, -kap / 2, -d],
            [0, 0, nu, 0, d, -kap / 2],
        ]
    )
    bm0 = np.array([0, 0, -2 * g * k8, 0, 0, 2 * g * k7])
    vm = _solve(Mm, bm0, "mixed")
    for name, val in zip(("k11", "k12", "k15", "k16", "k17", "k18"), vm):
        out[f"{name}_0"] = float(val)

    # phonon-energy-weighted block: state (k13, k14, k19, k20, k21, k22)
    Mq = np.array(
        [
            [-kap / 2, -d, 0, 0, 0, 0],
            [d, -kap / 2, 0, 0, 0, 0],
            [0, 0, -kap / 2, -d, 0, -2 * nu],
            [0, 0, d, -kap / 2, 2 * nu, 0],
            [0, 0, 0, -2 * nu, -kap / 2, -d],
            [0, 0, 2 * nu, 0, d, -kap / 2],
        ]
    )
    bq = np.array([0, 2 * g * n2, -2 * g * k10, 0, 0, 2 * g * k9])
    vq = _solve(Mq, bq, "mixed-quadratic")
    for name, val in zip(("k13", "k14", "k19", "k20", "k21", "k22"), vq):
        out[f"{name}_0"] = float(val)

    if not first_order:
        return out

    # first-order x chain: state (n1, k1, k2), driven by k15_0, k16_0
    M1 = np.array(
        [
            [-kap, 0, g],
            [0, -kap / 2, -d],
            [0, d, -kap / 2],
        ]
    )
    b1 = np.array([0, -eta * nu * out["k15_0"], -eta * nu * out["k16_0"]])
    v1 = _solve(M1, b1, "x-block first order")
    for name, val in zip(("n1", "k1", "k2"), v1):
        out[f"{name}_1"] = float(val)

    # first-order mixed chain: same matrix Mm, inhomogeneities from the
    # zeroth-order solutions
    b_k11 = 2 * eta * nu * out["n3_0"]
    b_k12 = 2 * eta * kap * (out["n1_0"] - out["n3_0"])
    b_k15 = eta * nu * (out["k1_0"] + 2 * out["k13_0"] - out["k21_0"]) + 2 * eta * kap * out["k6_0"]
    b_k16 = eta * nu * (out["k2_0"] + 2 * out["k14_0"] - out["k22_0"]) - 2 * eta * kap * out["k5_0"]
    b_k17 = eta * nu * (out["k1_0"] + 2 * out["k5_0"] - out["k19_0"])
    b_k18 = eta * nu * (out["k2_0"] + 2 * out["k6_0"] - out["k20_0"])
    if y_first_order:
        strong = elim_strong(params, n2)
        b_k15 += -2 * g * strong.k8_1
        b_k18 += 2 * g * strong.k7_1
    bm1 = np.array([b_k11, b_k12, b_k15, b_k16, b_k17, b_k18])
    vm1 = _solve(Mm, bm1, "mixed first order")
    for name, val in zip(("k11", "k12", "k15", "k16", "k17", "k18"), vm1):
        out[f"{name}_1"] = float(val)
    return out
