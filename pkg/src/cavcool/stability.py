"""Eigenstructure and damping analysis of the weak-confinement model.

The 5x5 matrix M over (n2, k7, k8, k9, k10) has a characteristic polynomial
that factorizes exactly:

    det(M - z) = (a - z) * [nu^2 - z(a - z)] * [(a - z)^2 + 4 nu^2 - a14*a41]

with a the common damping diagonal, so the closed-form eigenvalues

    z1 = a,  z2,3 = a/2 -+ (i/2) sqrt(4 nu^2 - a^2),
    z4,5 = a -+ i sqrt(4 nu^2 - a14 a41)

hold without approximation and do not involve the O(eta) off-diagonal
entries.  At eta-orders 0 and 1 all real parts vanish (no cooling); all
real parts are negative iff delta_eff > 0.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .effective import WeakModel, weak_model, weak_stationary
from .params import SystemParams

__all__ = [
    "SpectrumReport",
    "spectrum",
    "closed_form_eigenvalues",
    "spectral_mismatch",
    "eta0_solution",
    "shift_to_tilde",
]

# Real parts below this times nu count as zero: covers the exactly-marginal
# eta^0 and eta^1 truncations up to eigensolver roundoff.
MARGINAL_TOL = 1e-12


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues of the order-truncated weak model, sorted by (Re, Im)."""

    eigenvalues: np.ndarray
    order: int
    classification: str  # "cooling" | "heating" | "marginal"
    damping_time: float | None

    def __str__(self) -> str:
        lines = [f"eta-order {self.order} spectrum ({self.classification}):"]
        for lam in self.eigenvalues:
            lines.append(f"  {lam.real:+.6e} {lam.imag:+.6e}j")
        if self.damping_time is not None:
            lines.append(f"  damping time 1/|Re lambda_slowest| = {self.damping_time:.6e}")
        return "\n".join(lines)


def _sorted_eigs(values) -> np.ndarray:
    return np.array(sorted(values, key=lambda z: (z.real, z.imag)), dtype=complex)


def closed_form_eigenvalues(params: SystemParams) -> np.ndarray:
    """The factorized eigenvalues of the full (order-2) weak-model matrix."""
    model = weak_model(params, eta_order=2)
    a = model.M[0, 0]
    a14, a41 = model.M[0, 3], model.M[3, 0]
    nu = params.nu
    lam1 = complex(a)
    root23 = cmath.sqrt(4 * nu**2 - a * a)
    lam2 = a / 2 - 0.5j * root23
    lam3 = a / 2 + 0.5j * root23
    root45 = cmath.sqrt(4 * nu**2 - a14 * a41)
    lam4 = a - 1j * root45
    lam5 = a + 1j * root45
    return _sorted_eigs([lam1, lam2, lam3, lam4, lam5])


def spectral_mismatch(a, b) -> float:
    """Worst relative distance between two spectra under optimal pairing.

    Sorting by (Re, Im) can swap members whose real parts agree only to
    roundoff, so comparison uses a one-to-one nearest assignment instead.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    scale = np.maximum(np.abs(b[cols]), 1e-300)
    return float(np.max(cost[rows, cols] / scale))


def spectrum(params: SystemParams, order: int = 2) -> SpectrumReport:
    """Numeric eigenvalues of the eta-order-truncated weak model."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1, or 2")
    model = weak_model(params, eta_order=order)
    eigs = _sorted_eigs(np.linalg.eigvals(model.M))

    tol = MARGINAL_TOL * params.nu
    if any(abs(lam.real) < tol for lam in eigs):
        classification = "marginal"
        damping_time = None
    elif all(lam.real < 0 for lam in eigs):
        classification = "cooling"
        damping_time = 1.0 / abs(max(lam.real for lam in eigs))
    else:
        classification = "heating"
        damping_time = None
    return SpectrumReport(
        eigenvalues=eigs, order=order, classification=classification, damping_time=damping_time
    )


def eta0_solution(params: SystemParams, init, t):
    """Closed-form weak-model evolution at eta = 0.

    n2 stays constant, (k7, k8) rotates by angle nu*t and (k9, k10) by
    2*nu*t.  Accepts scalar or array t; returns shape (..., 5).
    """
    init = np.asarray(init, dtype=float)
    if init.shape != (5,):
        raise ValueError("init must be a 5-vector (n2, k7, k8, k9, k10)")
    t = np.asarray(t, dtype=float)
    th1 = params.nu * t
    th2 = 2 * params.nu * t
    out = np.empty(t.shape + (5,))
    out[..., 0] = init[0]
    out[..., 1] = np.cos(th1) * init[1] - np.sin(th1) * init[2]
    out[..., 2] = np.sin(th1) * init[1] + np.cos(th1) * init[2]
    out[..., 3] = np.cos(th2) * init[3] - np.sin(th2) * init[4]
    out[..., 4] = np.sin(th2) * init[3] + np.cos(th2) * init[4]
    return out


def shift_to_tilde(model: WeakModel, v) -> np.ndarray:
    """Shift to tilde variables v + M^-1 beta, whose steady state is 0.

    Affine: differences of states are preserved.  Raises SingularSystem at
    eta = 0 where no unique steady state exists.
    """
    v = np.asarray(v, dtype=float)
    offset = -weak_stationary(model)  # M^-1 beta
    return v + offset
