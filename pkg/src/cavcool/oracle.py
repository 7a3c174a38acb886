"""Ground-truth Lindblad integration on a truncated two-mode Fock space.

Simulates the master equation in the untransformed (b, c) picture,

    drho/dt = -i [H, rho] - (kappa/2) {c+c, rho} + kappa c rho c+,
    H/hbar  = g_eff (D c + c+ D+) + nu b+b + delta_eff c+c,
    D       = exp(-i eta (b + b+)),

with the photon jump operator c, then evaluates the 25 named moments as
matrix expectation values of the x = D c and y = b - i eta c+c operators.
The displacement D and the dressing unitary U = exp(i eta c+c (b + b+))
are built by exponentiating the truncated Hermitian generators through an
eigendecomposition, which keeps them unitary to machine precision.

Truncation caveat: identities that encode the displacement *action* on the
phonon mode ([x, y] = 0, [x, b] = i eta x, y = U b U+) acquire an inward-
leaking truncation error ~ eta^(2M+1) * (path combinatorics) at protection
margin M below the phonon cutoff; they need margins well beyond 2 to reach
1e-10, unlike the algebraic identities (unitarity, [x, x+] = 1,
x = U c U+, H-form equivalence), which hold at machine precision already
at margin 2.  verify_identities reports each deviation separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    CutoffSaturation,
    CutoffTooSmall,
    DimensionOverflow,
    StepUnderflow,
)
from .opalg import MOMENTS, MOMENT_OPERATORS, OperatorPolynomial
from .params import SystemParams
from .rates import MomentVector

__all__ = [
    "TruncatedSpace",
    "OperatorSet",
    "OracleResult",
    "build_operators",
    "polynomial_matrix",
    "moment_matrices",
    "verify_identities",
    "initial_state",
    "lindblad_evolve",
    "density_matrix_checks",
]

MAX_SPACE_DIM = 4096

# top-this-many levels of either mode count as the cutoff boundary when
# monitoring population leakage
SATURATION_LEVELS = 2
SATURATION_LIMIT = 1e-6


@dataclass(frozen=True)
class TruncatedSpace:
    """Two-mode Fock space: cavity cutoff n_cav, phonon cutoff n_phn.

    Dimension (n_cav + 1) * (n_phn + 1); basis index = i_cav * (n_phn + 1)
    + i_phn (cavity factor varies slowest).
    """

    n_cav: int
    n_phn: int
    max_dim: int = MAX_SPACE_DIM

    def __post_init__(self):
        if self.n_cav < 2 or self.n_phn < 2:
            raise DimensionOverflow("cutoffs must be at least 2")
        if self.dim > self.max_dim:
            raise DimensionOverflow(
                f"space dimension {self.dim} exceeds limit {self.max_dim}"
            )

    @property
    def dim(self) -> int:
        return (self.n_cav + 1) * (self.n_phn + 1)

    def number_diagonals(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonals of the cavity and phonon number operators."""
        nc = np.repeat(np.arange(self.n_cav + 1), self.n_phn + 1)
        nb = np.tile(np.arange(self.n_phn + 1), self.n_cav + 1)
        return nc.astype(float), nb.astype(float)

    def protected_mask(self, margin: int = 2) -> np.ndarray:
        """Basis states at least `margin` quanta below both cutoffs."""
        nc, nb = self.number_diagonals()
        return (nc <= self.n_cav - margin) & (nb <= self.n_phn - margin)


def _destroy(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, cutoff + 1)), 1).astype(complex)


def _expm_hermitian(generator: np.ndarray, scale: complex) -> np.ndarray:
    """exp(scale * generator) for Hermitian generator via eigendecomposition."""
    w, V = np.linalg.eigh(generator)
    return (V * np.exp(scale * w)) @ V.conj().T


@dataclass(frozen=True)
class OperatorSet:
    """Dense matrices of every operator the simulations need."""

    space: TruncatedSpace
    params: SystemParams
    b: np.ndarray
    c: np.ndarray
    D: np.ndarray
    U: np.ndarray
    x: np.ndarray
    y: np.ndarray
    H_eff: np.ndarray
    H_xy: np.ndarray


def build_operators(space: TruncatedSpace, params: SystemParams) -> OperatorSet:
    eta = params.eta
    nc, nb = space.n_cav, space.n_phn
    a_c, a_b = _destroy(nc), _destroy(nb)
    I_c, I_b = np.eye(nc + 1, dtype=complex), np.eye(nb + 1, dtype=complex)

    c = np.kron(a_c, I_b)
    b = np.kron(I_c, a_b)

    quad_b = a_b + a_b.conj().T
    D = np.kron(I_c, _expm_hermitian(quad_b, -1j * eta))
    U = _expm_hermitian(np.kron(a_c.conj().T @ a_c, quad_b), 1j * eta)

    x = D @ c
    y = b - 1j * eta * (c.conj().T @ c)

    n_c = c.conj().T @ c
    n_b = b.conj().T @ b
    H_eff = (
        params.g_eff * (D @ c + c.conj().T @ D.conj().T)
        + params.nu * n_b
        + params.delta_eff * n_c
    )
    n_x = x.conj().T @ x
    H_xy = (
        params.g_eff * (x + x.conj().T)
        + params.delta_eff * n_x
        + eta**2 * params.nu * (n_x @ n_x)
        - 1j * eta * params.nu * (n_x @ (y - y.conj().T))
        + params.nu * (y.conj().T @ y)
    )
    return OperatorSet(
        space=space, params=params, b=b, c=c, D=D, U=U, x=x, y=y, H_eff=H_eff, H_xy=H_xy
    )


def polynomial_matrix(poly: OperatorPolynomial, ops: OperatorSet, eta: float) -> np.ndarray:
    """Dense matrix of a normal-ordered operator polynomial."""
    dim = ops.space.dim
    out = np.zeros((dim, dim), dtype=complex)
    xd, x, yd, y = ops.x.conj().T, ops.x, ops.y.conj().T, ops.y
    for mon, coeff in poly.terms.items():
        mat = np.eye(dim, dtype=complex)
        for op, power in ((xd, mon.px_dag), (x, mon.px), (yd, mon.py_dag), (y, mon.py)):
            for _ in range(power):
                mat = mat @ op
        out += coeff.evaluate(eta) * mat
    return out


def moment_matrices(ops: OperatorSet) -> dict[str, np.ndarray]:
    """Hermitian matrices of the 25 named moment observables.

    The truncated rendering of a Hermitian polynomial is Hermitian only up
    to boundary rows (x and y matrices stop commuting there), so each
    matrix is symmetrized; this changes nothing for states supported away
    from the cutoffs and keeps every sampled moment exactly real.
    """
    out = {}
    for name in MOMENTS:
        mat = polynomial_matrix(MOMENT_OPERATORS[name], ops, ops.params.eta)
        out[name] = 0.5 * (mat + mat.conj().T)
    return out


def verify_identities(
    space: TruncatedSpace, params: SystemParams, margin: int = 2
) -> dict[str, float]:
    """Max deviation of every operator identity on the protected subspace.

    Unitarity of D and U is checked on the full truncated space (they are
    exactly unitary by construction); all other identities on matrix
    elements between states at least `margin` quanta below both cutoffs.
    """
    ops = build_operators(space, params)
    eta = params.eta
    dim = space.dim
    eye = np.eye(dim, dtype=complex)
    mask = space.protected_mask(margin)
    P = np.diag(mask.astype(float))

    def comm(A, B):
        return A @ B - B @ A

    def protected_max(M):
        return float(np.abs(P @ M @ P).max())

    b, c, D, U, x, y = ops.b, ops.c, ops.D, ops.U, ops.x, ops.y
    xd, yd, bd = x.conj().T, y.conj().T, b.conj().T
    n_b = bd @ b
    n_x = xd @ x

    report = {
        "D unitary": float(np.abs(D.conj().T @ D - eye).max()),
        "U unitary": float(np.abs(U.conj().T @ U - eye).max()),
        "[x,x+] = 1": protected_max(comm(x, xd) - eye),
        "[y,y+] = 1": protected_max(comm(y, yd) - eye),
        "[x,y] = 0": protected_max(comm(x, y)),
        "[x+,y] = 0": protected_max(comm(xd, y)),
        "[x,b] = i eta x": protected_max(comm(x, b) - 1j * eta * x),
        "[x,b+] = -i eta x": protected_max(comm(x, bd) + 1j * eta * x),
        "[x+,b] = -i eta x+": protected_max(comm(xd, b) + 1j * eta * xd),
        "[x,b+b] kick rule": protected_max(
            comm(x, n_b) + 1j * eta * x @ (b - bd) + eta**2 * x
        ),
        "[x+,b+b] kick rule": protected_max(
            comm(xd, n_b) - 1j * eta * (b - bd) @ xd - eta**2 * xd
        ),
        "[x+x,b] = 0": protected_max(comm(n_x, b)),
        "[x+x,b+b] = 0": protected_max(comm(n_x, n_b)),
        "x = U c U+": protected_max(x - U @ c @ U.conj().T),
        "y = U b U+": protected_max(y - U @ b @ U.conj().T),
        "H_eff = H_xy": protected_max(ops.H_eff - ops.H_xy),
    }
    return report


def initial_state(space: TruncatedSpace, occupation: float, kind: str = "fock") -> np.ndarray:
    """Cavity vacuum (x) phonon state: Fock level or thermal mean occupation."""
    nb = space.n_phn
    if kind == "fock":
        level = int(round(occupation))
        if level != occupation:
            raise ValueError("fock occupation must be an integer level")
        if level > nb - 3:
            raise CutoffTooSmall(
                f"Fock level {level} needs at least 3 levels of headroom below "
                f"cutoff {nb}"
            )
        phonon = np.zeros((nb + 1, nb + 1), dtype=complex)
        phonon[level, level] = 1.0
    elif kind == "thermal":
        if occupation < 0:
            raise ValueError("thermal mean must be non-negative")
        if occupation > (nb - 3) / 3:
            raise CutoffTooSmall(
                f"thermal mean {occupation:g} too large for phonon cutoff {nb}"
            )
        if occupation == 0:
            weights = np.zeros(nb + 1)
            weights[0] = 1.0
        else:
            # pick the geometric ratio whose truncated, renormalized mean
            # equals the requested occupation (truncation shifts the naive
            # ratio's mean down, e.g. by ~1e-3 for mean 2 at cutoff 24)
            levels = np.arange(nb + 1)

            def truncated_mean(ratio: float) -> float:
                w = ratio**levels
                return float((levels * w).sum() / w.sum())

            ratio = brentq(
                lambda r: truncated_mean(r) - occupation,
                1e-15,
                1.0 - 1e-12,
                xtol=1e-15,
                rtol=8.9e-16,
            )
            weights = ratio**levels
            weights /= weights.sum()
        phonon = np.diag(weights).astype(complex)
    else:
        raise ValueError(f"unknown initial state kind {kind!r}")

    cavity = np.zeros((space.n_cav + 1, space.n_cav + 1), dtype=complex)
    cavity[0, 0] = 1.0
    return np.kron(cavity, phonon)


def density_matrix_checks(rho: np.ndarray) -> dict[str, float]:
    """Hermiticity, trace and positivity diagnostics of a density matrix."""
    herm = float(np.abs(rho - rho.conj().T).max())
    tr = float(abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return {"hermiticity": herm, "trace_error": tr, "min_eigenvalue": min_eig}


@dataclass(frozen=True)
class OracleResult:
    """Sampled master-equation run with moment series and diagnostics."""

    times: np.ndarray
    moments: np.ndarray          # shape (n_samples, 25), canonical order
    m: np.ndarray                # <b+b>
    trace_error: np.ndarray
    edge_population_cav: np.ndarray
    edge_population_phn: np.ndarray
    rho_final: np.ndarray
    rhos: list[np.ndarray] | None = field(default=None, repr=False)

    def moment(self, name: str) -> np.ndarray:
        return self.moments[:, MOMENTS.index(name)]

    def final_moments(self) -> MomentVector:
        return MomentVector(self.moments[-1].copy())


def lindblad_evolve(
    rho0: np.ndarray,
    params: SystemParams,
    space: TruncatedSpace,
    t_end: float,
    *,
    samples: int = 101,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: str = "DOP853",
    keep_states: bool = False,
) -> OracleResult:
    """Integrate the master equation and sample the 25 named moments.

    Raises CutoffSaturation when the top two levels of either mode carry
    more than 1e-6 population at any sample (the run is then invalid) and
    StepUnderflow when the integrator fails.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    dim = space.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 shape {rho0.shape} does not match space dim {dim}")

    ops = build_operators(space, params)
    H = ops.H_eff
    c = ops.c
    cd = c.conj().T
    nc_diag, nb_diag = space.number_diagonals()
    kappa = params.kappa

    def rhs(_t, flat):
        rho = flat.reshape(dim, dim)
        out = -1j * (H @ rho - rho @ H)
        out += kappa * (c @ rho @ cd)
        # {c+c, rho} with diagonal photon-number operator
        out -= 0.5 * kappa * (nc_diag[:, None] * rho + rho * nc_diag[None, :])
        return out.ravel()

    t_eval = np.linspace(0.0, t_end, samples)
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        rho0.ravel(),
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
    )
    if not sol.success:
        raise StepUnderflow(f"master-equation integrator failed: {sol.message}")

    moment_ops = moment_matrices(ops)
    n_b = ops.b.conj().T @ ops.b

    cav_edge = nc_diag >= space.n_cav - (SATURATION_LEVELS - 1)
    phn_edge = nb_diag >= space.n_phn - (SATURATION_LEVELS - 1)

    n_samp = len(sol.t)
    moments = np.empty((n_samp, len(MOMENTS)))
    m_series = np.empty(n_samp)
    trace_err = np.empty(n_samp)
    pop_cav = np.empty(n_samp)
    pop_phn = np.empty(n_samp)
    rhos = [] if keep_states else None

    for i in range(n_samp):
        rho = sol.y[:, i].reshape(dim, dim)
        if keep_states:
            rhos.append(rho.copy())
        diag = np.real(np.diag(rho))
        trace_err[i] = abs(diag.sum() - 1.0)
        pop_cav[i] = float(diag[cav_edge].sum())
        pop_phn[i] = float(diag[phn_edge].sum())
        for j, name in enumerate(MOMENTS):
            moments[i, j] = float(np.trace(moment_ops[name] @ rho).real)
        m_series[i] = float(np.trace(n_b @ rho).real)

    worst_cav, worst_phn = pop_cav.max(), pop_phn.max()
    if worst_cav > SATURATION_LIMIT or worst_phn > SATURATION_LIMIT:
        raise CutoffSaturation(
            f"population within {SATURATION_LEVELS} levels of a cutoff reached "
            f"(cavity {worst_cav:.2e}, phonon {worst_phn:.2e} > {SATURATION_LIMIT:g}); "
            "increase the space"
        )
    return OracleResult(
        times=sol.t,
        moments=moments,
        m=m_series,
        trace_error=trace_err,
        edge_population_cav=pop_cav,
        edge_population_phn=pop_phn,
        rho_final=sol.y[:, -1].reshape(dim, dim).copy(),
        rhos=rhos,
    )
