"""Assembly, integration, and steady state of the 25-moment rate system.

The state vector follows the canonical ordering of opalg.MOMENTS:
(n1, n2, n3, k1..k22).  The mean phonon number is the derived series

    m = n2 - eta*k12 + eta^2*n3.

All rates are in kappa units and times in 1/kappa.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SingularSystem, StepUnderflow
from .opalg import MOMENTS, MOMENT_INDEX, SymbolicRateRow, derive_rate_system, rows_to_numeric
from .params import SystemParams, effective_params  # re-exported

__all__ = [
    "MOMENTS",
    "MOMENT_INDEX",
    "MomentVector",
    "RateSystem",
    "StepPolicy",
    "Trajectory",
    "SystemParams",
    "effective_params",
    "assemble",
    "integrate",
    "stationary",
    "mean_phonon",
    "default_initial",
]

_N = len(MOMENTS)

# moment indices used by the mean-phonon combination
_IN1 = MOMENT_INDEX["n1"]
_IN2 = MOMENT_INDEX["n2"]
_IN3 = MOMENT_INDEX["n3"]
_IK1 = MOMENT_INDEX["k1"]
_IK2 = MOMENT_INDEX["k2"]
_IK12 = MOMENT_INDEX["k12"]


@dataclass(frozen=True)
class MomentVector:
    """The 25 named expectation values as one real vector."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (_N,):
            raise ValueError(f"expected {_N} moments, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("moment vector contains non-finite entries")
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls) -> "MomentVector":
        return cls(np.zeros(_N))

    @classmethod
    def from_dict(cls, entries: dict[str, float]) -> "MomentVector":
        v = np.zeros(_N)
        for name, value in entries.items():
            v[MOMENT_INDEX[name]] = value
        return cls(v)

    def __getitem__(self, name: str) -> float:
        return float(self.values[MOMENT_INDEX[name]])

    def to_dict(self) -> dict[str, float]:
        return {name: float(self.values[i]) for i, name in enumerate(MOMENTS)}

    def physicality_violations(self, tol: float = 1e-8) -> list[str]:
        """Check the state inequalities; returns humane description of failures.

        n1 >= 0, n2 >= 0, n3 >= n1^2, n3 >= n1, k1^2 + k2^2 <= 4 n1.  These
        hold for moments of any density operator; linearized rate-equation
        trajectories may violate them transiently, so for those the check
        is advisory.
        """
        v = self.values
        out = []
        if v[_IN1] < -tol:
            out.append(f"n1 = {v[_IN1]:.3e} < 0")
        if v[_IN2] < -tol:
            out.append(f"n2 = {v[_IN2]:.3e} < 0")
        if v[_IN3] < v[_IN1] ** 2 - tol:
            out.append(f"n3 = {v[_IN3]:.3e} < n1^2 = {v[_IN1]**2:.3e}")
        if v[_IN3] < v[_IN1] - tol:
            out.append(f"n3 = {v[_IN3]:.3e} < n1 = {v[_IN1]:.3e}")
        if v[_IK1] ** 2 + v[_IK2] ** 2 > 4 * v[_IN1] + tol:
            out.append("k1^2 + k2^2 > 4 n1")
        return out


def mean_phonon(v, eta: float) -> float:
    """Mean phonon number m = n2 - eta*k12 + eta^2*n3."""
    arr = v.values if isinstance(v, MomentVector) else np.asarray(v, dtype=float)
    return float(arr[..., _IN2] - eta * arr[..., _IK12] + eta**2 * arr[..., _IN3])


def default_initial(m0: float, params: SystemParams) -> MomentVector:
    """Diagonal phonon state with the cavity in vacuum: n2 = m0, rest 0."""
    if m0 < 0:
        raise ValueError("m0 must be non-negative")
    v = np.zeros(_N)
    v[_IN2] = m0
    return MomentVector(v)


@dataclass(frozen=True)
class RateSystem:
    """Numeric linear system d/dt v = matrix @ v + drive."""

    matrix: np.ndarray
    drive: np.ndarray
    eta_order: int
    params: SystemParams
    rows: tuple[SymbolicRateRow, ...] = field(default=(), repr=False)

    def rhs(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v + self.drive


def assemble(params: SystemParams, eta_order: int = 2, *, strict: bool = False) -> RateSystem:
    """Derive the moment equations and export them as a float RateSystem."""
    rows, _open = derive_rate_system(params, eta_order, strict=strict)
    matrix, drive = rows_to_numeric(rows, params.eta)
    return RateSystem(
        matrix=np.array(matrix, dtype=float),
        drive=np.array(drive, dtype=float),
        eta_order=eta_order,
        params=params,
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class StepPolicy:
    """Integration control: adaptive embedded RK or fixed-step classic RK4.

    The system is linear and non-stiff in the validated regimes; DOP853 with
    rtol 1e-9 resolves the fastest scale ~2*nu comfortably.  The fixed mode
    exists for bit-reproducible output; its default step obeys
    dt = 0.01 / max(kappa, nu, |delta_eff|).
    """

    mode: str = "adaptive"  # "adaptive" | "fixed"
    method: str = "DOP853"
    rtol: float = 1e-9
    atol: float = 1e-12
    dt: float | None = None
    samples: int = 401

    def fixed_dt(self, params: SystemParams) -> float:
        if self.dt is not None:
            return self.dt
        return 0.01 / max(params.kappa, params.nu, abs(params.delta_eff))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the moment system."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), 25)
    eta: float

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states length mismatch")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def m(self) -> np.ndarray:
        """Mean phonon number series m(t)."""
        s = self.states
        return s[:, _IN2] - self.eta * s[:, _IK12] + self.eta**2 * s[:, _IN3]

    def final(self) -> MomentVector:
        return MomentVector(self.states[-1].copy())

    def column(self, name: str) -> np.ndarray:
        return self.states[:, MOMENT_INDEX[name]]


def _rk4_fixed(system: RateSystem, v0: np.ndarray, t_end: float, policy: StepPolicy):
    dt = policy.fixed_dt(system.params)
    n_steps = max(1, int(np.ceil(t_end / dt)))
    dt = t_end / n_steps
    stride = max(1, n_steps // max(1, policy.samples - 1))
    M, d = system.matrix, system.drive

    times = [0.0]
    states = [v0.copy()]
    v = v0.copy()
    for step in range(1, n_steps + 1):
        k1 = M @ v + d
        k2 = M @ (v + 0.5 * dt * k1) + d
        k3 = M @ (v + 0.5 * dt * k2) + d
        k4 = M @ (v + dt * k3) + d
        v = v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            states.append(v.copy())
    return np.array(times), np.array(states)


def integrate(
    system: RateSystem,
    v0: MomentVector | np.ndarray,
    t_end: float,
    policy: StepPolicy = StepPolicy(),
) -> Trajectory:
    """Integrate d/dt v = M v + d from t = 0 to t_end.

    Deterministic for fixed inputs; raises StepUnderflow if the adaptive
    controller fails.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    v0 = v0.values if isinstance(v0, MomentVector) else np.asarray(v0, dtype=float)

    if policy.mode == "fixed":
        times, states = _rk4_fixed(system, v0, t_end, policy)
        return Trajectory(times, states, system.params.eta)
    if policy.mode != "adaptive":
        raise ValueError(f"unknown step mode {policy.mode!r}")

    t_eval = np.linspace(0.0, t_end, policy.samples)
    sol = solve_ivp(
        lambda t, v: system.matrix @ v + system.drive,
        (0.0, t_end),
        v0,
        method=policy.method,
        rtol=policy.rtol,
        atol=policy.atol,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        raise StepUnderflow(f"integrator failed: {sol.message}")
    return Trajectory(sol.t, sol.y.T, system.params.eta)


def stationary(system: RateSystem) -> MomentVector:
    """Unique steady state of matrix @ v = -drive.

    Raises SingularSystem when the matrix is singular; this is the expected
    outcome at eta = 0, where n2 is conserved and the steady state is not
    unique (no cooling), not a numerical bug.
    """
    M, d = system.matrix, system.drive
    try:
        v = np.linalg.solve(M, -d)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"rate matrix is singular: {exc}") from exc
    residual = np.linalg.norm(M @ v + d)
    scale = np.linalg.norm(M) * np.linalg.norm(v) + np.linalg.norm(d)
    if not np.isfinite(v).all() or residual > 1e-10 * max(scale, 1e-300):
        raise SingularSystem(
            f"steady-state solve residual {residual:.3e} exceeds tolerance "
            f"(matrix effectively singular)"
        )
    return MomentVector(v)
