"""Lindblad-oracle tests: operators, identities, evolution, diagnostics."""

import numpy as np
import pytest

from cavcool.errors import CutoffSaturation, CutoffTooSmall, DimensionOverflow
from cavcool.opalg import OperatorMonomial, OperatorPolynomial, EtaCoefficient
from cavcool.oracle import (
    TruncatedSpace,
    build_operators,
    density_matrix_checks,
    initial_state,
    lindblad_evolve,
    moment_matrices,
    polynomial_matrix,
    verify_identities,
)
from cavcool.params import SystemParams
from cavcool.rates import MOMENTS, assemble, default_initial, integrate, StepPolicy

# identities that hold at machine precision on any truncated space
ALGEBRAIC_IDENTITIES = (
    "D unitary",
    "U unitary",
    "[x,x+] = 1",
    "[y,y+] = 1",
    "[x+x,b] = 0",
    "[x+x,b+b] = 0",
    "x = U c U+",
    "H_eff = H_xy",
)

# identities probing the displacement action on the phonon mode; their
# truncation error leaks inward as ~eta^(2*margin+1) * combinatorics and
# needs a deep phonon margin to vanish
DISPLACEMENT_IDENTITIES = (
    "[x,y] = 0",
    "[x+,y] = 0",
    "[x,b] = i eta x",
    "[x,b+] = -i eta x",
    "[x+,b] = -i eta x+",
    "[x,b+b] kick rule",
    "[x+,b+b] kick rule",
    "y = U b U+",
)


def test_space_validation():
    with pytest.raises(DimensionOverflow):
        TruncatedSpace(1, 8)
    with pytest.raises(DimensionOverflow):
        TruncatedSpace(64, 64)
    sp = TruncatedSpace(6, 24)
    assert sp.dim == 7 * 25
    assert sp.protected_mask(2).sum() == 5 * 23


def test_eta_zero_operator_degeneracy():
    p0 = SystemParams(eta=0.0, nu=0.1, delta_eff=0.5, g_eff=0.1)
    ops = build_operators(TruncatedSpace(4, 4), p0)
    eye = np.eye(25)
    assert np.abs(ops.D - eye).max() < 1e-14
    assert np.abs(ops.U - eye).max() < 1e-14
    assert np.abs(ops.x - ops.c).max() < 1e-14
    assert np.abs(ops.y - ops.b).max() < 1e-14


def test_photon_number_invariant_under_kick(weak_params):
    """x+x = c+c exactly (unitarity of the displacement)."""
    ops = build_operators(TruncatedSpace(8, 8), weak_params)
    assert np.abs(ops.x.conj().T @ ops.x - ops.c.conj().T @ ops.c).max() < 1e-12


def test_algebraic_identities_machine_precision(weak_params):
    report = verify_identities(TruncatedSpace(8, 8), weak_params, margin=2)
    for name in ALGEBRAIC_IDENTITIES:
        assert report[name] < 1e-12, (name, report[name])


def test_displacement_identities_at_deep_margin(weak_params):
    """Single-kick identities reach machine precision with phonon margin 8."""
    report = verify_identities(TruncatedSpace(8, 16), weak_params, margin=8)
    for name in DISPLACEMENT_IDENTITIES:
        if name == "y = U b U+":
            continue  # conjugation by U amplifies the kick by n_cav; see below
        assert report[name] < 1e-12, (name, report[name])


def test_dressing_identity_needs_deep_phonon_space(weak_params):
    """y = U b U+ reaches 1e-10 once the phonon margin is ~20 at eta = 0.1."""
    report = verify_identities(TruncatedSpace(8, 32), weak_params, margin=2)
    assert report["y = U b U+"] > 1e-6  # shallow margin: visibly broken
    ops = build_operators(TruncatedSpace(8, 32), weak_params)
    mask = (
        (np.repeat(np.arange(9), 33) <= 6)
        & (np.tile(np.arange(33), 9) <= 12)
    )
    P = np.diag(mask.astype(float))
    dev = np.abs(P @ (ops.y - ops.U @ ops.b @ ops.U.conj().T) @ P).max()
    assert dev < 1e-10


def test_truncation_error_scaling(weak_params):
    """The [x,y] deviation shrinks by ~eta^2 * paths per extra margin level."""
    devs = []
    for margin in (2, 4, 6):
        rep = verify_identities(TruncatedSpace(8, 12), weak_params, margin=margin)
        devs.append(rep["[x,y] = 0"])
    assert devs[0] > 10 * devs[1] > 100 * devs[2] or devs[2] < 1e-13


def test_polynomial_matrix_respects_products_single_mode(weak_params):
    """Normal-ordered single-mode products match matrix products at margin 2.

    Reordering within one mode only touches the cutoff row of that mode, so
    two protected quanta suffice for machine-precision agreement.
    """
    rng = np.random.default_rng(8)
    space = TruncatedSpace(8, 8)
    ops = build_operators(space, weak_params)
    P = np.diag(space.protected_mask(2).astype(float))

    def rand_poly(block):
        terms = {}
        for _ in range(3):
            e1, e2 = int(rng.integers(0, 2)), int(rng.integers(0, 2))
            mon = OperatorMonomial(e1, e2, 0, 0) if block == "x" else \
                OperatorMonomial(0, 0, e1, e2)
            terms[mon] = EtaCoefficient.of(int(rng.integers(-3, 4)))
        return OperatorPolynomial(terms)

    for block in ("x", "y"):
        for _ in range(6):
            q, r = rand_poly(block), rand_poly(block)
            lhs = polynomial_matrix(q * r, ops, weak_params.eta)
            rhs = polynomial_matrix(q, ops, weak_params.eta) @ polynomial_matrix(
                r, ops, weak_params.eta)
            assert np.abs(P @ (lhs - rhs) @ P).max() < 1e-10


def test_polynomial_matrix_respects_products_mixed(weak_params):
    """Mixed x/y products commute through only at deep phonon protection.

    The displacement inside x spreads phonon amplitude, so product chains
    reach the phonon cutoff rows; with ~12 protected phonon quanta the
    leakage is below machine noise at eta = 0.1.
    """
    rng = np.random.default_rng(8)
    space = TruncatedSpace(8, 20)
    ops = build_operators(space, weak_params)
    nc, nb = space.number_diagonals()
    P = np.diag(((nc <= 6) & (nb <= 8)).astype(float))

    def rand_poly():
        terms = {}
        for _ in range(3):
            mon = OperatorMonomial(*(int(rng.integers(0, 2)) for _ in range(4)))
            terms[mon] = EtaCoefficient.of(int(rng.integers(-3, 4)))
        return OperatorPolynomial(terms)

    for _ in range(6):
        q, r = rand_poly(), rand_poly()
        lhs = polynomial_matrix(q * r, ops, weak_params.eta)
        rhs = polynomial_matrix(q, ops, weak_params.eta) @ polynomial_matrix(
            r, ops, weak_params.eta)
        assert np.abs(P @ (lhs - rhs) @ P).max() < 1e-10


def test_moment_matrices_hermitian(weak_params):
    ops = build_operators(TruncatedSpace(6, 10), weak_params)
    for name, mat in moment_matrices(ops).items():
        assert np.abs(mat - mat.conj().T).max() < 1e-12, name


def test_initial_state_fock():
    sp = TruncatedSpace(6, 24)
    rho = initial_state(sp, 2, "fock")
    checks = density_matrix_checks(rho)
    assert checks["hermiticity"] < 1e-15
    assert checks["trace_error"] < 1e-12
    assert checks["min_eigenvalue"] >= 0
    rho0 = initial_state(sp, 0, "fock")
    assert rho0[0, 0] == 1.0


def test_initial_state_thermal_mean(weak_params):
    sp = TruncatedSpace(6, 24)
    rho = initial_state(sp, 2.0, "thermal")
    ops = build_operators(sp, weak_params)
    nb = ops.b.conj().T @ ops.b
    mean = np.trace(nb @ rho).real
    assert abs(mean - 2.0) < 1e-6
    assert density_matrix_checks(rho)["min_eigenvalue"] >= 0


def test_initial_state_cutoff_guards():
    sp = TruncatedSpace(4, 6)
    with pytest.raises(CutoffTooSmall):
        initial_state(sp, 5, "fock")
    with pytest.raises(CutoffTooSmall):
        initial_state(sp, 3.0, "thermal")
    with pytest.raises(ValueError):
        initial_state(sp, 1.5, "fock")


def test_evolution_without_drive_is_stationary():
    """g_eff = 0 with cavity vacuum: no dynamics at all in the reduced model."""
    p = SystemParams(eta=0.1, nu=0.1, delta_eff=0.5, g_eff=0.0)
    sp = TruncatedSpace(3, 8)
    rho0 = initial_state(sp, 2, "fock")
    res = lindblad_evolve(rho0, p, sp, 5.0, samples=6)
    assert np.abs(res.m - 2.0).max() < 1e-12
    assert res.trace_error.max() < 1e-10
    assert np.abs(res.rho_final - rho0).max() < 1e-10


def test_evolution_eta_zero_cavity_fills():
    p0 = SystemParams(eta=0.0, nu=0.1, delta_eff=0.5, g_eff=0.1)
    sp = TruncatedSpace(5, 8)
    res = lindblad_evolve(initial_state(sp, 2, "fock"), p0, sp, 25.0, samples=11)
    assert res.moment("n1")[-1] == pytest.approx(0.02, abs=1e-6)
    assert np.abs(res.m - 2.0).max() < 1e-9  # phonons frozen at eta = 0


def test_oracle_moments_real_and_physical(weak_params):
    sp = TruncatedSpace(5, 10)
    res = lindblad_evolve(initial_state(sp, 2, "fock"), weak_params, sp, 10.0,
                          samples=6)
    assert res.trace_error.max() < 1e-9
    for i in range(len(res.times)):
        violations = __import__("cavcool.rates", fromlist=["MomentVector"]) \
            .MomentVector(res.moments[i]).physicality_violations(tol=1e-8)
        assert violations == [], (res.times[i], violations)
    # composed mean phonon number equals <b+b> identically
    composed = res.moments[:, 1] - weak_params.eta * res.moments[:, MOMENTS.index("k12")] \
        + weak_params.eta**2 * res.moments[:, 2]
    assert np.abs(composed - res.m).max() < 1e-10


def test_cutoff_saturation_raises():
    p = SystemParams(eta=0.1, nu=0.1, delta_eff=0.5, g_eff=0.6)
    sp = TruncatedSpace(2, 6)
    with pytest.raises(CutoffSaturation):
        lindblad_evolve(initial_state(sp, 1, "fock"), p, sp, 10.0, samples=6)


def test_cutoff_convergence(weak_params):
    """Doubling both cutoffs moves m(t_end) by less than 1e-4."""
    small = TruncatedSpace(5, 12)
    big = TruncatedSpace(10, 24)
    out = []
    for sp in (small, big):
        res = lindblad_evolve(initial_state(sp, 2, "fock"), weak_params, sp, 20.0,
                              samples=5)
        out.append(res.m[-1])
    assert abs(out[0] - out[1]) < 1e-4


def test_oracle_tracks_rate_system(weak_params):
    """Short-horizon agreement between oracle and full25 (weak coupling)."""
    sp = TruncatedSpace(5, 12)
    res = lindblad_evolve(initial_state(sp, 2, "fock"), weak_params, sp, 15.0,
                          samples=16)
    system = assemble(weak_params, 2)
    traj = integrate(system, default_initial(2.0, weak_params), 15.0,
                     StepPolicy(samples=16))
    assert np.abs(res.m - traj.m).max() < 5e-3
