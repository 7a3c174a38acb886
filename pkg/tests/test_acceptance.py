"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.  Every tolerance is pinned here as stated up front; none are
calibrated after the fact.  Criteria that the implementation demonstrates
to be unattainable as stated (truncation floors, limit-correction sizes,
regime calibration) are asserted faithfully anyway and fail with the
measured numbers; the analysis lives in the failure detail.
"""

import time
from fractions import Fraction

import numpy as np

from cavcool import effective, oracle, stability
from cavcool.cli import main as cli_main
from cavcool.opalg import derive_symbolic_rows, EtaCoefficient
from cavcool.params import SystemParams
from cavcool.rates import (
    StepPolicy,
    assemble,
    default_initial,
    integrate,
    mean_phonon,
    stationary,
)

from printed_equations import EXACT_Y_ROWS, FIRST_ORDER_SLICES, ZEROTH_ROWS


def report(number: int, title: str, checks: list[tuple[str, bool, str]], t0: float):
    ok = all(passed for _, passed, _ in checks)
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} "
          f"({time.time() - t0:.1f} s)")
    for label, passed, detail in checks:
        print(f"    {'ok    ' if passed else 'FAILED'} {label}: {detail}")
    assert ok, f"criterion {number} failed: " + "; ".join(
        f"{label} ({detail})" for label, passed, detail in checks if not passed
    )


def test_criterion_1_exact_coefficient_reproduction(exact_params):
    """Engine-derived rows equal every printed equation as exact rationals."""
    t0 = time.time()
    rows = {r.target: r for r in derive_symbolic_rows(exact_params)}
    checks = []

    bad = []
    for name, (linear, drive) in EXACT_Y_ROWS.items():
        row = rows[name]
        if row.linear_part != linear or row.drive != (drive or EtaCoefficient.zero()):
            bad.append(name)
    checks.append(("phonon-sector rows (5, all eta orders)", not bad, f"mismatches: {bad}"))

    bad = []
    for name, (linear, drive) in ZEROTH_ROWS.items():
        row = rows[name].truncated(0)
        if row.linear_part != linear or row.drive != (drive or EtaCoefficient.zero()):
            bad.append(name)
    checks.append(("zeroth-order rows (20)", not bad, f"mismatches: {bad}"))

    bad = []
    for name, slice_ in FIRST_ORDER_SLICES.items():
        row = rows[name]
        for moment, value in slice_.items():
            got = row.coefficient(moment).terms.get(1, 0)
            if got != value:
                bad.append(f"{name}[{moment}]")
        for moment, coeff in row.linear_part.items():
            if 1 in coeff.terms and moment not in slice_:
                bad.append(f"{name}[{moment}] extra")
    checks.append(("first-order rows (6, printed terms and no extras)", not bad,
                   f"mismatches: {bad}"))
    report(1, "exact reproduction of all printed moment equations", checks, t0)


def test_criterion_2_operator_identities(weak_params):
    """Identity suite on space (8,8), eta = 0.1: every deviation < 1e-10 on
    the margin-2 protected subspace.

    Note: the algebraic identities (unitarity, [x,x+]=1, [y,y+]=1, x=UcU+,
    H-form equality, photon-number commutators) hold at machine precision.
    The identities probing the displacement action on the phonon mode have
    an inward-leaking truncation floor ~ eta^(2*margin+1) * path weights
    (about 1e-4 here); no unitary 9x9 displacement can satisfy them at
    margin 2, so this criterion fails as stated.  They reach 1e-10 at deep
    phonon margins (see test_oracle.py).
    """
    t0 = time.time()
    rep = oracle.verify_identities(oracle.TruncatedSpace(8, 8), weak_params, margin=2)
    checks = [(name, dev < 1e-10, f"max deviation {dev:.3e}")
              for name, dev in rep.items()]
    report(2, "operator-identity suite on (8,8) at margin 2, tol 1e-10", checks, t0)


def test_criterion_3_eta_zero_physics():
    t0 = time.time()
    p0 = SystemParams(eta=0.0, nu=0.1, delta_eff=0.5, g_eff=0.1)
    checks = []

    system = assemble(p0, 2)
    traj = integrate(system, default_initial(5.0, p0), 1000.0, StepPolicy(samples=101))
    drift = np.abs(traj.column("n2") - 5.0).max()
    checks.append(("n2 conserved over t = 1e3/kappa", drift < 1e-9, f"drift {drift:.2e}"))

    n1_err = abs(traj.column("n1")[-1] - 0.02)
    checks.append(("n1 steady = 4 g^2/(kappa^2 + 4 delta^2)", n1_err < 1e-8,
                   f"|n1 - 0.02| = {n1_err:.2e}"))

    eigs = stability.spectrum(p0, 2).eigenvalues
    expected = np.array(sorted([0, -1j * 0.1, 1j * 0.1, -2j * 0.1, 2j * 0.1],
                               key=lambda z: (z.real, z.imag)))
    spec_err = np.abs(eigs - expected).max()
    checks.append(("weak-model spectrum {0, +-i nu, +-2i nu}", spec_err < 1e-10,
                   f"max |dev| = {spec_err:.2e}"))

    from scipy.integrate import solve_ivp

    model = effective.weak_model(p0)
    init = np.array([5.0, 1.0, 0.0, -0.5, 0.5])
    sol = solve_ivp(lambda t, v: model.M @ v, (0, 1000.0), init, method="DOP853",
                    rtol=1e-12, atol=1e-14, t_eval=np.linspace(0, 1000.0, 101))
    r1 = sol.y[1] ** 2 + sol.y[2] ** 2
    r2 = sol.y[3] ** 2 + sol.y[4] ** 2
    circle_err = max(np.abs(r1 - r1[0]).max(), np.abs(r2 - r2[0]).max())
    checks.append(("phase circles conserved", circle_err < 1e-8,
                   f"max radius^2 drift {circle_err:.2e}"))
    report(3, "eta = 0 physics (conservation, cavity steady, spectrum, circles)",
           checks, t0)


def test_criterion_4_consistency_triangle():
    t0 = time.time()
    checks = []

    rng = np.random.default_rng(20260809)
    worst_gamma = worst_mss = 0.0
    for _ in range(1000):
        p = SystemParams(
            eta=0.05,
            nu=10 ** rng.uniform(-2, 2),
            delta_eff=10 ** rng.uniform(-2, 2),
            g_eff=10 ** rng.uniform(-3, 0),
        )
        model = effective.strong_model(p)
        worst_gamma = max(worst_gamma, abs(model.gamma_c - p.eta**2 *
                                           (model.a_minus - model.a_plus)) / model.gamma_c)
        worst_mss = max(worst_mss, abs(model.m_ss - model.c_drive / model.gamma_c)
                        / model.m_ss)
    checks.append(("gamma_c = eta^2 (A- - A+) on 1e3 random points",
                   worst_gamma < 1e-12, f"worst rel {worst_gamma:.2e}"))
    checks.append(("m_ss = c/gamma_c on the same grid", worst_mss < 1e-12,
                   f"worst rel {worst_mss:.2e}"))

    # substitution of the eliminated-moment closed forms into the n2 row,
    # in exact rational arithmetic (the identity is algebraic)
    def substitution_exact(eta, nu, d, g, kap=Fraction(1)):
        den = kap**2 + 4 * d**2
        plus = kap**2 + 4 * (d + nu) ** 2
        mu4 = plus * (kap**2 + 4 * (d - nu) ** 2)
        k11_n2 = Fraction(-256) * kap * nu**2 * d * g**2 / (den * mu4)
        k12_n2 = Fraction(64) * nu * d * g**2 * (den - 4 * nu**2) / (den * mu4)
        k11_dr = 32 * kap * g**4 / (nu * den**2) + 16 * kap * nu * g**2 / (den * plus)
        k12_dr = 32 * nu * g**2 * (d + nu) / (den * plus) + 32 * g**4 / den**2
        n1_0 = 4 * g**2 / den
        gamma = -(nu * k11_n2 - kap * k12_n2) * eta**2
        drive = (nu * k11_dr - kap * k12_dr + kap * n1_0) * eta**2
        return (gamma == 64 * eta**2 * kap * nu * d * g**2 / mu4
                and drive == 4 * eta**2 * kap * g**2 / plus)

    import random

    pr = random.Random(7)
    sub_ok = all(
        substitution_exact(
            Fraction(pr.randint(1, 20), 100),
            Fraction(pr.randint(1, 10000), 100),
            Fraction(pr.randint(1, 10000), 100),
            Fraction(pr.randint(1, 100), 100),
        )
        for _ in range(200)
    )
    checks.append(("substitution reproduces (gamma_c, c)", sub_ok,
                   "exact rational identity on 200 random points (rel err 0 < 1e-12)"))
    report(4, "consistency triangle at 1e-12 relative", checks, t0)


def test_criterion_5_optimal_detuning():
    t0 = time.time()
    checks = []

    p = SystemParams(eta=0.1, nu=0.1, delta_eff=0.5, g_eff=0.1)
    opt = effective.optimal_detuning(p)
    closed = 0.5 * np.sqrt(1 + 4 * p.nu**2)
    rel = abs(opt.delta_numeric - closed) / closed
    checks.append(("numeric minimizer = sqrt(kappa^2+4nu^2)/2", rel < 1e-8,
                   f"rel dev {rel:.2e}"))

    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        weak = effective.optimal_detuning(
            SystemParams(eta=0.1, nu=0.01, delta_eff=0.5, g_eff=0.1), "weak")
    weak_limit = 1.0 / (4 * 0.01)
    rel_weak = abs(weak.m_ss_exact - weak_limit) / weak_limit
    checks.append(
        ("weak limit m_ss -> kappa/4nu at nu = 0.01 within 1%", rel_weak < 0.01,
         f"rel dev {rel_weak:.4f} (the exact subleading correction is "
         f"-1/2 + nu/2kappa, i.e. 2 nu/kappa = 2% at this nu)"))

    strong = effective.optimal_detuning(
        SystemParams(eta=0.1, nu=100.0, delta_eff=100.0, g_eff=0.1), "strong")
    strong_limit = 1.0 / (16 * 100.0**2)
    rel_strong = abs(strong.m_ss_exact - strong_limit) / strong_limit
    checks.append(("strong limit m_ss -> kappa^2/16nu^2 at nu = 100 within 1%",
                   rel_strong < 0.01, f"rel dev {rel_strong:.2e}"))
    report(5, "optimal detuning: exact minimizer and regime limits", checks, t0)


def test_criterion_6_weak_coupling_agreement(weak_params):
    t0 = time.time()
    checks = []

    # (a) full25 vs the analytic exponential law, m0 = 100
    model = effective.strong_model(weak_params)
    t_end = 2.5 / model.gamma_c
    traj = integrate(assemble(weak_params, 2), default_initial(100.0, weak_params),
                     t_end, StepPolicy(samples=600))
    analytic = effective.m_of_t(model, 100.0, traj.times)
    rel = np.abs(traj.m - analytic) / np.abs(analytic)
    final_rel = rel[-1]
    late_rel = rel[traj.times > 5.0].max()
    checks.append(("(a) final m deviation < 5%", final_rel < 0.05,
                   f"{100 * final_rel:.2f}% at t = {t_end:.0f}/kappa"))
    checks.append(("(a) pointwise deviation < 10% after t > 5/kappa",
                   late_rel < 0.10, f"max {100 * late_rel:.2f}%"))

    # (b) oracle vs full25, m0 = 2, space (6, 24)
    space = oracle.TruncatedSpace(6, 24)
    result = oracle.lindblad_evolve(
        oracle.initial_state(space, 2, "fock"), weak_params, space, 50.0, samples=101)
    traj2 = integrate(assemble(weak_params, 2), default_initial(2.0, weak_params),
                      50.0, StepPolicy(samples=101))
    dev = np.abs(result.m - traj2.m).max()
    checks.append(("(b) |m_oracle - m_full25| < 0.05 on [0, 50/kappa]",
                   dev < 0.05, f"max {dev:.2e}"))
    trace = result.trace_error.max()
    checks.append(("(b) oracle trace error < 1e-8", trace < 1e-8, f"max {trace:.2e}"))
    report(6, "weak-coupling agreement (rate vs analytic vs oracle)", checks, t0)


def test_criterion_7_discrepancy_regime(strong_coupling_params, capsys):
    t0 = time.time()
    checks = []
    m_analytic = effective.strong_model(strong_coupling_params).m_ss
    m_full = mean_phonon(stationary(assemble(strong_coupling_params, 2)),
                         strong_coupling_params.eta)
    ratio = m_full / m_analytic
    checks.append(("numeric exceeds analytic (direction)", m_full > m_analytic,
                   f"full25 {m_full:.3f} vs analytic {m_analytic:.3f}"))
    checks.append(
        ("excess factor >= 3 at g_eff = kappa", ratio >= 3.0,
         f"measured {ratio:.3f}; the eta^2-truncated 25-moment system gives "
         f"~2.75x here under every defensible truncation variant (>= 10x is "
         f"reached by g_eff = 2 kappa)"))

    code = cli_main(["compare", "-s", "g_eff=1.0", "-s", "t_end=20",
                     "-s", "samples=11", "-s", "m0=2", "-o", "/tmp/criterion7",
                     "--no-plot"])
    out = capsys.readouterr().out
    checks.append(("compare report flags the regime", code == 0 and "FLAG" in out,
                   "FLAG line emitted" if "FLAG" in out else "no FLAG in report"))
    print(out, end="")
    report(7, "discrepancy regime reproduction (g_eff = kappa)", checks, t0)


def test_criterion_8_strong_confinement(strong_confinement_params):
    t0 = time.time()
    checks = []
    model = effective.strong_model(strong_confinement_params)
    system = assemble(strong_confinement_params, 2)

    m_full = mean_phonon(stationary(system), strong_confinement_params.eta)
    rel = abs(m_full - model.m_ss) / model.m_ss
    checks.append(("steady m within 25% of 6.25e-4", rel < 0.25,
                   f"full25 {m_full:.3e}, analytic {model.m_ss:.3e}, dev {100*rel:.1f}%"))

    t_end = np.log(100.0) / model.gamma_c * 1.1
    traj = integrate(system, default_initial(100.0, strong_confinement_params), t_end,
                     StepPolicy(samples=400, rtol=1e-8, atol=1e-11))
    excess = traj.m - m_full
    window = (excess < 90.0) & (excess > 0.9) & (traj.times > 5.0)
    slope = np.polyfit(traj.times[window], np.log(excess[window]), 1)[0]
    gamma_fit = -slope
    rel_fit = abs(gamma_fit - model.gamma_c) / model.gamma_c
    checks.append(("fitted cooling rate within 25% of gamma_c", rel_fit < 0.25,
                   f"fit {gamma_fit:.3e} vs {model.gamma_c:.3e} ({100*rel_fit:.1f}%) "
                   f"over two decades of decay"))
    report(8, "strong-confinement steady state and cooling rate", checks, t0)


def test_criterion_9_stability():
    t0 = time.time()
    rng = np.random.default_rng(99)
    worst = 0.0
    class_ok = True
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(100):
            p = SystemParams(
                eta=rng.uniform(0.01, 0.2),
                nu=10 ** rng.uniform(-2, 0.5),
                delta_eff=10 ** rng.uniform(-2, 1) * rng.choice([-1.0, 1.0]),
                g_eff=10 ** rng.uniform(-2, 0),
            )
            rep = stability.spectrum(p, 2)
            worst = max(worst, stability.spectral_mismatch(
                stability.closed_form_eigenvalues(p), rep.eigenvalues))
            expected = "cooling" if p.delta_eff > 0 else "heating"
            if rep.classification != expected:
                class_ok = False
    checks = [
        ("closed-form eigenvalues match numerics to 1e-9", worst < 1e-9,
         f"worst rel mismatch {worst:.2e} over 100 sets"),
        ("cooling <=> delta_eff > 0 on all sets", class_ok, "classification table"),
    ]
    report(9, "stability closed forms and classification", checks, t0)
