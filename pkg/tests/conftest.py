"""Shared fixtures: the recurring parameter sets of the validated regimes."""

from fractions import Fraction

import pytest

from cavcool.params import SystemParams


@pytest.fixture(scope="session")
def weak_params() -> SystemParams:
    """Weakly coupled cavity, weak confinement (the reference figure set)."""
    return SystemParams(eta=0.1, nu=0.1, delta_eff=0.5, g_eff=0.1)


@pytest.fixture(scope="session")
def strong_confinement_params() -> SystemParams:
    """Weakly coupled cavity at the sideband point nu = delta_eff = 10 kappa."""
    return SystemParams(eta=0.1, nu=10.0, delta_eff=10.0, g_eff=0.1)


@pytest.fixture(scope="session")
def strong_coupling_params() -> SystemParams:
    """Strongly coupled cavity (g_eff = kappa) in weak confinement."""
    return SystemParams(eta=0.1, nu=0.1, delta_eff=0.5, g_eff=1.0)


@pytest.fixture(scope="session")
def exact_params() -> SystemParams:
    """Weak-regime parameters as exact rationals, for symbolic comparisons."""
    return SystemParams(
        eta=0.1, nu=Fraction(1, 10), delta_eff=Fraction(1, 2), g_eff=Fraction(1, 10)
    )
