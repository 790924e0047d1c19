import cmath
import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from fracsub import (
    CtrwSpec,
    DiffusionParams,
    JumpLaw,
    ParameterError,
    StableLaw,
    TruncationError,
    WaitingLaw,
    compound_poisson_density,
    ctrw_series_density,
    diffusion_limit_symbol,
    montroll_weiss,
    survival,
)
from fracsub.ctrw_engine import well_scaled_h

X = np.linspace(-12, 12, 961)


def ml_counts_oracle(beta, t, n):
    # v_n(t) = t^(beta n) / n! * E_beta^(n)(-t^beta), derivative by termwise series
    z = -(t ** beta)
    k = np.arange(200)
    terms = np.exp(special.gammaln(k + n + 1) - special.gammaln(k + 1)
                   - special.gammaln(beta * (k + n) + 1)) * z ** k
    return t ** (beta * n) / math.factorial(n) * math.fsum(terms)


# --- waiting laws ----------------------------------------------------------------------

def test_survival_examples():
    assert survival(WaitingLaw.exponential(2.0), 1.0) == pytest.approx(math.exp(-2), rel=1e-14)
    assert survival(WaitingLaw.mittag_leffler(0.8), 0.0) == 1.0
    assert survival(WaitingLaw.mittag_leffler(0.5), 1.0) == pytest.approx(math.e * special.erfc(1), abs=1e-10)


def test_survival_extremal_and_deterministic():
    assert survival(WaitingLaw.deterministic_unit(), 0.5) == 1.0
    assert survival(WaitingLaw.deterministic_unit(), 1.0) == 0.0
    assert survival(WaitingLaw.extremal_stable(0.5), 2.0) == pytest.approx(special.erf(1 / (2 * math.sqrt(2))), abs=1e-10)


def test_waiting_validation():
    with pytest.raises(ParameterError):
        WaitingLaw.mittag_leffler(1.3)
    with pytest.raises(ParameterError):
        WaitingLaw.exponential(0.0)
    with pytest.raises(ParameterError):
        WaitingLaw("exponential", 0.5)
    with pytest.raises(ParameterError):
        survival(WaitingLaw.exponential(), -1.0)


@pytest.mark.parametrize("beta,t", [(0.5, 0.5), (0.7, 1.0), (0.9, 2.0)])
def test_ml_counts_closed_form(beta, t):
    v = WaitingLaw.mittag_leffler(beta).count_probabilities(t, 6)
    for n in range(7):
        assert v[n] == pytest.approx(ml_counts_oracle(beta, t, n), abs=1e-9)


def test_exponential_counts_are_poisson():
    v = WaitingLaw.exponential(1.5).count_probabilities(2.0, 20)
    np.testing.assert_allclose(v, stats.poisson.pmf(np.arange(21), 3.0), rtol=1e-14)


@pytest.mark.parametrize("law", [WaitingLaw.mittag_leffler(0.6), WaitingLaw.extremal_stable(0.7),
                                 WaitingLaw.deterministic_unit()])
def test_counts_sum_to_one(law):
    v = law.count_probabilities(1.5, 300)
    assert math.fsum(v) == pytest.approx(1.0, abs=1e-6)
    assert v[0] == pytest.approx(law.survival(1.5), abs=1e-10)


def test_laplace_transforms():
    s = 0.7 + 0.3j
    assert WaitingLaw.exponential(2.0).laplace(s) == pytest.approx(2 / (2 + s))
    assert WaitingLaw.mittag_leffler(0.6).laplace(s) == pytest.approx(1 / (1 + s ** 0.6))
    assert WaitingLaw.extremal_stable(0.6).laplace(s) == pytest.approx(cmath.exp(-s ** 0.6))
    with pytest.raises(ParameterError):
        WaitingLaw.exponential().laplace(-1.0)


# --- jump laws -------------------------------------------------------------------------------

def test_jump_law_coefficients():
    g = JumpLaw.gaussian(2.0)
    assert (g.mu_coeff, g.alpha, g.theta) == (1.0, 2.0, 0.0)
    assert JumpLaw.gaussian(1.0).mu_coeff == 0.5
    s = JumpLaw.stable_law(StableLaw(1.5, 0.2))
    assert (s.mu_coeff, s.alpha, s.theta) == (1.0, 1.5, 0.2)


def test_grid_jump_law_fourier():
    x = np.linspace(-10, 10, 2001)
    w = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    law = JumpLaw.from_grid(x[0], x[1] - x[0], w, mu=0.5, alpha=2.0)
    assert law.fourier(1.0).real == pytest.approx(math.exp(-0.5), abs=1e-8)


# --- series solution ---------------------------------------------------------------------------

def test_initial_condition():
    spec = CtrwSpec(WaitingLaw.mittag_leffler(0.7), JumpLaw.gaussian(2.0))
    p = ctrw_series_density(spec, X, 0.0, 10)
    assert p.atoms == [(0.0, 1.0)]
    assert np.all(p.values == 0)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_series_matches_compound_poisson(t):
    spec = CtrwSpec(WaitingLaw.exponential(1.0), JumpLaw.gaussian(2.0))
    a = ctrw_series_density(spec, X, t, 30)
    b = compound_poisson_density(1.0, JumpLaw.gaussian(2.0), X, t)
    assert np.max(np.abs(a.values - b.values)) < 1e-6
    assert a.atom_mass == pytest.approx(math.exp(-t), rel=1e-14)
    assert b.atom_mass == pytest.approx(math.exp(-t), rel=1e-14)


@pytest.mark.parametrize("spec", [
    CtrwSpec(WaitingLaw.mittag_leffler(0.7), JumpLaw.gaussian(2.0)),
    CtrwSpec(WaitingLaw.extremal_stable(0.8), JumpLaw.stable_law(StableLaw(1.5, 0))),
    CtrwSpec(WaitingLaw.exponential(2.0), JumpLaw.stable_law(StableLaw(1.2, 0.3))),
])
def test_series_mass_and_atom(spec):
    t = 1.0
    n_max = 200
    p = ctrw_series_density(spec, X, t, n_max)
    assert p.total_mass() == pytest.approx(1.0, abs=1e-6)
    assert p.atom_mass == pytest.approx(spec.waiting.survival(t), rel=1e-12)


def test_series_truncation_signalled():
    spec = CtrwSpec(WaitingLaw.exponential(1.0), JumpLaw.gaussian(2.0))
    with pytest.raises(TruncationError) as err:
        ctrw_series_density(spec, X, 5.0, 3)
    assert err.value.diagnostics["neglected_mass"] > 1e-6


def test_compound_poisson_origin_value():
    oracle = math.fsum(math.exp(-1) / (math.factorial(n) * math.sqrt(2 * math.pi * n)) for n in range(1, 60))
    p = compound_poisson_density(1.0, JumpLaw.gaussian(1.0), np.array([-1.0, 0.0, 1.0]), 1.0)
    assert p.values[1] == pytest.approx(oracle, rel=1e-12)
    assert p.atom_mass == pytest.approx(math.exp(-1), rel=1e-14)


def test_compound_poisson_at_zero_time():
    p = compound_poisson_density(1.0, JumpLaw.gaussian(2.0), X, 0.0)
    assert p.atoms == [(0.0, 1.0)]
    assert np.all(p.values == 0)


def test_compound_poisson_grid_jump_law():
    x = np.linspace(-10, 10, 2001)
    w = np.exp(-x * x / 4) / math.sqrt(4 * math.pi)
    grid_law = JumpLaw.from_grid(x[0], x[1] - x[0], w, mu=1.0, alpha=2.0)
    a = compound_poisson_density(1.0, grid_law, X, 1.0)
    b = compound_poisson_density(1.0, JumpLaw.gaussian(2.0), X, 1.0)
    assert np.max(np.abs(a.values - b.values)) < 1e-6


# --- transforms ---------------------------------------------------------------------------------

def test_montroll_weiss_examples():
    spec = CtrwSpec(WaitingLaw.mittag_leffler(0.6), JumpLaw.stable_law(StableLaw(1.5)))
    for s in (0.5, 2.0, 1 + 1j):
        assert montroll_weiss(spec, 0.0, s) == pytest.approx(1 / s, rel=1e-14)
    cp = CtrwSpec(WaitingLaw.exponential(1.0), JumpLaw.gaussian(2.0))
    expected = 0.5 / (1 - math.exp(-1) / 2)
    assert montroll_weiss(cp, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)


def test_montroll_weiss_rescaling():
    spec = CtrwSpec(WaitingLaw.mittag_leffler(0.7), JumpLaw.stable_law(StableLaw(1.4, 0.2)))
    tau, h = 0.03, 0.2
    for kappa, s in [(0.7, 1.3), (-2.0, 0.4 + 1j)]:
        lhs = montroll_weiss(spec.rescaled(tau, h), kappa, s)
        rhs = tau * montroll_weiss(spec, h * kappa, tau * s)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_diffusion_limit_examples():
    p = DiffusionParams(1.5, 0, 0.9)
    assert diffusion_limit_symbol(p, 0.0, 2.0) == pytest.approx(0.5, rel=1e-14)
    assert diffusion_limit_symbol(p, 1.0, 1.0) == pytest.approx(0.5, rel=1e-14)
    heat = DiffusionParams(2, 0, 1.0)
    for kappa, s in [(1.0, 1.0), (2.0, 0.5 + 1j)]:
        assert diffusion_limit_symbol(heat, kappa, s) == pytest.approx(1 / (s + kappa ** 2), rel=1e-14)


def test_well_scaled_h():
    spec = CtrwSpec(WaitingLaw.exponential(2.0), JumpLaw.gaussian(1.0))
    h = well_scaled_h(spec, 0.01)
    assert spec.rescaled(0.01, h).rho == pytest.approx(1.0, rel=1e-12)


def test_montroll_weiss_from_grid_density():
    # Fourier-Laplace transform of the compound Poisson solution, computed numerically
    spec = CtrwSpec(WaitingLaw.exponential(1.0), JumpLaw.gaussian(2.0))
    kappa, s = 0.8, 1.0
    x = np.linspace(-40, 40, 3201)

    def p_hat(t):
        p = compound_poisson_density(1.0, spec.jump, x, t)
        return integrate.trapezoid(p.values * np.cos(kappa * x), x) + p.atom_mass

    val = integrate.quad(lambda t: math.exp(-s * t) * p_hat(t), 0, 45, limit=200)[0]
    assert val == pytest.approx(montroll_weiss(spec, kappa, s).real, abs=1e-5)
