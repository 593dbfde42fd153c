from fractions import Fraction

import numpy as np
import pytest

from condpanel.estimation import fit_cmle
from condpanel.likelihood import FeedbackKernel
from condpanel.model import FeedbackSpec, InitialCondition, Support, Theta
from condpanel.simulation import (DGPConfig, DirichletKernelLaw, EstimatorOptions, FixedKernel,
                                  Normal, PointMass, TwoPoint, derive_seed, monte_carlo,
                                  run_replication, simulate_arrays, simulate_panel)

from conftest import BINARY

F = Fraction
S1, S2 = FeedbackSpec.SPEC1, FeedbackSpec.SPEC2


def cfg(**kw):
    base = dict(theta0=Theta(0.5, 1.0), spec=S2, support=BINARY, T=3, N=200, seed=1)
    base.update(kw)
    return DGPConfig(**base)


def test_same_seed_same_panel():
    a, b = simulate_panel(cfg(seed=99)), simulate_panel(cfg(seed=99))
    assert a.individuals == b.individuals
    assert simulate_panel(cfg(seed=100)).individuals != a.individuals


def test_panel_is_valid():
    for spec in (S1, S2):
        ds = simulate_panel(cfg(spec=spec, support=Support.default(3), T=4))
        assert ds.validate().valid and ds.N == 200 and ds.T == 4


def test_outcome_frequency_null_model():
    # theta = 0, alpha = 0: every y_t is a fair coin
    N, T = 10_000, 3
    c = cfg(theta0=Theta(0, 0), N=N, T=T, heterogeneity={i: PointMass(0.0) for i in cfg().inits})
    _, y = simulate_arrays(c)
    freq = y[:, 1:].mean()
    assert abs(freq - 0.5) <= 3 * np.sqrt(0.25 / (N * T))


def test_transition_frequencies_match_fixed_kernel():
    G = FeedbackKernel(S2, BINARY, {0: (0.7, 0.3), 1: (0.2, 0.8)})
    x, y = simulate_arrays(cfg(N=100_000, T=2, kernel_law=FixedKernel(G)))
    for prev in (0, 1):
        mask = y[:, :-1] == prev
        assert abs(x[mask].mean() - G.rows[prev][1]) < 0.01


def test_spec1_transition_frequencies():
    rows = {(F(0), 0): (0.9, 0.1), (F(0), 1): (0.4, 0.6), (F(1), 0): (0.3, 0.7), (F(1), 1): (0.5, 0.5)}
    G = FeedbackKernel(S1, BINARY, rows)
    x, y = simulate_arrays(cfg(spec=S1, N=100_000, T=3, kernel_law=FixedKernel(G)))
    for (xv, yv), row in rows.items():
        mask = (x[:, :-1] == int(xv)) & (y[:, 1:-1] == yv)
        assert abs(x[:, 1:][mask].mean() - row[1]) < 0.01


def test_heterogeneity_differs_by_init():
    inits = cfg().inits
    het = {inits[0]: PointMass(-3.0), inits[1]: PointMass(3.0)}
    _, y, alpha, _ = simulate_arrays(cfg(N=4000, heterogeneity=het), return_latent=True)
    assert set(alpha[y[:, 0] == 0]) == {-3.0} and set(alpha[y[:, 0] == 1]) == {3.0}
    assert y[y[:, 0] == 0, 1:].mean() < y[y[:, 0] == 1, 1:].mean()


def test_dirichlet_kernels_are_positive_rows():
    law = DirichletKernelLaw({0: (0.05, 0.05, 0.05), 1: (2.0, 1.0, 1.0)})
    _, _, _, k = simulate_arrays(cfg(support=Support.default(3), kernel_law=law), return_latent=True)
    assert np.all(k > 0)
    np.testing.assert_allclose(k.sum(axis=2), 1.0, atol=1e-12)


def test_two_point_heterogeneity():
    rng = np.random.default_rng(0)
    draws = TwoPoint(-1.0, 2.0, 0.25).sample(rng, 40_000)
    assert set(draws) == {-1.0, 2.0}
    assert abs((draws == -1.0).mean() - 0.25) < 0.01


@pytest.mark.parametrize("kw", [
    dict(T=0), dict(N=0), dict(seed=-1), dict(seed=2**64),
    dict(init_law=(0.5, 0.6)), dict(init_law=(1.0,)),
    dict(kernel_law=DirichletKernelLaw((1.0, -1.0))),
    dict(kernel_law=FixedKernel(FeedbackKernel.uniform(S2, Support.default(3)))),
    dict(kernel_law="uniform"),
])
def test_config_validation(kw):
    with pytest.raises((ValueError, TypeError)):
        cfg(**kw)


def test_normal_requires_nonnegative_sigma():
    with pytest.raises(ValueError):
        Normal(0.0, -1.0)


def test_derive_seed_is_pure_and_distinct():
    assert derive_seed(5, 3) == derive_seed(5, 3)
    seeds = {derive_seed(5, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(5, 0) != derive_seed(6, 0)


def test_single_replication_reproduces_direct_fit():
    c = cfg(N=400, seed=31)
    summary = monte_carlo(c, 1)
    ds, fit = run_replication(c, 0)
    direct = fit_cmle(ds)
    assert summary.estimates[0]["theta_hat"] == direct.theta_hat == fit.theta_hat


def test_spec1_monte_carlo_flatness_and_rho():
    c = cfg(spec=S1, T=4, N=400, seed=8)
    s = monte_carlo(c, 10, EstimatorOptions())
    assert s.components["beta"] == {"identified_reps": 0}
    assert s.flatness["beta"]["max_profile_range"] < 1e-10
    assert s.components["rho"]["identified_reps"] == 10
    assert abs(s.components["rho"]["bias"]) < 0.3


def test_monte_carlo_rejects_zero_reps():
    with pytest.raises(ValueError):
        monte_carlo(cfg(), 0)


def test_init_law_respected():
    c = cfg(N=20_000, init_law=(0.8, 0.2))
    _, y = simulate_arrays(c)
    assert abs((y[:, 0] == 0).mean() - 0.8) < 0.02
