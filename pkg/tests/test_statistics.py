from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from condpanel.enumeration import all_universe_blocks
from condpanel.likelihood import heterogeneity_denominator
from condpanel.model import FeedbackSpec, InitialCondition, Path, Support
from condpanel.statistics import (pair_counts, pinned_last_covariate, sufficient_statistic,
                                  target_stats)

from conftest import SPEC1_A, SPEC1_B, SPEC2_T2_A, SPEC2_T2_B

F = Fraction


def test_spec1_sequence_a_statistic():
    s = sufficient_statistic(SPEC1_A)
    assert s.n_y == 2
    assert s.as_dict() == {(F(1), 0, F(1)): 1, (F(1), 1, F(1)): 1}


def test_spec2_sequence_a_statistic():
    s = sufficient_statistic(SPEC2_T2_A)
    assert s.n_y == 1
    assert s.as_dict() == {(1, F(1)): 1, (1, F(0)): 1}


def test_constant_spec2_path():
    for T in range(1, 6):
        p = Path(InitialCondition(0), (F(0),) * T, (0,) * T)
        s = sufficient_statistic(p)
        assert s.n_y == 0 and s.as_dict() == {(0, F(0)): T}


def test_target_stats_worked_sequences():
    assert target_stats(SPEC1_A).t_rho == 1
    assert target_stats(SPEC1_B).t_rho == 0
    # hand sums of x_t y_t: A = 0*1 + 1*1 + 1*1, B = 1*1 + 0*1 + 1*1
    assert target_stats(SPEC1_A).t_beta == 2
    assert target_stats(SPEC1_B).t_beta == 2
    assert target_stats(SPEC2_T2_A).t_beta == 1
    assert target_stats(SPEC2_T2_B).t_beta == 0


def test_spec1_uses_x1_in_t_beta():
    p = Path(InitialCondition(0, F(5, 2)), (), (1,))
    assert target_stats(p) == target_stats(p).__class__(0, F(5, 2))


def test_counts_are_sorted_and_zero_free():
    s = sufficient_statistic(SPEC2_T2_A)
    keys = [k for k, _ in s.counts]
    assert keys == sorted(keys)
    assert all(c > 0 for _, c in s.counts)


@st.composite
def paths(draw, spec=None):
    spec = spec or draw(st.sampled_from(list(FeedbackSpec)))
    support = Support(draw(st.sampled_from([(0, 1), (0, 1, 2), (F(-1, 2), F(1, 3), 4)])))
    T = draw(st.integers(1, 7))
    vals = st.sampled_from(support.values)
    y0 = draw(st.integers(0, 1))
    init = InitialCondition(y0, draw(vals)) if spec is FeedbackSpec.SPEC1 else InitialCondition(y0)
    n = T - spec.n_free_x
    return Path(init, draw(st.lists(vals, min_size=n, max_size=n)),
                draw(st.lists(st.integers(0, 1), min_size=T, max_size=T)))


@given(paths())
def test_count_totals_and_ranges(p):
    s = sufficient_statistic(p)
    expected = p.T - 1 if p.spec is FeedbackSpec.SPEC1 else p.T
    assert s.total_transitions() == expected
    assert 0 <= s.n_y <= p.T
    ts = target_stats(p)
    assert 0 <= ts.t_rho <= p.T


@given(paths(FeedbackSpec.SPEC1))
def test_spec1_statistic_pins_last_covariate(p):
    assert pinned_last_covariate(p.init, sufficient_statistic(p)) == p.full_x()[-1]


@given(paths())
def test_pair_counts_recover_heterogeneity_margins(p):
    x, y = p.full_x(), p.full_y()
    direct = {}
    for t in range(1, p.T + 1):
        direct[(y[t - 1], x[t - 1])] = direct.get((y[t - 1], x[t - 1]), 0) + 1
    assert pair_counts(p.init, sufficient_statistic(p)) == direct


@settings(deadline=None, max_examples=25)
@given(spec=st.sampled_from(list(FeedbackSpec)), T=st.integers(1, 4),
       seed=st.integers(0, 2**32 - 1))
def test_equal_statistic_means_equal_heterogeneity_denominator(spec, T, seed):
    rng = np.random.default_rng(seed)
    support = Support.default(2)
    theta = rng.uniform(-2, 2, size=2)
    alpha = float(rng.normal())
    for blocks in all_universe_blocks(T, support, spec).values():
        for b in blocks:
            dens = [heterogeneity_denominator(p, theta, alpha) for p, _ in b.members]
            assert np.allclose(dens, dens[0], rtol=1e-13, atol=0)
            if spec is FeedbackSpec.SPEC1:
                assert len({ts.t_beta for _, ts in b.members}) == 1
