"""Sufficient statistics for the nuisance parameters and the identifying statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .model import FeedbackSpec, InitialCondition, Path


@dataclass(frozen=True)
class SufficientStatistic:
    """``n_y`` plus transition counts; zero counts are omitted.

    ``counts`` is a tuple of ``(key, count)`` pairs sorted by key.  Keys are
    ``(x_t, y_t, x_{t+1})`` triples for ``t = 1..T-1`` under SPEC1 and
    ``(y_{t-1}, x_t)`` pairs for ``t = 1..T`` under SPEC2.
    """

    spec: FeedbackSpec
    n_y: int
    counts: tuple

    def as_dict(self) -> dict:
        return dict(self.counts)

    def total_transitions(self) -> int:
        return sum(c for _, c in self.counts)

    def to_json(self) -> dict:
        return {
            "n_y": self.n_y,
            "counts": [[[str(k) for k in key], c] for key, c in self.counts],
        }


@dataclass(frozen=True)
class TargetStats:
    """``t_rho = sum y_{t-1} y_t`` and ``t_beta = sum x_t y_t`` over ``t = 1..T``."""

    t_rho: int
    t_beta: Fraction

    def as_pair(self) -> tuple:
        return (self.t_rho, self.t_beta)


def _transition_keys(p: Path) -> list:
    x = p.full_x()
    y = p.full_y()
    T = p.T
    if p.spec is FeedbackSpec.SPEC1:
        # triple for t uses x_t, y_t, x_{t+1}; y is offset by one (y[0] = y0)
        return [(x[t - 1], y[t], x[t]) for t in range(1, T)]
    return [(y[t - 1], x[t - 1]) for t in range(1, T + 1)]


def sufficient_statistic(p: Path) -> SufficientStatistic:
    counts = Counter(_transition_keys(p))
    return SufficientStatistic(p.spec, sum(p.y), tuple(sorted(counts.items())))


def target_stats(p: Path) -> TargetStats:
    x = p.full_x()
    y = p.full_y()
    t_rho = sum(y[t - 1] * y[t] for t in range(1, p.T + 1))
    t_beta = sum((x[t - 1] * y[t] for t in range(1, p.T + 1)), Fraction(0))
    return TargetStats(t_rho, t_beta)


def pair_counts(init: InitialCondition, stat: SufficientStatistic) -> dict:
    """Counts of ``(y_{t-1}, x_t)`` for ``t = 1..T`` recovered from ``(init, stat)``.

    These are the counts that drive the heterogeneity factor's denominator.
    Under SPEC1 they are the ``(y, x2)`` margins of the triples plus the
    initial ``(y0, x1)`` pair.
    """
    if stat.spec is FeedbackSpec.SPEC2:
        return stat.as_dict()
    out = Counter({(init.y0, init.x1): 1})
    for (_, y, x2), c in stat.counts:
        out[(y, x2)] += c
    return dict(out)


def pinned_last_covariate(init: InitialCondition, stat: SufficientStatistic) -> Fraction:
    """Under SPEC1 the statistic fixes ``x_T = x_1 + sum n * (x2 - x1)``."""
    if stat.spec is not FeedbackSpec.SPEC1:
        raise ValueError("x_T is pinned only under Spec1")
    return init.x1 + sum(((x2 - x1) * c for (x1, _, x2), c in stat.counts), Fraction(0))
