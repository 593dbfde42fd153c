"""Exhaustive enumeration of histories and their partition into conditioning blocks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .model import FeedbackSpec, InitialCondition, Path, Support, initial_conditions, validate_path
from .statistics import SufficientStatistic, TargetStats, sufficient_statistic, target_stats

DEFAULT_ENUMERATION_BUDGET = 10**7


class EnumerationBudgetError(ValueError):
    pass


class OutsideUniverseError(LookupError):
    pass


@dataclass(frozen=True)
class Block:
    """All histories sharing one initial condition and one sufficient statistic.

    ``members`` is a tuple of ``(Path, TargetStats)`` pairs in enumeration order.
    """

    init: InitialCondition
    stat: SufficientStatistic
    members: tuple

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def degenerate(self) -> bool:
        """True when every member shares the same ``(t_rho, t_beta)``."""
        first = self.members[0][1]
        return all(ts == first for _, ts in self.members[1:])

    def distinct_targets(self) -> list:
        seen = {}
        for _, ts in self.members:
            seen.setdefault(ts.as_pair(), ts)
        return list(seen.values())


def path_count(T: int, support_size: int, spec: FeedbackSpec) -> int:
    return 2**T * support_size ** (T - spec.n_free_x)


def enumerate_paths(T: int, support: Support, spec: FeedbackSpec, init: InitialCondition,
                    budget: int = DEFAULT_ENUMERATION_BUDGET) -> list[Path]:
    """Every ``(x, y)`` history for one initial condition, in lexicographic order.

    Order is by covariate sequence (support order) first, then by outcome bits.
    """
    spec = FeedbackSpec.parse(spec)
    if T < 1:
        raise ValueError("T must be at least 1")
    if init.spec is not spec:
        raise ValueError(f"initial condition {init.key()} does not match {spec.name}")
    if spec is FeedbackSpec.SPEC1 and init.x1 not in support:
        raise ValueError(f"x1={init.x1} is off the support")
    total = path_count(T, support.size, spec)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} paths for T={T}, |X|={support.size} exceeds enumeration budget {budget}")
    n_x = T - spec.n_free_x
    return [Path(init, xs, ys)
            for xs in itertools.product(support.values, repeat=n_x)
            for ys in itertools.product((0, 1), repeat=T)]


def partition_blocks(paths) -> list[Block]:
    """Group paths by ``(init, sufficient statistic)``.

    Blocks come back in order of first appearance; members keep input order.
    """
    groups: dict = {}
    for p in paths:
        key = (p.init, sufficient_statistic(p))
        groups.setdefault(key, []).append((p, target_stats(p)))
    return [Block(init, stat, tuple(members)) for (init, stat), members in groups.items()]


def block_of(p: Path, blocks) -> Block:
    stat = sufficient_statistic(p)
    for b in blocks:
        if b.init == p.init and b.stat == stat:
            return b
    raise OutsideUniverseError("path outside enumeration universe")


@lru_cache(maxsize=256)
def universe_blocks(T: int, support: Support, spec: FeedbackSpec, init: InitialCondition,
                    budget: int = DEFAULT_ENUMERATION_BUDGET) -> tuple:
    """Cached blocks for one ``(T, support, spec, init)``; blocks are immutable."""
    return tuple(partition_blocks(enumerate_paths(T, support, spec, init, budget)))


def all_universe_blocks(T: int, support: Support, spec: FeedbackSpec,
                        budget: int = DEFAULT_ENUMERATION_BUDGET) -> dict:
    """Blocks for every initial condition, keyed by init in canonical order."""
    spec = FeedbackSpec.parse(spec)
    inits = initial_conditions(spec, support)
    total = path_count(T, support.size, spec) * len(inits)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} paths for T={T}, |X|={support.size} exceeds enumeration budget {budget}")
    return {init: universe_blocks(T, support, spec, init, budget) for init in inits}


def check_membership(p: Path, support: Support, spec: FeedbackSpec) -> None:
    verdict = validate_path(p, support, spec)
    if not verdict:
        raise OutsideUniverseError("path outside enumeration universe: "
                                   + "; ".join(verdict.violations))
