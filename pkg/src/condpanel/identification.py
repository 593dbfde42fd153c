"""Exact identification analysis over enumerated conditioning blocks.

A component of theta is identified through the conditional likelihood when
the statistics it multiplies vary inside some block.  Two criteria are offered:

``PER_STATISTIC``
    some block has members with distinct ``t_rho`` (resp. ``t_beta``).
``SPAN``
    the unit vector of the component lies in the exact linear span of all
    within-block difference vectors ``(d_rho, d_beta)``.  Two thetas give the
    same conditional law iff their difference is orthogonal to every such
    vector, so this is the sharp condition.

All arithmetic is on ``int`` and ``Fraction``; no floats are involved.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .enumeration import DEFAULT_ENUMERATION_BUDGET, Block, all_universe_blocks, universe_blocks
from .model import FeedbackSpec, PanelDataset, Support, initial_conditions
from .statistics import sufficient_statistic

COMPONENTS = ("rho", "beta")


class Criterion(enum.Enum):
    PER_STATISTIC = "per-stat"
    SPAN = "span"

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("_", "-")
        aliases = {"per-stat": cls.PER_STATISTIC, "per-statistic": cls.PER_STATISTIC,
                   "perstatistic": cls.PER_STATISTIC, "span": cls.SPAN}
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown criterion {value!r}") from None


@dataclass(frozen=True)
class DifferenceVector:
    d_rho: int
    d_beta: Fraction

    def as_tuple(self) -> tuple:
        return (Fraction(self.d_rho), Fraction(self.d_beta))


@dataclass(frozen=True)
class Witness:
    """A block and two of its members whose statistic differs in ``component``."""

    component: str
    block: Block
    first: int
    second: int

    def to_json(self) -> dict:
        def member(i):
            p, ts = self.block.members[i]
            return {"x": [str(v) for v in p.x], "y": list(p.y),
                    "t_rho": ts.t_rho, "t_beta": str(ts.t_beta)}
        return {
            "component": self.component,
            "init": self.block.init.key(),
            "stat": self.block.stat.to_json(),
            "members": [member(self.first), member(self.second)],
        }


@dataclass(frozen=True)
class IdentificationReport:
    spec: FeedbackSpec
    T: int
    support: Support
    criterion: Criterion
    rho_identified: bool
    beta_identified: bool
    span_rank: int
    witnesses: dict = field(default_factory=dict)
    per_init: dict = field(default_factory=dict)
    n_blocks: int = 0
    n_informative_blocks: int = 0

    def identified(self) -> dict:
        return {"rho": self.rho_identified, "beta": self.beta_identified}

    def to_json(self) -> dict:
        return {
            "spec": self.spec.value,
            "T": self.T,
            "support": [str(v) for v in self.support.values],
            "criterion": self.criterion.value,
            "rho_identified": self.rho_identified,
            "beta_identified": self.beta_identified,
            "span_rank": self.span_rank,
            "n_blocks": self.n_blocks,
            "n_informative_blocks": self.n_informative_blocks,
            "witnesses": {k: w.to_json() for k, w in sorted(self.witnesses.items())},
            "per_init": {k: dict(v) for k, v in self.per_init.items()},
        }


def _normalize(vec: tuple) -> tuple:
    """Scale so the first nonzero entry is 1; identifies vectors up to sign and scale."""
    for v in vec:
        if v != 0:
            return tuple(Fraction(c) / v for c in vec)
    return vec


def exact_rank(rows) -> int:
    """Rank of a list of equal-length rational rows by fraction Gaussian elimination."""
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return 0
    n_cols = len(m[0])
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(rank + 1, len(m)):
            f = m[r][col] / m[rank][col]
            if f:
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def in_span(vec, rows) -> bool:
    return exact_rank(list(rows) + [vec]) == exact_rank(rows)


def _block_vectors(block: Block) -> dict:
    """Normalised nonzero difference vectors of one block -> witness member indices."""
    reps = {}
    for i, (_, ts) in enumerate(block.members):
        reps.setdefault(ts.as_pair(), i)
    items = list(reps.items())
    out = {}
    for a in range(len(items)):
        (r1, b1), i = items[a]
        for b in range(a + 1, len(items)):
            (r2, b2), j = items[b]
            key = _normalize((Fraction(r1 - r2), Fraction(b1 - b2)))
            out.setdefault(key, (i, j))
    return out


def difference_vectors(blocks) -> list[DifferenceVector]:
    """All nonzero within-block differences, deduplicated up to sign and scaling."""
    seen = {}
    for block in blocks:
        for key in _block_vectors(block):
            seen.setdefault(key, None)
    # after normalisation d_rho is 0 or 1
    return [DifferenceVector(int(k[0]), k[1]) for k in seen]


def _analyze(blocks, criterion: Criterion):
    """Verdicts, span rank and witnesses for a collection of blocks."""
    vectors: dict = {}
    stat_witness: dict = {}
    for block in blocks:
        for key, (i, j) in _block_vectors(block).items():
            vectors.setdefault(key, (block, i, j))
            ti, tj = block.members[i][1], block.members[j][1]
            if ti.t_rho != tj.t_rho:
                stat_witness.setdefault("rho", Witness("rho", block, i, j))
            if ti.t_beta != tj.t_beta:
                stat_witness.setdefault("beta", Witness("beta", block, i, j))
    rows = list(vectors)
    rank = exact_rank(rows)
    if criterion is Criterion.PER_STATISTIC:
        verdict = {c: c in stat_witness for c in COMPONENTS}
    else:
        units = {"rho": (Fraction(1), Fraction(0)), "beta": (Fraction(0), Fraction(1))}
        verdict = {c: rank > 0 and in_span(units[c], rows) for c in COMPONENTS}
    witnesses = {c: stat_witness[c] for c in COMPONENTS if verdict[c]}
    return verdict, rank, witnesses


def _report(spec, T, support, criterion, blocks_by_init) -> IdentificationReport:
    all_blocks = [b for blocks in blocks_by_init.values() for b in blocks]
    verdict, rank, witnesses = _analyze(all_blocks, criterion)
    per_init = {}
    for init, blocks in blocks_by_init.items():
        v, r, _ = _analyze(blocks, criterion)
        per_init[init.key()] = {"rho_identified": v["rho"], "beta_identified": v["beta"],
                                "span_rank": r, "n_blocks": len(blocks)}
    return IdentificationReport(
        spec=spec, T=T, support=support, criterion=criterion,
        rho_identified=verdict["rho"], beta_identified=verdict["beta"],
        span_rank=rank, witnesses=witnesses, per_init=per_init,
        n_blocks=len(all_blocks),
        n_informative_blocks=sum(not b.degenerate for b in all_blocks),
    )


def check_identification(T: int, support: Support, spec, criterion=Criterion.SPAN,
                         budget: int = DEFAULT_ENUMERATION_BUDGET) -> IdentificationReport:
    """Decide identification of rho and beta by enumerating every block for every init."""
    spec = FeedbackSpec.parse(spec)
    criterion = Criterion.parse(criterion)
    blocks_by_init = all_universe_blocks(T, support, spec, budget)
    return _report(spec, T, support, criterion, blocks_by_init)


def realized_blocks(ds: PanelDataset, budget: int = DEFAULT_ENUMERATION_BUDGET) -> dict:
    """Blocks containing at least one sampled path, grouped by init in canonical order."""
    wanted: dict = {}
    for p in ds.individuals:
        wanted.setdefault(p.init, set()).add(sufficient_statistic(p))
    out = {}
    for init in initial_conditions(ds.spec, ds.support):
        if init not in wanted:
            continue
        stats = wanted[init]
        out[init] = tuple(b for b in universe_blocks(ds.T, ds.support, ds.spec, init, budget)
                          if b.stat in stats)
    return out


def dataset_identification(ds: PanelDataset, criterion=Criterion.SPAN,
                           budget: int = DEFAULT_ENUMERATION_BUDGET) -> IdentificationReport:
    """Like :func:`check_identification`, restricted to blocks realised in ``ds``."""
    criterion = Criterion.parse(criterion)
    return _report(ds.spec, ds.T, ds.support, criterion, realized_blocks(ds, budget))
