"""Conditional log-likelihood given the sufficient statistic, and the full joint oracle.

For a history ``d`` in block ``D_s`` the conditional probability is::

    exp(theta . z(d)) / sum_{d' in D_s} exp(theta . z(d')),   z = (t_rho, t_beta)

which involves neither ``alpha`` nor the feedback kernel.  Those nuisance
parameters appear only in :func:`joint_prob_full`, which exists so the
factorization can be checked numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .enumeration import DEFAULT_ENUMERATION_BUDGET, Block, OutsideUniverseError, universe_blocks
from .model import (FeedbackSpec, InitialCondition, PanelDataset, Path, Support, Theta,
                    initial_conditions)


class KernelMismatchError(ValueError):
    pass


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, Theta):
        return theta.as_array()
    arr = np.asarray(theta, dtype=float).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("theta must be finite")
    return arr


def _path_code(x_idx, y, support_size: int) -> np.ndarray:
    """Integer code for rows of ``x_1..x_T`` indices and ``y_0..y_T`` bits."""
    x_idx = np.atleast_2d(x_idx)
    y = np.atleast_2d(y)
    code = np.zeros(x_idx.shape[0], dtype=np.int64)
    for col in range(x_idx.shape[1]):
        code = code * support_size + x_idx[:, col]
    for col in range(y.shape[1]):
        code = code * 2 + y[:, col]
    return code


def _member_code(p: Path, support: Support) -> int:
    xs = [support.index(v) for v in p.full_x()]
    return int(_path_code(np.array([xs], dtype=np.int64),
                          np.array([p.full_y()], dtype=np.int64), support.size)[0])


@dataclass(frozen=True)
class _Resolved:
    block_of_obs: np.ndarray   # (N,) index into ctx.blocks
    member_of_obs: np.ndarray  # (N,) flat member index into ctx.member_stats
    counts: np.ndarray         # (n_members,) observed count per member
    n_per_block: np.ndarray    # (n_blocks,) observations per block


class CondLikContext:
    """Blocks realised by a dataset plus flat float caches of their target statistics.

    ``member_stats`` stacks ``(t_rho, t_beta)`` of every member of every block;
    ``segment_starts`` marks where each block begins.
    """

    def __init__(self, spec: FeedbackSpec, support: Support, T: int, blocks, source=None):
        self.spec = spec
        self.support = support
        self.T = T
        self.blocks = tuple(blocks)
        stats, starts, block_ids, code_map = [], [], [], {}
        for b_idx, block in enumerate(self.blocks):
            starts.append(len(stats))
            for p, ts in block.members:
                code_map[(block.init, _member_code(p, support))] = (b_idx, len(stats))
                stats.append((float(ts.t_rho), float(ts.t_beta)))
                block_ids.append(b_idx)
        self.member_stats = np.array(stats, dtype=float).reshape(-1, 2)
        self.segment_starts = np.array(starts, dtype=np.int64)
        self.member_block = np.array(block_ids, dtype=np.int64)
        self.degenerate = np.array([b.degenerate for b in self.blocks], dtype=bool)
        self._code_map = code_map
        self._source = source
        self._resolved = self._resolve(source) if source is not None else None

    @classmethod
    def build(cls, ds: PanelDataset, budget: int = DEFAULT_ENUMERATION_BUDGET) -> "CondLikContext":
        """Context over the blocks that contain at least one path of ``ds``."""
        y0 = ds.y_array[:, 0]
        x1 = ds.x_index[:, 0]
        codes = _path_code(ds.x_index, ds.y_array, ds.support.size)
        blocks = []
        for init in initial_conditions(ds.spec, ds.support):
            if ds.spec is FeedbackSpec.SPEC1:
                mask = (y0 == init.y0) & (x1 == ds.support.index(init.x1))
            else:
                mask = y0 == init.y0
            if not mask.any():
                continue
            wanted = set(np.unique(codes[mask]).tolist())
            for block in universe_blocks(ds.T, ds.support, ds.spec, init, budget):
                if any(_member_code(p, ds.support) in wanted for p, _ in block.members):
                    blocks.append(block)
        return cls(ds.spec, ds.support, ds.T, blocks, source=ds)

    @property
    def n_informative_blocks(self) -> int:
        if self._resolved is None:
            return int((~self.degenerate).sum())
        return int(((self._resolved.n_per_block > 0) & ~self.degenerate).sum())

    def _resolve(self, ds: PanelDataset) -> _Resolved:
        if ds.spec is not self.spec or ds.support != self.support or ds.T != self.T:
            raise OutsideUniverseError("path outside context")
        codes = _path_code(ds.x_index, ds.y_array, self.support.size)
        y0 = ds.y_array[:, 0]
        x1 = ds.x_index[:, 0]
        uniq, inverse = np.unique(np.stack([y0, x1, codes], axis=1), axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        lookup = np.empty((len(uniq), 2), dtype=np.int64)
        for u, (y0_u, x1_u, code) in enumerate(uniq):
            if self.spec is FeedbackSpec.SPEC1:
                init = InitialCondition(int(y0_u), self.support.values[int(x1_u)])
            else:
                init = InitialCondition(int(y0_u))
            hit = self._code_map.get((init, int(code)))
            if hit is None:
                raise OutsideUniverseError("path outside context")
            lookup[u] = hit
        block_of_obs = lookup[inverse, 0]
        member_of_obs = lookup[inverse, 1]
        counts = np.bincount(member_of_obs, minlength=len(self.member_stats)).astype(float)
        n_per_block = np.bincount(block_of_obs, minlength=len(self.blocks)).astype(float)
        return _Resolved(block_of_obs, member_of_obs, counts, n_per_block)

    def resolve(self, ds: PanelDataset) -> _Resolved:
        if ds is self._source and self._resolved is not None:
            return self._resolved
        return self._resolve(ds)

    def member_log_probs(self, theta) -> np.ndarray:
        """Log conditional probability of every member within its own block."""
        eta = self.member_stats @ _theta_array(theta)
        return eta - self._segment_lse(eta)[self.member_block]

    def member_probs(self, theta) -> np.ndarray:
        return np.exp(self.member_log_probs(theta))

    def _segment_lse(self, eta: np.ndarray) -> np.ndarray:
        if len(eta) == 0:
            return np.zeros(0)
        shift = np.maximum.reduceat(eta, self.segment_starts)
        total = np.add.reduceat(np.exp(eta - shift[self.member_block]), self.segment_starts)
        return shift + np.log(total)

    def block_probabilities(self, block_index: int, theta) -> np.ndarray:
        start = self.segment_starts[block_index]
        stop = start + self.blocks[block_index].size
        return self.member_probs(theta)[start:stop]


def cond_log_lik(theta, ds: PanelDataset, ctx: CondLikContext) -> float:
    """Sum over individuals of the log conditional probability of the observed history."""
    res = ctx.resolve(ds)
    logp = ctx.member_log_probs(theta)
    return float(np.dot(res.counts, logp))


def _moments(theta, ctx: CondLikContext):
    """Per-block conditional mean and second moment of ``z = (t_rho, t_beta)``."""
    p = ctx.member_probs(theta)
    z = ctx.member_stats
    mean = np.add.reduceat(p[:, None] * z, ctx.segment_starts, axis=0)
    second = np.add.reduceat(p[:, None, None] * z[:, :, None] * z[:, None, :],
                             ctx.segment_starts, axis=0)
    return mean, second


def score(theta, ds: PanelDataset, ctx: CondLikContext) -> np.ndarray:
    """Gradient: observed statistic minus its conditional expectation, summed over individuals."""
    res = ctx.resolve(ds)
    mean, _ = _moments(theta, ctx)
    observed = res.counts @ ctx.member_stats
    return observed - res.n_per_block @ mean


def hessian(theta, ds: PanelDataset, ctx: CondLikContext) -> np.ndarray:
    """Minus the sum over individuals of the conditional covariance of ``z``."""
    res = ctx.resolve(ds)
    mean, second = _moments(theta, ctx)
    cov = second - mean[:, :, None] * mean[:, None, :]
    h = -np.einsum("b,bij->ij", res.n_per_block, cov)
    return 0.5 * (h + h.T)


def hessian_pairwise(theta, block: Block) -> np.ndarray:
    """Second derivative for one observation in ``block``, via the explicit pair sum.

    Sums ``w_a w_b (z_a - z_b)(z_a - z_b)'`` over ordered member pairs and
    divides by the squared normaliser (halved for ordered pairs).  Slow; used
    as an independent check of :func:`hessian`.
    """
    th = _theta_array(theta)
    z = np.array([[float(ts.t_rho), float(ts.t_beta)] for _, ts in block.members])
    eta = z @ th
    w = np.exp(eta - eta.max())
    diff = z[:, None, :] - z[None, :, :]
    num = np.einsum("a,b,abi,abj->ij", w, w, diff, diff)
    return -0.5 * num / w.sum() ** 2


@dataclass(frozen=True)
class FeedbackKernel:
    """Individual Markov kernel for the covariate.

    ``rows`` maps the conditioning key to a probability vector over the
    support: ``(x, y)`` under SPEC1 and ``y`` under SPEC2.
    """

    spec: FeedbackSpec
    support: Support
    rows: dict

    def __post_init__(self):
        expected = set(self.row_keys(self.spec, self.support))
        if set(self.rows) != expected:
            raise ValueError("kernel rows do not match the conditioning keys for this spec")
        clean = {}
        for key, row in self.rows.items():
            arr = np.asarray(row, dtype=float)
            if arr.shape != (self.support.size,):
                raise ValueError(f"row {key!r} has wrong length")
            if not np.all(arr > 0):
                raise ValueError(f"row {key!r} must be strictly positive")
            if abs(arr.sum() - 1.0) > 1e-12:
                raise ValueError(f"row {key!r} sums to {arr.sum()!r}, not 1")
            clean[key] = tuple(float(v) for v in arr)
        object.__setattr__(self, "rows", clean)

    @staticmethod
    def row_keys(spec: FeedbackSpec, support: Support) -> list:
        if spec is FeedbackSpec.SPEC2:
            return [0, 1]
        return [(x, y) for x in support.values for y in (0, 1)]

    @classmethod
    def uniform(cls, spec, support: Support) -> "FeedbackKernel":
        spec = FeedbackSpec.parse(spec)
        k = support.size
        return cls(spec, support, {key: (1.0 / k,) * k for key in cls.row_keys(spec, support)})

    @classmethod
    def dirichlet(cls, spec, support: Support, rng: np.random.Generator,
                  concentration=None) -> "FeedbackKernel":
        spec = FeedbackSpec.parse(spec)
        conc = np.ones(support.size) if concentration is None else np.asarray(concentration, float)
        rows = {}
        for key in cls.row_keys(spec, support):
            row = rng.dirichlet(conc)
            # rows must be interior; renormalise after flooring tiny draws
            row = np.maximum(row, 1e-300)
            rows[key] = row / row.sum()
        return cls(spec, support, rows)

    def prob(self, x, *, prev_y: int, prev_x=None) -> float:
        key = prev_y if self.spec is FeedbackSpec.SPEC2 else (prev_x, prev_y)
        return self.rows[key][self.support.index(x)]

    def as_array(self) -> np.ndarray:
        """Rows stacked in :meth:`row_keys` order."""
        return np.array([self.rows[k] for k in self.row_keys(self.spec, self.support)])


def _log_logistic_term(y: int, eta: float) -> float:
    # log F(eta) if y else log(1 - F(eta)), F logistic
    if y:
        return -math.log1p(math.exp(-eta)) if eta > -30 else eta - math.log1p(math.exp(eta))
    return -math.log1p(math.exp(eta)) if eta < 30 else -eta - math.log1p(math.exp(-eta))


def log_joint_prob_full(p: Path, theta, alpha: float, G: FeedbackKernel) -> float:
    """Log of the full probability of a history given its init, ``alpha`` and ``G``."""
    if G.spec is not p.spec:
        raise KernelMismatchError("kernel/spec mismatch")
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    rho, beta = _theta_array(theta)
    x = p.full_x()
    y = p.full_y()
    total = 0.0
    for t in range(1, p.T + 1):
        eta = rho * y[t - 1] + beta * float(x[t - 1]) + alpha
        total += _log_logistic_term(y[t], eta)
    try:
        if p.spec is FeedbackSpec.SPEC1:
            for t in range(2, p.T + 1):
                total += math.log(G.prob(x[t - 1], prev_y=y[t - 1], prev_x=x[t - 2]))
        else:
            for t in range(1, p.T + 1):
                total += math.log(G.prob(x[t - 1], prev_y=y[t - 1]))
    except KeyError as exc:
        raise KernelMismatchError("kernel/spec mismatch") from exc
    return total


def joint_prob_full(p: Path, theta, alpha: float, G: FeedbackKernel) -> float:
    """Probability of ``(x, y)`` given the init under the full model with nuisance terms."""
    return math.exp(log_joint_prob_full(p, theta, alpha, G))


def conditional_from_joint(block: Block, theta, alpha: float, G: FeedbackKernel) -> np.ndarray:
    """Member probabilities obtained by conditioning the full joint law on ``block``."""
    logs = np.array([log_joint_prob_full(p, theta, alpha, G) for p, _ in block.members])
    w = np.exp(logs - logs.max())
    return w / w.sum()


def conditional_closed_form(block: Block, theta) -> np.ndarray:
    """Member probabilities from ``exp(theta . z)`` normalised within ``block``."""
    th = _theta_array(theta)
    eta = np.array([th[0] * ts.t_rho + th[1] * float(ts.t_beta) for _, ts in block.members])
    w = np.exp(eta - eta.max())
    return w / w.sum()


def heterogeneity_denominator(p: Path, theta, alpha: float) -> float:
    """``prod_t {1 + exp(rho y_{t-1} + beta x_t + alpha)}`` computed along the path."""
    rho, beta = _theta_array(theta)
    x = p.full_x()
    y = p.full_y()
    return math.prod(1.0 + math.exp(rho * y[t - 1] + beta * float(x[t - 1]) + alpha)
                     for t in range(1, p.T + 1))

