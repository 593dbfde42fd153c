"""Conditional maximum likelihood for (rho, beta).

Only components identified in the sample are optimised; the others are held
at 0 and reported as absent.  The objective is concave, so a Newton step with
Armijo backtracking from the origin suffices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .identification import COMPONENTS, Criterion, IdentificationReport, dataset_identification
from .likelihood import CondLikContext, cond_log_lik, hessian, score
from .model import DEFAULT_BOX, PanelDataset, Theta

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 60
MAX_CONDITION = 1e12


class EstimationError(RuntimeError):
    pass


class NotIdentifiedError(EstimationError, ValueError):
    pass


class NotConvergedError(EstimationError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SingularInformationError(EstimationError):
    pass


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit_cmle`.

    ``theta_hat`` maps component name to its estimate, or ``None`` when the
    component is not identified in the sample.
    """

    theta_hat: dict
    std_err: dict
    converged: bool
    iterations: int
    final_grad_norm: float
    n_informative_blocks: int
    log_lik: float
    at_boundary: bool = False
    identification: IdentificationReport | None = None
    history: tuple = field(default=(), repr=False)

    @property
    def free(self) -> tuple:
        return tuple(c for c in COMPONENTS if self.theta_hat[c] is not None)

    def theta(self) -> Theta:
        """Full parameter with absent components at their fixed value 0."""
        return Theta(self.theta_hat["rho"] or 0.0, self.theta_hat["beta"] or 0.0)

    def to_json(self) -> dict:
        return {
            "theta_hat": dict(self.theta_hat),
            "std_err": dict(self.std_err),
            "converged": self.converged,
            "iterations": self.iterations,
            "final_grad_norm": self.final_grad_norm,
            "n_informative_blocks": self.n_informative_blocks,
            "log_lik": self.log_lik,
            "at_boundary": self.at_boundary,
            "std_err_method": "Wald, inverse conditional observed information",
        }


@dataclass
class _NewtonState:
    theta: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    at_boundary: bool
    history: list


def _projected_grad(theta, grad, free, box):
    g = np.where(free, grad, 0.0)
    # at an active bound, a gradient pushing outward is not a descent failure
    g = np.where((theta >= box) & (g > 0), 0.0, g)
    g = np.where((theta <= -box) & (g < 0), 0.0, g)
    return g


def newton_maximize(f, grad, hess, theta0, free, *, tol=1e-10, max_iter=100,
                    box=DEFAULT_BOX) -> _NewtonState:
    """Maximise a smooth concave ``f`` over the ``free`` coordinates inside ``[-box, box]``.

    Newton direction on the free block, backtracking by halving until the
    Armijo condition holds.  Near the optimum the predicted increase falls
    below the rounding noise of ``f``; a step is then accepted if it does not
    lower ``f`` beyond that noise and shrinks the gradient.
    """
    free = np.asarray(free, dtype=bool)
    theta = np.clip(np.asarray(theta0, dtype=float).copy(), -box, box)
    value = f(theta)
    g = _projected_grad(theta, grad(theta), free, box)
    history = [value]
    it = 0
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return _NewtonState(theta, value, gnorm, it, True,
                                bool(np.any(np.abs(theta[free]) >= box)), history)
        if it >= max_iter:
            return _NewtonState(theta, value, gnorm, it, False,
                                bool(np.any(np.abs(theta[free]) >= box)), history)
        it += 1
        idx = np.flatnonzero(free)
        H = hess(theta)[np.ix_(idx, idx)]
        gf = g[idx]
        try:
            step = -np.linalg.solve(H, gf)
            if not np.all(np.isfinite(step)) or step @ gf <= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = gf / max(1.0, float(np.abs(np.diag(H)).max()) if H.size else 1.0)
        direction = np.zeros_like(theta)
        direction[idx] = step
        slope = float(g @ direction)
        noise = 64 * np.finfo(float).eps * max(1.0, abs(value))
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            cand = np.clip(theta + t * direction, -box, box)
            cand_value = f(cand)
            if cand_value >= value + ARMIJO_C * t * slope:
                accepted = True
                break
            if t * slope <= noise and cand_value >= value - noise:
                cand_g = _projected_grad(cand, grad(cand), free, box)
                if np.linalg.norm(cand_g) < gnorm:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            logger.debug("line search failed at iteration %d, grad norm %.3g", it, gnorm)
            return _NewtonState(theta, value, gnorm, it, False,
                                bool(np.any(np.abs(theta[free]) >= box)), history)
        theta, value = cand, cand_value
        g = _projected_grad(theta, grad(theta), free, box)
        history.append(value)


def _free_mask(report: IdentificationReport) -> np.ndarray:
    return np.array([report.rho_identified, report.beta_identified])


def fit_cmle(ds: PanelDataset, tol: float = 1e-10, max_iter: int = 100, box: float = DEFAULT_BOX,
             start=(0.0, 0.0), ctx: CondLikContext | None = None,
             criterion=Criterion.SPAN) -> FitResult:
    """Conditional MLE of theta on the components identified in ``ds``.

    Raises
    ------
    NotIdentifiedError
        No realised block carries variation in either statistic.
    NotConvergedError
        Gradient norm still above ``tol`` after ``max_iter`` iterations.
    """
    report = dataset_identification(ds, criterion)
    free = _free_mask(report)
    if not free.any():
        raise NotIdentifiedError("no identified parameters in sample")
    if ctx is None:
        ctx = CondLikContext.build(ds)
    start = np.where(free, np.asarray(start, dtype=float), 0.0)
    state = newton_maximize(
        lambda th: cond_log_lik(th, ds, ctx),
        lambda th: score(th, ds, ctx),
        lambda th: hessian(th, ds, ctx),
        start, free, tol=tol, max_iter=max_iter, box=box)
    theta_hat = {c: (float(state.theta[k]) if free[k] else None) for k, c in enumerate(COMPONENTS)}
    result = FitResult(
        theta_hat=theta_hat,
        std_err={c: None for c in COMPONENTS},
        converged=state.converged,
        iterations=state.iterations,
        final_grad_norm=state.grad_norm,
        n_informative_blocks=ctx.n_informative_blocks,
        log_lik=state.value,
        at_boundary=state.at_boundary,
        identification=report,
        history=tuple(state.history),
    )
    if not state.converged:
        raise NotConvergedError(
            f"not converged after {state.iterations} iterations "
            f"(gradient norm {state.grad_norm:.3g})", result)
    try:
        se = std_errors(result, ds, ctx)
    except SingularInformationError:
        logger.warning("information matrix singular at the estimate; std errors omitted")
        se = {c: None for c in COMPONENTS}
    return replace(result, std_err=se)


def std_errors(fit: FitResult, ds: PanelDataset, ctx: CondLikContext | None = None) -> dict:
    """Square roots of the diagonal of the inverse negative Hessian on free components."""
    if not fit.converged:
        raise EstimationError("std errors require a converged fit")
    if ctx is None:
        ctx = CondLikContext.build(ds)
    free = [k for k, c in enumerate(COMPONENTS) if fit.theta_hat[c] is not None]
    info = -hessian(fit.theta().as_array(), ds, ctx)[np.ix_(free, free)]
    if not np.all(np.isfinite(info)) or np.linalg.cond(info) > MAX_CONDITION:
        raise SingularInformationError("singular information")
    cov = np.linalg.inv(info)
    diag = np.diag(cov)
    if np.any(diag <= 0):
        raise SingularInformationError("singular information")
    out = {c: None for c in COMPONENTS}
    for k, v in zip(free, np.sqrt(diag)):
        out[COMPONENTS[k]] = float(v)
    return out


def profile(ds: PanelDataset, component: str, grid, *, tol: float = 1e-10, max_iter: int = 100,
            box: float = DEFAULT_BOX, ctx: CondLikContext | None = None) -> list:
    """Profile log-likelihood over ``grid`` for ``component``.

    At each grid value the other component is re-maximised if it is
    identified in the sample and held at 0 otherwise.  The profiled component
    need not be identified; a flat curve is exactly what non-identification
    looks like.
    """
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}, got {component!r}")
    grid = [float(v) for v in grid]
    if not grid:
        return []
    if any(not np.isfinite(v) or abs(v) > box for v in grid):
        raise ValueError("profile grid must be finite and inside the parameter box")
    k = COMPONENTS.index(component)
    other = 1 - k
    report = dataset_identification(ds)
    other_free = bool(_free_mask(report)[other])
    if ctx is None:
        ctx = CondLikContext.build(ds)
    free = np.zeros(2, dtype=bool)
    free[other] = other_free
    out = []
    warm = 0.0
    for v in grid:
        start = np.zeros(2)
        start[k] = v
        start[other] = warm
        if other_free:
            state = newton_maximize(
                lambda th: cond_log_lik(th, ds, ctx),
                lambda th: score(th, ds, ctx),
                lambda th: hessian(th, ds, ctx),
                start, free, tol=tol, max_iter=max_iter, box=box)
            if not state.converged:
                raise NotConvergedError(f"profile not converged at {component}={v}")
            warm = float(state.theta[other])
            out.append((v, state.value))
        else:
            out.append((v, cond_log_lik(start, ds, ctx)))
    return out
