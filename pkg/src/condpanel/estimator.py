"""scikit-learn style wrapper around :func:`fit_cmle`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .estimation import fit_cmle
from .identification import COMPONENTS
from .likelihood import CondLikContext, cond_log_lik
from .model import DEFAULT_BOX, FeedbackSpec, PanelDataset, Support


def check_panel(X, y=None, *, spec=2, support=None) -> PanelDataset:
    """Coerce ``X`` (and ``y``) to a validated :class:`PanelDataset`.

    ``X`` is either a PanelDataset, in which case ``y`` must be None, or an
    ``(N, T)`` array of covariate values ``x_1..x_T``; ``y`` is then the
    ``(N, T+1)`` binary array ``y_0..y_T``.  Covariate values must belong to
    ``support`` (default ``{0, 1, ..., max(X)}``).
    """
    if isinstance(X, PanelDataset):
        if y is not None:
            raise ValueError("pass y=None when X is a PanelDataset")
        verdict = X.validate()
        if not verdict:
            raise ValueError("; ".join(verdict.violations))
        return X
    if y is None:
        raise ValueError("y (outcomes y_0..y_T) is required with array input")
    spec = FeedbackSpec.parse(spec)
    X = check_array(X, dtype=None, ensure_2d=True, ensure_all_finite=True)
    y = check_array(y, dtype=np.int64, ensure_2d=True)
    if y.shape != (X.shape[0], X.shape[1] + 1):
        raise ValueError(f"y must have shape (N, T+1) = {(X.shape[0], X.shape[1] + 1)}, got {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("y must be binary")
    if support is None:
        if not np.all(np.equal(np.mod(X.astype(float), 1), 0)) or X.min() < 0:
            raise ValueError("default support is {0..K}; pass support for other covariate values")
        support = Support.default(max(2, int(X.max()) + 1))
    elif not isinstance(support, Support):
        support = Support(tuple(support))
    lookup = {float(v): i for i, v in enumerate(support.values)}
    try:
        x_index = np.vectorize(lambda v: lookup[float(v)], otypes=[np.int64])(X)
    except KeyError as exc:
        raise ValueError(f"covariate off support: {exc.args[0]}") from None
    return PanelDataset.from_arrays(spec, support, x_index, y)


class ConditionalLogitPanel(BaseEstimator):
    """Conditional-likelihood estimator for the dynamic panel logit with Markov feedback.

    Parameters
    ----------
    spec : {1, 2}
        Feedback specification of the covariate process.
    support : sequence, optional
        Covariate support; inferred as ``{0..max(X)}`` when omitted.
    tol, max_iter, box : float, int, float
        Newton gradient tolerance, iteration cap and parameter box.

    Attributes
    ----------
    coef_ : ndarray of shape (2,)
        ``(rho, beta)``; NaN for components not identified in the sample.
    std_err_ : ndarray of shape (2,)
    identified_ : dict
    fit_result_ : FitResult
    """

    def __init__(self, spec=2, support=None, tol=1e-10, max_iter=100, box=DEFAULT_BOX):
        self.spec = spec
        self.support = support
        self.tol = tol
        self.max_iter = max_iter
        self.box = box

    def fit(self, X, y=None):
        ds = check_panel(X, y, spec=self.spec, support=self.support)
        ctx = CondLikContext.build(ds)
        res = fit_cmle(ds, tol=self.tol, max_iter=self.max_iter, box=self.box, ctx=ctx)
        self.fit_result_ = res
        self.support_ = ds.support
        self.coef_ = np.array([np.nan if res.theta_hat[c] is None else res.theta_hat[c]
                               for c in COMPONENTS])
        self.std_err_ = np.array([np.nan if res.std_err[c] is None else res.std_err[c]
                                  for c in COMPONENTS])
        self.identified_ = {c: res.theta_hat[c] is not None for c in COMPONENTS}
        self.n_iter_ = res.iterations
        self.n_informative_blocks_ = res.n_informative_blocks
        return self

    @property
    def rho_(self):
        check_is_fitted(self, "coef_")
        return self.coef_[0]

    @property
    def beta_(self):
        check_is_fitted(self, "coef_")
        return self.coef_[1]

    def score(self, X, y=None):
        """Mean conditional log-likelihood per individual at the fitted theta."""
        check_is_fitted(self, "coef_")
        support = self.support if self.support is not None else self.support_
        ds = check_panel(X, y, spec=self.spec, support=support)
        ctx = CondLikContext.build(ds)
        return cond_log_lik(self.fit_result_.theta().as_array(), ds, ctx) / ds.N
