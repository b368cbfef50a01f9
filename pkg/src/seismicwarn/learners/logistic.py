"""L1/L2-regularized logistic regression.

Minimises ``penalty(w) + C * sum_i s_i * logloss_i`` where ``s_i`` are
class weights and the intercept is not penalised. Features are z-scored
internally. The L1 problem is solved as a smooth bound-constrained problem
over ``w = w_pos - w_neg`` with ``w_pos, w_neg >= 0``; both use L-BFGS-B.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .extra_trees import class_weights

DEFAULTS = {
    "penalty": "l2",
    "C": 1.0,
    "class_weight": None,
    "tol": 1e-10,
    "max_iter": 10000,
    "solver": "lbfgs",
}


def check_params(params: dict) -> dict:
    out = dict(DEFAULTS)
    for key, value in params.items():
        if key not in DEFAULTS:
            raise ValueError(f"unknown logreg parameter {key!r}")
        out[key] = value
    if out["penalty"] not in ("l1", "l2"):
        raise ValueError("penalty must be l1 or l2")
    if not out["C"] > 0:
        raise ValueError("C must be positive")
    if out["tol"] <= 0 or int(out["max_iter"]) < 1:
        raise ValueError("tol must be positive and max_iter at least 1")
    return out


def objective(theta, X, y, sw, C, penalty):
    """Regularised loss and its gradient.

    For ``penalty="l2"`` ``theta = [w, b]``; for ``"l1"`` ``theta =
    [w_pos, w_neg, b]`` and the penalty is ``sum(w_pos + w_neg)``.
    """
    d = X.shape[1]
    if penalty == "l2":
        w, b = theta[:d], theta[d]
    else:
        w, b = theta[:d] - theta[d : 2 * d], theta[2 * d]
    z = X @ w + b
    loss = C * np.sum(sw * (np.logaddexp(0.0, z) - y * z))
    r = C * sw * (expit(z) - y)
    gw, gb = X.T @ r, r.sum()
    if penalty == "l2":
        return loss + 0.5 * w @ w, np.concatenate([gw + w, [gb]])
    return loss + theta[: 2 * d].sum(), np.concatenate([gw + 1.0, -gw + 1.0, [gb]])


class LogisticRegression:
    def __init__(self, **params):
        self.params = check_params(params)
        self.coef_ = None
        self.intercept_ = 0.0
        self.mean_ = None
        self.scale_ = None

    def fit(self, X, y, seed: int = 0) -> LogisticRegression:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if y.min() == y.max():
            raise ValueError("logistic regression needs both classes in the training labels")
        p = self.params
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        Z = (X - self.mean_) / self.scale_
        w0, w1 = class_weights(p["class_weight"], y)
        sw = np.where(y == 1, w1, w0)
        d = Z.shape[1]
        rate = (sw * y).sum() / sw.sum()
        b0 = np.log(rate / (1 - rate))
        if p["penalty"] == "l2":
            theta0 = np.concatenate([np.zeros(d), [b0]])
            bounds = None
        else:
            theta0 = np.concatenate([np.zeros(2 * d), [b0]])
            bounds = [(0, None)] * (2 * d) + [(None, None)]
        res = minimize(
            objective,
            theta0,
            args=(Z, y, sw, p["C"], p["penalty"]),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": int(p["max_iter"]), "gtol": p["tol"], "ftol": p["tol"] * 1e-3, "maxcor": 20},
        )
        theta = res.x
        if p["penalty"] == "l2":
            self.coef_, self.intercept_ = theta[:d], float(theta[d])
        else:
            self.coef_, self.intercept_ = theta[:d] - theta[d : 2 * d], float(theta[2 * d])
        self.converged_ = bool(res.success)
        return self

    def decision_function(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean_) / self.scale_
        # elementwise sum so a row's score does not depend on the batch
        return (Z * self.coef_).sum(axis=1) + self.intercept_

    def predict_score(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_dict(self) -> dict:
        return {
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
        }

    @classmethod
    def from_dict(cls, params: dict, state: dict) -> LogisticRegression:
        model = cls(**params)
        model.coef_ = np.array(state["coef"])
        model.intercept_ = state["intercept"]
        model.mean_ = np.array(state["mean"])
        model.scale_ = np.array(state["scale"])
        return model
