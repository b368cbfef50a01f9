"""Two-class linear discriminant with a shrunk pooled covariance."""
from __future__ import annotations

import numpy as np

DEFAULTS = {"shrinkage": "auto"}


def check_params(params: dict) -> dict:
    out = dict(DEFAULTS)
    for key, value in params.items():
        if key not in DEFAULTS:
            raise ValueError(f"unknown lda parameter {key!r}")
        out[key] = value
    s = out["shrinkage"]
    if s is not None and s != "auto" and not 0 <= float(s) <= 1:
        raise ValueError("shrinkage must be 'auto', None or in [0, 1]")
    return out


def ledoit_wolf_shrinkage(X: np.ndarray) -> float:
    """Ledoit-Wolf optimal weight on the scaled identity for centered ``X``.

    Parameters
    ----------
    X : array of shape (n, d), already centered.

    Returns
    -------
    float in [0, 1]
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    X2 = X**2
    emp_cov_trace = X2.sum(axis=0) / n
    mu = emp_cov_trace.sum() / d
    beta_ = (X2.T @ X2).sum()
    delta_ = ((X.T @ X) ** 2).sum() / n**2
    beta = (beta_ / n - delta_) / (d * n)
    delta = (delta_ - 2 * mu * emp_cov_trace.sum() + d * mu**2) / d
    beta = min(beta, delta)
    return 0.0 if beta == 0 else float(beta / delta)


def shrunk_covariance(S: np.ndarray, shrinkage: float) -> np.ndarray:
    d = S.shape[0]
    return (1 - shrinkage) * S + shrinkage * np.trace(S) / d * np.eye(d)


class ShrinkageLDA:
    """Scores are the discriminant ``x.w + b``; higher means class 1."""

    def __init__(self, **params):
        self.params = check_params(params)
        self.coef_ = None
        self.intercept_ = 0.0
        self.shrinkage_ = None

    def fit(self, X, y, seed: int = 0) -> ShrinkageLDA:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).astype(bool)
        if y.all() or not y.any():
            raise ValueError("LDA needs both classes in the training labels")
        mu0, mu1 = X[~y].mean(axis=0), X[y].mean(axis=0)
        centered = X - np.where(y[:, None], mu1, mu0)
        scale = centered.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        Z = centered / scale
        S = Z.T @ Z / len(Z)
        s = self.params["shrinkage"]
        lam = ledoit_wolf_shrinkage(Z) if s == "auto" else (0.0 if s is None else float(s))
        cov = shrunk_covariance(S, lam)
        diff = (mu1 - mu0) / scale
        coef_z = np.linalg.lstsq(cov, diff, rcond=None)[0]
        self.coef_ = coef_z / scale
        self.shrinkage_ = lam
        prior1 = y.mean()
        self.intercept_ = float(-0.5 * (mu0 + mu1) @ self.coef_ + np.log(prior1 / (1 - prior1)))
        return self

    def predict_score(self, X) -> np.ndarray:
        # elementwise sum so a row's score does not depend on the batch
        return (np.asarray(X, dtype=float) * self.coef_).sum(axis=1) + self.intercept_

    def to_dict(self) -> dict:
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_, "shrinkage": self.shrinkage_}

    @classmethod
    def from_dict(cls, params: dict, state: dict) -> ShrinkageLDA:
        model = cls(**params)
        model.coef_ = np.array(state["coef"])
        model.intercept_ = state["intercept"]
        model.shrinkage_ = state["shrinkage"]
        return model
