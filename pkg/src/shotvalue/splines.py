"""Cubic B-spline bases and ridge-penalized logistic regression by IRLS.

The basis machinery replaces thin-plate smooths with quantile-knot cubic
B-splines (univariate) and one tensor-product surface, all with plain ridge
penalties on the spline coefficients. Smoothing strength is a single
multiplier selected by validation log-loss over a grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .errors import FitError

DEGREE = 3


@dataclass(frozen=True)
class SplineBasis1D:
    """Clamped cubic B-spline basis; inputs are clamped to the boundary
    knots so the design is total."""

    knots: np.ndarray  # full knot vector, boundary knots repeated

    def __post_init__(self):
        k = np.ascontiguousarray(self.knots, dtype=float)
        k.flags.writeable = False
        object.__setattr__(self, "knots", k)

    @property
    def n_basis(self):
        return len(self.knots) - DEGREE - 1

    @property
    def lo(self):
        return self.knots[DEGREE]

    @property
    def hi(self):
        return self.knots[-DEGREE - 1]

    def design(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return BSpline.design_matrix(x, self.knots, DEGREE).toarray()

    @classmethod
    def from_values(cls, values, n_interior=8):
        """Knots at the quantiles of the training values."""
        values = np.asarray(values, dtype=float)
        lo, hi = float(values.min()), float(values.max())
        if hi - lo < 1e-9:
            lo, hi = lo - 0.5, hi + 0.5
        qs = np.linspace(0, 1, n_interior + 2)[1:-1]
        interior = np.unique(np.quantile(values, qs))
        interior = interior[(interior > lo) & (interior < hi)]
        knots = np.concatenate(
            [np.full(DEGREE + 1, lo), interior, np.full(DEGREE + 1, hi)]
        )
        return cls(knots=knots)


@dataclass(frozen=True)
class TensorBasis2D:
    """Tensor product of two univariate bases (spatial surface)."""

    basis_x: SplineBasis1D
    basis_y: SplineBasis1D

    @property
    def n_basis(self):
        return self.basis_x.n_basis * self.basis_y.n_basis

    def design(self, x, y):
        dx = self.basis_x.design(x)
        dy = self.basis_y.design(y)
        return np.einsum("ni,nj->nij", dx, dy).reshape(len(dx), -1)

    @classmethod
    def from_values(cls, x, y, n_interior=2):
        return cls(
            basis_x=SplineBasis1D.from_values(x, n_interior),
            basis_y=SplineBasis1D.from_values(y, n_interior),
        )


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def log_loss(y, p, eps=1e-12):
    p = np.clip(p, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def irls_logistic(X, y, penalty_diag, max_iter=100, tol=1e-10):
    """Penalized logistic regression via iteratively reweighted least squares.

    ``penalty_diag`` is the ridge weight per column (0 for unpenalized).
    Returns the coefficient vector. Raises FitError naming the iteration on
    divergence.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    beta = np.zeros(p)
    pen = np.asarray(penalty_diag, dtype=float)

    def objective(b):
        eta = X @ b
        # log-likelihood - 0.5 * ridge
        ll = float(y @ eta - np.sum(np.logaddexp(0.0, eta)))
        return ll - 0.5 * float(b @ (pen * b))

    obj = objective(beta)
    for it in range(max_iter):
        eta = X @ beta
        mu = _sigmoid(eta)
        w = np.maximum(mu * (1.0 - mu), 1e-10)
        z = eta + (y - mu) / w
        xw = X * w[:, None]
        h = X.T @ xw + np.diag(pen)
        g = X.T @ (w * z)
        try:
            new_beta = np.linalg.solve(h, g)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"IRLS normal equations singular at iteration {it}") from exc
        new_obj = objective(new_beta)
        # Step halving keeps the penalized likelihood climbing.
        step = 1.0
        while new_obj < obj - 1e-12 and step > 1e-8:
            step *= 0.5
            new_beta = beta + step * (new_beta - beta)
            new_obj = objective(new_beta)
        if step <= 1e-8:
            raise FitError(f"IRLS diverged at iteration {it}")
        delta = np.max(np.abs(new_beta - beta))
        beta = new_beta
        if abs(new_obj - obj) <= tol * (abs(obj) + 1.0) and delta < 1e-8:
            return beta
        obj = new_obj
    return beta
