"""Least-squares and logistic-regression kernels.

Both kernels append the intercept as the LAST column of the design, so
coefficient vectors read ``(regressors..., intercept)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog
from scipy.special import expit


class EstimationError(ValueError):
    """Raised when an estimator cannot be computed on the given data."""


class CollinearityError(EstimationError):
    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__("rank-deficient design; collinear column(s): " + ", ".join(columns))


@dataclass(frozen=True)
class LinearFit:
    coefficients: np.ndarray
    covariance: np.ndarray
    residual_variance: float
    residuals: np.ndarray = field(repr=False)
    names: tuple[str, ...] = ()

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def std_error(self, name: str) -> float:
        i = self.names.index(name)
        return float(np.sqrt(max(self.covariance[i, i], 0.0)))


def _design(X, n_rows: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if X.size else np.empty((n_rows, 0))
    return np.column_stack([X, np.ones(X.shape[0])])


def ols_fit(X, y, names=None) -> LinearFit:
    """Least squares with an appended intercept, solved by pivoted Householder QR.

    The covariance is ``s^2 (R^T R)^{-1}`` built from the triangular factor,
    never from the normal equations.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    A = _design(X, y.shape[0])
    n, p = A.shape
    if A.shape[0] != y.shape[0]:
        raise EstimationError(f"design has {A.shape[0]} rows but response has {y.shape[0]}")
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p - 1))
    names = names + ("intercept",)
    if n <= p:
        raise EstimationError(f"need more rows than coefficients ({n} <= {p})")

    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(n, p) * np.finfo(float).eps * diag[0] if diag[0] > 0 else 0.0
    rank = int(np.sum(diag > tol)) if diag[0] > 0 else 0
    if rank < p:
        raise CollinearityError(sorted(names[j] for j in piv[rank:]))

    coef_piv = scipy.linalg.solve_triangular(R, Q.T @ y)
    coef = np.empty(p)
    coef[piv] = coef_piv
    resid = y - A @ coef
    dof = n - p
    s2 = float(resid @ resid) / dof
    r_inv = scipy.linalg.solve_triangular(R, np.eye(p))
    cov_piv = s2 * (r_inv @ r_inv.T)
    cov = np.empty((p, p))
    cov[np.ix_(piv, piv)] = cov_piv
    cov = 0.5 * (cov + cov.T)
    return LinearFit(coef, cov, s2, resid, names)


# -- logistic regression -------------------------------------------------

def logistic_loglik(A: np.ndarray, t: np.ndarray, beta: np.ndarray, penalty: float = 0.0) -> float:
    """Mean Bernoulli log-likelihood minus ``penalty/2 * ||beta||^2``."""
    eta = A @ beta
    return float(np.mean(t * eta - np.logaddexp(0.0, eta)) - 0.5 * penalty * beta @ beta)


def logistic_gradient(A: np.ndarray, t: np.ndarray, beta: np.ndarray, penalty: float = 0.0) -> np.ndarray:
    return A.T @ (t - expit(A @ beta)) / A.shape[0] - penalty * beta


def _logistic_hessian(A, beta, penalty):
    p = expit(A @ beta)
    w = p * (1.0 - p)
    return (A.T * w) @ A / A.shape[0] + penalty * np.eye(A.shape[1])


@dataclass(frozen=True)
class LogisticFit:
    coefficients: np.ndarray
    converged: bool
    n_iter: int
    separation: bool
    loglik_path: tuple[float, ...]

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return expit(_design(X, X.shape[0]) @ self.coefficients)


def _newton(A, t, penalty, max_iter, tol):
    beta = np.zeros(A.shape[1])
    ll = logistic_loglik(A, t, beta, penalty)
    path = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = logistic_gradient(A, t, beta, penalty)
        if np.linalg.norm(g) < tol:
            converged = True
            it -= 1
            break
        H = _logistic_hessian(A, beta, penalty)
        try:
            step = scipy.linalg.solve(H, g, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        # step halving keeps the objective non-decreasing
        scale = 1.0
        for _ in range(60):
            cand = beta + scale * step
            new_ll = logistic_loglik(A, t, cand, penalty)
            if new_ll >= ll:
                break
            scale *= 0.5
        else:
            break
        beta, ll = cand, new_ll
        path.append(ll)
    else:
        converged = np.linalg.norm(logistic_gradient(A, t, beta, penalty)) < tol
    return beta, converged, it, path


def _is_separated(A, t) -> bool:
    """LP check for (quasi-)complete separation: is there a nonzero direction
    that never misclassifies a row?"""
    s = 2.0 * t - 1.0
    M = s[:, None] * A
    res = linprog(-M.sum(axis=0), A_ub=-M, b_ub=np.zeros(A.shape[0]),
                  bounds=[(-1.0, 1.0)] * A.shape[1], method="highs")
    return bool(res.status == 0 and -res.fun > 1e-7 * A.shape[0])


def logistic_fit(X, t, max_iter: int = 100, tol: float = 1e-8,
                 separation_penalty: float = 1e-6) -> LogisticFit:
    """Maximum-likelihood logistic regression by damped Newton iterations.

    ``tol`` bounds the Euclidean norm of the gradient of the MEAN
    log-likelihood. When the classes are (quasi-)separated the MLE does not
    exist; the fit is then redone with an L2 penalty of ``separation_penalty``
    and ``separation`` is set.
    """
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if not np.all((t == 0.0) | (t == 1.0)):
        raise EstimationError("logistic_fit requires a binary 0/1 response")
    if t.min() == t.max():
        raise EstimationError("logistic_fit requires both classes to be present")
    A = _design(X, t.shape[0])
    beta, converged, n_iter, path = _newton(A, t, 0.0, max_iter, tol)
    suspicious = not converged or np.max(np.abs(A @ beta)) > 15.0
    if suspicious and _is_separated(A, t):
        beta, converged, n_iter, path = _newton(A, t, separation_penalty, max_iter, tol)
        return LogisticFit(beta, converged, n_iter, True, tuple(path))
    return LogisticFit(beta, bool(converged), n_iter, False, tuple(path))
