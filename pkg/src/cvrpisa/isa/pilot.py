"""PILOT: a linear 2-D projection whose coordinates linearly predict features and performance.

With F (n x m) and Y (n x a) standardized, PILOT finds A (2 x m), B (m x 2)
and C (a x 2) minimizing

    ||F^T - B Z||^2 + ||Y^T - C Z||^2,    Z = A F^T,

where norms are Frobenius. Arrays here are instance-major, so ``Z`` is n x 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


class IllConditioned(ValueError):
    pass


@dataclass
class PilotResult:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Z: np.ndarray
    objective: float
    restart_objectives: list[float] = field(default_factory=list)
    method: str = "analytic"


def objective(A, B, C, F, Y) -> float:
    Z = F @ A.T
    rf = F - Z @ B.T
    ry = Y - Z @ C.T
    return float((rf**2).sum() + (ry**2).sum())


def _split(x, m, a):
    A = x[: 2 * m].reshape(2, m)
    B = x[2 * m: 4 * m].reshape(m, 2)
    C = x[4 * m:].reshape(a, 2)
    return A, B, C


def _value_and_grad(x, F, Y):
    m, a = F.shape[1], Y.shape[1]
    A, B, C = _split(x, m, a)
    Z = F @ A.T
    rf = F - Z @ B.T
    ry = Y - Z @ C.T
    val = (rf**2).sum() + (ry**2).sum()
    gB = -2.0 * rf.T @ Z
    gC = -2.0 * ry.T @ Z
    gZ = -2.0 * (rf @ B + ry @ C)
    gA = gZ.T @ F
    return val, np.concatenate([gA.ravel(), gB.ravel(), gC.ravel()])


def stationarity(result: PilotResult, F, Y, h: float = 1e-6) -> float:
    """Max-norm of the central finite-difference gradient, divided by max(1, objective)."""
    F = np.asarray(F, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(F), -1)
    x = np.concatenate([result.A.ravel(), result.B.ravel(), result.C.ravel()])
    m, a = F.shape[1], Y.shape[1]
    g = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (objective(*_split(xp, m, a), F, Y) - objective(*_split(xm, m, a), F, Y)) / (2 * h)
    return float(np.abs(g).max() / max(1.0, result.objective))


def _orient(W: np.ndarray) -> np.ndarray:
    """Column signs such that each column's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(W), axis=0)
    return np.where(W[idx, np.arange(W.shape[1])] < 0, -1.0, 1.0)


def _analytic(F, Y) -> PilotResult:
    m = F.shape[1]
    X = np.hstack([F, Y])
    U, S, _ = np.linalg.svd(F, full_matrices=False)
    rank = int((S > S[0] * max(F.shape) * np.finfo(float).eps).sum()) if S.size and S[0] > 0 else 0
    if rank < 2:
        raise IllConditioned(f"feature matrix has rank {rank}; PILOT needs at least 2")
    Q = U[:, :rank]
    # best 2-D subspace of col(F) for reconstructing [F Y]
    Um, _, _ = np.linalg.svd(Q.T @ X, full_matrices=False)
    Z0 = Q @ Um[:, :2]
    P, sig, Ht = np.linalg.svd(X.T @ Z0, full_matrices=False)
    signs = _orient(P)
    W = P * signs
    Z = (Z0 @ Ht.T * sig) * signs
    A = (np.linalg.pinv(F) @ Z).T
    B, C = W[:m], W[m:]
    Z = F @ A.T
    return PilotResult(A, B, C, Z, objective(A, B, C, F, Y))


def _numeric(F, Y, ntry: int, seed: int) -> PilotResult:
    m, a = F.shape[1], Y.shape[1]
    rng = np.random.default_rng(seed)
    best, objs = None, []
    for _ in range(ntry):
        x0 = rng.uniform(-1.0, 1.0, size=2 * m + 2 * m + 2 * a)
        res = minimize(
            _value_and_grad, x0, args=(F, Y), jac=True, method="L-BFGS-B",
            options={"maxiter": 50_000, "maxfun": 100_000, "ftol": 1e-16, "gtol": 1e-11, "maxcor": 30},
        )
        objs.append(float(res.fun))
        if best is None or res.fun < best.fun:
            best = res
    A, B, C = _split(best.x, m, a)
    Z = F @ A.T
    return PilotResult(A, B, C, Z, objective(A, B, C, F, Y), objs, "numeric")


def pilot(F, Y, ntry: int = 30, numeric: bool = False, seed: int = 0) -> PilotResult:
    """Fit the projection.

    The analytic path is exact: among 2-D subspaces of the column space of F it
    takes the one best reconstructing [F Y] and recovers B, C by least squares.
    The numeric path runs ``ntry`` L-BFGS restarts from uniform(-1, 1) starts.
    """
    F = np.asarray(F, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(F), -1)
    if F.ndim != 2 or F.shape[1] < 2:
        raise IllConditioned("PILOT needs at least two features")
    if np.linalg.matrix_rank(F) < 2:
        raise IllConditioned("feature matrix has rank < 2")
    if numeric:
        return _numeric(F, Y, ntry, seed)
    return _analytic(F, Y)
