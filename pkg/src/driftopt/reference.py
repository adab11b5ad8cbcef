"""Independent ground-truth solver: KKT active-set enumeration.

Enumerates candidate active sets (by increasing cardinality, then
lexicographically), solves the stationarity system for each, and returns
the first candidate passing primal feasibility, dual nonnegativity and
complementary slackness.  Global optimality follows from convexity.

Kept deliberately independent of the iterative solvers so it can serve as
the oracle in every convergence test.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg
import scipy.optimize

from .oracles import NumInstance, QpInstance

FEAS_TOL = 1e-8
NEWTON_TOL = 1e-10


class InfeasibleError(RuntimeError):
    """No active subset yields a KKT point (problem infeasible or solver failure)."""


@dataclass(frozen=True)
class KktSolution:
    """Primal/dual optimum of a small convex program.

    ``active_set`` holds the (0-based) indices k with g_k(x*) = 0 within
    FEAS_TOL.  Invariants: g(x*) <= FEAS_TOL componentwise, lambda* >= 0,
    and lambda*_k g_k(x*) = 0 within FEAS_TOL.
    """

    x_star: np.ndarray
    f_star: float
    lambda_star: np.ndarray
    active_set: tuple[int, ...]


def _subsets(m: int):
    for size in range(m + 1):
        yield from combinations(range(m), size)


def _finish(x: np.ndarray, f_star: float, lam: np.ndarray, gvals: np.ndarray) -> KktSolution:
    active = tuple(int(k) for k in range(len(gvals)) if abs(gvals[k]) <= FEAS_TOL)
    return KktSolution(x_star=x, f_star=float(f_star), lambda_star=lam,
                       active_set=active)


def _analytic_center_multiplier(M: np.ndarray, w: np.ndarray,
                                lam0: np.ndarray) -> np.ndarray:
    """Pick the analytic center of the multiplier face {lam >= 0 : M lam = w}.

    When the active-constraint system is rank deficient the KKT multiplier
    is a nontrivial face; interior-point solvers land at its analytic
    center, so that is the deterministic representative we return.
    ``lam0`` is any particular solution.
    """
    ns = scipy.linalg.null_space(M)
    if ns.size == 0:
        return lam0
    k = ns.shape[1]

    # Interior starting point: maximize the minimum coordinate over the face.
    res = scipy.optimize.linprog(
        c=np.concatenate([np.zeros(k), [-1.0]]),
        A_ub=np.hstack([-ns, np.ones((len(lam0), 1))]),
        b_ub=lam0, bounds=[(None, None)] * k + [(None, None)],
        method="highs")
    if not res.success or res.x[-1] <= 0:
        return lam0  # face has empty interior; keep the particular solution
    z = res.x[:k]

    # Damped Newton on z -> -sum log(lam0 + ns z).
    for _ in range(200):
        lam = lam0 + ns @ z
        grad = -ns.T @ (1.0 / lam)
        hess = ns.T @ ((ns.T / lam ** 2).T)
        step = np.linalg.solve(hess, -grad)
        tau = 1.0
        while np.any(lam0 + ns @ (z + tau * step) <= 0) and tau > 1e-18:
            tau *= 0.5
        z = z + tau * step
        if np.linalg.norm(tau * step) < 1e-14:
            break
    return lam0 + ns @ z


def kkt_solve_qp(inst: QpInstance) -> KktSolution:
    """Global optimum of a small QP by active-set enumeration."""
    if inst.m > 20:
        raise ValueError("enumeration oracle limited to m <= 20")
    n, m = inst.n, inst.m
    H = 2.0 * inst.P
    for S in _subsets(m):
        s = len(S)
        A_S = inst.A[list(S), :]
        K = np.zeros((n + s, n + s))
        K[:n, :n] = H
        K[:n, n:] = A_S.T
        K[n:, :n] = A_S
        rhs = np.concatenate([-inst.c, inst.b[list(S)]])
        try:
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        except np.linalg.LinAlgError:
            continue
        if np.linalg.norm(K @ sol - rhs) > 1e-8 * (1 + np.linalg.norm(rhs)):
            continue
        x, lam_S = sol[:n], sol[n:]
        if np.any(lam_S < -FEAS_TOL):
            continue
        gvals = inst.A @ x - inst.b
        if np.any(gvals > FEAS_TOL):
            continue
        lam = np.zeros(m)
        lam[list(S)] = np.maximum(lam_S, 0.0)
        # Rank-deficient active sets admit a multiplier face; normalize.
        active = [k for k in range(m) if abs(gvals[k]) <= FEAS_TOL]
        if active and len(active) > np.linalg.matrix_rank(inst.A[active, :]):
            M = inst.A[active, :].T
            w = -(H @ x + inst.c)
            lam_face, *_ = np.linalg.lstsq(M, w, rcond=None)
            lam_face = _analytic_center_multiplier(M, w, _particular_nonneg(M, w, lam_face))
            lam = np.zeros(m)
            lam[active] = lam_face
        f_star = float(x @ inst.P @ x + inst.c @ x)
        return _finish(x, f_star, lam, gvals)
    raise InfeasibleError("no active subset produced a KKT point")


def _particular_nonneg(M: np.ndarray, w: np.ndarray, guess: np.ndarray) -> np.ndarray:
    """A solution of M lam = w with lam >= 0, starting from ``guess``."""
    if np.all(guess >= -FEAS_TOL):
        return np.maximum(guess, 0.0)
    k = M.shape[1]
    res = scipy.optimize.linprog(c=np.zeros(k), A_eq=M, b_eq=w,
                                 bounds=[(0, None)] * k, method="highs")
    if not res.success:
        raise InfeasibleError("no nonnegative multiplier solves the stationarity system")
    return res.x


def _num_newton(inst: NumInstance, S: tuple[int, ...]):
    """Solve the active-set stationarity system for the rate-allocation dual.

    Unknowns are lambda_k for k in S (zero elsewhere).  Flows whose routes
    touch no active link sit at their cap and contribute a constant load.
    Damped Newton from lambda_S = 1, halving steps (up to 60 times) so the
    active multipliers stay strictly positive.
    """
    A, b, c, xmax = inst.A, inst.b, inst.c, inst.xmax
    S = list(S)
    A_S = A[S, :]
    touched = A_S.sum(axis=0) > 0          # flows seen by some active link
    fixed_load = A_S[:, ~touched] @ xmax[~touched]
    if not np.any(touched):
        return None
    A_t = A_S[:, touched]
    c_t = c[touched]

    lam = np.ones(len(S))
    for _ in range(200):
        denom = lam @ A_t                  # lambda . a_i per touched flow
        if np.any(denom <= 0):
            return None
        x_t = c_t / denom
        F = A_t @ x_t + fixed_load - b[S]
        if np.linalg.norm(F) <= NEWTON_TOL:
            break
        J = -(A_t * (c_t / denom ** 2)) @ A_t.T
        try:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        tau = 1.0
        halvings = 0
        while np.any(lam + tau * step <= 0) and halvings < 60:
            tau *= 0.5
            halvings += 1
        if halvings >= 60:
            return None
        lam = lam + tau * step
    else:
        return None
    return lam


def kkt_solve_num(inst: NumInstance) -> KktSolution:
    """Global optimum of a small rate-allocation instance.

    Enumerates active subsets of the capacity constraints and solves each
    stationarity system by damped Newton.  Valid only when the optimum is
    interior to the box (checked post hoc), which the instance invariant
    xmax_i > max b_k guarantees.
    """
    if inst.m > 20:
        raise ValueError("enumeration oracle limited to m <= 20")
    for S in _subsets(inst.m):
        lam_S = _num_newton(inst, S) if S else None
        if S and lam_S is None:
            continue
        lam = np.zeros(inst.m)
        if S:
            lam[list(S)] = lam_S
        denom = lam @ inst.A
        x = np.where(denom > 0, np.minimum(inst.c / np.maximum(denom, 1e-300), inst.xmax),
                     inst.xmax)
        gvals = inst.A @ x - inst.b
        if np.any(gvals > FEAS_TOL):
            continue
        if np.any(np.abs(lam * gvals) > FEAS_TOL):
            continue
        if np.any(x <= 0) or np.any(x >= inst.xmax):
            continue  # optimum must be interior to the box
        active = [k for k in range(inst.m) if abs(gvals[k]) <= FEAS_TOL]
        M = inst.A[active, :].T            # stationarity: lambda . a_i = c_i / x_i
        if active and len(active) > np.linalg.matrix_rank(M):
            w = inst.c / x
            lam_face = _analytic_center_multiplier(M, w, _particular_nonneg(M, w, lam[active]))
            lam = np.zeros(inst.m)
            lam[active] = lam_face
        f_star = float(-(inst.c @ np.log(x)))
        return _finish(x, f_star, lam, gvals)
    raise InfeasibleError("no active subset produced a KKT point")
