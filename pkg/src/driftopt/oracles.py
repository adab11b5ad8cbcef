"""Inner-minimization oracles: argmin over the box of V*f(x) + q.g(x).

Two closed forms (log-utility rate allocation, unconstrained quadratic) and
a generic projected-gradient fallback.  Oracles are pure given (q, V).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import DimensionError, ProgramSpec, QueueState, _as_vector


class InnerSolveError(RuntimeError):
    """Inner minimization failed; carries the best iterate found."""

    def __init__(self, message: str, best_x: np.ndarray | None = None):
        super().__init__(message)
        self.best_x = best_x


@dataclass(frozen=True)
class NumInstance:
    """Rate-allocation instance: min sum -c_i log x_i s.t. Ax <= b, 0 <= x <= xmax.

    A is a 0-1 routing matrix (m x n) with at least one nonzero per column,
    capacities b > 0, utility weights c > 0, and per-flow caps xmax with
    xmax_i > max_k b_k (so the caps never bind at the optimum).
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    xmax: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2:
            raise DimensionError("A must be a matrix")
        m, n = A.shape
        c = _as_vector(self.c, n, "c")
        b = _as_vector(self.b, m, "b")
        xmax = _as_vector(self.xmax, n, "xmax")
        if np.any(c <= 0):
            raise ValueError("utility weights c must be positive")
        if np.any(b <= 0):
            raise ValueError("capacities b must be positive")
        if np.any(xmax <= b.max()):
            raise ValueError("need xmax_i > max_k b_k for every flow")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("A must be a 0-1 matrix")
        if np.any(A.sum(axis=0) < 1):
            raise ValueError("every column of A needs at least one nonzero")
        for name, val in (("c", c), ("A", A), ("b", b), ("xmax", xmax)):
            val = np.ascontiguousarray(val)
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class QpInstance:
    """Quadratic program: min x'Px + c'x s.t. Ax <= b, with P symmetric PD."""

    P: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionError("P must be square")
        n = P.shape[0]
        if A.ndim != 2 or A.shape[1] != n:
            raise DimensionError("A must be m x n")
        m = A.shape[0]
        c = _as_vector(self.c, n, "c")
        b = _as_vector(self.b, m, "b")
        if np.abs(P - P.T).max() > 1e-12:
            raise ValueError("P must be symmetric")
        if np.linalg.eigvalsh(2.0 * P).min() <= 0:
            raise ValueError("2P must be positive definite")
        for name, val in (("P", P), ("c", c), ("A", A), ("b", b)):
            val = np.ascontiguousarray(val)
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def alpha(self) -> float:
        """Strong-convexity modulus: smallest eigenvalue of 2P."""
        return float(np.linalg.eigvalsh(2.0 * self.P).min())


def log_utility_box_argmin(inst: NumInstance, q: QueueState, V: float) -> np.ndarray:
    """Closed-form inner minimizer for the rate-allocation instance.

    x_i = clip(c_i V / (q . a_i), 0, xmax_i), where a_i is the i-th column
    of A.  A zero denominator means constraint pressure never touches flow
    i, and the continuous limit of the clip is the upper cap.
    """
    if V <= 0:
        raise ValueError("V must be positive")
    qa = q.q @ inst.A  # length n, entries q . a_i
    x = np.empty(inst.n)
    pos = qa > 0
    x[pos] = np.minimum(inst.c[pos] * V / qa[pos], inst.xmax[pos])
    x[~pos] = inst.xmax[~pos]
    return x


def quadratic_argmin(inst: QpInstance, q: QueueState, V: float) -> np.ndarray:
    """Inner minimizer for the QP on X = R^n: solve 2V P x = -(V c + A'q)."""
    if V <= 0:
        raise ValueError("V must be positive")
    rhs = -(V * inst.c + inst.A.T @ q.q)
    M = 2.0 * V * inst.P
    if np.linalg.cond(M) > 1e12:
        raise InnerSolveError("inner quadratic system is ill-conditioned")
    x = np.linalg.solve(M, rhs)
    residual = np.linalg.norm(M @ x - rhs)
    if residual > 1e-9 * (1.0 + q.norm()):
        raise InnerSolveError("inner quadratic solve residual too large", best_x=x)
    return x


def projected_gradient_inner(program: ProgramSpec, q: QueueState, V: float,
                             tol: float = 1e-8, max_inner: int = 200_000) -> np.ndarray:
    """Generic fallback oracle: projected gradient with Barzilai-Borwein steps.

    Minimizes phi(x) = V f(x) + q . g(x) over the box.  Requires analytic
    derivatives on the program; terminates when the gradient-map norm
    ||x - P(x - s grad)|| / s with reference step s drops below ``tol``.
    """
    if V <= 0:
        raise ValueError("V must be positive")
    if program.objective_grad is None or program.constraints_jac is None:
        raise InnerSolveError("generic oracle needs objective_grad and constraints_jac")

    def phi(x):
        return V * program.f(x) + float(q.q @ program.g(x))

    def grad(x):
        return V * program.objective_grad(x) + program.constraints_jac(x).T @ q.q

    lo, hi = program.lower, program.upper
    finite_lo = np.where(np.isfinite(lo), lo, -1.0)
    finite_hi = np.where(np.isfinite(hi), hi, 1.0)
    x = np.clip(0.5 * (finite_lo + finite_hi), lo, hi)
    # Reference step from a local curvature probe along the gradient.
    gx = grad(x)
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    direction = gx / max(np.linalg.norm(gx), 1e-30)
    curv = np.linalg.norm(grad(np.clip(x + h * direction, lo, hi)) - gx) / h
    L_ref = max(curv, V * program.alpha, 1e-12)
    s_ref = 1.0 / L_ref

    fx = phi(x)
    step = s_ref
    best_x, best_gap = x, np.inf
    for _ in range(max_inner):
        gap = np.linalg.norm(x - np.clip(x - s_ref * gx, lo, hi)) / s_ref
        if gap < best_gap:
            best_x, best_gap = x, gap
        if gap <= tol:
            return x
        # Backtrack from the BB step until the prox-descent condition holds.
        s = step
        for _ in range(200):
            x_new = np.clip(x - s * gx, lo, hi)
            dx = x_new - x
            f_new = phi(x_new)
            # The 1e-14 relative slack keeps rounding noise in phi from
            # rejecting genuine descent steps near the optimum.
            slack = 1e-14 * (1.0 + abs(fx))
            if np.isfinite(f_new) and f_new <= fx + float(gx @ dx) + 0.5 / s * float(dx @ dx) + slack:
                break
            s *= 0.5
        else:
            raise InnerSolveError("line search failed in generic inner oracle", best_x=best_x)
        g_new = grad(x_new)
        dx, dg = x_new - x, g_new - gx
        denom = float(dx @ dg)
        step = float(dx @ dx) / denom if denom > 0 else s_ref
        step = min(max(step, 1e-3 * s_ref), 1e6 * s_ref)
        x, gx, fx = x_new, g_new, f_new
    raise InnerSolveError(
        f"generic inner oracle did not reach tol={tol} within {max_inner} steps",
        best_x=best_x)


class ClosedFormNumOracle:
    """Inner oracle backed by the log-utility closed form."""

    tag = "log-utility-box"

    def __init__(self, inst: NumInstance):
        self.inst = inst

    def argmin(self, q: QueueState, V: float) -> np.ndarray:
        return log_utility_box_argmin(self.inst, q, V)


class ClosedFormQpOracle:
    """Inner oracle backed by the linear-system closed form (X = R^n).

    The system matrix 2VP is fixed for a given V, so its Cholesky factor
    and condition check are cached per V instead of redone every call.
    """

    tag = "quadratic"

    def __init__(self, inst: QpInstance):
        self.inst = inst
        self._cache_V: float | None = None
        self._cache_cho = None

    def argmin(self, q: QueueState, V: float) -> np.ndarray:
        if V <= 0:
            raise ValueError("V must be positive")
        if V != self._cache_V:
            M = 2.0 * V * self.inst.P
            if np.linalg.cond(M) > 1e12:
                raise InnerSolveError("inner quadratic system is ill-conditioned")
            self._cache_cho = scipy.linalg.cho_factor(M)
            self._cache_V = V
        rhs = -(V * self.inst.c + self.inst.A.T @ q.q)
        return scipy.linalg.cho_solve(self._cache_cho, rhs)


class ProjectedGradientOracle:
    """Inner oracle running projected gradient on an arbitrary box program."""

    tag = "projected-gradient-generic"

    def __init__(self, program: ProgramSpec, tol: float = 1e-10,
                 max_inner: int = 200_000):
        self.program = program
        self.tol = tol
        self.max_inner = max_inner

    def argmin(self, q: QueueState, V: float) -> np.ndarray:
        return projected_gradient_inner(self.program, q, V,
                                        tol=self.tol, max_inner=self.max_inner)
