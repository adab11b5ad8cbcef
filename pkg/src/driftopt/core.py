"""Shared domain types: programs, virtual queues, Lyapunov quantities, traces.

All types are immutable value objects built on numpy arrays; operations are
pure functions, so everything here is safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when vector/matrix shapes do not match the program dimensions."""


def _as_vector(v, length: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


@dataclass(frozen=True)
class ProgramSpec:
    """A strongly convex program: min f(x) s.t. g(x) <= 0, x in a box.

    ``objective`` maps an n-vector to a scalar; ``constraints`` maps an
    n-vector to an m-vector.  ``lower``/``upper`` describe the box feasible
    set (use +-inf entries for unbounded coordinates, so R^n is the
    all-infinite box).  ``alpha`` is the strong-convexity modulus of the
    objective on the box; ``beta`` is a common Lipschitz modulus of every
    constraint component.

    Optional analytic derivatives (``objective_grad``, ``constraints_jac``)
    are used by the generic inner-minimization oracle when present.
    """

    n: int
    m: int
    objective: Callable[[np.ndarray], float]
    constraints: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    beta: float
    objective_grad: Callable[[np.ndarray], np.ndarray] | None = None
    constraints_jac: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        lo = _as_vector(self.lower, self.n, "lower")
        hi = _as_vector(self.upper, self.n, "upper")
        if np.any(lo > hi):
            raise ValueError("box bounds must satisfy lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the box feasible set."""
        return np.clip(x, self.lower, self.upper)

    def f(self, x: np.ndarray) -> float:
        return float(self.objective(np.asarray(x, dtype=float)))

    def g(self, x: np.ndarray) -> np.ndarray:
        vals = _as_vector(self.constraints(np.asarray(x, dtype=float)), self.m, "g(x)")
        return vals


@dataclass(frozen=True)
class QueueState:
    """Nonnegative virtual queue vector, one entry per inequality constraint."""

    q: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.q, name="queue")
        if np.any(arr < 0):
            raise ValueError("queue entries must be nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "q", arr)

    @property
    def m(self) -> int:
        return self.q.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.q))


def queue_update(q: QueueState, gvals) -> QueueState:
    """Advance the virtual queues: max(q_k + g_k, 0) componentwise."""
    g = _as_vector(gvals, q.m, "constraint values")
    return QueueState(np.maximum(q.q + g, 0.0))


def lyapunov(q: QueueState) -> float:
    """Quadratic Lyapunov value: half the squared queue norm."""
    return 0.5 * float(q.q @ q.q)


def drift_identity_residual(q: QueueState, q_next: QueueState, gvals) -> float:
    """Residual of the exact drift identity.

    The one-step Lyapunov drift equals q_next . g - ||q_next - q||^2 / 2
    whenever q_next is the queue update of q under g; the returned value is
    the absolute mismatch between the two sides and should sit at floating
    point rounding level (<= 1e-9 * (1 + L(q))).
    """
    g = _as_vector(gvals, q.m, "constraint values")
    if q_next.m != q.m:
        raise DimensionError("queue states have different lengths")
    delta = lyapunov(q_next) - lyapunov(q)
    diff = q_next.q - q.q
    rhs = float(q_next.q @ g) - 0.5 * float(diff @ diff)
    return abs(delta - rhs)


@dataclass
class TraceSample:
    """One recorded point of a solver run (iteration index t >= 1)."""

    t: int
    x: np.ndarray
    xbar: np.ndarray
    queue: np.ndarray
    f_xbar: float
    g_xbar: np.ndarray
    qnorm: float
    lambda_dist: float | None = None
    dual_gap: float | None = None


@dataclass
class IterateTrace:
    """Sampled history of a solver run plus run-level summary quantities."""

    samples: list[TraceSample] = field(default_factory=list)
    V: float = 1.0
    variant: str = "dpp"
    max_drift_residual: float = 0.0
    iters: int = 0

    def append(self, sample: TraceSample) -> None:
        if self.samples and sample.t <= self.samples[-1].t:
            raise ValueError("trace iteration indices must be strictly increasing")
        if np.any(sample.queue < 0):
            raise ValueError("trace queue must be nonnegative")
        self.samples.append(sample)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def ts(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=int)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])


def sample_indices(iters: int, mode: str = "log", stride: int = 1,
                   per_decade: int = 200) -> list[int]:
    """Iteration indices to record: every ``stride`` steps, or ~log-spaced."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if mode == "linear":
        idx = list(range(stride, iters + 1, stride))
        if not idx or idx[-1] != iters:
            idx.append(iters)
        return idx
    if mode != "log":
        raise ValueError(f"unknown sampling mode {mode!r}")
    decades = np.log10(max(iters, 2))
    raw = np.unique(np.round(10 ** np.linspace(0, decades, int(per_decade * decades) + 1)))
    idx = [int(t) for t in raw if 1 <= t <= iters]
    if idx[-1] != iters:
        idx.append(iters)
    return idx
