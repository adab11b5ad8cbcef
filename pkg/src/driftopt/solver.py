"""Iterative solvers: drift-plus-penalty, its shifted-running-average variant,
and the classical dual subgradient method.

A run is strictly sequential; distinct runs share no mutable state and may
execute concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (IterateTrace, ProgramSpec, QueueState, TraceSample,
                   lyapunov, queue_update, sample_indices)
from .oracles import InnerSolveError

VARIANTS = ("dpp", "dpp_shifted", "dual_subgradient")


@dataclass
class SolverConfig:
    """Run parameters for a single solver invocation.

    ``step_c`` only applies to the dual subgradient variant and defaults to
    1/V, the choice under which it reproduces drift-plus-penalty exactly.
    """

    V: float
    q0: np.ndarray
    iters: int
    variant: str = "dpp"
    step_c: float | None = None
    sampling: str = "log"
    stride: int = 1

    def __post_init__(self):
        if self.V <= 0:
            raise ValueError("V must be positive")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        self.q0 = np.atleast_1d(np.asarray(self.q0, dtype=float))
        if np.any(self.q0 < 0):
            raise ValueError("initial queue must be nonnegative")

    @property
    def c(self) -> float:
        return self.step_c if self.step_c is not None else 1.0 / self.V


def choose_V(program: ProgramSpec, gamma: float | None = None) -> float:
    """Smallest penalty parameter covered by the convergence guarantees.

    m beta^2 / alpha for the plain guarantees; when a dual smoothness
    modulus is supplied, the shifted-average guarantees also need V >= gamma.
    """
    base = program.m * program.beta ** 2 / program.alpha
    if gamma is None:
        return base
    return max(base, gamma)


def shifted_average_window(t_plus_1: int):
    """Averaging window of the shifted scheme at iteration t+1.

    Even 2s -> the index range [s, 2s-1]; odd -> "hold" (keep the previous
    average unchanged).
    """
    if t_plus_1 < 1:
        raise ValueError("t_plus_1 must be >= 1")
    if t_plus_1 % 2 == 1:
        return "hold"
    s = t_plus_1 // 2
    return (s, 2 * s - 1)


@dataclass
class _StepState:
    """Mutable per-run state advanced by :func:`dpp_step`."""

    t: int
    q: QueueState
    xbar: np.ndarray | None
    sum_x: np.ndarray


def dpp_step(program: ProgramSpec, oracle, config: SolverConfig,
             state: _StepState) -> _StepState:
    """Advance one drift-plus-penalty iteration (standard averaging)."""
    x = oracle.argmin(state.q, config.V)
    g = program.g(x)
    q_next = queue_update(state.q, g)
    t = state.t
    sum_x = state.sum_x + x
    xbar = sum_x / (t + 1)
    return _StepState(t=t + 1, q=q_next, xbar=xbar, sum_x=sum_x)


def run(program: ProgramSpec, oracle, config: SolverConfig,
        reference=None) -> IterateTrace:
    """Execute the configured solver and return a sampled trace.

    When ``reference`` (a KktSolution) is given, each sample also records
    the dual-iterate distance ||lambda(t) - lambda*|| and the dual gap
    q(lambda*) - q(lambda(t)); the dual value at lambda(t) is exact because
    x(t) attains the inner minimum defining q.

    Deterministic: identical inputs give identical traces.
    """
    floor = program.m * program.beta ** 2 / program.alpha
    if config.V < floor * (1 - 1e-12):
        warnings.warn(
            f"V={config.V:g} is below the guarantee threshold "
            f"m*beta^2/alpha={floor:g}; convergence bounds may not apply",
            stacklevel=2)
    if config.q0.shape[0] != program.m:
        raise ValueError("initial queue length must equal the constraint count")

    dual_sub = config.variant == "dual_subgradient"
    shifted = config.variant == "dpp_shifted"
    V, c = config.V, config.c
    samples = set(sample_indices(config.iters, config.sampling, config.stride))

    lam_star = None
    q_star = None
    if reference is not None:
        lam_star = np.asarray(reference.lambda_star, dtype=float)
        x_at_star = oracle.argmin(QueueState(lam_star), 1.0)
        q_star = program.f(x_at_star) + float(lam_star @ program.g(x_at_star))

    if dual_sub:
        lam = config.q0 * c  # lambda(0) = c * Q(0) so that Q/V == lambda at c=1/V
    q_arr = config.q0.copy()
    sum_x = np.zeros(program.n)
    xbar = None
    # Delayed replica for the shifted window: tracks Q(s) and sum_{tau<s} x(tau).
    slow_q = config.q0.copy()
    slow_sum = np.zeros(program.n)
    slow_idx = 0
    trace = IterateTrace(V=V, variant=config.variant, iters=config.iters)

    for t in range(config.iters + 1):
        try:
            if dual_sub:
                x = oracle.argmin(QueueState(lam), 1.0)
            else:
                x = oracle.argmin(QueueState(q_arr), V)
        except InnerSolveError as exc:
            exc.partial_trace = trace  # everything recorded through t-1
            raise
        g = program.g(x)

        if t in samples:
            lam_t = lam if dual_sub else q_arr / V
            sample = TraceSample(
                t=t, x=x.copy(), xbar=xbar.copy(), queue=(lam / c if dual_sub else q_arr).copy(),
                f_xbar=program.f(xbar), g_xbar=program.g(xbar),
                qnorm=float(np.linalg.norm(lam / c if dual_sub else q_arr)))
            if lam_star is not None:
                sample.lambda_dist = float(np.linalg.norm(lam_t - lam_star))
                sample.dual_gap = q_star - (program.f(x) + float(lam_t @ g))
            trace.append(sample)
        if t == config.iters:
            break

        # Queue / multiplier update and exact drift-identity residual.
        if dual_sub:
            lam_next = np.maximum(lam + c * g, 0.0)
            qn, qc = lam_next / c, lam / c
        else:
            qn = np.maximum(q_arr + g, 0.0)
            qc = q_arr
        diff = qn - qc
        residual = abs((0.5 * float(qn @ qn) - 0.5 * float(qc @ qc))
                       - (float(qn @ g) - 0.5 * float(diff @ diff)))
        if residual > trace.max_drift_residual:
            trace.max_drift_residual = residual

        sum_x += x
        if shifted:
            if (t + 1) % 2 == 0:
                s = (t + 1) // 2
                while slow_idx < s:
                    xs = oracle.argmin(QueueState(slow_q), V)
                    slow_sum += xs
                    slow_q = np.maximum(slow_q + program.g(xs), 0.0)
                    slow_idx += 1
                xbar = (sum_x - slow_sum) / s
            elif xbar is None:  # t+1 == 1: seed with x(0)
                xbar = x.copy()
        else:
            xbar = sum_x / (t + 1)

        if dual_sub:
            lam = lam_next
        else:
            q_arr = qn
    return trace
