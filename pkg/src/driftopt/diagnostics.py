"""Trace diagnostics: error series, decay-rate fitting, and audits of the
convergence guarantees against a ground-truth solution.

Rate fits are least-squares lines in transformed coordinates; audits
evaluate each guarantee at every sampled iteration and report worst
margins.  Everything is pure over immutable traces.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .core import IterateTrace, ProgramSpec, QueueState
from .dual_analysis import dual_value_and_gradient, theta_bound
from .reference import KktSolution


@dataclass
class RateFit:
    """Fitted decay model for an error series.

    power: e(t) ~ C * t^-p.  geometric: e(t) ~ (C/t) * r^t.  ``quality``
    is an R^2-style score of the predicted log-error against the observed
    log-error, clamped to [0, 1], so the two models are directly
    comparable on the same series.
    """

    model: str
    p: float | None
    r: float | None
    C: float
    quality: float
    t_lo: int
    t_hi: int

    def to_dict(self) -> dict:
        return asdict(self)


def error_series(trace: IterateTrace, reference: KktSolution):
    """Objective error |f(xbar) - f*| and worst constraint violation
    max_k g_k(xbar)^+ at the sampled iterations.

    Returns (ts, obj_err, violation) as aligned arrays.
    """
    if len(trace) == 0:
        raise ValueError("trace is empty")
    ts = trace.ts
    obj_err = np.abs(trace.column("f_xbar") - reference.f_star)
    gvals = np.stack([s.g_xbar for s in trace.samples])
    violation = np.maximum(gvals, 0.0).max(axis=1)
    return ts, obj_err, violation


def _tail_window(ts: np.ndarray, window_fraction: float,
                 window: tuple[float, float] | None):
    if window is not None:
        lo, hi = window
        return (ts >= lo) & (ts <= hi)
    if not (0 < window_fraction <= 1):
        raise ValueError("window_fraction must be in (0, 1]")
    log_t = np.log10(ts.astype(float))
    cut = log_t.max() - window_fraction * (log_t.max() - log_t.min())
    return log_t >= cut


def _quality(log_e: np.ndarray, predicted: np.ndarray) -> float:
    ss_res = float(np.sum((log_e - predicted) ** 2))
    ss_tot = float(np.sum((log_e - log_e.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res <= 1e-20 else 0.0
    return float(min(max(1.0 - ss_res / ss_tot, 0.0), 1.0))


def _prepare(ts, errors, window_fraction, window):
    ts = np.asarray(ts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    mask = _tail_window(ts, window_fraction, window) & (errors > 0)
    if mask.sum() < 10:
        raise ValueError("need at least 10 positive samples in the fit window")
    return ts[mask], errors[mask]


def fit_power_decay(ts, errors, window_fraction: float = 0.5,
                    window: tuple[float, float] | None = None) -> RateFit:
    """Fit e(t) ~ C * t^-p by a least-squares line on (log t, log e).

    Zero/negative entries are dropped; the fit uses the tail window (last
    ``window_fraction`` of the logarithmic time range, or an explicit
    [t_lo, t_hi] window).
    """
    t, e = _prepare(ts, errors, window_fraction, window)
    log_t, log_e = np.log(t), np.log(e)
    slope, intercept = np.polyfit(log_t, log_e, 1)
    predicted = slope * log_t + intercept
    return RateFit(model="power", p=float(-slope), r=None,
                   C=float(np.exp(intercept)), quality=_quality(log_e, predicted),
                   t_lo=int(t.min()), t_hi=int(t.max()))


def fit_geometric(ts, errors, window_fraction: float = 0.5,
                  window: tuple[float, float] | None = None) -> RateFit:
    """Fit e(t) ~ (C/t) * r^t by a least-squares line on (t, log(t*e)).

    The regression target includes the 1/t factor so that r captures only
    the geometric part of the decay.
    """
    t, e = _prepare(ts, errors, window_fraction, window)
    log_te = np.log(t * e)
    slope, intercept = np.polyfit(t, log_te, 1)
    r = float(np.exp(slope))
    if not (0 < r < 1):
        raise ValueError(f"geometric fit produced ratio {r:g} outside (0, 1)")
    predicted_log_e = intercept + slope * t - np.log(t)
    return RateFit(model="geometric", p=None, r=r,
                   C=float(np.exp(intercept)),
                   quality=_quality(np.log(e), predicted_log_e),
                   t_lo=int(t.min()), t_hi=int(t.max()))


def _entry(name: str, applicable: bool, passed: bool | None = None,
           worst_margin: float | None = None) -> dict:
    return {"bound": name, "applicable": applicable,
            "pass": bool(passed) if applicable else None,
            "worst_margin": worst_margin}


def audit_bounds(trace: IterateTrace, reference: KktSolution,
                 program: ProgramSpec, config, gamma: float | None = None,
                 oracle=None) -> list[dict]:
    """Check every applicable convergence guarantee at every sampled t.

    Audited bounds (each entry reports applicability, pass/fail, and the
    worst margin lhs - rhs over the samples; positive margin = violation):

    - objective: f(xbar(t)) <= f* + ||Q(0)||^2 / (2 V t); with Q(0) = 0
      this is the exact non-violation property, checked at 1e-9.
    - constraint: g_k(xbar(t)) <= (sqrt(||Q(0)||^2 + V^2 ||lam*||^2)
      + V ||lam*||) / t for every k.
    - queue: ||Q(t)|| <= sqrt(||Q(0)||^2 + V^2 ||lam*||^2) + V ||lam*||.
    - dual gap: q(lam*) - q(lam(t)) <= theta / t (needs V >= gamma and an
      oracle to evaluate q at lam(0)).
    - multiplier distance nonincreasing (needs V >= gamma), and dual value
      nondecreasing (needs V >= gamma / 2), both per consecutive sample
      with 1e-9 tolerance.
    """
    if reference is None:
        raise ValueError("audit needs a reference solution")
    if len(trace) == 0:
        raise ValueError("trace is empty")
    V = trace.V
    ts = trace.ts.astype(float)
    q0_norm2 = float(np.sum(np.asarray(config.q0, dtype=float) ** 2))
    lam_star = np.asarray(reference.lambda_star, dtype=float)
    lam_star_norm = float(np.linalg.norm(lam_star))
    bound_B = float(np.sqrt(q0_norm2 + V ** 2 * lam_star_norm ** 2)) + V * lam_star_norm
    report: list[dict] = []

    # Objective bound (exact non-violation when the queue starts at zero).
    f_xbar = trace.column("f_xbar")
    rhs = reference.f_star + q0_norm2 / (2.0 * V * ts)
    margins = f_xbar - rhs
    worst = float(margins.max())
    tol = 1e-9 if q0_norm2 == 0 else 1e-9 * (1.0 + np.abs(rhs).max())
    report.append(_entry("objective_bound", True, worst <= tol, worst))

    # Constraint-violation bound, every component.
    gvals = np.stack([s.g_xbar for s in trace.samples])
    margins = gvals - (bound_B / ts)[:, None]
    worst = float(margins.max())
    report.append(_entry("constraint_bound", True,
                         worst <= 1e-9 * (1.0 + bound_B), worst))

    # Queue-norm bound.
    qnorm = trace.column("qnorm")
    worst = float((qnorm - bound_B).max())
    report.append(_entry("queue_bound", True,
                         worst <= 1e-9 * (1.0 + bound_B), worst))

    dual_ok = (trace.samples[0].lambda_dist is not None
               and trace.samples[0].dual_gap is not None)

    # Dual-gap bound q(lam*) - q(lam(t)) <= theta / t.
    applicable = (gamma is not None and V >= gamma and dual_ok
                  and oracle is not None)
    if applicable:
        lam0 = np.asarray(config.q0, dtype=float) / V
        q_at_lam0, _ = dual_value_and_gradient(program, oracle, lam0)
        x_at_star = oracle.argmin(QueueState(lam_star), 1.0)
        q_at_star = program.f(x_at_star) + float(lam_star @ program.g(x_at_star))
        theta = theta_bound(V, gamma, lam0, lam_star, q_at_lam0, q_at_star)
        gaps = trace.column("dual_gap").astype(float)
        worst = float((gaps - theta / ts).max())
        report.append(_entry("dual_gap_bound", True,
                             worst <= 1e-9 * (1.0 + theta), worst))
    else:
        report.append(_entry("dual_gap_bound", False))

    # Monotone multiplier distance (per consecutive sample).
    if gamma is not None and V >= gamma and dual_ok:
        dist = trace.column("lambda_dist").astype(float)
        steps = np.diff(dist)
        worst = float(steps.max()) if len(steps) else 0.0
        report.append(_entry("multiplier_distance_monotone", True,
                             worst <= 1e-9, worst))
    else:
        report.append(_entry("multiplier_distance_monotone", False))

    # Monotone dual value.
    if gamma is not None and V >= gamma / 2.0 and dual_ok:
        q_vals = -trace.column("dual_gap").astype(float)  # q(lam(t)) up to a constant
        steps = np.diff(q_vals)
        worst = float((-steps).max()) if len(steps) else 0.0
        report.append(_entry("dual_value_monotone", True,
                             worst <= 1e-9, worst))
    else:
        report.append(_entry("dual_value_monotone", False))

    return report


def audit_passed(report: list[dict]) -> bool:
    """True when every applicable audited bound passed."""
    return all(entry["pass"] for entry in report if entry["applicable"])
