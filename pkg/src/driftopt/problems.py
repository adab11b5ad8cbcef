"""Built-in benchmark instances and a JSON problem loader.

Each bundle couples a concrete instance, its ProgramSpec view, the matching
closed-form inner oracle, named constants (with a provenance flag telling
whether the value is taken verbatim from the original experiment write-up
or recomputed from the data), and the ground-truth KKT solution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ProgramSpec
from .dual_analysis import gamma_geq_Lc_check, num_dual_hessian, general_dual_hessian
from .oracles import ClosedFormNumOracle, ClosedFormQpOracle, NumInstance, QpInstance
from .reference import InfeasibleError, KktSolution, kkt_solve_num, kkt_solve_qp

BUILTIN_TAGS = ("num_6_1", "qp_6_2", "num_5_2_rank_deficient")


@dataclass(frozen=True)
class Constant:
    """Named constant with provenance: reported verbatim or recomputed."""

    name: str
    value: float
    source: str  # "paper" or "computed"

    def __post_init__(self):
        if self.source not in ("paper", "computed"):
            raise ValueError("source must be 'paper' or 'computed'")


@dataclass
class ProblemBundle:
    """A ready-to-run problem: spec, instance, oracle, constants, ground truth."""

    tag: str
    kind: str  # "num" or "qp"
    program: ProgramSpec
    instance: object
    oracle: object
    constants: tuple[Constant, ...] = ()
    reference: KktSolution | None = None
    reference_error: str | None = None

    def constant(self, name: str) -> float:
        for c in self.constants:
            if c.name == name:
                return c.value
        raise KeyError(name)


def _num_program(inst: NumInstance, alpha: float, beta: float) -> ProgramSpec:
    c, A, b = inst.c, inst.A, inst.b
    return ProgramSpec(
        n=inst.n, m=inst.m,
        objective=lambda x: float(-(c @ np.log(x))),
        constraints=lambda x: A @ x - b,
        lower=np.zeros(inst.n), upper=inst.xmax,
        alpha=alpha, beta=beta,
        objective_grad=lambda x: -c / x,
        constraints_jac=lambda x: A)


def _qp_program(inst: QpInstance, alpha: float, beta: float) -> ProgramSpec:
    P, c, A, b = inst.P, inst.c, inst.A, inst.b
    inf = np.inf
    return ProgramSpec(
        n=inst.n, m=inst.m,
        objective=lambda x: float(x @ P @ x + c @ x),
        constraints=lambda x: A @ x - b,
        lower=np.full(inst.n, -inf), upper=np.full(inst.n, inf),
        alpha=alpha, beta=beta,
        objective_grad=lambda x: 2.0 * (P @ x) + c,
        constraints_jac=lambda x: A)


def _reference_for(kind: str, inst) -> tuple[KktSolution | None, str | None]:
    if inst.m > 20:
        return None, "too many constraints for the enumeration oracle"
    try:
        sol = kkt_solve_num(inst) if kind == "num" else kkt_solve_qp(inst)
        return sol, None
    except (InfeasibleError, np.linalg.LinAlgError) as exc:
        return None, str(exc)


def _check_gamma_vs_Lc(kind: str, inst, reference: KktSolution | None,
                       gamma: float) -> None:
    """Validate the stored smoothness modulus against the local curvature."""
    if reference is None:
        return
    lam = reference.lambda_star
    try:
        if kind == "num":
            hess = num_dual_hessian(inst, lam)
        else:
            hess = general_dual_hessian(inst.A, 2.0 * inst.P, None, lam)
    except ValueError:
        return  # multiplier outside the interior regime; nothing to check
    eig = np.linalg.eigvalsh(hess)
    if eig.max() >= 0:
        return  # Hessian not negative definite; Lc undefined
    Lc = float(-eig.max())
    if not gamma_geq_Lc_check(gamma, Lc):
        raise ValueError(
            f"stored smoothness modulus gamma={gamma:g} is below the local "
            f"curvature Lc={Lc:g}")


def builtin(tag: str) -> ProblemBundle:
    """One of the three built-in instances.

    num_6_1: 3-link, 3-flow proportional-fairness rate allocation.
    qp_6_2: 2-variable strongly convex QP with two linear constraints.
    num_5_2_rank_deficient: 4-link rate allocation whose constraint matrix
    has rank 3 < 4, so the dual optimum is a face, not a point.
    """
    if tag == "num_6_1":
        inst = NumInstance(c=[1.0, 2.0, 3.0],
                           A=[[1, 1, 1], [1, 1, 0], [0, 1, 1]],
                           b=[10.0, 8.0, 8.0], xmax=[11.0, 11.0, 11.0])
        alpha = 2.0 / 121.0
        beta = float(np.sqrt(3.0))
        gamma = 422.0
        constants = (
            Constant("alpha", alpha, "paper"),
            Constant("alpha_computed", min(inst.c / inst.xmax ** 2), "computed"),
            Constant("beta", beta, "computed"),
            Constant("gamma", gamma, "paper"),
            Constant("gamma_computed",
                     float(np.sum(inst.A ** 2)) / alpha, "computed"),
            Constant("V_standard", 363.0, "paper"),
            Constant("V_shifted", 422.0, "paper"),
        )
        kind = "num"
        program = _num_program(inst, alpha, beta)
    elif tag == "qp_6_2":
        inst = QpInstance(P=[[1.0, 2.0], [2.0, 5.0]], c=[1.0, 1.0],
                          A=[[1.0, 1.0], [0.0, 1.0]], b=[-2.0, -1.0])
        alpha = 0.34
        beta = float(np.sqrt(2.0))
        gamma = 9.0
        constants = (
            Constant("alpha", alpha, "paper"),
            Constant("alpha_computed", inst.alpha, "computed"),
            Constant("beta", beta, "computed"),
            Constant("gamma", gamma, "paper"),
            Constant("gamma_computed", float(np.sum(inst.A ** 2)) / alpha, "computed"),
            Constant("V_standard", 4.0 / 0.34, "paper"),
        )
        kind = "qp"
        program = _qp_program(inst, alpha, beta)
    elif tag == "num_5_2_rank_deficient":
        inst = NumInstance(c=[1.0, 1.0, 1.0, 1.0],
                           A=[[1, 1, 0, 0], [0, 0, 1, 1],
                              [1, 0, 1, 0], [0, 1, 0, 1]],
                           b=[3.0, 7.0, 2.0, 8.0], xmax=[10.0, 10.0, 10.0, 10.0])
        alpha = float(min(inst.c / inst.xmax ** 2))
        beta = float(np.sqrt(2.0))
        constants = (
            Constant("alpha", alpha, "computed"),
            Constant("beta", beta, "computed"),
            Constant("gamma", float(np.sum(inst.A ** 2)) / alpha, "computed"),
        )
        kind = "num"
        gamma = constants[2].value
        program = _num_program(inst, alpha, beta)
    else:
        raise ValueError(f"unknown builtin tag {tag!r}; choose from {BUILTIN_TAGS}")

    reference, err = _reference_for(kind, inst)
    _check_gamma_vs_Lc(kind, inst, reference, gamma)
    oracle = ClosedFormNumOracle(inst) if kind == "num" else ClosedFormQpOracle(inst)
    return ProblemBundle(tag=tag, kind=kind, program=program, instance=inst,
                         oracle=oracle, constants=constants,
                         reference=reference, reference_error=err)


def serialize(bundle: ProblemBundle) -> dict:
    """JSON-compatible description of a bundle's defining data."""
    inst = bundle.instance
    doc = {"kind": bundle.kind,
           "A": inst.A.tolist(), "b": inst.b.tolist(), "c": inst.c.tolist(),
           "alpha": bundle.program.alpha, "beta": bundle.program.beta}
    if bundle.kind == "num":
        doc["xmax"] = inst.xmax.tolist()
    else:
        doc["P"] = inst.P.tolist()
    return doc


def load_problem(path) -> ProblemBundle:
    """Build a bundle from a JSON problem file.

    Schema: {"kind": "num"|"qp", "A", "b", "c", "P" (qp), "xmax" (num),
    "alpha" (optional), "beta" (optional)}.  Missing alpha defaults to the
    smallest eigenvalue of 2P for QPs and min c_i / xmax_i^2 for rate
    allocation; missing beta defaults to the largest row norm of A.
    """
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("problem file must be a JSON object with a 'kind' field")
    kind = doc["kind"]
    if kind not in ("num", "qp"):
        raise ValueError(f"unknown problem kind {kind!r}")
    for key in ("A", "b", "c"):
        if key not in doc:
            raise ValueError(f"problem file missing required field {key!r}")

    A = np.asarray(doc["A"], dtype=float)
    beta = float(doc["beta"]) if "beta" in doc else float(
        np.linalg.norm(A, axis=1).max())

    if kind == "num":
        if "xmax" not in doc:
            raise ValueError("rate-allocation problems need 'xmax'")
        inst = NumInstance(c=doc["c"], A=doc["A"], b=doc["b"], xmax=doc["xmax"])
        alpha = float(doc["alpha"]) if "alpha" in doc else float(
            min(inst.c / inst.xmax ** 2))
        program = _num_program(inst, alpha, beta)
        oracle = ClosedFormNumOracle(inst)
    else:
        if "P" not in doc:
            raise ValueError("quadratic problems need 'P'")
        inst = QpInstance(P=doc["P"], c=doc["c"], A=doc["A"], b=doc["b"])
        alpha = float(doc["alpha"]) if "alpha" in doc else inst.alpha
        program = _qp_program(inst, alpha, beta)
        oracle = ClosedFormQpOracle(inst)

    reference, err = _reference_for(kind, inst)
    constants = (Constant("alpha", alpha,
                          "paper" if "alpha" in doc else "computed"),
                 Constant("beta", beta,
                          "paper" if "beta" in doc else "computed"))
    return ProblemBundle(tag=path.stem, kind=kind, program=program,
                         instance=inst, oracle=oracle, constants=constants,
                         reference=reference, reference_error=err)
