"""Chance-constrained optimization via an empirical surrogate margin.

The target program asks for P(F(lambda, xi) <= 0) >= 1 - alpha with
F(lambda, xi) = sum_j lambda_j g_j(xi), g_j valued in [-1, 1].  Given n
scenario draws, the surrogate program constrains the empirical mean of
phi(F(lambda, xi_i)) to alpha - kappa/sqrt(n), which makes the feasible
set convex and, with the concentration margin, keeps every solution
feasible for the original chance constraint with probability 1 - 2 delta.
Shares the simplex solver engine with the classification program: same
shape, one convex constraint over the simplex.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _solver_core as core
from .errors import DomainError, EmptySample
from .hypothesis import SimplexWeights
from .np_solver import kappa
from .risk import phi_risk_from_matrix
from .surrogate import Surrogate

RANGE_TOL = 1e-9


def evaluate_constraint_bases(constraint_bases: Sequence[Callable], draws) -> np.ndarray:
    """(n, M) matrix of g_j(xi_i); validates the [-1, 1] range."""
    xi = np.asarray(draws)
    if xi.shape[0] == 0:
        raise EmptySample("no scenario draws")
    cols = [np.asarray([float(g(x)) for x in xi]) for g in constraint_bases]
    G = np.column_stack(cols)
    if float(np.max(np.abs(G))) > 1.0 + RANGE_TOL:
        raise DomainError("a constraint base produced a value outside [-1, 1]")
    return G


@dataclass
class CCPInstance:
    """One empirical chance-constrained problem.

    Provide either `g_matrix` (pre-evaluated g_j(xi_i) columns) or both
    `constraint_bases` and `sample`.  The objective is a value oracle;
    pass `objective_grad` when a gradient is available and
    `linear_coeffs` when f(lambda) = linear_coeffs @ lambda, which
    unlocks the exact affine solve for affine surrogates.
    """

    alpha: float
    delta: float
    surrogate: Surrogate
    objective: Callable[[np.ndarray], float]
    objective_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    linear_coeffs: Optional[np.ndarray] = None
    g_matrix: Optional[np.ndarray] = None
    constraint_bases: Optional[Sequence[Callable]] = None
    sample: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise DomainError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not 0.0 < self.delta < 0.5:
            raise DomainError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.g_matrix is None:
            if self.constraint_bases is None or self.sample is None:
                raise DomainError("need g_matrix, or constraint_bases with sample")
            self.g_matrix = evaluate_constraint_bases(self.constraint_bases, self.sample)
        else:
            self.g_matrix = np.asarray(self.g_matrix, dtype=float)
            if self.g_matrix.ndim != 2 or self.g_matrix.shape[0] < 1:
                raise DomainError("g_matrix must be a nonempty (n, M) matrix")
            if not np.all(np.isfinite(self.g_matrix)):
                raise DomainError("g_matrix contains non-finite entries")
            if float(np.max(np.abs(self.g_matrix))) > 1.0 + RANGE_TOL:
                raise DomainError("g_matrix entries must lie in [-1, 1]")
        if self.linear_coeffs is not None:
            self.linear_coeffs = np.asarray(self.linear_coeffs, dtype=float)
            if self.linear_coeffs.shape != (self.m,):
                raise DomainError("linear_coeffs length must match the number of bases")

    @property
    def n(self) -> int:
        return self.g_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.g_matrix.shape[1]


@dataclass
class CCPSolution:
    weights: SimplexWeights
    kappa: float
    margin_level: float
    empirical_constraint_value: float
    objective_value: float
    n: int
    iterations: int
    status: str

    def to_json(self) -> dict:
        return {
            "weights": self.weights.to_json(),
            "kappa": self.kappa,
            "margin_level": self.margin_level,
            "empirical_constraint_value": self.empirical_constraint_value,
            "objective_value": self.objective_value,
            "n": self.n,
            "iterations": self.iterations,
            "status": self.status,
        }


def linear_objective(coeffs) -> dict:
    """Convenience bundle for f(lambda) = coeffs @ lambda."""
    c = np.asarray(coeffs, dtype=float)
    return {
        "objective": lambda lam: float(c @ lam),
        "objective_grad": lambda lam: c,
        "linear_coeffs": c,
    }


def solve_ccp(inst: CCPInstance, feas_tol: float = 1e-8, opt_tol: float = 1e-5,
              max_iters: int = 500) -> CCPSolution:
    """Minimize the objective s.t. mean phi(F(lambda, xi_i)) <= alpha - kappa/sqrt(n)."""
    s = inst.surrogate
    kap = kappa(s.lipschitz, inst.m, inst.delta)
    level = inst.alpha - kap / math.sqrt(inst.n)
    if level <= 0.0:
        from .errors import SampleTooSmall
        raise SampleTooSmall(
            f"alpha - kappa/sqrt(n) = {level} <= 0 at n = {inst.n}")

    constraint = core.risk_form(inst.g_matrix, s, +1.0)
    if inst.linear_coeffs is not None:
        objective = core.AffineForm(const=0.0, coeffs=inst.linear_coeffs)
    else:
        objective = core.SmoothForm(fn=inst.objective, grad_fn=inst.objective_grad)
    res = core.solve_simplex_program(inst.m, objective, constraint, level,
                                     feas_tol=feas_tol, opt_tol=opt_tol,
                                     max_iters=max_iters)
    lam = res.lam
    return CCPSolution(
        weights=SimplexWeights(lam),
        kappa=kap,
        margin_level=level,
        empirical_constraint_value=phi_risk_from_matrix(inst.g_matrix, lam, s, +1.0),
        objective_value=float(inst.objective(lam)),
        n=inst.n,
        iterations=res.iterations,
        status=res.status,
    )


def grid_oracle_ccp(inst: CCPInstance, resolution: float) -> CCPSolution:
    """Exhaustive simplex-grid referee for M <= 3; ties to the
    lexicographically smallest weights (first hit in scan order)."""
    from ._grids import iter_grid_chunks
    if inst.m > 3:
        raise DomainError(f"grid oracle supports M <= 3, got {inst.m}")
    if not 0.0 < resolution <= 0.5:
        raise DomainError(f"resolution must lie in (0, 0.5], got {resolution}")
    s = inst.surrogate
    kap = kappa(s.lipschitz, inst.m, inst.delta)
    level = inst.alpha - kap / math.sqrt(inst.n)
    if level <= 0.0:
        from .errors import SampleTooSmall
        raise SampleTooSmall(f"alpha - kappa/sqrt(n) = {level} <= 0")
    k = max(1, round(1.0 / resolution))
    if s.affine_coefficients is not None:
        # mean phi(G lam) = a + b * mean(G) @ lam, so one dot per point
        a, b = s.affine_coefficients
        g_mean = inst.g_matrix.mean(axis=0)
        def constraint_values(chunk):
            return a + b * (chunk @ g_mean)
    else:
        # cap the (n, block) product to keep memory flat
        block = max(1, int(5_000_000 // max(inst.n, 1)))
        def constraint_values(chunk):
            out = np.empty(chunk.shape[0])
            for lo in range(0, chunk.shape[0], block):
                part = chunk[lo:lo + block]
                out[lo:lo + part.shape[0]] = np.mean(
                    s.eval(inst.g_matrix @ part.T), axis=0)
            return out
    if inst.linear_coeffs is not None:
        c = inst.linear_coeffs
        def objective_values(chunk):
            return chunk @ c
    else:
        def objective_values(chunk):
            return np.asarray([inst.objective(lam) for lam in chunk])
    best_val, best_lam = np.inf, None
    for chunk in iter_grid_chunks(inst.m, k):
        feasible = constraint_values(chunk) <= level
        if not np.any(feasible):
            continue
        objs = np.where(feasible, objective_values(chunk), np.inf)
        j = int(np.argmin(objs))
        if objs[j] < best_val:
            best_val = float(objs[j])
            best_lam = chunk[j].copy()
    if best_lam is None:
        from .errors import Infeasible
        raise Infeasible(f"no grid point satisfies the margin constraint {level}")
    return CCPSolution(
        weights=SimplexWeights(best_lam),
        kappa=kap,
        margin_level=level,
        empirical_constraint_value=phi_risk_from_matrix(inst.g_matrix, best_lam, s, +1.0),
        objective_value=best_val,
        n=inst.n,
        iterations=0,
        status="optimal",
    )


def chance_feasibility_estimate(lam, constraint_bases: Sequence[Callable],
                                fresh_draws, alpha: float) -> dict:
    """Empirical violation rate of F(lambda, xi) > 0 on held-out draws.

    feasible_for_original follows the complement convention: the empirical
    P(F <= 0) must reach 1 - alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    lam = np.asarray(lam, dtype=float)
    G = evaluate_constraint_bases(constraint_bases, fresh_draws)
    if G.shape[1] != lam.size:
        raise DomainError("weight length does not match the number of bases")
    F = G @ lam
    rate = float(np.mean(F > 0.0))
    return {"violation_rate": rate, "feasible_for_original": bool(1.0 - rate >= 1.0 - alpha)}


def chance_violation_from_matrix(lam, G: np.ndarray) -> float:
    """Violation rate when the g_j(xi) columns are already evaluated."""
    F = np.asarray(G, dtype=float) @ np.asarray(lam, dtype=float)
    return float(np.mean(F > 0.0))


def ccp_bound(kappa_value: float, eps: float, alpha: float, n: int,
              phi_at_one: float) -> float:
    """Excess objective bound 4 phi(1) kappa / ((1 - eps) alpha sqrt(n)).

    Warns (and still returns the bound) when n is below the sample-size
    threshold (4 kappa / ((1 - eps) alpha))^2 required by the guarantee.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if kappa_value <= 0 or phi_at_one <= 0:
        raise DomainError("kappa and phi(1) must be positive")
    threshold = (4.0 * kappa_value / ((1.0 - eps) * alpha)) ** 2
    if n < threshold:
        warnings.warn(
            f"n = {n} is below the guarantee threshold {threshold:.1f}; "
            "the returned bound is not certified at this sample size",
            UserWarning, stacklevel=2)
    return 4.0 * phi_at_one * kappa_value / ((1.0 - eps) * alpha * math.sqrt(n))
