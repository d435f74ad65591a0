"""The constrained type-II minimization over the simplex.

Pipeline: the concentration margin kappa = 4*sqrt(2)*L*sqrt(log(2M/delta))
strengthens the empirical type-I constraint to alpha_kappa =
alpha - kappa/sqrt(n^-); the solver minimizes the empirical phi-type-II
risk over mixing weights subject to that constraint.  A brute-force grid
oracle (M <= 3) certifies the solver, a feasibility probe witnesses the
small-phi-type-I assumption, and the sample-size/bound report carries
n0 and the two-term excess bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _solver_core as core
from ._grids import grid_points, iter_grid_chunks
from .errors import (DomainError, EmptySample, Infeasible, OneClassEmpty,
                     SampleTooSmall, UnknownLabel)
from .hypothesis import BaseDictionary, SimplexWeights
from .risk import Sample, phi_risk_from_matrix
from .surrogate import Surrogate


@dataclass(frozen=True)
class NPConfig:
    alpha: float
    delta: float
    surrogate: Surrogate
    feas_tol: float = 1e-8
    opt_tol: float = 1e-5
    max_iters: int = 500

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.feas_tol <= 0 or self.opt_tol <= 0 or self.max_iters < 1:
            raise DomainError("tolerances must be positive and max_iters >= 1")


@dataclass
class NPSolution:
    weights: SimplexWeights
    kappa: float
    alpha_kappa: float
    r_minus_phi: float
    r_plus_phi: float
    n_minus: int
    n_plus: int
    iterations: int
    status: str

    def to_json(self) -> dict:
        return {
            "weights": self.weights.to_json(),
            "kappa": self.kappa,
            "alpha_kappa": self.alpha_kappa,
            "r_minus_phi": self.r_minus_phi,
            "r_plus_phi": self.r_plus_phi,
            "n_minus": self.n_minus,
            "n_plus": self.n_plus,
            "iterations": self.iterations,
            "status": self.status,
        }


@dataclass
class BoundReport:
    n0: int
    eps_bar_upper: float
    thm42_bound: float

    def to_json(self) -> dict:
        return {"n0": self.n0, "eps_bar_upper": self.eps_bar_upper,
                "thm42_bound": self.thm42_bound}


def kappa(L: float, M: int, delta: float) -> float:
    """kappa = 4*sqrt(2) * L * sqrt(log(2M/delta)), natural log."""
    if not (L > 0 and math.isfinite(L)):
        raise DomainError(f"L must be positive, got {L}")
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return 4.0 * math.sqrt(2.0) * L * math.sqrt(math.log(2.0 * M / delta))


def alpha_kappa(alpha: float, kappa_value: float, n_minus: int) -> float:
    """alpha - kappa/sqrt(n^-); SampleTooSmall when that is not positive."""
    if n_minus < 1:
        raise DomainError(f"n_minus must be >= 1, got {n_minus}")
    if kappa_value < 0:
        raise DomainError(f"kappa must be nonnegative, got {kappa_value}")
    out = alpha - kappa_value / math.sqrt(n_minus)
    if out <= 0.0:
        raise SampleTooSmall(
            f"alpha - kappa/sqrt(n^-) = {out} <= 0 at n^- = {n_minus}; "
            "the strengthened constraint level is vacuous")
    return out


def _risk_matrices(sample: Sample, dictionary: BaseDictionary):
    if sample.n_minus < 1 or sample.n_plus < 1:
        raise EmptySample("both classes must be nonempty")
    H_minus = dictionary.evaluate_matrix(sample.negatives)
    H_plus = dictionary.evaluate_matrix(sample.positives)
    return H_minus, H_plus


def solve_np(sample: Sample, dictionary: BaseDictionary, cfg: NPConfig) -> NPSolution:
    """Minimize empirical phi-type-II risk s.t. phi-type-I risk <= alpha_kappa."""
    H_minus, H_plus = _risk_matrices(sample, dictionary)
    s = cfg.surrogate
    kap = kappa(s.lipschitz, dictionary.m, cfg.delta)
    level = alpha_kappa(cfg.alpha, kap, sample.n_minus)

    objective = core.risk_form(H_plus, s, -1.0)
    constraint = core.risk_form(H_minus, s, +1.0)
    res = core.solve_simplex_program(
        dictionary.m, objective, constraint, level,
        feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol, max_iters=cfg.max_iters)

    lam = res.lam
    return NPSolution(
        weights=SimplexWeights(lam),
        kappa=kap,
        alpha_kappa=level,
        r_minus_phi=phi_risk_from_matrix(H_minus, lam, s, +1.0),
        r_plus_phi=phi_risk_from_matrix(H_plus, lam, s, -1.0),
        n_minus=sample.n_minus,
        n_plus=sample.n_plus,
        iterations=res.iterations,
        status=res.status,
    )


def _oracle_scan(H_minus, H_plus, s, level, lam_chunks):
    """Best feasible grid point: lexicographically-first strict improvements."""
    best_val = np.inf
    best_lam = None
    for chunk in lam_chunks:
        margins_minus = H_minus @ chunk.T
        r_minus = np.mean(s.eval(margins_minus), axis=0)
        feasible = r_minus <= level
        if not np.any(feasible):
            continue
        margins_plus = H_plus @ chunk.T
        r_plus = np.mean(s.eval(-margins_plus), axis=0)
        r_plus = np.where(feasible, r_plus, np.inf)
        j = int(np.argmin(r_plus))  # first index on ties: lexicographic winner
        if r_plus[j] < best_val:
            best_val = float(r_plus[j])
            best_lam = chunk[j].copy()
    return best_lam, best_val


def _oracle_scan_affine(H_minus, H_plus, s, level, k):
    """Affine-surrogate reduction of the M=3 scan.

    With phi affine on [-1, 1] both risks are affine in the weights, so
    within each lambda_1 row the feasible j-range is an interval and the
    objective is monotone in j; only the interval endpoints can win.  The
    endpoint window is padded by two grid steps and every candidate is
    re-evaluated with the full-sample formula, so the reduction matches
    the exhaustive scan (exactly, in exact arithmetic; the padding guards
    the float boundary).  Verified against the exhaustive scan on coarse
    grids in the test suite.
    """
    a, b = s.affine_coefficients
    u = b * H_minus.mean(axis=0)   # r_minus(lam) = a + u @ lam
    v = -b * H_plus.mean(axis=0)   # r_plus(lam)  = a + v @ lam
    cand_rows = []
    for i in range(k + 1):
        j_max = k - i
        # r_minus(i, j) = a + (u0*i + u1*j + u2*(k-i-j))/k: affine in j
        c0 = a + (u[0] * i + u[2] * (k - i)) / k
        cj = (u[1] - u[2]) / k
        # feasible j interval for c0 + cj*j <= level
        if abs(cj) < 1e-300:
            if c0 <= level:
                lo, hi = 0, j_max
            else:
                continue
        elif cj > 0:
            hi = math.floor((level - c0) / cj)
            lo = 0
            if hi < 0:
                continue
            hi = min(hi, j_max)
        else:
            lo = math.ceil((level - c0) / cj)
            hi = j_max
            if lo > j_max:
                continue
            lo = max(lo, 0)
        window = set()
        for endpoint in (lo, hi):
            for dj in range(-2, 3):
                jj = endpoint + dj
                if 0 <= jj <= j_max:
                    window.add(jj)
        for jj in sorted(window):
            cand_rows.append((i, jj))
    if not cand_rows:
        return None, np.inf
    idx = np.asarray(cand_rows, dtype=float)
    lams = np.column_stack([idx[:, 0], idx[:, 1], k - idx[:, 0] - idx[:, 1]]) / k
    return _oracle_scan(H_minus, H_plus, s, level, [lams])


def grid_oracle_np(sample: Sample, dictionary: BaseDictionary, cfg: NPConfig,
                   resolution: float) -> NPSolution:
    """Exhaustive grid search over the simplex; the solver's referee.

    Independent of the production solver: risks are evaluated directly on
    every grid point (or a provably sufficient candidate subset for affine
    surrogates), the best feasible point wins, ties go to the
    lexicographically smallest weight vector.
    """
    if dictionary.m > 3:
        raise DomainError(f"grid oracle supports M <= 3, got {dictionary.m}")
    if not 0.0 < resolution <= 0.5:
        raise DomainError(f"resolution must lie in (0, 0.5], got {resolution}")
    H_minus, H_plus = _risk_matrices(sample, dictionary)
    s = cfg.surrogate
    kap = kappa(s.lipschitz, dictionary.m, cfg.delta)
    level = alpha_kappa(cfg.alpha, kap, sample.n_minus)
    k = max(1, round(1.0 / resolution))

    if dictionary.m == 3 and s.affine_coefficients is not None and k > 400:
        best_lam, best_val = _oracle_scan_affine(H_minus, H_plus, s, level, k)
    else:
        chunks = iter_grid_chunks(dictionary.m, k)
        best_lam, best_val = _oracle_scan(H_minus, H_plus, s, level, chunks)
    if best_lam is None:
        raise Infeasible(f"no grid point satisfies r_minus_phi <= {level}")
    return NPSolution(
        weights=SimplexWeights(best_lam),
        kappa=kap,
        alpha_kappa=level,
        r_minus_phi=phi_risk_from_matrix(H_minus, best_lam, s, +1.0),
        r_plus_phi=float(best_val),
        n_minus=sample.n_minus,
        n_plus=sample.n_plus,
        iterations=0,
        status="optimal",
    )


def feasibility_probe(negatives, dictionary: BaseDictionary, cfg: NPConfig,
                      eps: float) -> dict:
    """Check whether some mixture has empirical phi-type-I risk below
    eps*alpha - kappa/sqrt(n^-), and report the unconstrained minimum."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    neg = np.asarray(negatives, dtype=float)
    if neg.ndim == 1:
        neg = neg.reshape(-1, 1)
    if neg.shape[0] < 1:
        raise EmptySample("negative sample is empty")
    s = cfg.surrogate
    H_minus = dictionary.evaluate_matrix(neg)
    kap = kappa(s.lipschitz, dictionary.m, cfg.delta)
    threshold = eps * cfg.alpha - kap / math.sqrt(neg.shape[0])
    if threshold <= 0.0:
        raise SampleTooSmall(
            f"eps*alpha - kappa/sqrt(n^-) = {threshold} <= 0; probe is vacuous")
    form = core.risk_form(H_minus, s, +1.0)
    lam, min_val, _ = core.minimize_simplex(dictionary.m, form, cfg.max_iters)
    min_val = phi_risk_from_matrix(H_minus, lam, s, +1.0)
    return {
        "feasible": bool(min_val <= threshold),
        "min_r_minus_phi": float(min_val),
        "threshold": float(threshold),
        "argmin": SimplexWeights(lam),
    }


def eps_bar_upper(min_r_minus_phi: float, kappa_value: float, n_minus: int,
                  alpha: float) -> float:
    """High-probability upper estimate (min R-hat + kappa/sqrt(n^-))/alpha."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if n_minus < 1:
        raise DomainError(f"n_minus must be >= 1, got {n_minus}")
    return (min_r_minus_phi + kappa_value / math.sqrt(n_minus)) / alpha


def n0_and_bound(kappa_value: float, eps_bar: float, alpha: float, n_minus: int,
                 n_plus: int, phi_at_one: float) -> BoundReport:
    """Sample-size threshold and the two-term excess type-II bound.

    n0 = ceil((4 kappa / ((1 - eps_bar) alpha))^2); the bound is
    4 phi(1) kappa / ((1-eps_bar) alpha sqrt(n^-)) + 2 kappa / sqrt(n^+).
    """
    if not 0.0 <= eps_bar < 1.0:
        raise DomainError(f"eps_bar must lie in [0, 1), got {eps_bar}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if kappa_value <= 0 or phi_at_one <= 0:
        raise DomainError("kappa and phi(1) must be positive")
    if n_minus < 1 or n_plus < 1:
        raise DomainError("sample sizes must be >= 1")
    denom = (1.0 - eps_bar) * alpha
    n0 = int(math.ceil((4.0 * kappa_value / denom) ** 2))
    bound = (4.0 * phi_at_one * kappa_value / (denom * math.sqrt(n_minus))
             + 2.0 * kappa_value / math.sqrt(n_plus))
    return BoundReport(n0=max(n0, 1), eps_bar_upper=eps_bar, thm42_bound=bound)


def pooled_bound(kappa_value: float, eps_bar: float, alpha: float, n: int, p: float,
                 phi_at_one: float) -> float:
    """sqrt(2)-inflated excess bound for a pooled sample of size n with
    P(Y=+1) = p: the expected class sizes n(1-p), np replace n^-, n^+."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if not 0.0 <= eps_bar < 1.0:
        raise DomainError(f"eps_bar must lie in [0, 1), got {eps_bar}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    root2 = math.sqrt(2.0)
    denom = (1.0 - eps_bar) * alpha
    return (4.0 * root2 * phi_at_one * kappa_value / (denom * math.sqrt(n * (1.0 - p)))
            + 2.0 * root2 * kappa_value / math.sqrt(n * p))


def split_pooled(pooled) -> Sample:
    """Partition a pooled labeled sample into the two class samples.

    Accepts (X, y) arrays or an iterable of (x, y) pairs; y in {-1, +1}.
    """
    if isinstance(pooled, tuple) and len(pooled) == 2:
        X = np.asarray(pooled[0], dtype=float)
        y = np.asarray(pooled[1])
    else:
        rows = list(pooled)
        if not rows:
            raise EmptySample("pooled sample is empty")
        X = np.asarray([np.atleast_1d(r[0]) for r in rows], dtype=float)
        y = np.asarray([r[1] for r in rows])
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise EmptySample("pooled sample is empty")
    y = y.astype(float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        bad = y[~np.isin(y, (-1.0, 1.0))][0]
        raise UnknownLabel(f"labels must be -1 or +1, got {bad}")
    neg = X[y == -1.0]
    pos = X[y == 1.0]
    if neg.shape[0] == 0 or pos.shape[0] == 0:
        raise OneClassEmpty("pooled sample contains a single class")
    return Sample(negatives=neg, positives=pos)
