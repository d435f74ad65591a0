"""Empirical and exact risk functionals.

Type-I quantities condition on the negative class (false alarms), type-II
on the positive class (misses).  The phi versions replace the 0/1
indicator by a convex surrogate and dominate it pointwise:

    R^-(h)     = P^-(h(X) >= 0)          R^-_phi(h) = E^- phi(h(X))
    R^+(h)     = P^+(h(X) <= 0)          R^+_phi(h) = E^+ phi(-h(X))

Empirical counterparts average over the respective samples.  Closed
forms are provided for the two-classifier uniform construction used by
the counterexample experiment, and Monte Carlo estimation covers
scenarios with a generative law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._seeding import rng_for
from .errors import DomainError, EmptySample, UnknownScenario
from .hypothesis import CombinedClassifier
from .surrogate import Surrogate


@dataclass(frozen=True)
class Sample:
    """Two i.i.d. samples, one per class."""

    negatives: np.ndarray
    positives: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "negatives", _as_matrix(self.negatives))
        object.__setattr__(self, "positives", _as_matrix(self.positives))

    @property
    def n_minus(self) -> int:
        return self.negatives.shape[0]

    @property
    def n_plus(self) -> int:
        return self.positives.shape[0]


def _as_matrix(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim == 1:
        out = out.reshape(-1, 1)
    return out


def _require_nonempty(arr: np.ndarray, label: str) -> np.ndarray:
    arr = _as_matrix(arr)
    if arr.shape[0] == 0:
        raise EmptySample(f"{label} sample is empty")
    return arr


@dataclass(frozen=True)
class RiskReport:
    r_minus_01: float
    r_plus_01: float
    r_minus_phi: float
    r_plus_phi: float

    def to_json(self) -> dict:
        return {
            "r_minus_01": self.r_minus_01,
            "r_plus_01": self.r_plus_01,
            "r_minus_phi": self.r_minus_phi,
            "r_plus_phi": self.r_plus_phi,
        }


def empirical_phi_type1(h: CombinedClassifier, s: Surrogate, negatives) -> float:
    """(1/n^-) sum phi(h(X_i^-))."""
    X = _require_nonempty(negatives, "negative")
    return float(np.mean(s.eval(h.evaluate_batch(X))))


def empirical_phi_type2(h: CombinedClassifier, s: Surrogate, positives) -> float:
    """(1/n^+) sum phi(-h(X_i^+))."""
    X = _require_nonempty(positives, "positive")
    return float(np.mean(s.eval(-h.evaluate_batch(X))))


def empirical_01_type1(h: CombinedClassifier, negatives) -> float:
    """Fraction of negatives with h(x) >= 0 (boundary included)."""
    X = _require_nonempty(negatives, "negative")
    return float(np.mean(h.evaluate_batch(X) >= 0.0))


def empirical_01_type2(h: CombinedClassifier, positives) -> float:
    """Fraction of positives with h(x) <= 0 (boundary included)."""
    X = _require_nonempty(positives, "positive")
    return float(np.mean(h.evaluate_batch(X) <= 0.0))


def risk_report(h: CombinedClassifier, s: Surrogate, sample: Sample) -> RiskReport:
    return RiskReport(
        r_minus_01=empirical_01_type1(h, sample.negatives),
        r_plus_01=empirical_01_type2(h, sample.positives),
        r_minus_phi=empirical_phi_type1(h, s, sample.negatives),
        r_plus_phi=empirical_phi_type2(h, s, sample.positives),
    )


def exact_risks_prop31(lam: float, alpha: float) -> Tuple[float, float]:
    """True 0/1 risks of h_lambda = lam*h1 + (1-lam)*h2 for the uniform pair.

    Here h1 = -1 everywhere, h2(x) = 1(x <= alpha) - 1(x > alpha), and both
    class-conditionals are uniform on [0, 1].  Then h_lambda(x) =
    (1 - 2*lam) 1(x <= alpha) - 1(x > alpha), so

        R^-(h_lambda) = alpha * 1(lam <= 1/2)
        R^+(h_lambda) = (1 - alpha) * 1(lam < 1/2) + 1(lam >= 1/2)
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    r_minus = alpha if lam <= 0.5 else 0.0
    r_plus = (1.0 - alpha) if lam < 0.5 else 1.0
    return r_minus, r_plus


_WHICH = ("type1_01", "type2_01", "type1_phi", "type2_phi")


def monte_carlo_risk(h: CombinedClassifier, s: Surrogate, scenario, which: str,
                     m: int, seed: int) -> Tuple[float, float]:
    """Monte Carlo estimate of a true risk, with a 95% normal half-width.

    `scenario` must expose draw_negatives(rng, m) / draw_positives(rng, m);
    scenarios without a generative law raise UnknownScenario.
    """
    if which not in _WHICH:
        raise DomainError(f"unknown risk selector {which!r}; expected one of {_WHICH}")
    if m < 100:
        raise DomainError(f"need at least 100 draws, got {m}")
    if not (hasattr(scenario, "draw_negatives") and hasattr(scenario, "draw_positives")):
        raise UnknownScenario(f"scenario {scenario!r} cannot be sampled from")
    rng = rng_for(seed, "risk.monte_carlo")
    if which.startswith("type1"):
        X = scenario.draw_negatives(rng, m)
        margins = h.evaluate_batch(_as_matrix(X))
        values = s.eval(margins) if which.endswith("phi") else (margins >= 0.0).astype(float)
    else:
        X = scenario.draw_positives(rng, m)
        margins = h.evaluate_batch(_as_matrix(X))
        values = s.eval(-margins) if which.endswith("phi") else (margins <= 0.0).astype(float)
    est = float(np.mean(values))
    sd = float(np.std(values, ddof=1))
    return est, 1.96 * sd / np.sqrt(m)


def phi_risk_from_matrix(H: np.ndarray, lam: np.ndarray, s: Surrogate, sign: float,
                         weights: np.ndarray | None = None) -> float:
    """Weighted mean of phi(sign * H @ lam); uniform weights when None.

    Shared by the solver, the grid oracles, and closed-form population
    computations (where rows are atoms and weights their probabilities).
    """
    margins = sign * (H @ lam)
    vals = s.eval(margins)
    if weights is None:
        return float(np.mean(vals))
    return float(np.dot(weights, vals))


@dataclass(frozen=True)
class WeightedAtoms:
    """A measure carried on finitely many base-value atoms.

    Row k of H holds (h_1, ..., h_M) on atom k; weights are the atom
    probabilities.  Empirical samples are the uniform-weight case, and
    piecewise-constant dictionaries under absolutely continuous
    class-conditionals reduce to a handful of interval atoms, which
    makes population risks exactly computable.
    """

    H: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if H.ndim != 2 or w.ndim != 1 or H.shape[0] != w.size or w.size == 0:
            raise DomainError("atoms need a (K, M) matrix and K weights")
        if np.any(w < -1e-12) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise DomainError("atom weights must be a probability vector")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "weights", w)

    def phi_risk(self, lam: np.ndarray, s: Surrogate, sign: float) -> float:
        return phi_risk_from_matrix(self.H, lam, s, sign, self.weights)

    def phi_risk_grid(self, grid: np.ndarray, s: Surrogate, sign: float) -> np.ndarray:
        """Risk at every grid row: weights @ phi(sign * H @ grid.T)."""
        return self.weights @ s.eval(sign * (self.H @ grid.T))


def empirical_atoms(H: np.ndarray) -> WeightedAtoms:
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    return WeightedAtoms(H=H, weights=np.full(n, 1.0 / n))
