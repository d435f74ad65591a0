"""Chance-constrained optimization over the simplex."""

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from npconvex.ccp import (CCPInstance, ccp_bound, chance_feasibility_estimate,
                          chance_violation_from_matrix,
                          evaluate_constraint_bases, grid_oracle_ccp,
                          linear_objective, solve_ccp)
from npconvex.errors import DomainError, EmptySample, Infeasible, SampleTooSmall
from npconvex.np_solver import kappa
from npconvex.surrogate import hinge, logit


def _const_columns_instance(n, alpha=0.25, delta=0.1):
    # g1 = -1 and g2 = +1 on every draw: F(lam, xi) = 1 - 2*lam1
    G = np.column_stack([-np.ones(n), np.ones(n)])
    return CCPInstance(alpha=alpha, delta=delta, surrogate=hinge(),
                       g_matrix=G, **linear_objective([1.0, 0.0]))


def test_closed_form_two_column_instance():
    n = 10 ** 4
    inst = _const_columns_instance(n)
    sol = solve_ccp(inst)
    level = 0.25 - kappa(1.0, 2, 0.1) / math.sqrt(n)
    lam1_star = max(0.0, 1.0 - level / 2.0)
    assert sol.status == "optimal"
    assert sol.margin_level == pytest.approx(level, abs=1e-15)
    assert sol.weights.lam[0] == pytest.approx(lam1_star, abs=1e-9)
    assert sol.objective_value == pytest.approx(lam1_star, abs=1e-9)
    # hinge on constants: constraint value is exactly 2*lam2
    assert sol.empirical_constraint_value == pytest.approx(
        2.0 * sol.weights.lam[1], abs=1e-9)
    assert sol.empirical_constraint_value <= level + 1e-8


def test_all_negative_bases_unconstrained():
    n = 10 ** 4
    G = np.column_stack([-np.ones(n), -np.ones(n)])
    inst = CCPInstance(alpha=0.25, delta=0.1, surrogate=hinge(), g_matrix=G,
                       **linear_objective([0.7, 0.2]))
    sol = solve_ccp(inst)
    # phi(-1) = 0 kills the constraint; the objective minimizer is e2
    assert sol.empirical_constraint_value == pytest.approx(0.0, abs=1e-12)
    assert sol.weights.lam[1] == pytest.approx(1.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(0.2, abs=1e-9)


def test_sample_too_small():
    inst = _const_columns_instance(100)
    with pytest.raises(SampleTooSmall):
        solve_ccp(inst)


def test_infeasible_instance():
    n = 10 ** 4
    G = np.column_stack([np.ones(n), np.ones(n)])  # phi(F) = 2 always
    inst = CCPInstance(alpha=0.25, delta=0.1, surrogate=hinge(), g_matrix=G,
                       **linear_objective([1.0, 0.0]))
    with pytest.raises(Infeasible):
        solve_ccp(inst)


def test_training_conservativeness():
    # any optimal solution keeps the training violation fraction below alpha
    rng = np.random.default_rng(9)
    n = 4 * 10 ** 4
    for trial in range(5):
        xi = rng.uniform(0, 1, n)
        G = np.column_stack([-np.ones(n), 2.0 * xi - 1.0])
        inst = CCPInstance(alpha=0.3, delta=0.1, surrogate=hinge(), g_matrix=G,
                           **linear_objective([1.0, 0.0]))
        sol = solve_ccp(inst)
        assert sol.empirical_constraint_value <= 0.3
        assert chance_violation_from_matrix(sol.weights.lam, G) <= 0.3


def test_solver_matches_grid_oracle():
    rng = np.random.default_rng(31)
    n = 2 * 10 ** 4
    for m in (2, 3):
        for _ in range(5):
            cols = [-np.ones(n)]
            for _ in range(m - 1):
                cols.append(rng.uniform(-1.0, 1.0, n))
            G = np.column_stack(cols)
            coeffs = rng.uniform(-1.0, 1.0, m)
            inst = CCPInstance(alpha=0.3, delta=0.1, surrogate=hinge(),
                               g_matrix=G, **linear_objective(coeffs))
            sol = solve_ccp(inst)
            ref = grid_oracle_ccp(inst, resolution=1e-3)
            assert sol.objective_value <= ref.objective_value + 1e-3
            assert sol.empirical_constraint_value <= sol.margin_level + 1e-8


def test_smooth_surrogate_against_oracle():
    # logit's phi(-1) = log2(1 + 1/e) = 0.452 floors the constraint, so
    # alpha must clear it plus the kappa/sqrt(n) margin while staying
    # below the 1/2 cap; n = 1e5 at alpha = 0.49 leaves a thin corridor
    rng = np.random.default_rng(13)
    n = 10 ** 5
    G = np.column_stack([-np.ones(n), rng.uniform(-1, 1, n)])
    inst = CCPInstance(alpha=0.49, delta=0.1, surrogate=logit(), g_matrix=G,
                       **linear_objective([1.0, -0.5]))
    sol = solve_ccp(inst)
    ref = grid_oracle_ccp(inst, resolution=1e-3)
    assert sol.objective_value <= ref.objective_value + 1e-3
    assert sol.empirical_constraint_value <= sol.margin_level + 1e-8


def test_instance_validation():
    with pytest.raises(DomainError):
        CCPInstance(alpha=0.5, delta=0.1, surrogate=hinge(),
                    g_matrix=np.zeros((3, 2)), **linear_objective([1.0, 0.0]))
    with pytest.raises(DomainError):
        CCPInstance(alpha=0.25, delta=0.1, surrogate=hinge(),
                    g_matrix=np.full((3, 2), 1.5),
                    **linear_objective([1.0, 0.0]))
    with pytest.raises(DomainError):
        CCPInstance(alpha=0.25, delta=0.1, surrogate=hinge(),
                    **linear_objective([1.0, 0.0]))
    with pytest.raises(DomainError):
        CCPInstance(alpha=0.25, delta=0.1, surrogate=hinge(),
                    g_matrix=np.zeros((3, 2)),
                    **linear_objective([1.0, 0.0, 0.0]))


def test_evaluate_constraint_bases():
    bases = [lambda x: -1.0, lambda x: 2.0 * float(x) - 1.0]
    G = evaluate_constraint_bases(bases, np.array([0.0, 0.5, 1.0]))
    assert G.shape == (3, 2)
    assert list(G[:, 1]) == [-1.0, 0.0, 1.0]
    with pytest.raises(EmptySample):
        evaluate_constraint_bases(bases, np.empty(0))
    with pytest.raises(DomainError):
        evaluate_constraint_bases([lambda x: 3.0], np.array([1.0]))


def test_chance_feasibility_estimate_closed_form():
    # F(lam, xi) = -lam1 + lam2*(2 xi - 1) with xi uniform: for
    # lam = (1/4, 3/4), F > 0 iff xi > 2/3, so the violation rate is 1/3
    bases = [lambda x: -1.0, lambda x: 2.0 * float(x) - 1.0]
    rng = np.random.default_rng(6)
    draws = rng.uniform(0, 1, 10 ** 5)
    out = chance_feasibility_estimate([0.25, 0.75], bases, draws, alpha=0.4)
    se = math.sqrt((1 / 3) * (2 / 3) / draws.size)
    assert abs(out["violation_rate"] - 1.0 / 3.0) < 4 * se
    assert out["feasible_for_original"]
    strict = chance_feasibility_estimate([0.25, 0.75], bases, draws, alpha=0.25)
    assert not strict["feasible_for_original"]
    # degenerate corners
    zero = chance_feasibility_estimate([1.0, 0.0], bases, draws, alpha=0.1)
    assert zero["violation_rate"] == 0.0
    one = chance_feasibility_estimate([0.0, 1.0], [lambda x: 1.0, lambda x: 1.0],
                                      draws[:100], alpha=0.1)
    assert one["violation_rate"] == 1.0


def test_ccp_bound_values_and_warning():
    assert ccp_bound(10.0, 0.5, 0.25, 10 ** 6, 2.0) == pytest.approx(0.64)
    # scales exactly as 1/sqrt(n)
    b1 = ccp_bound(10.0, 0.5, 0.25, 4 * 10 ** 6, 2.0)
    assert b1 == pytest.approx(0.32)
    # grows without bound as eps -> 1 (n is below threshold there, so the
    # advisory warning fires too)
    with pytest.warns(UserWarning):
        assert ccp_bound(10.0, 0.999, 0.25, 10 ** 8, 2.0) > 30.0
    with pytest.raises(DomainError):
        ccp_bound(10.0, 0.0, 0.25, 10 ** 6, 2.0)
    with pytest.raises(DomainError):
        ccp_bound(10.0, 1.0, 0.25, 10 ** 6, 2.0)
    with pytest.warns(UserWarning):
        ccp_bound(10.0, 0.5, 0.25, 100, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ccp_bound(10.0, 0.5, 0.25, 10 ** 6, 2.0)  # above threshold: no warning


def test_solution_json():
    sol = solve_ccp(_const_columns_instance(10 ** 4))
    blob = sol.to_json()
    assert blob["status"] == "optimal"
    assert blob["n"] == 10 ** 4
    assert len(blob["weights"]) == 2
