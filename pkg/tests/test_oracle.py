import numpy as np
import pytest
from numpy.testing import assert_allclose

from privmech import eit
from privmech.infocore import Mechanism, ValidationError, kl_divergence, mutual_information, pushforward
from privmech.oracle import (
    GridSpec,
    grid_allowance,
    is_feasible,
    oracle_solve_binary,
    oracle_solve_general,
    simplex_lattice,
)

from conftest import MIRRORED


def utility(p1, p2, W):
    return kl_divergence(pushforward(p1, W), pushforward(p2, W))


class TestGridSpec:
    @pytest.mark.parametrize("step", [0.0, 0.2, 0.003])
    def test_rejects(self, step):
        with pytest.raises(ValidationError):
            GridSpec(step=step)

    def test_points(self):
        assert GridSpec(step=0.01).points == 100


class TestFeasibility:
    def test_rank_one_always_feasible(self):
        assert is_feasible(np.full((2, 2), 0.5), *MIRRORED, 0.0, 0.0)

    def test_identity_infeasible_at_small_budget(self):
        assert not is_feasible(np.eye(2), *MIRRORED, 0.1, 0.1)


class TestBinary:
    def test_zero_budget(self):
        res = oracle_solve_binary(*MIRRORED, 0.0, 0.0, GridSpec(step=0.01))
        assert res.utility == pytest.approx(0.0, abs=1e-12)
        W = res.mechanism.rows
        assert_allclose(W[0], W[1])

    def test_full_budget_recovers_kl(self):
        # with unlimited leakage the identity channel is optimal
        res = oracle_solve_binary(*MIRRORED, 10.0, 10.0, GridSpec(step=0.01))
        assert_allclose(res.utility, kl_divergence(*MIRRORED), rtol=1e-12)

    @pytest.mark.parametrize("eps", [0.002, 0.01, 0.05])
    def test_result_feasible_and_consistent(self, eps):
        res = oracle_solve_binary(*MIRRORED, eps, eps)
        assert is_feasible(res.mechanism, *MIRRORED, eps, eps)
        assert_allclose(res.utility, utility(*MIRRORED, res.mechanism), rtol=1e-10)

    @pytest.mark.parametrize("eps", [0.002, 0.01, 0.05])
    def test_dominates_closed_form(self, eps):
        sol = eit.solve(*MIRRORED, eps, eps)
        e = max(sol.exact_leak1, sol.exact_leak2)
        res = oracle_solve_binary(*MIRRORED, e, e)
        assert res.utility >= sol.exact_utility - 1e-9

    def test_refinement_never_hurts(self):
        p1, p2 = np.array([0.45, 0.55]), np.array([0.5, 0.5])
        plain = oracle_solve_binary(p1, p2, 0.01, 0.01, GridSpec(step=0.01, refine=False))
        fine = oracle_solve_binary(p1, p2, 0.01, 0.01, GridSpec(step=0.01))
        assert fine.utility >= plain.utility
        assert fine.utility - plain.utility <= grid_allowance(p1, p2, 0.01)

    def test_monotone_in_budget(self):
        us = [oracle_solve_binary(*MIRRORED, e, e, GridSpec(step=0.01)).utility for e in (0.001, 0.01, 0.1)]
        assert us == sorted(us)

    def test_rejects_ternary(self):
        with pytest.raises(ValidationError):
            oracle_solve_binary([0.2, 0.3, 0.5], [0.3, 0.3, 0.4], 0.1, 0.1)


class TestGeneral:
    def test_lattice(self):
        L = simplex_lattice(3, 4)
        assert len(L) == 15
        assert_allclose(L.sum(axis=1), 1.0)

    def test_matches_binary_grid(self):
        g = GridSpec(step=0.05, refine=False)
        a = oracle_solve_binary(*MIRRORED, 0.02, 0.02, g)
        b = oracle_solve_general(*MIRRORED, 0.02, 0.02, g, 2)
        assert_allclose(b.utility, a.utility, rtol=1e-10)

    def test_ternary(self):
        p1, p2 = np.array([0.2, 0.3, 0.5]), np.array([0.5, 0.3, 0.2])
        res = oracle_solve_general(p1, p2, 0.02, 0.02, GridSpec(step=0.1), 3)
        assert is_feasible(res.mechanism, p1, p2, 0.02, 0.02)
        assert_allclose(res.utility, utility(p1, p2, res.mechanism), rtol=1e-9)

    def test_limits(self):
        with pytest.raises(ValidationError):
            oracle_solve_general([0.25] * 4, [0.1, 0.2, 0.3, 0.4], 0.1, 0.1, GridSpec(step=0.1), 4)
        with pytest.raises(ValidationError):
            oracle_solve_general(*MIRRORED, 0.1, 0.1, GridSpec(step=0.01), 2)
