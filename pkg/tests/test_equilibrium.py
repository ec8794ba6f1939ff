import json

import numpy as np
import pytest
import scipy.sparse as sp

import opdyn.equilibrium as eq
from conftest import random_row_stochastic
from opdyn.errors import ConsistencyError, ConvergenceError, ValidityError
from opdyn.equilibrium import (
    EquilibriumResult,
    average_shift_closed_form,
    convergence_rate_bound,
    equilibrium_shift,
    fj_equilibrium,
    mediated_equilibrium_linear,
    neumann_identity_check,
)
from opdyn.graph import InfluenceMatrix, generate_regular


def self_loop():
    return InfluenceMatrix(sp.csr_matrix(np.array([[1.0]])))


def mutual_pair():
    return InfluenceMatrix(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])))


class TestFjEquilibrium:
    def test_consensus_is_fixed(self):
        W = generate_regular(8, 4)
        x0 = np.full(8, 0.62)
        res = fj_equilibrium(W, np.full(8, 0.4), x0)
        assert np.max(np.abs(res.x - 0.62)) <= 1e-12
        assert res.residual <= 1e-10

    def test_two_node_hand_solution(self):
        res = fj_equilibrium(mutual_pair(), np.array([0.5, 0.5]), np.array([0.0, 1.0]))
        assert abs(res.x[0] - 1.0 / 3.0) <= 1e-9
        assert abs(res.x[1] - 2.0 / 3.0) <= 1e-9

    def test_mean_preserved_doubly_stochastic_uniform_lambda(self, rng):
        for n, k in ((10, 2), (30, 4)):
            W = generate_regular(n, k)
            x0 = rng.uniform(0, 1, n)
            res = fj_equilibrium(W, np.full(n, 0.35), x0, tol=1e-12)
            assert abs(float(res.x.mean()) - float(x0.mean())) <= 1e-10

    def test_residual_definition(self, rng):
        W = random_row_stochastic(rng, 25)
        lam = rng.uniform(0.2, 0.8, 25)
        x0 = rng.uniform(0, 1, 25)
        res = fj_equilibrium(W, lam, x0, tol=1e-10)
        actual = np.max(np.abs(res.x - (lam * x0 + (1 - lam) * W.dot(res.x))))
        assert actual == res.residual
        assert res.residual <= 1e-10

    def test_nonconvergence_reports_residual(self, rng):
        W = random_row_stochastic(rng, 20)
        lam = np.full(20, 0.05)
        x0 = rng.uniform(0, 1, 20)
        with pytest.raises(ConvergenceError) as err:
            fj_equilibrium(W, lam, x0, tol=1e-14, max_iter=3)
        assert err.value.residual > 0.0

    def test_invalid_lambda_rejected(self, rng):
        W = generate_regular(4, 2)
        with pytest.raises(ValidityError):
            fj_equilibrium(W, np.array([0.5, 0.5, 1.0, 0.5]), np.full(4, 0.5))

    def test_invalid_opinions_rejected(self):
        W = generate_regular(4, 2)
        with pytest.raises(ValidityError):
            fj_equilibrium(W, np.full(4, 0.5), np.array([0.5, 0.5, 1.5, 0.5]))


class TestMediatedEquilibrium:
    def test_scalar_closed_form(self):
        # x = (0.5*0.4 + 0.5*0.25) / (1 - 0.5*0.5) = 13/30
        res = mediated_equilibrium_linear(self_loop(), np.array([0.5]),
                                          np.array([0.4]), 0.5, 0.25)
        assert abs(res.x[0] - 13.0 / 30.0) <= 1e-9

    def test_near_identity_limit(self, rng):
        W = random_row_stochastic(rng, 30)
        lam = rng.uniform(0.2, 0.8, 30)
        x0 = rng.uniform(0, 1, 30)
        med = mediated_equilibrium_linear(W, lam, x0, 0.999, 0.0005)
        fj = fj_equilibrium(W, lam, x0)
        assert np.max(np.abs(med.x - fj.x)) <= 1e-2

    def test_mean_preserved_at_zero_bias(self, rng):
        n = 20
        W = generate_regular(n, 4)
        x0 = rng.uniform(0, 1, n)
        m = 0.5
        b = (1.0 - m) * float(x0.mean())  # neutral point at the innate mean
        res = mediated_equilibrium_linear(W, np.full(n, 0.3), x0, m, b, tol=1e-12)
        assert abs(float(res.x.mean()) - float(x0.mean())) <= 1e-9

    def test_invalid_transform_rejected(self):
        W = generate_regular(4, 2)
        with pytest.raises(ValidityError):
            mediated_equilibrium_linear(W, np.full(4, 0.5), np.full(4, 0.5), 1.2, 0.1)

    def test_result_in_unit_interval(self, rng):
        W = random_row_stochastic(rng, 40)
        lam = rng.uniform(0.1, 0.9, 40)
        x0 = rng.uniform(0, 1, 40)
        res = mediated_equilibrium_linear(W, lam, x0, 0.8, 0.18)
        assert np.all(res.x >= 0.0) and np.all(res.x <= 1.0)


class TestConvergenceRateBound:
    def test_uniform_hand_values(self):
        assert abs(convergence_rate_bound(0.3, 0.8) - 0.56) <= 1e-12
        assert convergence_rate_bound(0.5, 0.5) == 0.25

    def test_heterogeneous_uses_max(self):
        lam = np.array([0.9, 0.2, 0.6])
        assert abs(convergence_rate_bound(lam, 0.5) - 0.5 * 0.8) <= 1e-15

    def test_small_lambda_supremum(self):
        assert abs(convergence_rate_bound(1e-9, 0.5) - 0.5) <= 1e-9

    def test_below_one(self, rng):
        for _ in range(20):
            lam = rng.uniform(0.01, 0.99, 5)
            m = rng.uniform(0.05, 0.95)
            assert convergence_rate_bound(lam, m) < 1.0


class TestEquilibriumShift:
    def test_near_identity_shift_small(self, rng):
        W = random_row_stochastic(rng, 25)
        lam = rng.uniform(0.2, 0.8, 25)
        x0 = rng.uniform(0, 1, 25)
        rep = equilibrium_shift(W, lam, x0, 0.999, 0.0005)
        assert np.max(np.abs(rep.shift)) <= 1e-2

    def test_engineered_consensus_zero_shift(self):
        n = 12
        W = generate_regular(n, 4)
        c = 0.6
        m = 0.5
        b = c * (1.0 - m)  # neutral point at the consensus value
        rep = equilibrium_shift(W, np.full(n, 0.4), np.full(n, c), m, b)
        assert np.max(np.abs(rep.shift)) <= 1e-9
        assert not rep.ratio_defined
        assert np.isnan(rep.amplification_ratio)

    def test_shift_is_solver_difference(self, rng):
        W = random_row_stochastic(rng, 50)
        lam = rng.uniform(0.1, 0.9, 50)
        x0 = rng.uniform(0, 1, 50)
        rep = equilibrium_shift(W, lam, x0, 0.7, 0.2)
        med = mediated_equilibrium_linear(W, lam, x0, 0.7, 0.2)
        fj = fj_equilibrium(W, lam, x0)
        assert np.max(np.abs(rep.shift - (med.x - fj.x))) <= 1e-8

    def test_avg_shift_is_mean_of_vector(self, rng):
        W = random_row_stochastic(rng, 30)
        lam = rng.uniform(0.2, 0.8, 30)
        x0 = rng.uniform(0, 1, 30)
        rep = equilibrium_shift(W, lam, x0, 0.8, 0.1)
        assert abs(rep.avg_shift - float(rep.shift.mean())) <= 1e-12

    def test_identity_residual_within_bound(self, rng):
        for _ in range(10):
            n = int(rng.integers(5, 60))
            W = random_row_stochastic(rng, n)
            lam = rng.uniform(0.1, 0.9, n)
            x0 = rng.uniform(0, 1, n)
            m = rng.uniform(0.05, 0.95)
            b = rng.uniform(0, 1 - m)
            rep = equilibrium_shift(W, lam, x0, m, b)
            assert rep.identity_residual <= 1e-8

    def test_scaling_reported_only_for_uniform_lambda(self, rng):
        W = generate_regular(10, 4)
        x0 = rng.uniform(0, 1, 10)
        uniform = equilibrium_shift(W, np.full(10, 0.3), x0, 0.8, 0.18)
        assert uniform.scaling_factor is not None
        mixed = equilibrium_shift(W, rng.uniform(0.2, 0.8, 10), x0, 0.8, 0.18)
        assert mixed.scaling_factor is None

    def test_consistency_guard_trips_on_bad_solver(self, rng, monkeypatch):
        W = generate_regular(6, 2)
        x0 = rng.uniform(0, 1, 6)

        def broken(W, lam, x0, m, b, tol=1e-10, max_iter=10**6):
            return EquilibriumResult(x=np.full(6, 0.123), iterations=1, residual=0.0)

        monkeypatch.setattr(eq, "mediated_equilibrium_linear", broken)
        with pytest.raises(ConsistencyError):
            equilibrium_shift(W, np.full(6, 0.4), x0, 0.8, 0.1)

    def test_json_report_keys(self, rng):
        W = generate_regular(6, 2)
        rep = equilibrium_shift(W, np.full(6, 0.3), rng.uniform(0, 1, 6), 0.8, 0.18)
        doc = rep.to_json()
        assert set(doc) == {
            "avg_shift", "one_off_bias", "amplification_ratio",
            "ratio_defined", "scaling_factor_closed_form",
        }
        with_vec = rep.to_json(include_shift_vector=True)
        assert len(with_vec["shift_vector"]) == 6
        json.dumps(with_vec)  # NaN-free payload must serialize

    def test_positive_bracket_gives_nonnegative_shift(self, rng):
        # mediated pull toward a high neutral point never lowers anyone
        n = 20
        W = generate_regular(n, 4)
        x0 = rng.uniform(0.0, 0.5, n)
        rep = equilibrium_shift(W, np.full(n, 0.4), x0, 0.8, 0.19)  # nu = 0.95
        assert np.all(rep.shift >= -1e-9)


class TestAverageShiftClosedForm:
    def test_frozen_scaling_reference(self):
        out = average_shift_closed_form(0.3, 0.8, 0.18, 0.5)
        assert abs(out.scaling_factor - 1.5909090909090908) <= 1e-12
        assert out.amplifies

    def test_boundary_scaling_is_one(self):
        out = average_shift_closed_form(1.0 / 3.0, 0.5, 0.2, 0.5)
        assert abs(out.scaling_factor - 1.0) <= 1e-12

    def test_zero_bias_zero_shift(self):
        m = 0.6
        mean_x0 = 0.45
        out = average_shift_closed_form(0.3, m, (1 - m) * mean_x0, mean_x0)
        assert abs(out.average_shift) <= 1e-15

    def test_shift_combines_scaling_and_bias(self):
        out = average_shift_closed_form(0.3, 0.8, 0.18, 0.5)
        want = out.scaling_factor * (1 - 0.8) * (0.9 - 0.5)
        assert abs(out.average_shift - want) <= 1e-12

    def test_amplifies_iff_condition_over_grid(self):
        grid = np.arange(0.05, 1.0, 0.05)
        for lam in grid:
            for m in grid:
                lam_f, m_f = float(lam), float(m)
                gap = m_f * (1.0 - lam_f) - lam_f
                if abs(gap) <= 1e-9:
                    continue  # float boundary, condition sign ambiguous
                out = average_shift_closed_form(lam_f, m_f, 0.0, 0.5)
                assert (out.scaling_factor > 1.0) == (gap > 0.0)
                assert out.amplifies == (gap > 0.0)

    def test_invalid_lambda_rejected(self):
        with pytest.raises(ValidityError):
            average_shift_closed_form(0.0, 0.5, 0.2, 0.5)


class TestNeumannIdentityCheck:
    def test_regular_graph_half(self):
        assert neumann_identity_check(generate_regular(10, 4), 0.5, 1e-9)

    def test_complete_on_three_high_alpha(self):
        assert neumann_identity_check(generate_regular(3, 2), 0.9, 1e-9)

    def test_tiny_alpha(self):
        assert neumann_identity_check(generate_regular(6, 2), 1e-4, 1e-9)

    def test_permutation_matrix(self):
        perm = sp.csr_matrix(np.array([
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
        ]))
        assert neumann_identity_check(InfluenceMatrix(perm), 0.5, 1e-9)

    def test_precondition_doubly_stochastic(self):
        hub = sp.csr_matrix(np.array([
            [0.0, 0.5, 0.5],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
        ]))
        with pytest.raises(ValidityError, match="doubly stochastic"):
            neumann_identity_check(InfluenceMatrix(hub), 0.5, 1e-9)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(ValidityError):
            neumann_identity_check(generate_regular(4, 2), alpha, 1e-9)
