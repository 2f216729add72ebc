import numpy as np
import pytest

from measurelab.errors import InvalidInputError, UndefinedPostStateError
from measurelab.measurement import Povm, outcome_distribution, trivial_povm, x_basis_povm
from measurelab.sequential import (
    JointDistribution,
    TwoStageExperiment,
    conditional_distribution,
    first_stage_marginal,
    joint_distribution,
    second_stage_marginal,
)
from measurelab.statekit import (
    bloch_to_density,
    density_to_bloch,
    maximally_mixed,
    mix,
    random_ensemble,
    random_state,
)
from measurelab.update_rules import (
    LogisticBlochRule,
    LudersRule,
    ProbabilityDependentRule,
    depolarizing_kraus_rule,
)

from oracles import logistic_joint_oracle, luders_joint_oracle


def random_two_outcome_povm(rng, labels=("a", "b")):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(z)
    e = q @ np.diag(rng.uniform(size=2)) @ q.conj().T
    return Povm.from_operators([e, np.eye(2) - e], labels)


class TestJoint:
    def test_luders_repeatable(self, lueders_cc, half):
        jd = joint_distribution(lueders_cc, half)
        assert jd.as_dict() == {("z+", "z+"): 0.5, ("z+", "z-"): 0.0, ("z-", "z+"): 0.0, ("z-", "z-"): 0.5}

    def test_logistic_example(self, logistic4):
        jd = joint_distribution(logistic4, bloch_to_density((0, 0, 0.5)))
        np.testing.assert_allclose(jd.table, [[0.75, 0.0], [0.25, 0.0]], atol=1e-15)

    def test_logistic_lambda_zero(self, cb, rng):
        x = TwoStageExperiment(cb, cb, LogisticBlochRule(0.0))
        for _ in range(20):
            assert second_stage_marginal(x, random_state(rng)).probabilities == pytest.approx((0.5, 0.5), abs=1e-15)

    def test_logistic_matches_oracle(self, cb, rng):
        for _ in range(200):
            lam = rng.uniform(0, 4)
            rho = random_state(rng)
            x = TwoStageExperiment(cb, cb, LogisticBlochRule(lam))
            expected = logistic_joint_oracle(density_to_bloch(rho).as_array(), lam)
            np.testing.assert_allclose(joint_distribution(x, rho).table, expected, atol=1e-12)

    def test_luders_matches_heralded_oracle(self, rng):
        for _ in range(100):
            f = random_two_outcome_povm(rng, ("f0", "f1"))
            g = random_two_outcome_povm(rng, ("g0", "g1"))
            rho = random_state(rng)
            expected = luders_joint_oracle(
                [e.operator for e in f.effects], [e.operator for e in g.effects], rho.matrix
            )
            x = TwoStageExperiment(f, g, LudersRule())
            np.testing.assert_allclose(joint_distribution(x, rho).table, expected, atol=1e-12)

    @pytest.mark.parametrize(
        "rule",
        [LudersRule(), depolarizing_kraus_rule(0.4), LogisticBlochRule(3.3), ProbabilityDependentRule()],
        ids=lambda r: type(r).__name__,
    )
    def test_normalized_and_chain_rule(self, rule, cb):
        rng = np.random.default_rng(4)
        for _ in range(100):
            first = cb if isinstance(rule, LudersRule) and rule.kraus else random_two_outcome_povm(rng)
            x = TwoStageExperiment(first, x_basis_povm(), rule)
            rho = random_state(rng)
            jd = joint_distribution(x, rho)
            assert abs(jd.table.sum() - 1) <= 1e-10
            firsts = outcome_distribution(x.first, rho)
            for i in x.first.labels:
                if firsts[i] > 1e-9:
                    cond = conditional_distribution(x, rho, i)
                    for j in x.second.labels:
                        assert abs(jd[i, j] - cond[j] * firsts[i]) <= 1e-12
            np.testing.assert_allclose(first_stage_marginal(x, rho).probabilities, firsts.probabilities, atol=1e-12)

    def test_zero_probability_rows(self, lueders_cc, zplus):
        jd = joint_distribution(lueders_cc, zplus)
        assert jd["z-", "z+"] == 0 and jd["z-", "z-"] == 0

    def test_luders_convex_linear(self, lueders_cc):
        rng = np.random.default_rng(5)
        x = TwoStageExperiment(random_two_outcome_povm(rng), random_two_outcome_povm(rng), LudersRule())
        for exp in (x, lueders_cc):
            for _ in range(200):
                e = random_ensemble(rng)
                lhs = joint_distribution(exp, mix(e)).table
                rhs = sum(p * joint_distribution(exp, s).table for p, s in e)
                assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_logistic_not_convex_linear(self, logistic4, half, zplus):
        lhs = joint_distribution(logistic4, bloch_to_density((0, 0, 0.5))).table
        rhs = 0.5 * joint_distribution(logistic4, half).table + 0.5 * joint_distribution(logistic4, zplus).table
        assert np.max(np.abs(lhs - rhs)) >= 0.1

    def test_dimension_mismatch(self, cb):
        with pytest.raises(InvalidInputError):
            TwoStageExperiment(cb, trivial_povm(3), LudersRule())

    def test_invalid_table(self):
        with pytest.raises(ValueError):
            JointDistribution(("a",), ("b",), np.array([[0.5]]))


class TestMarginal:
    @pytest.mark.parametrize("w", [0.0, 0.2, 0.5, 0.9, 1.0])
    def test_luders_preserves_z_statistics(self, lueders_cc, w):
        d = second_stage_marginal(lueders_cc, bloch_to_density((0, 0, w)))
        assert d.probabilities == pytest.approx(((1 + w) / 2, (1 - w) / 2), abs=1e-15)

    def test_logistic_examples(self, logistic4):
        assert second_stage_marginal(logistic4, bloch_to_density((0, 0, 0.5))).probabilities == pytest.approx((1, 0))
        assert second_stage_marginal(logistic4, maximally_mixed()).probabilities == (0.5, 0.5)


class TestConditional:
    def test_collapse(self, lueders_cc, half):
        assert conditional_distribution(lueders_cc, half, "z+").probabilities == (1.0, 0.0)

    def test_logistic_outcome_independent(self, logistic4):
        rho = bloch_to_density((0, 0, 0.5))
        assert conditional_distribution(logistic4, rho, "z-")["z+"] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("rule", [LudersRule(), LogisticBlochRule(2.0), ProbabilityDependentRule()])
    def test_trivial_second_stage(self, cb, rng, rule):
        x = TwoStageExperiment(cb, trivial_povm(), rule)
        assert conditional_distribution(x, random_state(rng), "z+").probabilities == pytest.approx((1.0,))

    def test_zero_probability(self, lueders_cc, zplus):
        with pytest.raises(UndefinedPostStateError):
            conditional_distribution(lueders_cc, zplus, "z-")

    def test_unknown_label(self, lueders_cc, half):
        with pytest.raises(InvalidInputError):
            conditional_distribution(lueders_cc, half, "x+")
