import numpy as np
import pytest

from measurelab.errors import InvalidInputError, UndefinedPostStateError, UnsupportedDimensionError
from measurelab.measurement import Effect, born_probability
from measurelab.statekit import (
    DensityMatrix,
    bloch_to_density,
    density_to_bloch,
    maximally_mixed,
    mix,
    random_ensemble,
    random_state,
    validate_density,
)
from measurelab.update_rules import (
    LogisticBlochRule,
    LudersRule,
    ProbabilityDependentRule,
    apply_update,
    depolarizing_kraus_rule,
    logistic_bloch,
    unnormalized_map,
)

RULES = [
    LudersRule(),
    depolarizing_kraus_rule(0.3),
    LogisticBlochRule(0.0),
    LogisticBlochRule(2.5),
    LogisticBlochRule(4.0),
    ProbabilityDependentRule(),
]


def random_effect(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(z)
    return Effect(q @ np.diag(rng.uniform(size=2)) @ q.conj().T)


class TestLuders:
    def test_projective_collapse(self, cb, half, zplus):
        out = apply_update(LudersRule(), cb["z+"], half)
        assert out.probability == 0.5
        assert out.post_state.allclose(zplus)

    def test_generic_effect_against_explicit_formula(self, rng):
        for _ in range(50):
            f, rho = random_effect(rng), random_state(rng)
            w, v = np.linalg.eigh(f.operator)
            s = v @ np.diag(np.sqrt(w)) @ v.conj().T
            expected = s @ rho.matrix @ s / np.trace(s @ rho.matrix @ s)
            np.testing.assert_allclose(apply_update(LudersRule(), f, rho).post_state.matrix, expected, atol=1e-12)

    def test_unnormalized_identity_effect(self, rng):
        rho = random_state(rng)
        np.testing.assert_allclose(unnormalized_map(LudersRule(), Effect(np.eye(2)), rho), rho.matrix, atol=1e-14)

    def test_unnormalized_projector(self, cb, half):
        np.testing.assert_allclose(unnormalized_map(LudersRule(), cb["z+"], half), 0.5 * np.diag([1, 0]), atol=1e-15)

    def test_convex_linear(self, rng):
        for rule in (LudersRule(), depolarizing_kraus_rule(0.6)):
            for _ in range(100):
                e = random_ensemble(rng)
                f = random_effect(rng) if rule.kraus is None else Effect(np.diag([1.0, 0.0]))
                lhs = unnormalized_map(rule, f, mix(e))
                rhs = sum(p * unnormalized_map(rule, f, s) for p, s in e)
                assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_kraus_family_selected_by_effect(self, half):
        rule = depolarizing_kraus_rule(1.0)
        out = apply_update(rule, Effect(np.diag([1.0, 0.0])), bloch_to_density((0.3, 0, 0.5)))
        assert out.post_state.allclose(half)

    def test_kraus_validation(self):
        with pytest.raises(InvalidInputError):
            LudersRule(((np.diag([1.0, 0.0]),), (np.diag([0.0, 0.5]),)))
        with pytest.raises(InvalidInputError, match="no Kraus family"):
            apply_update(depolarizing_kraus_rule(0.2), Effect(np.eye(2) / 2), maximally_mixed())

    def test_zero_probability(self, cb, zplus):
        with pytest.raises(UndefinedPostStateError):
            apply_update(LudersRule(), cb["z-"], zplus)
        np.testing.assert_array_equal(unnormalized_map(LudersRule(), cb["z-"], zplus), np.zeros((2, 2)))


class TestLogistic:
    def test_lambda_domain(self):
        with pytest.raises(InvalidInputError):
            LogisticBlochRule(4.5)
        with pytest.raises(InvalidInputError):
            LogisticBlochRule(-0.1)

    @pytest.mark.parametrize("label", ["z+", "z-"])
    def test_half_radius_maps_to_pole(self, cb, label):
        rho = bloch_to_density((0, 0, 0.5))
        out = apply_update(LogisticBlochRule(4.0), cb[label], rho)
        # r' = 4 * 0.5 * 0.5 = 1 along +z
        assert out.post_state.allclose(bloch_to_density((0, 0, 1)))
        assert out.probability == pytest.approx(0.75 if label == "z+" else 0.25, abs=1e-15)

    @pytest.mark.parametrize("lam", [0.0, 1.0, 3.7, 4.0])
    def test_pure_states_go_to_center(self, rng, cb, lam):
        for _ in range(10):
            v = rng.normal(size=3)
            rho = bloch_to_density(v / np.linalg.norm(v))
            out = apply_update(LogisticBlochRule(lam), cb["z+"], rho)
            assert out.post_state.allclose(maximally_mixed(), atol=1e-12)

    def test_lambda_zero_sends_everything_to_center(self, rng, cb):
        for _ in range(50):
            assert apply_update(LogisticBlochRule(0.0), cb["z-"], random_state(rng)).post_state.allclose(
                maximally_mixed(), atol=1e-15
            )

    def test_direction_and_radius(self, rng, cb):
        for _ in range(100):
            lam = rng.uniform(0, 4)
            rho = random_state(rng)
            v = density_to_bloch(rho).as_array()
            r = np.linalg.norm(v)
            post = density_to_bloch(apply_update(LogisticBlochRule(lam), cb["z+"], rho).post_state).as_array()
            assert np.linalg.norm(post) == pytest.approx(lam * r * (1 - r), abs=1e-12)
            if np.linalg.norm(post) > 1e-9:
                np.testing.assert_allclose(post / np.linalg.norm(post), v / r, atol=1e-9)

    def test_outcome_independent(self, rng, cb):
        rho = random_state(rng)
        a = apply_update(LogisticBlochRule(3.0), cb["z+"], rho).post_state
        b = apply_update(LogisticBlochRule(3.0), cb["z-"], rho).post_state
        assert a.allclose(b, atol=0)

    def test_center_fixed(self):
        np.testing.assert_array_equal(logistic_bloch(np.zeros(3), 4.0), np.zeros(3))

    def test_unnormalized_example(self, cb):
        rho = bloch_to_density((0, 0, 0.5))
        np.testing.assert_allclose(
            unnormalized_map(LogisticBlochRule(4.0), cb["z+"], rho), 0.75 * np.diag([1, 0]), atol=1e-15
        )

    def test_not_convex_linear(self, cb, half, zplus):
        rule = LogisticBlochRule(4.0)
        lhs = unnormalized_map(rule, cb["z+"], mix_of(half, zplus))
        rhs = 0.5 * unnormalized_map(rule, cb["z+"], half) + 0.5 * unnormalized_map(rule, cb["z+"], zplus)
        # 0.75 |z+><z+| against 0.5 * 0.5 * I/2 + 0.5 * I/2
        assert np.max(np.abs(lhs - rhs)) >= 0.1

    def test_qubit_only(self):
        with pytest.raises(UnsupportedDimensionError):
            apply_update(LogisticBlochRule(1.0), Effect(np.eye(3)), maximally_mixed(3))


def mix_of(a, b):
    return DensityMatrix(0.5 * a.matrix + 0.5 * b.matrix)


class TestProbabilityDependent:
    def test_depolarizes_by_outcome_probability(self, rng, cb):
        for _ in range(50):
            rho = random_state(rng)
            p = born_probability(cb["z+"], rho)
            luders = apply_update(LudersRule(), cb["z+"], rho).post_state.matrix
            expected = (1 - p) * luders + p * np.eye(2) / 2
            out = apply_update(ProbabilityDependentRule(), cb["z+"], rho)
            np.testing.assert_allclose(out.post_state.matrix, expected, atol=1e-12)
            assert out.probability == p

    def test_eigenstates(self, cb, zplus):
        # eigenvalue-0 eigenstate: no post-state for either rule, zero unnormalized map for both
        for rule in (LudersRule(), ProbabilityDependentRule()):
            with pytest.raises(UndefinedPostStateError):
                apply_update(rule, cb["z-"], zplus)
            np.testing.assert_array_equal(unnormalized_map(rule, cb["z-"], zplus), 0)
        # eigenvalue-1 eigenstate: same probability; p = 1 means full depolarization
        pd = apply_update(ProbabilityDependentRule(), cb["z+"], zplus)
        lu = apply_update(LudersRule(), cb["z+"], zplus)
        assert pd.probability == lu.probability == 1.0
        assert pd.post_state.allclose(maximally_mixed())

    def test_nonlinear(self, cb, half, zplus):
        rule = ProbabilityDependentRule()
        lhs = unnormalized_map(rule, cb["z+"], mix_of(half, zplus))
        rhs = 0.5 * unnormalized_map(rule, cb["z+"], half) + 0.5 * unnormalized_map(rule, cb["z+"], zplus)
        assert np.max(np.abs(lhs - rhs)) > 0.01


@pytest.mark.parametrize("rule", RULES, ids=lambda r: type(r).__name__)
def test_post_states_valid_and_traces_match(rule, cb):
    rng = np.random.default_rng(11)
    for _ in range(200):
        rho = random_state(rng)
        f = cb["z+"] if isinstance(rule, LudersRule) and rule.kraus else random_effect(rng)
        p = born_probability(f, rho)
        lam = unnormalized_map(rule, f, rho)
        assert abs(np.trace(lam).real - p) <= 1e-12
        if p > 1e-12:
            out = apply_update(rule, f, rho)
            assert isinstance(validate_density(out.post_state.matrix), DensityMatrix)
