"""정답 오라클 테스트"""
import numpy as np
import pytest

from agents.mdp_core import control_objective, discounted_occupancy, future_success_prob, greedy_policy
from agents.oracle import (
    bayes_optimal_classifier,
    best_policy_by_enumeration,
    enumerate_deterministic_policies,
    enumerate_future_success,
    enumerate_occupancy,
    improve_policy,
    value_iteration,
    verify_policy_improvement,
)
from envs.generators import make_env
from schemas.data_models import EnvKind, EnvSpec, Policy, TaskSpec
from schemas.errors import ConvergenceError, InvariantViolation


@pytest.fixture
def random5():
    return make_env(EnvSpec(kind=EnvKind.RANDOM_DIRICHLET, num_states=5, num_actions=3, seed=11))


# ============================================================================
# 가치 반복
# ============================================================================

def test_policy_evaluation_on_chain2(chain2, half):
    q = value_iteration(chain2, half, [0.0, 0.5], mode="policy_eval", pi=Policy.uniform(2, 1))
    np.testing.assert_allclose(q.values[:, 0], [0.5, 1.0], atol=1e-11)


def test_zero_discount_value_iteration_returns_reward(random5):
    reward = np.linspace(0.0, 1.0, random5.num_states)
    q = value_iteration(random5, TaskSpec(gamma=0.0), reward, mode="control")
    np.testing.assert_allclose(q.values, np.repeat(reward[:, None], 3, axis=1))


def test_control_mode_matches_enumeration(random5):
    task = TaskSpec(gamma=0.9)
    q = value_iteration(random5, task, (1.0 - task.gamma) * random5.success_prob, mode="control")
    _, best = best_policy_by_enumeration(random5, task)
    assert control_objective(random5, task, greedy_policy(q.values)) == pytest.approx(best, abs=1e-9)


def test_value_iteration_cap_raises(random5):
    with pytest.raises(ConvergenceError) as excinfo:
        value_iteration(random5, TaskSpec(gamma=0.99), random5.success_prob, max_iterations=3)
    assert excinfo.value.iterations == 3


def test_policy_eval_requires_policy(chain2, half):
    with pytest.raises(InvariantViolation):
        value_iteration(chain2, half, [0.0, 0.5], mode="policy_eval")


# ============================================================================
# 베이즈 최적 분류기 / 정책 개선
# ============================================================================

def test_bayes_classifier_on_chain2(chain2, half):
    bayes = bayes_optimal_classifier(chain2, half, Policy.uniform(2, 1), np.array([[0.5], [0.5]]))
    np.testing.assert_allclose(bayes.classifier.probs()[:, 0], [1 / 3, 0.5], atol=1e-12)
    assert bayes.undefined_pairs == []


def test_bayes_classifier_flags_unseen_pairs(half):
    mdp = make_env(EnvSpec(kind=EnvKind.CHAIN, length=2, chain_actions=2))
    marginal = np.array([[0.5, 0.0], [0.25, 0.25]])
    bayes = bayes_optimal_classifier(mdp, half, Policy.uniform(2, 2), marginal)
    assert bayes.undefined_pairs == [(0, 1)]
    assert np.isnan(bayes.classifier.logits[0, 1])
    q = future_success_prob(mdp, half, Policy.uniform(2, 2))
    np.testing.assert_allclose(bayes.classifier.ratios()[1], q[1], atol=1e-12)


def test_greedy_improvement_on_random_mdp(random5):
    task = TaskSpec(gamma=0.9)
    pi = Policy.uniform(5, 3)
    marginal = np.full((5, 3), 1.0 / 15)
    report = verify_policy_improvement(random5, task, pi, improve_policy(random5, task, pi, marginal))
    assert report.improved
    assert report.new >= report.old - 1e-12


def test_optimal_policy_is_a_greedy_fixed_point(random5):
    task = TaskSpec(gamma=0.9)
    best, _ = best_policy_by_enumeration(random5, task)
    marginal = np.full((5, 3), 1.0 / 15)
    report = verify_policy_improvement(random5, task, best, improve_policy(random5, task, best, marginal))
    assert report.new == pytest.approx(report.old, abs=1e-10)


def test_single_action_mdp_has_nothing_to_improve(chain2, half):
    pi = Policy.uniform(2, 1)
    report = verify_policy_improvement(chain2, half, pi, improve_policy(chain2, half, pi, np.full((2, 1), 0.5)))
    assert report.old == report.new


# ============================================================================
# 열거 오라클
# ============================================================================

def test_enumeration_on_chain2(chain2, half):
    q = enumerate_future_success(chain2, half, Policy.uniform(2, 1), horizon=60)
    assert abs(q[0, 0] - 0.5) < 1e-15


def test_enumeration_zero_horizon(random5):
    task = TaskSpec(gamma=0.7)
    q = enumerate_future_success(random5, task, Policy.uniform(5, 3), horizon=0)
    np.testing.assert_allclose(q, np.repeat(0.3 * random5.success_prob[:, None], 3, axis=1))


def test_enumeration_zero_discount(random5):
    q = enumerate_future_success(random5, TaskSpec(gamma=0.0), Policy.uniform(5, 3), horizon=7)
    np.testing.assert_allclose(q, np.repeat(random5.success_prob[:, None], 3, axis=1))


def test_enumeration_tail_bound(random5):
    task = TaskSpec(gamma=0.8)
    pi = Policy.uniform(5, 3)
    horizon = 20
    gap = np.abs(enumerate_future_success(random5, task, pi, horizon) - future_success_prob(random5, task, pi))
    assert gap.max() <= 0.8 ** (horizon + 1)
    occupancy_gap = np.abs(enumerate_occupancy(random5, task, pi, 200) - discounted_occupancy(random5, task, pi))
    assert occupancy_gap.max() < 1e-12


def test_deterministic_policy_enumeration():
    policies = list(enumerate_deterministic_policies(3, 2))
    assert len(policies) == 8
    np.testing.assert_array_equal(policies[1].greedy_actions(), [0, 0, 1])
    with pytest.raises(InvariantViolation):
        list(enumerate_deterministic_policies(6, 5))
