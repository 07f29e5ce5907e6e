"""강건 예시 기반 제어 테스트"""
import math

import numpy as np
import pytest

from agents.mdp_core import control_objective, discounted_occupancy
from agents.robust import (
    fixed_point_report,
    hellinger_sq,
    iterated_rce,
    numeric_inner_min,
    robust_objective,
    robust_report,
    worst_case_pU,
)
from envs.datasets import collect, sample_success_examples
from envs.generators import make_env, region_states, two_region_grid_spec
from schemas.data_models import EnvKind, EnvSpec, InnerMinConfig, Policy, TabularMDP, TaskSpec, TrainConfig
from schemas.errors import InvariantViolation


# ============================================================================
# 닫힌 해
# ============================================================================

def test_worst_case_user_distribution():
    np.testing.assert_allclose(worst_case_pU([0.25] * 4, [0.25] * 4), [0.25] * 4)
    np.testing.assert_allclose(worst_case_pU([0.8, 0.2], [0.2, 0.8]), [0.5, 0.5])
    np.testing.assert_allclose(worst_case_pU([0.9, 0.1], [0.5, 0.5]), [0.75, 0.25])


def test_worst_case_needs_overlapping_supports():
    with pytest.raises(InvariantViolation):
        worst_case_pU([1.0, 0.0], [0.0, 1.0])


def test_robust_objective_closed_form():
    assert robust_objective([0.2, 0.3, 0.5], [0.2, 0.3, 0.5], 0.3) == pytest.approx(0.3)
    assert robust_objective([1.0, 0.0], [0.0, 1.0], 1.0) == 0.0
    assert robust_objective([0.9, 0.1], [0.5, 0.5], 1.0) == pytest.approx(0.8, abs=1e-12)


def test_hellinger():
    assert hellinger_sq([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert hellinger_sq([1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)
    assert hellinger_sq([0.5, 0.5], [1.0, 0.0]) == pytest.approx(2.0 - math.sqrt(2.0))


@pytest.mark.parametrize("seed", range(5))
def test_closed_form_is_the_minimum(seed):
    rng = np.random.default_rng(seed)
    rho, p = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
    closed = robust_objective(rho, p, 1.0)
    q = rng.dirichlet(np.ones(6), size=1000)
    assert closed <= (rho * p / q).sum(axis=1).min() + 1e-12

    report = robust_report(rho, p, 0.4)
    assert report.robust_value == pytest.approx(closed * 0.4)
    assert report.raw_inner_value == pytest.approx(closed)
    assert not report.support_mismatch


def test_report_flags_support_mismatch():
    report = robust_report([0.5, 0.5, 0.0], [0.25, 0.25, 0.5], 1.0)
    assert report.support_mismatch
    assert math.isinf(report.raw_inner_value)
    assert report.robust_value == pytest.approx(0.5)


# ============================================================================
# 수치 내부 최소화
# ============================================================================

def test_exp_gradient_minimizer_matches_closed_form():
    result = numeric_inner_min([0.9, 0.1], [0.5, 0.5], 1.0)
    assert np.abs(result.pU_hat - [0.75, 0.25]).sum() < 1e-3
    assert result.value == pytest.approx(0.8, rel=1e-6)


def test_uniform_inputs_give_uniform_minimizer():
    result = numeric_inner_min([1 / 3] * 3, [1 / 3] * 3, 1.0)
    np.testing.assert_allclose(result.pU_hat, [1 / 3] * 3, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_numeric_value_brackets_closed_form(seed):
    rng = np.random.default_rng(seed)
    rho, p = rng.dirichlet(np.ones(7)), rng.dirichlet(np.ones(7))
    closed = robust_objective(rho, p, 0.5) / 0.5
    value = numeric_inner_min(rho, p, 0.5).value
    assert value >= closed - 1e-6
    assert value <= closed * (1 + 1e-3)


def test_grid_mode_for_small_support():
    result = numeric_inner_min([0.2, 0.5, 0.3], [0.3, 0.3, 0.4], 1.0, InnerMinConfig(method="grid"))
    closed = worst_case_pU([0.2, 0.5, 0.3], [0.3, 0.3, 0.4])
    assert np.abs(result.pU_hat - closed).sum() < 5e-3
    with pytest.raises(InvariantViolation):
        numeric_inner_min([0.25] * 4, [0.25] * 4, 1.0, InnerMinConfig(method="grid"))


# ============================================================================
# 반복 RCE
# ============================================================================

def test_fixed_point_report_single_support_state():
    report = fixed_point_report([0.3, 0.7], [0.0, 1.0])
    assert report.reached
    assert report.max_ratio_deviation == 0.0


def test_iterated_rce_single_success_state(chain2, chain2_data, chain2_successes):
    result = iterated_rce(
        chain2, chain2_successes, TrainConfig(gamma=0.5), outer_iters=2,
        initial_data=chain2_data, num_steps=20, episode_len=2,
    )
    assert len(result.policies) == 2
    assert len(result.occupancies) == 2
    assert result.fixed_point_report.reached


def test_constant_success_probability_makes_every_policy_optimal():
    base = make_env(EnvSpec(kind=EnvKind.RANDOM_DIRICHLET, num_states=4, num_actions=2, seed=5))
    mdp = TabularMDP(
        num_states=4,
        num_actions=2,
        transition=base.transition,
        initial_dist=base.initial_dist,
        success_prob=np.full(4, 0.5),
    )
    data = collect(mdp, Policy.uniform(4, 2), 2000, episode_len=20, seed=1)
    successes = sample_success_examples(mdp, data.state_marginal(), 500, seed=1)
    task = TaskSpec(gamma=0.8)
    result = iterated_rce(mdp, successes, TrainConfig(gamma=0.8), outer_iters=3, initial_data=data, num_steps=500)
    objectives = [control_objective(mdp, task, pi) for pi in result.policies]
    np.testing.assert_allclose(objectives, 0.5, atol=1e-12)


def _region_split(spec, occupancy):
    top, bottom = (float(occupancy[states].sum()) for states in region_states(spec))
    return top / (top + bottom), bottom / (top + bottom)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_iterated_rce_spreads_over_both_regions(seed):
    spec = two_region_grid_spec(size=11)
    mdp = make_env(spec)
    data = collect(mdp, Policy.uniform(mdp.num_states, 4), 20000, seed=seed)
    successes = sample_success_examples(mdp, data.state_marginal(), 1000, seed=seed)
    cfg = TrainConfig(gamma=0.8)
    task = TaskSpec(gamma=0.8)

    offline = iterated_rce(mdp, successes, cfg, outer_iters=1, initial_data=data, seed=seed)
    top_share, _ = _region_split(spec, discounted_occupancy(mdp, task, offline.policies[0]))
    assert top_share > 0.9

    iterated = iterated_rce(mdp, successes, cfg, outer_iters=10, initial_data=data, seed=seed)
    shares = _region_split(spec, np.mean(np.stack(iterated.occupancies), axis=0))
    assert min(shares) >= 0.1
