"""RCE 에이전트 테스트"""
import logging

import numpy as np
import pytest

from agents.mdp_core import future_success_prob
from agents.rce_agent import (
    expected_gradient,
    expected_update,
    extract_policy,
    label_from_w,
    learning_rate_at,
    n_step_label,
    polyak_update,
    ratio,
    stochastic_gradient,
    stochastic_update,
    target_ratio_clip,
    td_target_w,
    td_targets,
    train,
)
from envs.generators import make_env
from schemas.data_models import (
    ActionSource,
    Classifier,
    EnvKind,
    EnvSpec,
    LearningRateSchedule,
    Policy,
    PolicyMode,
    SuccessBatch,
    TaskSpec,
    TrainConfig,
    TrainMode,
    TransitionBatch,
    TransitionDataset,
)
from schemas.errors import InvariantViolation


def _empty_success():
    return SuccessBatch(states=[], actions=[])


def _empty_transitions():
    return TransitionBatch(states=[], actions=[], next_states=[])


# ============================================================================
# 비율과 TD 타깃
# ============================================================================

def test_ratio_is_odds():
    cls = Classifier.from_probs([[0.5, 1 / 3, 0.9]])
    assert ratio(cls, 0, 0) == pytest.approx(1.0)
    assert ratio(cls, 0, 1) == pytest.approx(0.5)
    assert ratio(cls, 0, 2) == pytest.approx(9.0)
    assert ratio(cls, 0, 2, clip=5.0) == 5.0


def test_td_target_w():
    assert td_target_w(Classifier.zeros(2, 2), Policy.uniform(2, 2), 1) == pytest.approx(1.0)

    third = Classifier.from_probs([[1 / 3, 0.9]])
    assert td_target_w(third, Policy.deterministic([0], 2), 0) == pytest.approx(0.5)

    mixed = Classifier.from_ratio([[0.0, 1.0]])
    assert td_target_w(mixed, Policy.uniform(1, 2), 0) == pytest.approx(0.5)


def test_labels():
    assert label_from_w(0.0, 0.99) == 0.0
    assert label_from_w(1.0, 0.99) == pytest.approx(0.99 / 1.99)
    assert label_from_w(1e12, 0.99) < 1.0
    assert n_step_label(0.0, 0.0, 0.5, 2) == 0.0
    assert n_step_label(0.7, 0.7, 0.9, 1) == pytest.approx(label_from_w(0.7, 0.9))
    assert n_step_label(1.0, 1.0, 0.5, 2) == pytest.approx(0.5 * (1 / 3 + 0.25 / 1.25))


def test_td_targets_fall_back_to_one_step_label():
    batch = TransitionBatch(
        states=[0, 1], actions=[0, 0], next_states=[1, 1], lookahead=[1, 1], lookahead_valid=[1, 0]
    )
    targets = td_targets(Classifier.zeros(2, 1), Policy.uniform(2, 1), batch, TrainConfig(gamma=0.5, n_step=2))
    assert np.allclose(targets.w, [1.0, 1.0])
    assert np.allclose(targets.y, [0.5 * (1 / 3 + 0.2), 1 / 3])


# ============================================================================
# expected 모드
# ============================================================================

def test_expected_update_from_zero_ratio(chain2, half):
    pi = Policy.uniform(2, 1)
    cls = Classifier.from_ratio(np.zeros((2, 1)))
    once = expected_update(cls, pi, chain2.success_prob, chain2.dynamics(), half)
    np.testing.assert_allclose(once.ratios()[:, 0], [0.0, 0.5])
    twice = expected_update(once, pi, chain2.success_prob, chain2.dynamics(), half)
    np.testing.assert_allclose(twice.ratios()[:, 0], [0.25, 0.75])


def test_expected_update_fixed_point(random_mdp, random_policy):
    task = TaskSpec(gamma=0.9)
    q = future_success_prob(random_mdp, task, random_policy)
    updated = expected_update(Classifier.from_ratio(q), random_policy, random_mdp.success_prob, random_mdp, task)
    np.testing.assert_allclose(updated.ratios(), q, atol=1e-12)


def test_expected_update_keeps_zero(random_mdp, random_policy):
    zero = Classifier.from_ratio(np.zeros((random_mdp.num_states, random_mdp.num_actions)))
    updated = expected_update(zero, random_policy, np.zeros(random_mdp.num_states), random_mdp, TaskSpec(gamma=0.9))
    np.testing.assert_array_equal(updated.ratios(), 0.0)


def test_expected_update_rejects_gamma_one(chain2):
    bad = TaskSpec.model_construct(gamma=1.0, horizon_truncation=60)
    with pytest.raises(InvariantViolation):
        expected_update(Classifier.zeros(2, 1), Policy.uniform(2, 1), chain2.success_prob, chain2, bad)


# ============================================================================
# stochastic 모드
# ============================================================================

def test_zero_learning_rate_is_identity():
    cls = Classifier.zeros(2, 1)
    batch = SuccessBatch(states=[1], actions=[0])
    cfg = TrainConfig(learning_rate=0.0)
    assert stochastic_update(cls, cls, Policy.uniform(2, 1), batch, _empty_transitions(), cfg) is cls


def test_success_term_step_size():
    cls = Classifier.zeros(2, 1)
    cfg = TrainConfig(gamma=0.99, learning_rate=0.1)
    batch = SuccessBatch(states=[0], actions=[0])
    updated = stochastic_update(cls, cls, Policy.uniform(2, 1), batch, _empty_transitions(), cfg)
    assert updated.logits[0, 0] == pytest.approx(5e-4)
    assert updated.logits[1, 0] == 0.0


def test_transition_term_vanishes_at_its_label():
    target = Classifier.zeros(1, 1)
    cls = Classifier.from_ratio([[0.5]])
    cfg = TrainConfig(gamma=0.5, n_step=1)
    batch = TransitionBatch(states=[0], actions=[0], next_states=[0])
    grad = stochastic_gradient(cls, target, Policy.uniform(1, 1), _empty_success(), batch, cfg)
    assert abs(grad[0, 0]) < 1e-15


def test_empty_batches_warn_and_skip(caplog):
    cls = Classifier.zeros(2, 1)
    with caplog.at_level(logging.WARNING):
        out = stochastic_update(cls, cls, Policy.uniform(2, 1), _empty_success(), _empty_transitions(), TrainConfig())
    assert out is cls
    assert "빈 배치" in caplog.text


def test_single_sample_gradient_matches_expected_gradient(random_mdp, random_policy):
    rng = np.random.default_rng(5)
    num_states, num_actions = random_mdp.num_states, random_mdp.num_actions
    cls = Classifier(logits=rng.normal(size=(num_states, num_actions)))
    target = Classifier(logits=rng.normal(size=(num_states, num_actions)))
    cfg = TrainConfig(gamma=0.9, n_step=1)
    s, a, t = num_states - 1, num_actions - 1, 0

    stochastic = stochastic_gradient(
        cls, target, random_policy,
        SuccessBatch(states=[s], actions=[a]),
        TransitionBatch(states=[s], actions=[a], next_states=[t]),
        cfg,
    )
    success_mass = np.zeros((num_states, num_actions))
    success_mass[s, a] = 1.0
    transition_mass = np.zeros((num_states, num_actions, num_states))
    transition_mass[s, a, t] = 1.0
    expected = expected_gradient(cls, target, random_policy, success_mass, transition_mass, cfg)
    np.testing.assert_allclose(stochastic, expected, atol=1e-12)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_population_gradient_vanishes_at_bayes_optimum(seed):
    mdp = make_env(EnvSpec(kind=EnvKind.RANDOM_DIRICHLET, num_states=4, num_actions=2, seed=seed))
    rng = np.random.default_rng(seed)
    task = TaskSpec(gamma=0.9)
    pi = Policy(probs=rng.dirichlet(np.ones(2), size=4))
    behavior = Policy(probs=rng.dirichlet(np.ones(2), size=4))
    state_marginal = rng.dirichlet(np.ones(4))
    data = state_marginal[:, None] * behavior.probs

    prior = float(state_marginal @ mdp.success_prob)
    success_dist = state_marginal * mdp.success_prob / prior
    success_mass = success_dist[:, None] * behavior.probs
    transition_mass = data[:, :, None] * mdp.transition

    bayes = Classifier.from_ratio(future_success_prob(mdp, task, pi))
    cfg = TrainConfig(gamma=task.gamma, use_prior=True, action_source=ActionSource.BEHAVIOR_POLICY)
    grad = expected_gradient(bayes, bayes, pi, success_mass, transition_mass, cfg, prior=prior)
    assert np.linalg.norm(grad) < 1e-8


def test_target_clip_scales_with_prior():
    assert target_ratio_clip(TrainConfig(ratio_clip=10.0), prior=0.04) == pytest.approx(250.0)
    assert target_ratio_clip(TrainConfig(ratio_clip=10.0, use_prior=True), prior=0.04) == 10.0


def test_prior_free_gradient_vanishes_at_scaled_q_with_small_prior():
    # 균등 주변분포 5×5 격자: prior = 1/25, 목표 셀의 비율은 clip 10을 넘는다
    mdp = make_env(EnvSpec(kind=EnvKind.GRID2D, width=5, height=5, regions=[[(4, 4)]]))
    task = TaskSpec(gamma=0.5)
    pi = Policy.uniform(mdp.num_states, mdp.num_actions)
    marginal = np.full(mdp.num_states, 1.0 / mdp.num_states)
    prior = float(marginal @ mdp.success_prob)
    assert prior < 0.1

    success_dist = marginal * mdp.success_prob / prior
    success_mass = success_dist[:, None] * pi.probs
    transition_mass = (marginal[:, None] * pi.probs)[:, :, None] * mdp.transition

    target_ratio = future_success_prob(mdp, task, pi) / prior
    assert target_ratio.max() > 10.0
    cls = Classifier.from_ratio(target_ratio)
    cfg = TrainConfig(gamma=task.gamma, action_source=ActionSource.BEHAVIOR_POLICY)
    assert not cfg.use_prior and cfg.ratio_clip == 10.0
    grad = expected_gradient(cls, cls, pi, success_mass, transition_mass, cfg, prior=prior)
    assert np.linalg.norm(grad) < 1e-8


def test_polyak_and_schedule():
    target, online = Classifier.zeros(1, 2), Classifier(logits=[[2.0, -2.0]])
    assert polyak_update(target, online, 1.0) is online
    np.testing.assert_allclose(polyak_update(target, online, 0.5).logits, [[1.0, -1.0]])

    cfg = TrainConfig(learning_rate=0.4, lr_schedule=LearningRateSchedule.ROBBINS_MONRO, lr_decay_steps=100)
    assert learning_rate_at(cfg, 0) == pytest.approx(0.4)
    assert learning_rate_at(cfg, 300) == pytest.approx(0.1)
    assert learning_rate_at(TrainConfig(learning_rate=0.4), 300) == 0.4


# ============================================================================
# 정책 추출
# ============================================================================

def test_equal_classifier_gives_action_zero():
    pi = extract_policy(Classifier.zeros(4, 3))
    np.testing.assert_array_equal(pi.greedy_actions(), [0, 0, 0, 0])


def test_soft_policy_approaches_greedy():
    logits = np.random.default_rng(9).normal(size=(5, 3))
    greedy = extract_policy(Classifier(logits=logits))
    soft = extract_policy(Classifier(logits=logits), PolicyMode.SOFT, temperature=1e-6)
    np.testing.assert_allclose(soft.probs, greedy.probs, atol=1e-9)
    probs_greedy = extract_policy(Classifier.from_probs(Classifier(logits=logits).probs()))
    np.testing.assert_array_equal(probs_greedy.greedy_actions(), greedy.greedy_actions())


# ============================================================================
# 학습 루프
# ============================================================================

def test_expected_training_on_chain2(chain2, chain2_data, chain2_successes):
    cfg = TrainConfig(gamma=0.5, use_prior=True)
    result = train(chain2_data, chain2_successes, cfg, mode=TrainMode.EXPECTED, dynamics=chain2.dynamics())
    assert result.converged and not result.capped
    assert result.iterations <= 200
    np.testing.assert_allclose(result.classifier.ratios()[:, 0], [0.5, 1.0], atol=1e-9)


def test_expected_training_reports_cap(chain2, chain2_data, chain2_successes):
    cfg = TrainConfig(gamma=0.5, use_prior=True, max_iterations=3)
    result = train(chain2_data, chain2_successes, cfg)
    assert result.capped and not result.converged
    assert result.iterations == 3


def test_training_needs_transitions(chain2_successes):
    with pytest.raises(InvariantViolation) as excinfo:
        train(TransitionDataset(num_states=2, num_actions=1), chain2_successes, TrainConfig())
    assert excinfo.value.invariant == "datasets nonempty"


def test_stochastic_zero_learning_rate_keeps_metrics_flat(chain2, half, chain2_data, chain2_successes):
    from agents.mdp_core import control_objective

    cfg = TrainConfig(gamma=0.5, learning_rate=0.0, max_iterations=50, metric_every=5, n_step=1)
    result = train(
        chain2_data, chain2_successes, cfg, mode=TrainMode.STOCHASTIC,
        evaluator=lambda pi: control_objective(chain2, half, pi),
    )
    assert len(result.metrics) == 10
    assert len({(m.objective, m.bellman_residual, m.policy_delta) for m in result.metrics}) == 1
    np.testing.assert_array_equal(result.classifier.logits, 0.0)
    assert result.converged and not result.capped
    assert result.best_iteration == 50


def test_stochastic_cap_returns_best_evaluated_iterate(chain2_data, chain2_successes):
    calls = []

    def worsening(pi):
        calls.append(pi)
        return -float(len(calls))

    cfg = TrainConfig(gamma=0.5, learning_rate=0.5, max_iterations=20, metric_every=5, n_step=1)
    result = train(chain2_data, chain2_successes, cfg, mode=TrainMode.STOCHASTIC, evaluator=worsening, seed=3)
    assert result.capped and not result.converged
    assert result.iterations == 20
    assert result.best_iteration == 5
    assert [m.objective for m in result.metrics] == [-1.0, -2.0, -3.0, -4.0]

    # 같은 시드로 5회만 돌린 분류기가 곧 5회째의 최선 분류기
    early = train(
        chain2_data, chain2_successes, cfg.model_copy(update={"max_iterations": 5}),
        mode=TrainMode.STOCHASTIC, seed=3,
    )
    assert early.best_iteration == 5
    np.testing.assert_array_equal(result.classifier.logits, early.classifier.logits)


def test_stochastic_training_on_chain2(chain2_data, chain2_successes):
    cfg = TrainConfig(
        gamma=0.5,
        learning_rate=0.5,
        lr_schedule=LearningRateSchedule.ROBBINS_MONRO,
        lr_decay_steps=1000,
        polyak=0.05,
        n_step=1,
        use_prior=True,
        max_iterations=1500,
        metric_every=500,
    )
    ratios = [
        train(chain2_data, chain2_successes, cfg, mode=TrainMode.STOCHASTIC, seed=seed).classifier.ratios()[:, 0]
        for seed in range(10)
    ]
    np.testing.assert_allclose(np.mean(ratios, axis=0), [0.5, 1.0], atol=0.05)


def test_online_expected_training_collects(chain2, chain2_data, chain2_successes):
    from envs.datasets import collect

    calls = []

    def collector(pi, seed):
        calls.append(seed)
        return collect(chain2, pi, 20, episode_len=2, seed=seed)

    cfg = TrainConfig(gamma=0.5, use_prior=True, max_iterations=30, collect_every=10)
    result = train(
        chain2_data, chain2_successes, cfg, online=True,
        dynamics=chain2.dynamics(), collector=collector,
    )
    assert len(calls) == 2
    np.testing.assert_allclose(result.classifier.ratios()[:, 0], [0.5, 1.0], atol=1e-2)


def test_negative_batch_pushes_classifier_down():
    cls = Classifier.zeros(2, 1)
    negatives = SuccessBatch(states=[0, 0], actions=[0, 0])
    grad = stochastic_gradient(
        cls, cls, Policy.uniform(2, 1), _empty_success(), _empty_transitions(), TrainConfig(), negative_batch=negatives
    )
    np.testing.assert_allclose(grad, [[0.5], [0.0]])


def test_negatives_from_initial_states_lower_start_logit(chain2_data, chain2_successes):
    cfg = TrainConfig(gamma=0.5, learning_rate=0.5, polyak=0.05, n_step=1, max_iterations=300, metric_every=300)
    plain = train(chain2_data, chain2_successes, cfg, mode=TrainMode.STOCHASTIC, seed=0)
    pushed = train(
        chain2_data, chain2_successes, cfg.model_copy(update={"negatives_from_initial": True}),
        mode=TrainMode.STOCHASTIC, seed=0,
    )
    assert pushed.classifier.logits[0, 0] < plain.classifier.logits[0, 0] - 0.1


def test_success_sampler_runs_on_schedule(chain2_data, chain2_successes):
    calls = []

    def sampler(iteration):
        calls.append(iteration)
        return chain2_successes

    cfg = TrainConfig(gamma=0.5, n_step=1, max_iterations=20, metric_every=20, resample_successes_every=5)
    train(chain2_data, chain2_successes, cfg, mode=TrainMode.STOCHASTIC, success_sampler=sampler)
    assert calls == [6, 11, 16]


@pytest.mark.slow
def test_stochastic_mean_matches_expected_fixed_point_on_grid():
    from envs.datasets import collect, sample_success_examples

    mdp = make_env(EnvSpec(kind=EnvKind.GRID2D, width=5, height=5, regions=[[(4, 4)]]))
    data = collect(mdp, Policy.uniform(mdp.num_states, mdp.num_actions), 20000, episode_len=100, seed=0)
    successes = sample_success_examples(mdp, data.state_marginal(), count=200, seed=0)
    assert successes.prior < 0.1

    exact = train(data, successes, TrainConfig(gamma=0.5, policy_mode=PolicyMode.FIXED), mode=TrainMode.EXPECTED)
    assert exact.converged

    cfg = TrainConfig(
        gamma=0.5,
        n_step=1,
        policy_mode=PolicyMode.FIXED,
        learning_rate=1.0,
        lr_schedule=LearningRateSchedule.ROBBINS_MONRO,
        lr_decay_steps=1000,
        polyak=0.05,
        max_iterations=6000,
        metric_every=6000,
    )
    assert not cfg.use_prior
    ratios = [
        train(data, successes, cfg, mode=TrainMode.STOCHASTIC, seed=seed).classifier.ratios()
        for seed in range(10)
    ]
    # Q 척도 (비율 × prior)로 비교
    error = successes.prior * np.abs(np.mean(ratios, axis=0) - exact.classifier.ratios())
    assert error.max() < 0.05
