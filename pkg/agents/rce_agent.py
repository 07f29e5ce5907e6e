"""RCE (재귀 분류) 에이전트

분류기 C(s,a)를 자신의 다음 스텝 예측(w)으로 학습시켜 C/(1-C)가
할인 미래 성공 확률이 되도록 합니다.

- expected 모드: 모든 (s,a)에 대한 동기식 정확 갱신
- stochastic 모드: 성공 예시/전이 배치에 대한 교차 엔트로피 경사 스텝
"""
import logging
import time
from typing import Callable, List, Optional

import numpy as np
from scipy.special import softmax

from agents.mdp_core import (
    bellman_residual,
    empirical_process,
    greedy_policy,
    success_posterior,
    success_ratio,
)
from schemas.data_models import (
    ActionSource,
    Classifier,
    ControlledProcess,
    LearningRateSchedule,
    MetricRow,
    Policy,
    PolicyMode,
    SuccessBatch,
    SuccessExampleSet,
    TDTargets,
    TaskSpec,
    TrainConfig,
    TrainMode,
    TrainResult,
    TransitionBatch,
    TransitionDataset,
)
from schemas.errors import InvariantViolation

logger = logging.getLogger(__name__)

Collector = Callable[[Policy, int], TransitionDataset]
Evaluator = Callable[[Policy], float]
SuccessSampler = Callable[[int], SuccessExampleSet]


# ============================================================================
# 1. 비율과 TD 타깃
# ============================================================================

def ratio(cls: Classifier, s: int, a: int, clip: Optional[float] = None) -> float:
    """C/(1-C) = exp(θ)"""
    value = float(np.exp(cls.logits[s, a]))
    return min(value, clip) if clip is not None else value


def td_target_w(cls_target: Classifier, pi: Policy, s_next, clip: Optional[float] = None):
    """w = Σ_{a'} π(a'|s') · ratio(s', a')  (타깃 테이블에서 계산, 경사 없음)"""
    ratios = cls_target.ratios(clip)[s_next]
    w = (pi.probs[s_next] * ratios).sum(axis=-1)
    return float(w) if np.ndim(w) == 0 else w


def label_from_w(w, gamma: float):
    """y = γw / (γw + 1)"""
    gw = gamma * np.asarray(w, dtype=np.float64)
    y = gw / (gw + 1.0)
    return float(y) if np.ndim(y) == 0 else y


def n_step_label(w_1step, w_nstep, gamma: float, n: int):
    """y = ½(γw₁/(γw₁+1) + γⁿwₙ/(γⁿwₙ+1))"""
    one = label_from_w(w_1step, gamma)
    many = label_from_w(w_nstep, gamma ** n)
    y = 0.5 * (np.asarray(one) + np.asarray(many))
    return float(y) if np.ndim(y) == 0 else y


def target_ratio_clip(cfg: TrainConfig, prior: float = 1.0) -> float:
    """
    타깃 비율 상한

    prior 없는 모드의 비율은 Q/prior 척도라 상한도 1/prior 배로 늘립니다.
    """
    if cfg.use_prior:
        return cfg.ratio_clip
    return cfg.ratio_clip / max(float(prior), np.finfo(np.float64).tiny)


def td_targets(
    cls_target: Classifier,
    pi: Policy,
    batch: TransitionBatch,
    cfg: TrainConfig,
    prior: float = 1.0,
) -> TDTargets:
    """전이 배치의 (w, y). n_step > 1 이고 lookahead가 유효한 샘플은 n-step 라벨을 씁니다."""
    clip = target_ratio_clip(cfg, prior)
    w_1 = np.atleast_1d(td_target_w(cls_target, pi, batch.next_states, clip))
    y = np.atleast_1d(label_from_w(w_1, cfg.gamma))
    if cfg.n_step > 1 and batch.lookahead is not None:
        w_n = np.atleast_1d(td_target_w(cls_target, pi, batch.lookahead, clip))
        valid = np.ones_like(y, dtype=bool) if batch.lookahead_valid is None else batch.lookahead_valid.astype(bool)
        y = np.where(valid, n_step_label(w_1, w_n, cfg.gamma, cfg.n_step), y)
    return TDTargets(w=w_1, y=y)


def implied_success_weights(successes: SuccessExampleSet, marginal: np.ndarray, use_prior: bool) -> np.ndarray:
    """성공 예시와 데이터 주변분포에서 유도한 상태별 성공 가중치"""
    if use_prior:
        return success_posterior(successes, marginal).values
    return success_ratio(successes, marginal)


# ============================================================================
# 2. expected 모드 갱신
# ============================================================================

def expected_update(
    cls: Classifier,
    pi: Policy,
    p_e_implied: np.ndarray,
    mdp: ControlledProcess,
    task: TaskSpec,
) -> Classifier:
    """
    모든 (s,a)에 대해 C ← [(1-γ)p_e + γE[w]] / [(1-γ)p_e + γE[w] + 1] 을 적용

    비율로 보면 정책 평가 가치 반복 한 스텝과 같습니다.
    """
    gamma = float(task.gamma)
    if not 0.0 <= gamma < 1.0:
        raise InvariantViolation("gamma < 1", f"gamma={gamma}")
    next_w = (pi.probs * cls.ratios()).sum(axis=1)
    new_ratio = (1.0 - gamma) * np.asarray(p_e_implied)[:, None] + gamma * mdp.transition @ next_w
    return Classifier.from_ratio(new_ratio)


# ============================================================================
# 3. stochastic 모드 갱신
# ============================================================================

def stochastic_gradient(
    cls: Classifier,
    cls_target: Classifier,
    pi: Policy,
    success_batch: SuccessBatch,
    transition_batch: TransitionBatch,
    cfg: TrainConfig,
    prior: float = 1.0,
    negative_batch: Optional[SuccessBatch] = None,
) -> np.ndarray:
    """
    교차 엔트로피 손실의 로짓 경사 (배치 평균)

    성공 항: 가중치 (1-γ), 라벨 1. 전이 항: 가중치 (1+γw), 라벨 γw/(γw+1).
    로짓에 대한 경사는 weight·(C - y) 입니다.
    """
    gamma = cfg.gamma
    probs = cls.probs()
    grad = np.zeros_like(probs)

    if success_batch.size:
        weight = (1.0 - gamma) * (prior if cfg.use_prior else 1.0)
        s, a = success_batch.states, success_batch.actions
        np.add.at(grad, (s, a), weight * (probs[s, a] - 1.0) / success_batch.size)

    if transition_batch.size:
        s, a = transition_batch.states, transition_batch.actions
        targets = td_targets(cls_target, pi, transition_batch, cfg, prior)
        weight = 1.0 + gamma * targets.w
        np.add.at(grad, (s, a), weight * (probs[s, a] - targets.y) / transition_batch.size)

    if negative_batch is not None and negative_batch.size:
        s, a = negative_batch.states, negative_batch.actions
        np.add.at(grad, (s, a), probs[s, a] / negative_batch.size)

    return grad


def expected_gradient(
    cls: Classifier,
    cls_target: Classifier,
    pi: Policy,
    success_mass: np.ndarray,
    transition_mass: np.ndarray,
    cfg: TrainConfig,
    prior: float = 1.0,
) -> np.ndarray:
    """
    모집단 분포 위에서 평균한 stochastic 경사 (1-step 라벨)

    Args:
        success_mass: 성공 예시 (s, a) 질량 p_U(s|e=1)·π_src(a|s)
        transition_mass: 전이 질량 p(s, a, s')
    """
    gamma = cfg.gamma
    probs = cls.probs()
    weight = (1.0 - gamma) * (prior if cfg.use_prior else 1.0)
    grad = weight * success_mass * (probs - 1.0)

    w = np.asarray(td_target_w(cls_target, pi, np.arange(pi.num_states), target_ratio_clip(cfg, prior)))
    y = np.asarray(label_from_w(w, gamma))
    coef = 1.0 + gamma * w
    grad += np.einsum("sat,t->sa", transition_mass, coef) * probs
    grad -= np.einsum("sat,t->sa", transition_mass, coef * y)
    return grad


def stochastic_update(
    cls: Classifier,
    cls_target: Classifier,
    pi: Policy,
    success_batch: SuccessBatch,
    transition_batch: TransitionBatch,
    cfg: TrainConfig,
    learning_rate: Optional[float] = None,
    prior: float = 1.0,
    negative_batch: Optional[SuccessBatch] = None,
) -> Classifier:
    """θ ← θ - η·∇θ (빈 배치면 경고 후 그대로 반환)"""
    if not success_batch.size and not transition_batch.size:
        logger.warning("⚠️ 빈 배치 - 갱신을 건너뜁니다")
        return cls
    eta = cfg.learning_rate if learning_rate is None else learning_rate
    if eta == 0.0:
        return cls
    grad = stochastic_gradient(cls, cls_target, pi, success_batch, transition_batch, cfg, prior, negative_batch)
    return Classifier(logits=cls.logits - eta * grad)


def polyak_update(target: Classifier, online: Classifier, tau: float) -> Classifier:
    """타깃 로짓 ← (1-τ)·타깃 + τ·현재 (τ=1이면 현재 테이블 그대로)"""
    if tau >= 1.0:
        return online
    return Classifier(logits=(1.0 - tau) * target.logits + tau * online.logits)


def learning_rate_at(cfg: TrainConfig, iteration: int) -> float:
    if cfg.lr_schedule == LearningRateSchedule.ROBBINS_MONRO:
        return cfg.learning_rate / (1.0 + iteration / cfg.lr_decay_steps)
    return cfg.learning_rate


# ============================================================================
# 4. 정책 추출
# ============================================================================

def extract_policy(
    cls: Classifier,
    mode: PolicyMode = PolicyMode.GREEDY,
    temperature: float = 1e-4,
) -> Policy:
    """
    분류기 신뢰도를 최대화하는 정책

    Args:
        cls: 분류기
        mode: greedy(가장 낮은 번호로 동점 처리) 또는 soft(π ∝ exp(θ/α))
        temperature: soft 모드의 α

    Returns:
        Policy
    """
    if mode == PolicyMode.SOFT:
        logits = np.where(np.isnan(cls.logits), -np.inf, cls.logits)
        dead = ~np.isfinite(logits).any(axis=1)
        logits = np.where(dead[:, None], 0.0, logits)
        return Policy(probs=softmax(logits / temperature, axis=1))
    return greedy_policy(cls.logits)


# ============================================================================
# 5. 배치 샘플링
# ============================================================================

def sample_actions(probs: np.ndarray, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cumulative = np.cumsum(probs[states], axis=1)
    u = rng.random(states.shape[0])
    actions = (u[:, None] > cumulative).sum(axis=1)
    return np.minimum(actions, probs.shape[1] - 1)


class ReplayArrays:
    """TransitionDataset을 배치 샘플링용 배열로 펼친 것"""

    def __init__(self, dataset: TransitionDataset, n_step: int):
        self.states, self.actions, self.next_states = dataset.flat()
        self.lookahead, self.valid = dataset.lookahead_states(n_step)
        self.size = int(self.states.shape[0])

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        idx = rng.integers(0, self.size, size=batch_size)
        return TransitionBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            next_states=self.next_states[idx],
            lookahead=self.lookahead[idx],
            lookahead_valid=self.valid[idx],
        )


def sample_success_batch(
    successes: SuccessExampleSet,
    action_policy: Policy,
    batch_size: int,
    rng: np.random.Generator,
) -> SuccessBatch:
    examples = np.asarray(successes.examples, dtype=np.int64)
    states = examples[rng.integers(0, examples.shape[0], size=batch_size)]
    return SuccessBatch(states=states, actions=sample_actions(action_policy.probs, states, rng))


# ============================================================================
# 6. 학습 루프
# ============================================================================

def _policy_delta(old: Policy, new: Policy) -> float:
    return float(np.max(np.abs(old.probs - new.probs)))


def _objective(evaluator: Optional[Evaluator], pi: Policy) -> float:
    return float(evaluator(pi)) if evaluator is not None else float("nan")


class BestSoFar:
    """지표 행마다 평가한 목적값 중 최선의 (분류기, 정책)을 기억"""

    def __init__(self):
        self.objective = -np.inf
        self.iteration = 0
        self.classifier: Optional[Classifier] = None
        self.policy: Optional[Policy] = None

    def offer(self, objective: float, iteration: int, cls: Classifier, pi: Policy) -> bool:
        # NaN(평가기 없음)은 기록하지 않는다
        if not objective > self.objective:
            return False
        self.objective, self.iteration = objective, iteration
        self.classifier, self.policy = cls, pi
        return True


def solve_expected(
    dynamics: ControlledProcess,
    task: TaskSpec,
    success_weights: np.ndarray,
    cfg: TrainConfig,
    policy: Optional[Policy] = None,
    evaluator: Optional[Evaluator] = None,
    cls: Optional[Classifier] = None,
    start_iteration: int = 0,
    clock_start: Optional[int] = None,
) -> TrainResult:
    """
    expected 모드 학습: 동기식 갱신과 정책 추출을 번갈아 수렴까지 반복

    Returns:
        수렴하지 못하면 capped=True인 마지막 상태
    """
    clock_start = time.perf_counter_ns() if clock_start is None else clock_start
    cls = cls or Classifier.zeros(dynamics.num_states, dynamics.num_actions)
    if cfg.policy_mode == PolicyMode.FIXED:
        pi = policy or Policy.uniform(dynamics.num_states, dynamics.num_actions)
    else:
        pi = extract_policy(cls, cfg.policy_mode, cfg.entropy_coeff)

    metrics: List[MetricRow] = []
    converged = False
    iteration = 0
    for iteration in range(1, cfg.max_iterations + 1):
        new_cls = expected_update(cls, pi, success_weights, dynamics, task)
        residual = float(np.max(np.abs(new_cls.ratios() - cls.ratios())))
        cls = new_cls

        delta = 0.0
        if cfg.policy_mode != PolicyMode.FIXED and iteration % cfg.policy_update_every == 0:
            new_pi = extract_policy(cls, cfg.policy_mode, cfg.entropy_coeff)
            delta = _policy_delta(pi, new_pi)
            pi = new_pi

        if iteration % cfg.metric_every == 0:
            metrics.append(MetricRow(
                iteration=start_iteration + iteration,
                objective=_objective(evaluator, pi),
                bellman_residual=residual,
                policy_delta=delta,
                wallclock_ns=time.perf_counter_ns() - clock_start,
            ))
        if residual < cfg.tolerance and delta <= cfg.tolerance:
            converged = True
            break

    if not converged:
        logger.warning(f"⚠️ expected 모드가 {cfg.max_iterations}회 안에 수렴하지 않았습니다")
    else:
        logger.info(f"✅ expected 모드 수렴: {iteration}회")
    return TrainResult(
        classifier=cls,
        policy=pi,
        metrics=metrics,
        iterations=iteration,
        converged=converged,
        capped=not converged,
        best_iteration=iteration,
    )


def train(
    env_data: TransitionDataset,
    successes: SuccessExampleSet,
    cfg: TrainConfig,
    mode: TrainMode = TrainMode.EXPECTED,
    online: bool = False,
    policy: Optional[Policy] = None,
    dynamics: Optional[ControlledProcess] = None,
    collector: Optional[Collector] = None,
    evaluator: Optional[Evaluator] = None,
    success_sampler: Optional[SuccessSampler] = None,
    seed: int = 0,
) -> TrainResult:
    """
    RCE 학습

    Args:
        env_data: 전이 데이터셋
        successes: 성공 예시 집합
        cfg: 학습 설정
        mode: expected 또는 stochastic
        online: True면 collect_every 반복마다 collector로 현재 정책 데이터를 추가
        policy: policy_mode=fixed일 때 평가할 정책 (기본: 행동 정책)
        dynamics: expected 모드 동역학 (기본: 데이터의 경험적 동역학)
        collector: (정책, 시드) → 새 데이터셋
        evaluator: 정책 → 오라클 목적값 (지표용)
        success_sampler: 반복 번호 → 새 성공 예시 집합
        seed: 배치 샘플링 시드

    Returns:
        TrainResult (분류기, 정책, 지표, 수렴/상한 플래그)
    """
    if env_data.num_transitions == 0:
        raise InvariantViolation("datasets nonempty", "전이가 없습니다")
    if not successes.examples:
        raise InvariantViolation("datasets nonempty", "성공 예시가 없습니다")
    if online and collector is None:
        raise InvariantViolation("online training needs a collector")

    task = TaskSpec(gamma=cfg.gamma)
    logger.info(f"🚀 RCE 학습 시작: mode={mode.value}, online={online}, transitions={env_data.num_transitions}")

    if mode == TrainMode.EXPECTED:
        return _train_expected(env_data, successes, cfg, task, online, policy, dynamics, collector, evaluator, seed)
    return _train_stochastic(
        env_data, successes, cfg, task, online, policy, dynamics, collector, evaluator, success_sampler, seed
    )


def _train_expected(env_data, successes, cfg, task, online, policy, dynamics, collector, evaluator, seed) -> TrainResult:
    clock_start = time.perf_counter_ns()
    fixed_policy = policy or env_data.behavior_policy()
    weights = implied_success_weights(successes, env_data.state_marginal(), cfg.use_prior)
    if not online:
        return solve_expected(
            dynamics or empirical_process(env_data), task, weights, cfg, fixed_policy, evaluator,
            clock_start=clock_start,
        )

    # online: 라운드마다 최대 collect_every 스윕 학습 후 현재 정책으로 재수집
    rounds = max(1, cfg.max_iterations // cfg.collect_every)
    chunk = cfg.model_copy(update={"max_iterations": min(cfg.collect_every, cfg.max_iterations)})
    result, cls, metrics, done = None, None, [], 0
    for round_index in range(rounds):
        if round_index > 0:
            logger.info(f"🔁 라운드 {round_index}: 현재 정책으로 재수집")
            env_data = env_data.merge(collector(result.policy, seed + round_index))
            weights = implied_success_weights(successes, env_data.state_marginal(), cfg.use_prior)
        result = solve_expected(
            dynamics or empirical_process(env_data), task, weights, chunk, fixed_policy, evaluator,
            cls=cls, start_iteration=done, clock_start=clock_start,
        )
        cls, done = result.classifier, done + result.iterations
        metrics.extend(result.metrics)
    return result.model_copy(update={"metrics": metrics, "iterations": done})


def _train_stochastic(
    env_data, successes, cfg, task, online, policy, dynamics, collector, evaluator, success_sampler, seed
) -> TrainResult:
    rng = np.random.default_rng(seed)
    clock_start = time.perf_counter_ns()
    replay = ReplayArrays(env_data, cfg.n_step)
    behavior = env_data.behavior_policy()
    marginal = env_data.state_marginal()
    weights = implied_success_weights(successes, marginal, cfg.use_prior)
    residual_dynamics = dynamics

    cls = Classifier.zeros(env_data.num_states, env_data.num_actions)
    target = cls
    if cfg.policy_mode == PolicyMode.FIXED:
        pi = policy or behavior
    else:
        pi = extract_policy(cls, cfg.policy_mode, cfg.entropy_coeff)

    initial_states = np.asarray([t.states[0] for t in env_data.trajectories], dtype=np.int64)
    metrics: List[MetricRow] = []
    best = BestSoFar()
    delta, step = 0.0, float("inf")
    for iteration in range(1, cfg.max_iterations + 1):
        if online and iteration > 1 and (iteration - 1) % cfg.collect_every == 0:
            logger.info(f"🔁 {iteration - 1}회 후 현재 정책으로 재수집")
            env_data = env_data.merge(collector(pi, seed + iteration))
            replay = ReplayArrays(env_data, cfg.n_step)
            behavior = env_data.behavior_policy()
            marginal = env_data.state_marginal()
            weights = implied_success_weights(successes, marginal, cfg.use_prior)
            if dynamics is None:
                residual_dynamics = None

        every = cfg.resample_successes_every
        if success_sampler is not None and every and iteration > 1 and (iteration - 1) % every == 0:
            successes = success_sampler(iteration)
            weights = implied_success_weights(successes, marginal, cfg.use_prior)

        source = pi if cfg.action_source == ActionSource.CURRENT_POLICY else behavior
        success_batch = sample_success_batch(successes, source, cfg.success_batch_size, rng)
        transition_batch = replay.sample(cfg.transition_batch_size, rng)
        negative_batch = None
        if cfg.negatives_from_initial:
            starts = initial_states[rng.integers(0, initial_states.shape[0], size=cfg.success_batch_size)]
            negative_batch = SuccessBatch(states=starts, actions=sample_actions(pi.probs, starts, rng))

        previous = cls
        cls = stochastic_update(
            cls, target, pi, success_batch, transition_batch, cfg,
            learning_rate=learning_rate_at(cfg, iteration - 1),
            prior=successes.prior,
            negative_batch=negative_batch,
        )
        step = float(np.max(np.abs(cls.logits - previous.logits)))
        target = polyak_update(target, cls, cfg.polyak)

        delta = 0.0
        if cfg.policy_mode != PolicyMode.FIXED and iteration % cfg.policy_update_every == 0:
            new_pi = extract_policy(cls, cfg.policy_mode, cfg.entropy_coeff)
            delta = _policy_delta(pi, new_pi)
            pi = new_pi

        if iteration % cfg.metric_every == 0:
            if residual_dynamics is None:
                residual_dynamics = empirical_process(env_data)
            objective = _objective(evaluator, pi)
            best.offer(objective, iteration, cls, pi)
            metrics.append(MetricRow(
                iteration=iteration,
                objective=objective,
                bellman_residual=bellman_residual(residual_dynamics, task, pi, weights, cls.ratios()),
                policy_delta=delta,
                wallclock_ns=time.perf_counter_ns() - clock_start,
            ))

    converged = step < cfg.tolerance and delta <= cfg.tolerance
    best_iteration = cfg.max_iterations
    if not converged and best.iteration and best.objective > _objective(evaluator, pi):
        cls, pi, best_iteration = best.classifier, best.policy, best.iteration
        logger.warning(f"⚠️ stochastic 모드가 {cfg.max_iterations}회 상한에 도달 - {best_iteration}회의 최선 정책을 반환합니다")
    else:
        logger.info(f"✅ stochastic 모드 종료: {cfg.max_iterations}회 (converged={converged})")
    return TrainResult(
        classifier=cls,
        policy=pi,
        metrics=metrics,
        iterations=cfg.max_iterations,
        converged=converged,
        capped=not converged,
        best_iteration=best_iteration,
    )
