"""검증 스위트

각 스위트는 고정 시드로 이론적 성질을 검사하고
{suite, cases, failures, max_residual} 요약을 돌려줍니다.
"""
import json
import logging
import math
import tempfile
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import expit

from agents.baselines import density_reward, solve_baseline, sqil_reward, vice_ratio_reward
from agents.mdp_core import (
    bellman_residual,
    check_task,
    control_objective,
    discounted_occupancy,
    future_success_prob,
    greedy_policy,
    residual_tolerance,
    success_ratio,
)
from agents.oracle import (
    best_policy_by_enumeration,
    bayes_optimal_classifier,
    enumerate_future_success,
    improve_policy,
    value_iteration_step,
    verify_policy_improvement,
)
from agents.rce_agent import expected_update, extract_policy, solve_expected, train
from agents.robust import (
    bhattacharyya,
    hellinger_sq,
    iterated_rce,
    numeric_inner_min,
    robust_objective,
    worst_case_pU,
)
from envs.generators import dumps_mdp, make_env, random_mdp_spec, region_states, two_region_grid_spec
from schemas.data_models import (
    Classifier,
    DataConfig,
    EnvKind,
    EnvSpec,
    ExperimentConfig,
    LearningRateSchedule,
    Method,
    Policy,
    PolicyMode,
    SuccessExampleSet,
    SuiteResult,
    TabularMDP,
    TaskSpec,
    TrainConfig,
    TrainMode,
    VerifyReport,
)
from schemas.errors import InvariantViolation, UsageError

logger = logging.getLogger(__name__)

GAMMAS = (0.5, 0.9, 0.99)
FAULTS = ("gamma_one",)


class SuiteRecorder:
    """케이스별 결과를 모아 SuiteResult로 만든다"""

    def __init__(self, suite: str):
        self.suite = suite
        self.cases = 0
        self.failures = 0
        self.max_residual = 0.0
        self.violations: List[str] = []

    def record(self, residual: float, limit: float, label: str) -> None:
        self.cases += 1
        self.max_residual = max(self.max_residual, float(residual))
        if not residual <= limit:
            self.failures += 1
            self.violations.append(f"{label}: residual {residual:.3e} > {limit:.1e}")

    def fail(self, label: str, error: InvariantViolation) -> None:
        self.cases += 1
        self.failures += 1
        self.violations.append(f"{label}: {error.invariant}")

    def result(self) -> SuiteResult:
        status = "✅" if self.failures == 0 else "❌"
        logger.info(f"{status} {self.suite}: {self.cases - self.failures}/{self.cases}")
        return SuiteResult(
            suite=self.suite,
            cases=self.cases,
            failures=self.failures,
            max_residual=self.max_residual,
            violations=self.violations,
        )


def make_task(gamma: float, fault: Optional[str] = None) -> TaskSpec:
    """fault="gamma_one"이면 검증을 우회해 γ=1을 저장한다"""
    if fault == "gamma_one":
        return TaskSpec.model_construct(gamma=1.0, horizon_truncation=60)
    return TaskSpec(gamma=gamma)


def random_case(seed: int, max_states: int = 10):
    """(mdp, γ, 무작위 정책, rng)"""
    mdp = make_env(random_mdp_spec(seed, max_states=max_states))
    rng = np.random.default_rng(seed + 10_000)
    pi = Policy(probs=rng.dirichlet(np.ones(mdp.num_actions), size=mdp.num_states))
    return mdp, GAMMAS[seed % len(GAMMAS)], pi, rng


# ============================================================================
# 스위트
# ============================================================================

def suite_lemma2(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """expected 갱신 한 번 = 비율에 대한 가치 반복 한 스텝 (1e-12)"""
    recorder = SuiteRecorder("lemma2")
    for seed in seeds:
        mdp, gamma, pi, rng = random_case(seed)
        task = make_task(gamma, fault)
        cls = Classifier.from_ratio(rng.uniform(0.0, 2.0, size=(mdp.num_states, mdp.num_actions)))
        try:
            updated = expected_update(cls, pi, mdp.success_prob, mdp.dynamics(), task).ratios()
            reward = (1.0 - task.gamma) * mdp.success_prob
            stepped = value_iteration_step(mdp.dynamics(), task, reward, cls.ratios(), pi)
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        recorder.record(float(np.max(np.abs(updated - stepped))), 1e-12, f"seed {seed}")
    return recorder.result()


def suite_corollary3(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """expected 모드 수렴 + 수렴한 비율이 정확한 Q와 일치 + 벨만 잔차"""
    recorder = SuiteRecorder("corollary3")
    tol = residual_tolerance()
    for seed in seeds:
        mdp, gamma, pi, _ = random_case(seed)
        task = make_task(gamma, fault)
        try:
            cfg = TrainConfig(
                gamma=gamma, policy_mode=PolicyMode.FIXED, tolerance=1e-13,
                max_iterations=20000, metric_every=10 ** 6,
            )
            fixed = solve_expected(mdp.dynamics(), task, mdp.success_prob, cfg, pi)
            greedy = solve_expected(
                mdp.dynamics(), task, mdp.success_prob, cfg.model_copy(update={"policy_mode": PolicyMode.GREEDY})
            )
            q = future_success_prob(mdp, task, pi)
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        ratio = fixed.classifier.ratios()
        error = float(np.max(np.abs(ratio - q)))
        residual = bellman_residual(mdp.dynamics(), task, pi, mdp.success_prob, ratio)
        converged = fixed.converged and greedy.converged
        recorder.record(max(error, residual) if converged else math.inf, tol, f"seed {seed}")
    return recorder.result()


def suite_oracle_equivalence(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """선형 풀이 Q = 절단 지평 열거 Q̃ (γ^{H+1} < 1e-10, 오차 2e-10)"""
    recorder = SuiteRecorder("oracle_equivalence")
    for seed in seeds:
        mdp, gamma, pi, _ = random_case(seed, max_states=6)
        task = make_task(gamma, fault)
        horizon = int(math.ceil(math.log(1e-10) / math.log(gamma)))
        try:
            exact = future_success_prob(mdp, task, pi)
            enumerated = enumerate_future_success(mdp, task, pi, horizon)
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        recorder.record(float(np.max(np.abs(exact - enumerated))), 2e-10, f"seed {seed}")
    return recorder.result()


def suite_lemma1(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """베이즈 최적 분류기: C/(1-C) = Q 와 벨만 항등식"""
    recorder = SuiteRecorder("lemma1")
    tol = residual_tolerance()
    for seed in seeds:
        mdp, gamma, pi, rng = random_case(seed)
        task = make_task(gamma, fault)
        marginal = rng.dirichlet(np.ones(mdp.num_states * mdp.num_actions)).reshape(mdp.num_states, -1)
        try:
            bayes = bayes_optimal_classifier(mdp, task, pi, marginal)
            q = future_success_prob(mdp, task, pi)
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        probs = expit(bayes.classifier.logits)
        odds_error = float(np.max(np.abs(probs / (1.0 - probs) - q)))
        residual = bellman_residual(mdp.dynamics(), task, pi, mdp.success_prob, bayes.classifier.ratios())
        recorder.record(max(odds_error, residual), tol, f"seed {seed}")
    return recorder.result()


def suite_lemma4(seeds: Sequence[int], fault: Optional[str] = None, rounds: int = 3) -> SuiteResult:
    """greedy 개선의 단조성 (허용 오차 1e-10)"""
    recorder = SuiteRecorder("lemma4")
    for seed in seeds:
        mdp, gamma, _, _ = random_case(seed)
        task = make_task(gamma, fault)
        pi = Policy.uniform(mdp.num_states, mdp.num_actions)
        marginal = np.full((mdp.num_states, mdp.num_actions), 1.0 / (mdp.num_states * mdp.num_actions))
        for round_index in range(rounds):
            label = f"seed {seed} round {round_index}"
            try:
                pi_greedy = improve_policy(mdp, task, pi, marginal)
                report = verify_policy_improvement(mdp, task, pi, pi_greedy)
            except InvariantViolation as e:
                recorder.fail(label, e)
                break
            recorder.record(max(0.0, report.old - report.new), 1e-10, label)
            pi = pi_greedy
    return recorder.result()


def suite_lemma5(seeds: Sequence[int], fault: Optional[str] = None, samples: int = 1000) -> SuiteResult:
    """최악의 p_U 닫힌 해 = 수치 최소점, 헬링거 항등식, 닫힌 해의 최적성"""
    recorder = SuiteRecorder("lemma5")
    recorder.record(abs(robust_objective([0.9, 0.1], [0.5, 0.5], 1.0) - 0.8), 1e-12, "two-state closed form")
    for seed in seeds:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        rho, p = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        worst = worst_case_pU(rho, p)
        numeric = numeric_inner_min(rho, p, 1.0)
        recorder.record(float(np.abs(worst - numeric.pU_hat).sum()), 1e-3, f"seed {seed} minimizer")

        identity = abs(bhattacharyya(rho, p) - (1.0 - hellinger_sq(p, rho) / 2.0))
        recorder.record(identity, 1e-12, f"seed {seed} hellinger")

        closed = robust_objective(rho, p, 1.0)
        q = rng.dirichlet(np.ones(n), size=samples)
        values = (rho * p / q).sum(axis=1)
        recorder.record(max(0.0, closed - float(values.min())), 1e-12, f"seed {seed} optimality")

        gradient = rho * p / worst ** 2
        recorder.record(float(np.max(gradient) - np.min(gradient)), 1e-8, f"seed {seed} stationarity")

        perm = rng.permutation(n)
        recorder.record(abs(robust_objective(rho[perm], p[perm], 1.0) - closed), 1e-12, f"seed {seed} permutation")
    return recorder.result()


def skewed_counterexample() -> TabularMDP:
    """
    0에서 행동 0은 상태 1(p_e=0.5), 행동 1은 상태 2(p_e=1)로 가고 1, 2는 흡수 상태
    """
    transition = np.zeros((3, 2, 3))
    transition[0, 0, 1] = transition[0, 1, 2] = 1.0
    transition[1, :, 1] = transition[2, :, 2] = 1.0
    return TabularMDP(
        num_states=3,
        num_actions=2,
        transition=transition,
        initial_dist=[1.0, 0.0, 0.0],
        success_prob=[0.0, 0.5, 1.0],
    )


def suite_baselines(seeds: Sequence[int] = (), fault: Optional[str] = None) -> SuiteResult:
    """
    치우친 p_U 반례에서 VICE/밀도는 최적 미만, RCE는 최적 (전수 조사 기준)

    사용자 방문 분포 [0.1, 0.8, 0.1]가 전이 데이터 주변분포와 같고,
    VICE 판별기는 균등 리플레이 분포와 비교합니다.
    """
    recorder = SuiteRecorder("baselines")
    mdp = skewed_counterexample()
    try:
        task = make_task(0.5, fault)
        _, optimum = best_policy_by_enumeration(mdp, task)
    except InvariantViolation as e:
        recorder.fail("counterexample", e)
        return recorder.result()

    user_marginal = np.array([0.1, 0.8, 0.1])
    weighted = user_marginal * mdp.success_prob
    successes = SuccessExampleSet(examples=[1, 2], dist=weighted / weighted.sum(), prior=float(weighted.sum()))
    dynamics = mdp.dynamics()

    rce_cfg = TrainConfig(gamma=task.gamma, tolerance=1e-12, metric_every=10 ** 6)
    weights = success_ratio(successes, user_marginal) * successes.prior
    rce = solve_expected(dynamics, task, weights, rce_cfg)
    recorder.record(optimum - control_objective(mdp, task, rce.policy), 1e-10, "rce attains optimum")

    replay = np.full(3, 1.0 / 3.0)
    for name, model in (("vice", vice_ratio_reward(successes, replay)), ("density", density_reward(successes))):
        gap = optimum - control_objective(mdp, task, solve_baseline(dynamics, task, model).policy)
        # 최적 미만이어야 통과
        recorder.record(0.0 if gap > 1e-6 else math.inf, 0.0, f"{name} strictly suboptimal")

    # p_e ∈ {0,1}, 행동 주변분포 = 최적 정책 점유 분포 → SQIL과 RCE 모두 최적
    binary = TabularMDP(
        num_states=3,
        num_actions=2,
        transition=mdp.transition,
        initial_dist=mdp.initial_dist,
        success_prob=[0.0, 0.0, 1.0],
    )
    best_policy, best_value = best_policy_by_enumeration(binary, task)
    occupancy = discounted_occupancy(binary, task, best_policy)
    binary_successes = SuccessExampleSet.from_examples([2], 3, prior=float(occupancy[2]))
    sqil = solve_baseline(dynamics, task, sqil_reward(binary_successes, 3))
    rce_binary = solve_expected(dynamics, task, success_ratio(binary_successes, occupancy), rce_cfg)
    gap = abs(control_objective(binary, task, sqil.policy) - control_objective(binary, task, rce_binary.policy))
    recorder.record(gap + max(0.0, best_value - control_objective(binary, task, sqil.policy)), 1e-10, "sqil = rce")
    return recorder.result()


def suite_gamma_zero(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """γ=0이면 수렴한 비율이 모든 행동에서 p_e"""
    recorder = SuiteRecorder("gamma_zero")
    for seed in seeds:
        mdp, _, pi, _ = random_case(seed)
        task = make_task(0.0, fault)
        cfg = TrainConfig(gamma=0.0, policy_mode=PolicyMode.FIXED, tolerance=1e-13, metric_every=10 ** 6)
        try:
            result = solve_expected(mdp.dynamics(), task, mdp.success_prob, cfg, pi)
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        error = float(np.max(np.abs(result.classifier.ratios() - mdp.success_prob[:, None])))
        recorder.record(error if result.converged else math.inf, 1e-12, f"seed {seed}")
    return recorder.result()


def suite_monotone_transform(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """greedy 정책은 C, 비율, 로짓의 어떤 단조 변환으로 argmax 해도 같다"""
    recorder = SuiteRecorder("monotone_transform")
    for seed in seeds:
        rng = np.random.default_rng(seed)
        shape = (int(rng.integers(2, 11)), int(rng.integers(1, 5)))
        cls = Classifier(logits=rng.normal(scale=2.0, size=shape))
        reference = extract_policy(cls).greedy_actions()
        variants = (
            greedy_policy(cls.probs()),
            greedy_policy(cls.ratios()),
            greedy_policy(3.0 * cls.logits - 1.0),
            extract_policy(Classifier.from_probs(cls.probs())),
        )
        mismatches = sum(int(np.any(v.greedy_actions() != reference)) for v in variants)
        recorder.record(float(mismatches), 0.0, f"seed {seed}")
    return recorder.result()


def suite_json_roundtrip(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """MDP와 성공 예시 JSON 왕복이 비트 단위로 같다"""
    recorder = SuiteRecorder("json_roundtrip")
    for seed in seeds:
        mdp = make_env(random_mdp_spec(seed))
        again = TabularMDP.model_validate(json.loads(dumps_mdp(mdp)))
        same_mdp = all(
            np.array_equal(getattr(again, name), getattr(mdp, name))
            for name in ("transition", "initial_dist", "success_prob")
        )
        recorder.record(0.0 if same_mdp else math.inf, 0.0, f"seed {seed} mdp")

        rng = np.random.default_rng(seed)
        examples = rng.integers(0, mdp.num_states, size=20).tolist()
        successes = SuccessExampleSet.from_examples(examples, mdp.num_states, prior=float(rng.uniform(0.01, 1.0)))
        back = SuccessExampleSet.model_validate(json.loads(json.dumps(successes.model_dump(mode="json"))))
        same_successes = (
            back.examples == successes.examples
            and np.array_equal(back.dist, successes.dist)
            and back.prior == successes.prior
        )
        recorder.record(0.0 if same_successes else math.inf, 0.0, f"seed {seed} successes")
    return recorder.result()


def suite_stochastic_consistency(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """
    chain2에서 stochastic 모드 시드 평균 비율 = 정확한 고정점 (Q 척도 0.05)

    prior 없는 기본 설정이라 비율은 Q/prior 척도이고, prior를 곱해 비교합니다.
    학습률 0이면 분류기와 지표가 변하지 않아야 합니다.
    """
    from envs.datasets import collect, sample_success_examples

    recorder = SuiteRecorder("stochastic_consistency")
    mdp = make_env(EnvSpec(kind=EnvKind.CHAIN, length=2))
    behavior = Policy.uniform(2, 1)
    data = collect(mdp, behavior, 1000, episode_len=2, seed=0)
    successes = sample_success_examples(mdp, data.state_marginal(), count=200, seed=0)
    try:
        exact = future_success_prob(mdp, make_task(0.5, fault), behavior) / successes.prior
    except InvariantViolation as e:
        recorder.fail("exact fixed point", e)
        return recorder.result()

    cfg = TrainConfig(
        gamma=0.5,
        learning_rate=0.5,
        lr_schedule=LearningRateSchedule.ROBBINS_MONRO,
        lr_decay_steps=1000,
        polyak=0.05,
        n_step=1,
        max_iterations=1500,
        metric_every=1500,
    )
    ratios = []
    for seed in seeds:
        ratio = train(data, successes, cfg, mode=TrainMode.STOCHASTIC, seed=seed).classifier.ratios()
        ratios.append(ratio)
        recorder.record(successes.prior * float(np.max(np.abs(ratio - exact))), 0.1, f"seed {seed}")
    if ratios:
        error = successes.prior * float(np.max(np.abs(np.mean(ratios, axis=0) - exact)))
        recorder.record(error, 0.05, "seed mean")

    flat = train(
        data, successes, cfg.model_copy(update={"learning_rate": 0.0, "max_iterations": 50, "metric_every": 5}),
        mode=TrainMode.STOCHASTIC, evaluator=lambda pi: control_objective(mdp, TaskSpec(gamma=0.5), pi),
    )
    rows = {(m.objective, m.bellman_residual, m.policy_delta) for m in flat.metrics}
    still = len(rows) == 1 and not np.any(flat.classifier.logits)
    recorder.record(0.0 if still else math.inf, 0.0, "zero learning rate")
    return recorder.result()


def suite_iterated_rce(seeds: Sequence[int], fault: Optional[str] = None, outer_iters: int = 10) -> SuiteResult:
    """
    두 영역 격자: 오프라인 RCE는 가까운 영역에 90% 넘게, 반복 RCE는 각 영역에 10% 이상
    """
    from envs.datasets import collect, sample_success_examples

    recorder = SuiteRecorder("iterated_rce")
    spec = two_region_grid_spec(size=11)
    mdp = make_env(spec)
    regions = region_states(spec)
    cfg = TrainConfig(gamma=0.8)

    def shares(occupancy: np.ndarray) -> List[float]:
        mass = [float(occupancy[states].sum()) for states in regions]
        return [m / sum(mass) for m in mass]

    for seed in seeds:
        try:
            task = make_task(0.8, fault)
            data = collect(mdp, Policy.uniform(mdp.num_states, mdp.num_actions), 20000, seed=seed)
            successes = sample_success_examples(mdp, data.state_marginal(), 1000, seed=seed)
            offline = iterated_rce(mdp, successes, cfg, outer_iters=1, initial_data=data, seed=seed)
            top = shares(discounted_occupancy(mdp, task, offline.policies[0]))[0]
            iterated = iterated_rce(mdp, successes, cfg, outer_iters=outer_iters, initial_data=data, seed=seed)
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        recorder.record(0.0 if top > 0.9 else math.inf, 0.0, f"seed {seed} offline top share {top:.3f}")
        spread = min(shares(np.mean(np.stack(iterated.occupancies), axis=0)))
        recorder.record(0.0 if spread >= 0.1 else math.inf, 0.0, f"seed {seed} iterated min share {spread:.3f}")
    return recorder.result()


def delayed_success_config(seeds: Sequence[int]) -> ExperimentConfig:
    """갈림길 뒤 6칸 복도 환경의 stochastic RCE 절제 설정"""
    return ExperimentConfig(
        method=Method.RCE_STOCHASTIC,
        seeds=list(seeds),
        metric_every=100,
        env=EnvSpec(kind=EnvKind.DELAYED_SUCCESS, length=6),
        train=TrainConfig(gamma=0.99, learning_rate=1.0, polyak=0.05, max_iterations=2000),
        data=DataConfig(num_steps=2000, episode_len=20, num_successes=200),
    )


def suite_n_step_ablation(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """지연 성공 환경에서 n=10 평균 목적값 ≥ n=1, 성공 예시 수를 줄여도 나빠지지 않음"""
    from harness.sweep import mean_by_value, run_sweep

    recorder = SuiteRecorder("n_step_ablation")
    if not seeds:
        return recorder.result()
    cfg = delayed_success_config(seeds)
    try:
        check_task(make_task(cfg.train.gamma, fault))
    except InvariantViolation as e:
        recorder.fail("n_step", e)
        return recorder.result()

    by_n = mean_by_value(run_sweep(cfg, "n_step", [1, 10]))
    recorder.record(max(0.0, by_n[1] - by_n[10]), 0.0, f"n=10 {by_n[10]:.4f} vs n=1 {by_n[1]:.4f}")

    by_count = mean_by_value(run_sweep(cfg, "num_successes", [1, 20, 200]))
    for count in (1, 20):
        drop = max(0.0, by_count[200] - by_count[count])
        recorder.record(drop, 0.05, f"num_successes {count} vs 200")
    return recorder.result()


def suite_determinism(seeds: Sequence[int], fault: Optional[str] = None) -> SuiteResult:
    """같은 (설정, 시드)를 두 번 실행하면 상태 파일과 벽시계 컬럼을 뺀 산출물이 같다"""
    from harness.experiments import run_experiment
    from harness.reports import run_fingerprint

    recorder = SuiteRecorder("determinism")
    for seed in seeds:
        try:
            check_task(make_task(0.5, fault))
        except InvariantViolation as e:
            recorder.fail(f"seed {seed}", e)
            continue
        for method in (Method.RCE_EXPECTED, Method.RCE_STOCHASTIC):
            prints = []
            for _ in range(2):
                with tempfile.TemporaryDirectory() as tmp:
                    cfg = ExperimentConfig(
                        method=method,
                        seeds=[seed],
                        output_dir=Path(tmp),
                        metric_every=10,
                        env=EnvSpec(kind=EnvKind.CHAIN, length=2),
                        train=TrainConfig(gamma=0.5, max_iterations=50),
                        data=DataConfig(num_steps=200, episode_len=2, num_successes=20),
                    )
                    prints.append(run_fingerprint(run_experiment(cfg).run_dir))
            first, second = prints
            differing = sorted(k for k in first.keys() | second.keys() if first.get(k) != second.get(k))
            label = f"seed {seed} {method.value}" + (f" ({', '.join(differing)})" if differing else "")
            recorder.record(float(len(differing)), 0.0, label)
    return recorder.result()


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "lemma2": suite_lemma2,
    "corollary3": suite_corollary3,
    "oracle_equivalence": suite_oracle_equivalence,
    "lemma1": suite_lemma1,
    "lemma4": suite_lemma4,
    "lemma5": suite_lemma5,
    "baselines": suite_baselines,
    "gamma_zero": suite_gamma_zero,
    "monotone_transform": suite_monotone_transform,
    "json_roundtrip": suite_json_roundtrip,
    "stochastic_consistency": suite_stochastic_consistency,
    "iterated_rce": suite_iterated_rce,
    "n_step_ablation": suite_n_step_ablation,
    "determinism": suite_determinism,
}

DEFAULT_SEEDS: Dict[str, Sequence[int]] = {
    "lemma2": range(100),
    "corollary3": range(100),
    "oracle_equivalence": range(100),
    "lemma1": range(100),
    "lemma4": range(100),
    "lemma5": range(50),
    "baselines": (),
    "gamma_zero": range(100),
    "monotone_transform": range(100),
    "json_roundtrip": range(100),
    "stochastic_consistency": range(10),
    "iterated_rce": range(5),
    "n_step_ablation": range(5),
    "determinism": range(3),
}


def verify_all(
    suites: Optional[Sequence[str]] = None,
    seeds: Optional[Sequence[int]] = None,
    inject_fault: Optional[str] = None,
) -> VerifyReport:
    """
    검증 스위트 실행

    Args:
        suites: 실행할 스위트 이름 (None이면 전체, 빈 목록이면 UsageError)
        seeds: 시드 목록 (None이면 스위트별 기본값)
        inject_fault: "gamma_one" - 음성 테스트용 결함 주입

    Returns:
        VerifyReport
    """
    names = list(SUITES) if suites is None else list(suites)
    if not names:
        raise UsageError("실행할 스위트가 없습니다")
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"알 수 없는 스위트: {', '.join(unknown)}")
    if inject_fault is not None and inject_fault not in FAULTS:
        raise UsageError(f"알 수 없는 결함: {inject_fault}")

    report = VerifyReport()
    for name in names:
        logger.info(f"🔍 스위트 실행: {name}")
        suite_seeds = DEFAULT_SEEDS[name] if seeds is None else seeds
        report.suites.append(SUITES[name](suite_seeds, inject_fault))
    return report
