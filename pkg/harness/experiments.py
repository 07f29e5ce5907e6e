"""실험 오케스트레이션

시드마다 (환경, 데이터, 성공 예시)를 준비하고 방법별로 학습한 뒤
오라클로 목적값을 평가합니다. 시드 복제본은 스레드 풀에서 병렬로 돌고,
결과는 시드 순서로 한 번에 기록합니다.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from agents.baselines import (
    density_reward,
    solve_baseline,
    solve_iterative_vice,
    sqil_reward,
    vice_ratio_reward,
)
from agents.langgraph_workflow import occupancy_mixture
from agents.mdp_core import control_objective, greedy_policy
from agents.oracle import value_iteration
from agents.rce_agent import train
from agents.robust import iterated_rce, robust_report
from envs.datasets import check_inputs_match, collect, load_dataset, load_successes, sample_success_examples
from envs.generators import load_mdp, make_env
from harness.job_manager import RunManager
from harness.reports import write_json, write_metrics_csv, write_summary
from schemas.data_models import (
    ExperimentConfig,
    ExperimentSummary,
    Method,
    Policy,
    RunStatus,
    SeedResult,
    SuccessExampleSet,
    TabularMDP,
    TaskSpec,
    TrainMode,
    TransitionDataset,
)

logger = logging.getLogger(__name__)


def optimal_objective(mdp: TabularMDP, task: TaskSpec) -> float:
    """Def. 1 최적값: 보상 (1-γ)p_e 에 대한 제어 가치 반복 후 greedy 정책의 목적값"""
    q_table = value_iteration(mdp, task, (1.0 - task.gamma) * mdp.success_prob, mode="control")
    return control_objective(mdp, task, greedy_policy(q_table.values))


def prepare_inputs(cfg: ExperimentConfig, seed: int) -> Tuple[TabularMDP, TransitionDataset, SuccessExampleSet]:
    """파일이 주어지면 읽고, 없으면 시드로 생성"""
    if cfg.env_file is not None:
        mdp = load_mdp(cfg.env_file)
    else:
        mdp = make_env(cfg.env)

    if cfg.dataset_file is not None:
        data = load_dataset(cfg.dataset_file)
    else:
        behavior = Policy.uniform(mdp.num_states, mdp.num_actions)
        data = collect(mdp, behavior, cfg.data.num_steps, cfg.data.episode_len, seed, env_spec=cfg.env)

    if cfg.successes_file is not None:
        successes = load_successes(cfg.successes_file)
    else:
        successes = sample_success_examples(mdp, data.state_marginal(), cfg.data.num_successes, seed)
    check_inputs_match(mdp, data, successes)
    return mdp, data, successes


def run_method(
    cfg: ExperimentConfig,
    seed: int,
    mdp: TabularMDP,
    data: TransitionDataset,
    successes: SuccessExampleSet,
    out_dir: Optional[Path] = None,
) -> SeedResult:
    """
    방법 하나를 한 시드로 실행

    Args:
        cfg: 실험 설정
        seed: 시드
        mdp: 환경 (성공 확률은 평가에만 사용)
        data: 전이 데이터셋
        successes: 성공 예시
        out_dir: 시드별 산출물 디렉토리 (None이면 기록 안 함)

    Returns:
        SeedResult
    """
    task = TaskSpec(gamma=cfg.train.gamma)
    train_cfg = cfg.train.model_copy(update={"metric_every": cfg.metric_every})
    dynamics = mdp.dynamics()

    def evaluate(pi: Policy) -> float:
        return control_objective(mdp, task, pi)

    def collector(pi: Policy, collect_seed: int) -> TransitionDataset:
        return collect(mdp, pi, train_cfg.collect_steps, train_cfg.episode_len, collect_seed)

    def resample_successes(iteration: int) -> SuccessExampleSet:
        return sample_success_examples(mdp, data.state_marginal(), cfg.data.num_successes, seed + iteration)

    success_sampler = resample_successes if train_cfg.resample_successes_every else None

    iterations, converged, extra = 0, True, {}
    method = cfg.method
    if method in (Method.RCE_EXPECTED, Method.RCE_STOCHASTIC):
        mode = TrainMode.EXPECTED if method == Method.RCE_EXPECTED else TrainMode.STOCHASTIC
        result = train(
            data, successes, train_cfg, mode=mode, dynamics=dynamics,
            collector=collector, evaluator=evaluate, success_sampler=success_sampler, seed=seed,
        )
        policy, iterations, converged = result.policy, result.iterations, result.converged
        if out_dir is not None:
            write_metrics_csv(out_dir / "metrics.csv", result.metrics)
    elif method == Method.ROBUST_ITERATED:
        outcome = iterated_rce(
            mdp, successes, train_cfg, cfg.outer_iters,
            initial_data=data, num_steps=cfg.data.num_steps, episode_len=cfg.data.episode_len, seed=seed,
        )
        policy = outcome.policies[-1]
        report = robust_report(occupancy_mixture(outcome), successes.dist, successes.prior)
        extra = {
            "robust_value": report.robust_value,
            "max_ratio_deviation": outcome.fixed_point_report.max_ratio_deviation,
        }
        iterations = len(outcome.policies)
        if out_dir is not None:
            write_json(out_dir / "robust_report.json", report)
            write_json(out_dir / "fixed_point.json", outcome.fixed_point_report)
    else:
        marginal = data.state_marginal()
        if method == Method.SQIL:
            solution = solve_baseline(dynamics, task, sqil_reward(successes, mdp.num_states))
        elif method == Method.VICE:
            solution = solve_baseline(dynamics, task, vice_ratio_reward(successes, marginal))
        elif method == Method.VICE_ITERATIVE:
            solution = solve_iterative_vice(dynamics, task, successes, marginal, cfg.outer_iters)
        else:
            solution = solve_baseline(dynamics, task, density_reward(successes))
        policy = solution.policy

    if out_dir is not None:
        write_json(out_dir / "policy.json", policy)

    objective = evaluate(policy)
    logger.info(f"✅ {method.value} seed={seed}: objective={objective:.6f}")
    return SeedResult(
        method=method,
        seed=seed,
        objective=objective,
        optimal_objective=optimal_objective(mdp, task),
        iterations=iterations,
        converged=converged,
        extra=extra,
    )


def run_seed(cfg: ExperimentConfig, seed: int, run_dir: Optional[Path] = None) -> SeedResult:
    mdp, data, successes = prepare_inputs(cfg, seed)
    out_dir = Path(run_dir) / f"seed_{seed}" if run_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    return run_method(cfg, seed, mdp, data, successes, out_dir)


def run_experiment(cfg: ExperimentConfig, max_workers: Optional[int] = None) -> ExperimentSummary:
    """
    시드 복제본을 병렬 실행하고 결과를 시드 순서로 병합

    Args:
        cfg: 실험 설정
        max_workers: 스레드 수 (기본: cfg.max_workers)

    Returns:
        ExperimentSummary
    """
    manager = RunManager(cfg.output_dir)
    run_id = manager.create_run(cfg)
    run_dir = manager.run_dir(run_id)
    manager.update_status(run_id, status=RunStatus.PROCESSING, message="실행 중")
    logger.info(f"🚀 실험 시작: {run_id} ({len(cfg.seeds)}개 시드)")

    workers = max_workers or cfg.max_workers
    try:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results: List[SeedResult] = list(executor.map(lambda s: run_seed(cfg, s, run_dir), cfg.seeds))
    except Exception as e:
        manager.update_status(run_id, status=RunStatus.FAILED, error=str(e))
        logger.error(f"❌ 실험 실패: {e}")
        raise

    results.sort(key=lambda r: r.seed)
    write_summary(run_dir, results)
    mean = float(np.mean([r.objective for r in results]))
    manager.update_status(
        run_id,
        status=RunStatus.COMPLETED,
        progress=100,
        message="실행 완료",
        metadata={"mean_objective": mean},
    )
    return ExperimentSummary(run_id=run_id, run_dir=run_dir, results=results)
