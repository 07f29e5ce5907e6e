"""베이스라인 - 보상 모델을 먼저 만들고 가치 반복으로 최적화

모든 베이스라인은 카운트 기반(베이즈 최적) 보상을 쓰므로 RCE와의 차이는
보상 형태에서만 나옵니다.
"""
import logging

import numpy as np

from agents.mdp_core import discounted_occupancy, greedy_policy
from agents.oracle import value_iteration
from schemas.data_models import (
    BaselineSolution,
    ControlledProcess,
    RewardModel,
    SuccessExampleSet,
    TaskSpec,
)
from schemas.errors import InvariantViolation, SupportMismatchError

logger = logging.getLogger(__name__)

# log 보상 하한
LOG_FLOOR = 1e-12


def sqil_reward(successes: SuccessExampleSet, num_states: int) -> RewardModel:
    """성공 예시 상태에 +1, 나머지 0"""
    reward = np.zeros(num_states)
    if successes.examples:
        reward[np.unique(np.asarray(successes.examples, dtype=int))] = 1.0
    return RewardModel(reward=reward, provenance="sqil")


def vice_ratio_reward(
    successes: SuccessExampleSet,
    data_marginal: np.ndarray,
    use_log: bool = False,
) -> RewardModel:
    """
    r(s) = p(s|e=1) / q(s)

    Args:
        successes: 성공 예시 집합
        data_marginal: 비교 대상 상태 분포 q(s)
        use_log: True면 log 비율 (하한 log 1e-12)

    Returns:
        RewardModel (provenance=vice_ratio)
    """
    q = np.asarray(data_marginal, dtype=np.float64)
    offending = np.flatnonzero((successes.dist > 0) & (q <= 0))
    if offending.size:
        raise SupportMismatchError(int(offending[0]), "VICE 비율의 분모가 0입니다")
    reward = np.zeros_like(q)
    mask = q > 0
    reward[mask] = successes.dist[mask] / q[mask]
    if use_log:
        reward = np.log(np.maximum(reward, LOG_FLOOR))
    return RewardModel(reward=reward, provenance="vice_ratio")


def density_reward(successes: SuccessExampleSet, use_log: bool = False) -> RewardModel:
    """r(s) = p(s|e=1) (표 형태의 밀도는 경험 빈도)"""
    reward = np.array(successes.dist, dtype=np.float64)
    if use_log:
        reward = np.log(np.maximum(reward, LOG_FLOOR))
    return RewardModel(reward=reward, provenance="density")


def solve_baseline(mdp_dynamics: ControlledProcess, task: TaskSpec, rm: RewardModel) -> BaselineSolution:
    """제어 모드 가치 반복 후 greedy 정책 추출"""
    if rm.reward.shape != (mdp_dynamics.num_states,):
        raise InvariantViolation("reward shape matches process", f"{rm.reward.shape}")
    q_table = value_iteration(mdp_dynamics, task, rm.reward, mode="control")
    policy = greedy_policy(q_table.values)
    logger.info(f"✅ 베이스라인 해결: {rm.provenance}")
    return BaselineSolution(q_table=q_table, policy=policy, reward_model=rm)


def solve_iterative_vice(
    mdp_dynamics: ControlledProcess,
    task: TaskSpec,
    successes: SuccessExampleSet,
    data_marginal: np.ndarray,
    outer_iters: int,
    use_log: bool = False,
) -> BaselineSolution:
    """
    반복 판별기 베이스라인

    매 외부 반복마다 q를 (초기 데이터 + 지금까지 정책들의 점유 분포) 평균으로 바꿔
    VICE 비율 보상을 다시 계산합니다.
    """
    base = np.asarray(data_marginal, dtype=np.float64)
    history = [base]
    solution = None
    for outer in range(outer_iters):
        q = np.mean(np.stack(history), axis=0)
        solution = solve_baseline(mdp_dynamics, task, vice_ratio_reward(successes, q, use_log))
        history.append(discounted_occupancy(mdp_dynamics, task, solution.policy))
        logger.info(f"🔁 반복 VICE {outer + 1}/{outer_iters}")
    return solution
