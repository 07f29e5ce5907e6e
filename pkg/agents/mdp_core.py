"""제어 마르코프 과정의 정확한 확률량

할인 점유 분포, 미래 성공 확률, 제어 목적값, 성공 사후확률을
선형 시스템 풀이(dense LU)로 정확히 계산합니다.
"""
import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from schemas import data_models
from schemas.data_models import (
    ControlledProcess,
    Policy,
    PosteriorEstimate,
    SuccessExampleSet,
    TabularMDP,
    TaskSpec,
    TransitionDataset,
)
from schemas.errors import InvariantViolation, SupportMismatchError

logger = logging.getLogger(__name__)

# 클램프 전 사후확률 허용 상한
POSTERIOR_SLACK = 1e-9

# 동점 판정 상대 허용 오차
TIE_TOL = 1e-12

Start = Union[None, np.ndarray, Tuple[int, int]]


# ============================================================================
# 입력 검사
# ============================================================================

def check_task(task: TaskSpec) -> float:
    """γ < 1 검사 (model_construct로 우회된 입력도 잡는다)"""
    gamma = float(task.gamma)
    if not 0.0 <= gamma < 1.0:
        raise InvariantViolation("gamma < 1", f"gamma={gamma}")
    return gamma


def check_policy(process: ControlledProcess, pi: Policy) -> None:
    expected = (process.num_states, process.num_actions)
    if pi.probs.shape != expected:
        raise InvariantViolation("policy shape matches process", f"{pi.probs.shape} != {expected}")


def policy_transition(process: ControlledProcess, pi: Policy) -> np.ndarray:
    """P_π[s][s'] = Σ_a π(a|s) P[s][a][s']"""
    check_policy(process, pi)
    return np.einsum("sa,sat->st", pi.probs, process.transition)


def greedy_policy(values: np.ndarray) -> Policy:
    """
    행별 argmax 결정적 정책

    최댓값과의 차이가 TIE_TOL·max(1, |max|) 이내인 행동 중 가장 낮은 번호를 고릅니다.
    NaN 항목은 후보에서 제외합니다.
    """
    values = np.where(np.isnan(values), -np.inf, np.asarray(values, dtype=np.float64))
    best = values.max(axis=1, keepdims=True)
    slack = TIE_TOL * np.maximum(1.0, np.abs(np.where(np.isfinite(best), best, 0.0)))
    candidates = values >= best - slack
    actions = np.argmax(candidates, axis=1)
    return Policy.deterministic(actions, values.shape[1])


# ============================================================================
# 점유 분포 / 미래 성공 확률
# ============================================================================

def discounted_occupancy(
    mdp: ControlledProcess,
    task: TaskSpec,
    pi: Policy,
    start: Start = None,
) -> np.ndarray:
    """
    할인 미래 상태 분포 ρ = (1-γ) Σ_Δ γ^Δ p^π(s_{t+Δ} = s | start)

    Args:
        mdp: 제어 과정
        task: 할인율
        pi: 정책
        start: None이면 initial_dist, 벡터면 그 분포, (s, a) 튜플이면 고정된 상태-행동

    Returns:
        상태 위의 확률 벡터
    """
    gamma = check_task(task)
    p_pi = policy_transition(mdp, pi)
    system = np.eye(mdp.num_states) - gamma * p_pi

    if isinstance(start, tuple):
        s, a = start
        # Δ=0 항은 δ_s, 이후는 P[s,a]에서 시작해 π를 따른다
        tail = discounted_occupancy(mdp, task, pi, mdp.transition[s, a])
        rho = gamma * tail
        rho[s] += 1.0 - gamma
        return rho

    b = mdp.initial_dist if start is None else np.asarray(start, dtype=np.float64)
    # ρᵀ = (1-γ) bᵀ (I - γP_π)^{-1}  ⇔  (I - γP_π)ᵀ ρ = (1-γ) b
    return (1.0 - gamma) * linalg.solve(system.T, b)


def discounted_value(
    process: ControlledProcess,
    task: TaskSpec,
    pi: Policy,
    weights: np.ndarray,
) -> np.ndarray:
    """
    Q = (1-γ)w + γ P Π Q 의 정확한 해

    학습 코드가 추정한 성공 가중치(w)로도 부를 수 있도록 success_prob 대신 벡터를 받습니다.
    """
    gamma = check_task(task)
    weights = np.asarray(weights, dtype=np.float64)
    p_pi = policy_transition(process, pi)
    state_value = linalg.solve(np.eye(process.num_states) - gamma * p_pi, (1.0 - gamma) * weights)
    return (1.0 - gamma) * weights[:, None] + gamma * process.transition @ state_value


def future_success_prob(mdp: TabularMDP, task: TaskSpec, pi: Policy) -> np.ndarray:
    """Q(s,a) = p^π(e_{t+}=1 | s, a)"""
    q = discounted_value(mdp, task, pi, mdp.success_prob)
    return np.clip(q, 0.0, 1.0)


def control_objective(mdp: TabularMDP, task: TaskSpec, pi: Policy) -> float:
    """E_{p1, π}[Q(s1, a1)] = p^π(e_{t+}=1)"""
    q = future_success_prob(mdp, task, pi)
    return float(mdp.initial_dist @ (pi.probs * q).sum(axis=1))


def episodic_state_marginal(mdp: ControlledProcess, pi: Policy, episode_len: int) -> np.ndarray:
    """고정 길이 에피소드(매번 initial_dist로 리셋)의 정확한 상태 주변분포"""
    p_pi = policy_transition(mdp, pi)
    dist = np.array(mdp.initial_dist, dtype=np.float64)
    total = np.zeros(mdp.num_states)
    for _ in range(episode_len):
        total += dist
        dist = dist @ p_pi
    return total / episode_len


# ============================================================================
# 성공 사후확률
# ============================================================================

def _check_support(success: SuccessExampleSet, marginal: np.ndarray) -> np.ndarray:
    marginal = np.asarray(marginal, dtype=np.float64)
    if marginal.shape != success.dist.shape:
        raise InvariantViolation("marginal shape matches success dist", f"{marginal.shape} != {success.dist.shape}")
    unvisited = np.flatnonzero((success.dist > 0) & (marginal <= 0))
    if unvisited.size:
        raise SupportMismatchError(int(unvisited[0]))
    return marginal


def success_ratio(success: SuccessExampleSet, behavior_marginal: np.ndarray) -> np.ndarray:
    """사전확률 없이 p_U(s|e=1) / p_U(s) (클램프 없음)"""
    marginal = _check_support(success, behavior_marginal)
    ratio = np.zeros_like(marginal)
    mask = success.dist > 0
    ratio[mask] = success.dist[mask] / marginal[mask]
    return ratio


def success_posterior(success: SuccessExampleSet, behavior_marginal: np.ndarray) -> PosteriorEstimate:
    """
    p(e=1|s) = p_U(s|e=1) p(e=1) / p_U(s)

    Args:
        success: 성공 예시 집합
        behavior_marginal: 행동 데이터의 상태 주변분포 p_U(s)

    Returns:
        [0, 1]로 클램프한 값과 위반 플래그
    """
    unclamped = success_ratio(success, behavior_marginal) * success.prior
    max_unclamped = float(unclamped.max()) if unclamped.size else 0.0
    violated = max_unclamped > 1.0 + POSTERIOR_SLACK
    if violated:
        logger.warning(f"⚠️ 사후확률이 1을 넘어 클램프합니다 (max={max_unclamped:.6f})")
    return PosteriorEstimate(
        values=np.clip(unclamped, 0.0, 1.0),
        violated=violated,
        max_unclamped=max_unclamped,
    )


# ============================================================================
# 데이터 기반 동역학
# ============================================================================

def empirical_process(dataset: TransitionDataset) -> ControlledProcess:
    """
    전이 카운트로 추정한 동역학

    방문하지 않은 (s, a) 행은 자기 자신으로 가는 루프로 채웁니다.
    초기 분포는 궤적 첫 상태의 빈도입니다.
    """
    counts = dataset.transition_counts()
    totals = counts.sum(axis=2, keepdims=True)
    unvisited = totals[..., 0] == 0
    if np.any(unvisited):
        logger.warning(f"⚠️ 방문하지 않은 (s, a) {int(unvisited.sum())}개를 자기 루프로 채웁니다")
    transition = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    states, actions = np.nonzero(unvisited)
    transition[states, actions, states] = 1.0

    starts = np.bincount(
        [t.states[0] for t in dataset.trajectories], minlength=dataset.num_states
    ).astype(np.float64)
    if starts.sum() > 0:
        initial = starts / starts.sum()
    else:
        initial = np.full(dataset.num_states, 1.0 / dataset.num_states)
    return ControlledProcess(
        num_states=dataset.num_states,
        num_actions=dataset.num_actions,
        transition=transition,
        initial_dist=initial,
    )


def bellman_residual(
    process: ControlledProcess,
    task: TaskSpec,
    pi: Policy,
    weights: np.ndarray,
    q: np.ndarray,
) -> float:
    """sup |Q - ((1-γ)w + γ P Π Q)| - 정의되지 않은(NaN) 항목은 무시"""
    gamma = check_task(task)
    q = np.asarray(q, dtype=np.float64)
    safe_q = np.nan_to_num(q, nan=0.0)
    next_value = (pi.probs * safe_q).sum(axis=1)
    target = (1.0 - gamma) * np.asarray(weights)[:, None] + gamma * process.transition @ next_value
    diff = np.abs(q - target)
    diff = diff[~np.isnan(diff)]
    return float(diff.max()) if diff.size else 0.0


def residual_tolerance(override: Optional[float] = None) -> float:
    return data_models.RESIDUAL_TOL if override is None else override
