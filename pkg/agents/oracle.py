"""정답 오라클 - RCE 검증용

가치 반복, 베이즈 최적 분류기, 정책 개선 검사, 브루트포스 열거 오라클.
"""
import itertools
import logging
from typing import Iterator, Literal, Optional, Tuple

import numpy as np

from agents.mdp_core import (
    check_policy,
    check_task,
    control_objective,
    future_success_prob,
    greedy_policy,
)
from schemas.data_models import (
    BayesOptimalClassifier,
    Classifier,
    ControlledProcess,
    ImprovementReport,
    Policy,
    QTable,
    TabularMDP,
    TaskSpec,
)
from schemas.errors import ConvergenceError, InvariantViolation

logger = logging.getLogger(__name__)

VALUE_ITERATION_TOL = 1e-12
VALUE_ITERATION_CAP = 10 ** 6
IMPROVEMENT_TOL = 1e-10
ENUMERATION_CAP = 4096


# ============================================================================
# 1. 가치 반복
# ============================================================================

def value_iteration_step(
    mdp: ControlledProcess,
    task: TaskSpec,
    reward: np.ndarray,
    q: np.ndarray,
    pi: Optional[Policy] = None,
) -> np.ndarray:
    """Q ← r + γ P V  (pi가 있으면 V = Σπ Q, 없으면 V = max_a Q)"""
    gamma = check_task(task)
    next_value = (pi.probs * q).sum(axis=1) if pi is not None else q.max(axis=1)
    return np.asarray(reward, dtype=np.float64)[:, None] + gamma * mdp.transition @ next_value


def value_iteration(
    mdp: ControlledProcess,
    task: TaskSpec,
    reward: np.ndarray,
    mode: Literal["policy_eval", "control"] = "control",
    pi: Optional[Policy] = None,
    tol: float = VALUE_ITERATION_TOL,
    max_iterations: int = VALUE_ITERATION_CAP,
) -> QTable:
    """
    가치 반복으로 Q 고정점 계산

    Args:
        mdp: 제어 과정 (성공 확률은 읽지 않음)
        task: 할인율
        reward: 상태 보상 r[s]
        mode: policy_eval(π) 또는 control
        pi: policy_eval 모드의 정책
        tol: sup-norm 잔차 허용 오차 (|Q|가 1보다 크면 상대 오차)
        max_iterations: 반복 상한

    Returns:
        고정점 QTable
    """
    reward = np.asarray(reward, dtype=np.float64)
    if reward.shape != (mdp.num_states,) or not np.all(np.isfinite(reward)):
        raise InvariantViolation("reward finite", f"shape={reward.shape}")
    if mode == "policy_eval":
        if pi is None:
            raise InvariantViolation("policy_eval needs a policy")
        check_policy(mdp, pi)
        policy = pi
    else:
        policy = None

    q = np.zeros((mdp.num_states, mdp.num_actions))
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        q_next = value_iteration_step(mdp, task, reward, q, policy)
        residual = float(np.max(np.abs(q_next - q)))
        q = q_next
        scale = max(1.0, float(np.max(np.abs(q))))
        if residual < tol * scale:
            logger.debug(f"✅ 가치 반복 수렴: {iteration}회, residual={residual:.3e}")
            return QTable(values=q)
    raise ConvergenceError(max_iterations, residual)


# ============================================================================
# 2. 베이즈 최적 분류기
# ============================================================================

def bayes_optimal_classifier(
    mdp: TabularMDP,
    task: TaskSpec,
    pi: Policy,
    data_marginal: np.ndarray,
) -> BayesOptimalClassifier:
    """
    C(s,a) = p^π(s,a|e_{t+}=1) p(e_{t+}=1) / (p^π(s,a|e_{t+}=1) p(e_{t+}=1) + p(s,a))

    p(s,a) = 0 인 항목은 NaN 로짓으로 두고 undefined_pairs에 기록합니다.
    """
    data_marginal = np.asarray(data_marginal, dtype=np.float64)
    if data_marginal.shape != (mdp.num_states, mdp.num_actions):
        raise InvariantViolation("data marginal shape is (S, A)", f"{data_marginal.shape}")
    if np.any(data_marginal < 0) or abs(data_marginal.sum() - 1.0) > 1e-9:
        raise InvariantViolation("data marginal is a probability matrix")

    q = future_success_prob(mdp, task, pi)
    p_future = float((data_marginal * q).sum())
    defined = data_marginal > 0

    ratio = np.full_like(q, np.nan)
    if p_future > 0:
        positive = np.where(defined, q * data_marginal / p_future, 0.0)
        scaled = positive * p_future
        ratio[defined] = scaled[defined] / data_marginal[defined]
    else:
        ratio[defined] = 0.0

    undefined = [(int(s), int(a)) for s, a in zip(*np.nonzero(~defined))]
    if undefined:
        logger.info(f"⚠️ 데이터에 없는 (s, a) {len(undefined)}개는 정의되지 않음으로 표시합니다")
    return BayesOptimalClassifier(
        classifier=Classifier.from_ratio(ratio),
        undefined_pairs=undefined,
        p_future_success=p_future,
    )


def improve_policy(mdp: TabularMDP, task: TaskSpec, pi: Policy, data_marginal: np.ndarray) -> Policy:
    """베이즈 최적 분류기에 대한 greedy 정책 (정의되지 않은 항목은 제외)"""
    bayes = bayes_optimal_classifier(mdp, task, pi, data_marginal)
    return greedy_policy(bayes.classifier.logits)


def verify_policy_improvement(
    mdp: TabularMDP,
    task: TaskSpec,
    pi: Policy,
    pi_greedy: Policy,
    tol: float = IMPROVEMENT_TOL,
) -> ImprovementReport:
    old = control_objective(mdp, task, pi)
    new = control_objective(mdp, task, pi_greedy)
    return ImprovementReport(old=old, new=new, improved=new >= old - tol)


# ============================================================================
# 3. 열거 오라클
# ============================================================================

def enumerate_future_success(mdp: TabularMDP, task: TaskSpec, pi: Policy, horizon: int) -> np.ndarray:
    """
    Q̃ = (1-γ) Σ_{Δ=0}^{H} γ^Δ E[p_e(s_{t+Δ})] 를 명시적 롤아웃으로 계산

    선형 풀이와 독립적인 검증용 오라클입니다.
    """
    gamma = check_task(task)
    check_policy(mdp, pi)
    num_states, num_actions = mdp.num_states, mdp.num_actions
    p_pi = np.einsum("sa,sat->st", pi.probs, mdp.transition)

    # (s,a)별 t+Δ 시점의 상태 분포
    dist = np.zeros((num_states, num_actions, num_states))
    dist[np.arange(num_states), :, np.arange(num_states)] = 1.0
    total = np.zeros((num_states, num_actions))
    discount = 1.0
    for delta in range(horizon + 1):
        total += discount * dist @ mdp.success_prob
        if delta == 0:
            dist = np.array(mdp.transition, dtype=np.float64)
        else:
            dist = dist @ p_pi
        discount *= gamma
    return (1.0 - gamma) * total


def enumerate_occupancy(mdp: ControlledProcess, task: TaskSpec, pi: Policy, horizon: int) -> np.ndarray:
    """initial_dist에서 시작한 절단 지평 할인 점유 분포"""
    gamma = check_task(task)
    p_pi = np.einsum("sa,sat->st", pi.probs, mdp.transition)
    dist = np.array(mdp.initial_dist, dtype=np.float64)
    total = np.zeros(mdp.num_states)
    discount = 1.0
    for _ in range(horizon + 1):
        total += discount * dist
        dist = dist @ p_pi
        discount *= gamma
    return (1.0 - gamma) * total


def enumerate_deterministic_policies(num_states: int, num_actions: int) -> Iterator[Policy]:
    """모든 결정적 정책을 사전식 순서로 생성"""
    count = num_actions ** num_states
    if count > ENUMERATION_CAP:
        raise InvariantViolation("policy enumeration fits the cap", f"{count} > {ENUMERATION_CAP}")
    for actions in itertools.product(range(num_actions), repeat=num_states):
        yield Policy.deterministic(actions, num_actions)


def best_policy_by_enumeration(mdp: TabularMDP, task: TaskSpec) -> Tuple[Policy, float]:
    """결정적 정책 전수 조사로 최적 목적값 계산 (동점이면 먼저 나온 정책)"""
    best_policy, best_value = None, -np.inf
    for policy in enumerate_deterministic_policies(mdp.num_states, mdp.num_actions):
        value = control_objective(mdp, task, policy)
        if value > best_value + IMPROVEMENT_TOL:
            best_policy, best_value = policy, value
    return best_policy, float(best_value)
