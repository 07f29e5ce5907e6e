"""LangGraph 워크플로우 - 반복 RCE

학습 → 평가 → (재수집 → 학습 ...) 루프를 상태 기반 그래프로 구성합니다.
각 외부 반복에서 정책을 RCE로 학습하고, 그 정책으로 데이터를 모아 리플레이에 더합니다.
"""
import logging
from typing import List, Optional, TypedDict

import numpy as np
from langgraph.graph import END, StateGraph

from agents.mdp_core import discounted_occupancy
from agents.rce_agent import train
from agents.robust import fixed_point_report
from schemas.data_models import (
    FixedPointReport,
    IteratedRCEResult,
    Policy,
    SuccessExampleSet,
    TabularMDP,
    TaskSpec,
    TrainConfig,
    TrainMode,
    TransitionDataset,
)

logger = logging.getLogger(__name__)

# ============================================================================
# 1. State 스키마 정의
# ============================================================================

class IteratedRCEState(TypedDict):
    """반복 RCE 워크플로우 상태"""
    env: TabularMDP                    # 환경 (동역학 + 정답 성공 확률)
    successes: SuccessExampleSet       # 고정된 성공 예시
    cfg: TrainConfig                   # 내부 RCE 학습 설정
    dataset: TransitionDataset         # 누적 리플레이 D
    policy: Optional[Policy]           # 마지막 학습 정책
    outer_iter: int                    # 완료한 외부 반복 수
    outer_iters: int                   # 목표 외부 반복 수
    num_steps: int                     # 재수집 스텝 수
    episode_len: int                   # 에피소드 길이
    seed: int                          # 수집 시드 기준값
    policies: List[Policy]             # 정책 시퀀스
    occupancies: List[np.ndarray]      # 점유 분포 시퀀스
    reports: List[FixedPointReport]    # 반복별 고정점 진단
    intermediate_steps: list           # 중간 단계 기록

# ============================================================================
# 2. 노드 함수들
# ============================================================================

def train_node(state: IteratedRCEState) -> IteratedRCEState:
    """현재 리플레이로 RCE를 수렴까지 학습합니다 (expected 모드)"""
    logger.info(f"🧠 학습 노드: 외부 반복 {state['outer_iter'] + 1}/{state['outer_iters']}")
    env = state["env"]
    result = train(
        state["dataset"],
        state["successes"],
        state["cfg"],
        mode=TrainMode.EXPECTED,
        dynamics=env.dynamics(),
    )
    state["policy"] = result.policy
    state["policies"].append(result.policy)
    state["intermediate_steps"].append(f"학습 완료: {result.iterations}회, converged={result.converged}")
    return state


def evaluate_node(state: IteratedRCEState) -> IteratedRCEState:
    """학습된 정책의 점유 분포와 고정점 조건을 기록합니다"""
    task = TaskSpec(gamma=state["cfg"].gamma)
    occupancy = discounted_occupancy(state["env"].dynamics(), task, state["policy"])
    report = fixed_point_report(occupancy, state["successes"].dist)
    state["occupancies"].append(occupancy)
    state["reports"].append(report)
    state["outer_iter"] += 1
    logger.info(f"📊 평가 노드: max ratio deviation={report.max_ratio_deviation:.4f}, reached={report.reached}")
    state["intermediate_steps"].append(f"평가 완료: deviation={report.max_ratio_deviation:.4f}")
    return state


def collect_node(state: IteratedRCEState) -> IteratedRCEState:
    """현재 정책으로 궤적을 모아 리플레이에 더합니다"""
    from envs.datasets import collect

    seed = state["seed"] + state["outer_iter"]
    new_data = collect(state["env"], state["policy"], state["num_steps"], state["episode_len"], seed)
    state["dataset"] = state["dataset"].merge(new_data)
    logger.info(f"🔁 수집 노드: {new_data.num_transitions}개 전이 추가 (누적 {state['dataset'].num_transitions})")
    state["intermediate_steps"].append(f"수집 완료: seed={seed}")
    return state


def route_after_evaluate(state: IteratedRCEState) -> str:
    if state["outer_iter"] >= state["outer_iters"]:
        return "end"
    return "collect"

# ============================================================================
# 3. 워크플로우 그래프 생성
# ============================================================================

def create_workflow():
    """train → evaluate → (collect → train | END) 그래프 생성"""
    workflow = StateGraph(IteratedRCEState)

    workflow.add_node("train", train_node)
    workflow.add_node("evaluate", evaluate_node)
    workflow.add_node("collect", collect_node)

    workflow.set_entry_point("train")
    workflow.add_edge("train", "evaluate")
    workflow.add_conditional_edges(
        "evaluate",
        route_after_evaluate,
        {
            "collect": "collect",
            "end": END,
        },
    )
    workflow.add_edge("collect", "train")

    return workflow.compile()

# ============================================================================
# 4. 메인 실행 클래스
# ============================================================================

class IteratedRCEWorkflow:
    """반복 RCE 실행기"""

    def __init__(self):
        self.app = create_workflow()
        logger.info("✅ 반복 RCE 워크플로우 초기화 완료")

    def run(
        self,
        env: TabularMDP,
        successes: SuccessExampleSet,
        cfg: TrainConfig,
        outer_iters: int,
        initial_data: Optional[TransitionDataset] = None,
        num_steps: int = 20000,
        episode_len: int = 151,
        seed: int = 0,
    ) -> IteratedRCEResult:
        """
        반복 RCE 실행

        Args:
            env: 온라인 수집이 가능한 환경
            successes: 성공 예시 (외부 반복 동안 고정)
            cfg: 내부 RCE 학습 설정
            outer_iters: 외부 반복 수 (1이면 오프라인 RCE)
            initial_data: 초기 리플레이 D0 (없으면 균등 정책으로 수집)
            num_steps: 반복마다 수집할 스텝 수
            episode_len: 에피소드 길이
            seed: 수집 시드

        Returns:
            정책/점유 분포 시퀀스와 마지막 고정점 진단
        """
        if initial_data is None:
            from envs.datasets import collect

            initial_data = collect(env, Policy.uniform(env.num_states, env.num_actions), num_steps, episode_len, seed)

        initial_state: IteratedRCEState = {
            "env": env,
            "successes": successes,
            "cfg": cfg,
            "dataset": initial_data,
            "policy": None,
            "outer_iter": 0,
            "outer_iters": outer_iters,
            "num_steps": num_steps,
            "episode_len": episode_len,
            "seed": seed + 1,
            "policies": [],
            "occupancies": [],
            "reports": [],
            "intermediate_steps": [],
        }
        final_state = self.app.invoke(initial_state, {"recursion_limit": 3 * outer_iters + 10})
        logger.info(f"✅ 반복 RCE 완료: {len(final_state['policies'])}개 정책")

        reports = final_state["reports"]
        return IteratedRCEResult(
            policies=final_state["policies"],
            occupancies=final_state["occupancies"],
            reports=reports,
            fixed_point_report=reports[-1] if reports else None,
        )


def occupancy_mixture(result: IteratedRCEResult) -> np.ndarray:
    """외부 반복 정책들의 점유 분포 평균"""
    return np.mean(np.stack(result.occupancies), axis=0)
