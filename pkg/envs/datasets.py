"""궤적 수집, 성공 예시 샘플링, 데이터셋 JSON-lines 입출력"""
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from schemas.data_models import (
    ControlledProcess,
    EnvSpec,
    Policy,
    SuccessExampleSet,
    TabularMDP,
    Trajectory,
    TransitionDataset,
)
from schemas.errors import InvariantViolation, as_invariant_violation

logger = logging.getLogger(__name__)


def _draw(cumulative: np.ndarray, u: float) -> int:
    index = int(np.searchsorted(cumulative, u, side="right"))
    return min(index, cumulative.shape[0] - 1)


def collect(
    mdp: ControlledProcess,
    behavior: Policy,
    num_steps: int,
    episode_len: int = 151,
    seed: int = 0,
    env_spec: Optional[EnvSpec] = None,
) -> TransitionDataset:
    """
    행동 정책으로 고정 길이 에피소드를 수집

    종료 플래그 없이 episode_len 스텝마다 initial_dist로 리셋합니다.

    Args:
        mdp: 환경 동역학
        behavior: 행동 정책
        num_steps: 총 전이 수
        episode_len: 에피소드 길이 (마지막 에피소드는 짧을 수 있음)
        seed: 난수 시드

    Returns:
        TransitionDataset
    """
    if episode_len < 1:
        raise InvariantViolation("episode_len >= 1", f"episode_len={episode_len}")
    rng = np.random.default_rng(seed)
    cum_initial = np.cumsum(mdp.initial_dist)
    cum_policy = np.cumsum(behavior.probs, axis=1)
    cum_transition = np.cumsum(mdp.transition, axis=2)

    trajectories = []
    remaining = num_steps
    while remaining > 0:
        length = min(episode_len, remaining)
        draws = rng.random(2 * length + 1)
        state = _draw(cum_initial, draws[0])
        states, actions = [state], []
        for t in range(length):
            action = _draw(cum_policy[state], draws[2 * t + 1])
            state = _draw(cum_transition[state, action], draws[2 * t + 2])
            actions.append(action)
            states.append(state)
        trajectories.append(Trajectory(states=states, actions=actions))
        remaining -= length

    logger.info(f"📦 수집 완료: {len(trajectories)}개 에피소드, {num_steps}개 전이 (seed={seed})")
    return TransitionDataset(
        num_states=mdp.num_states,
        num_actions=mdp.num_actions,
        trajectories=trajectories,
        seed=seed,
        env_spec=env_spec,
    )


# ============================================================================
# 성공 예시 샘플링
# ============================================================================

def _sample_successes(mdp: TabularMDP, visitation: np.ndarray, count: int, seed: int) -> SuccessExampleSet:
    visitation = np.asarray(visitation, dtype=np.float64)
    if visitation.shape != (mdp.num_states,):
        raise InvariantViolation("marginal shape is (S,)", f"{visitation.shape}")
    weights = visitation * mdp.success_prob
    mass = float(weights.sum())
    if mass <= 0:
        raise InvariantViolation("success mass positive", "p_U(s)·p_e(s)의 합이 0입니다")
    rng = np.random.default_rng(seed)
    examples = rng.choice(mdp.num_states, size=count, p=weights / mass)
    return SuccessExampleSet.from_examples(examples.tolist(), mdp.num_states, prior=min(mass, 1.0))


def sample_success_examples(
    mdp: TabularMDP,
    behavior_marginal: np.ndarray,
    count: int = 200,
    seed: int = 0,
) -> SuccessExampleSet:
    """s* ∝ p_U(s)·p_e(s) 로 성공 예시 샘플링 (prior = Σ p_U p_e)"""
    successes = _sample_successes(mdp, behavior_marginal, count, seed)
    logger.info(f"🎯 성공 예시 {count}개 샘플링 (prior={successes.prior:.4f})")
    return successes


def violate_assumption_sampler(
    mdp: TabularMDP,
    user_marginal: np.ndarray,
    count: int = 200,
    seed: int = 0,
) -> SuccessExampleSet:
    """전이 데이터와 다른 사용자 방문 분포로 성공 예시 샘플링 (강건성 실험용)"""
    successes = _sample_successes(mdp, user_marginal, count, seed)
    logger.info(f"🎯 사용자 분포 기반 성공 예시 {count}개 샘플링")
    return successes


# ============================================================================
# JSON-lines 입출력
# ============================================================================

def save_dataset(dataset: TransitionDataset, path: Path) -> Path:
    """첫 줄은 header, 이후 한 줄에 궤적 하나 ((s, a) 쌍 목록 + 마지막 상태)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "header": {
            "env_spec": dataset.env_spec.model_dump(mode="json") if dataset.env_spec else None,
            "seed": dataset.seed,
            "num_states": dataset.num_states,
            "num_actions": dataset.num_actions,
        }
    }
    lines = [json.dumps(header)]
    for traj in dataset.trajectories:
        pairs = [[s, a] for s, a in zip(traj.states[:-1], traj.actions)]
        lines.append(json.dumps({"pairs": pairs, "final_state": traj.states[-1]}))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_dataset(path: Path) -> TransitionDataset:
    path = Path(path)
    if not path.exists():
        raise InvariantViolation("referenced files exist", str(path))
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise InvariantViolation("dataset has a header line", str(path))
    header = json.loads(lines[0]).get("header")
    if header is None:
        raise InvariantViolation("dataset has a header line", str(path))

    try:
        trajectories = []
        for line in lines[1:]:
            record = json.loads(line)
            pairs = record["pairs"]
            trajectories.append(Trajectory(
                states=[s for s, _ in pairs] + [record["final_state"]],
                actions=[a for _, a in pairs],
            ))
        return TransitionDataset(
            num_states=header["num_states"],
            num_actions=header["num_actions"],
            trajectories=trajectories,
            seed=header.get("seed"),
            env_spec=header.get("env_spec"),
        )
    except ValidationError as exc:
        raise as_invariant_violation(exc, "TransitionDataset") from exc


def save_successes(successes: SuccessExampleSet, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(successes.model_dump(mode="json")) + "\n", encoding="utf-8")
    return path


def load_successes(path: Path) -> SuccessExampleSet:
    path = Path(path)
    if not path.exists():
        raise InvariantViolation("referenced files exist", str(path))
    try:
        return SuccessExampleSet.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except ValidationError as exc:
        raise as_invariant_violation(exc, "SuccessExampleSet") from exc


def check_inputs_match(
    mdp: ControlledProcess,
    data: Optional[TransitionDataset] = None,
    successes: Optional[SuccessExampleSet] = None,
) -> None:
    """파일에서 읽은 데이터셋/성공 예시의 크기가 환경과 같은지 확인"""
    if data is not None and (data.num_states, data.num_actions) != (mdp.num_states, mdp.num_actions):
        raise InvariantViolation(
            "dataset matches env sizes",
            f"데이터 ({data.num_states}, {data.num_actions}) ≠ 환경 ({mdp.num_states}, {mdp.num_actions})",
        )
    if successes is not None and successes.num_states != mdp.num_states:
        raise InvariantViolation(
            "success examples match env sizes",
            f"성공 예시 상태 수 {successes.num_states} ≠ 환경 {mdp.num_states}",
        )
