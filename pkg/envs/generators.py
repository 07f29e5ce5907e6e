"""환경 생성기

EnvSpec → TabularMDP. 같은 시드면 항상 같은 MDP를 만듭니다.
"""
import json
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import ValidationError

from schemas.data_models import EnvKind, EnvSpec, TabularMDP
from schemas.errors import InvariantViolation, as_invariant_violation

logger = logging.getLogger(__name__)

# grid 행동: 위, 아래, 왼쪽, 오른쪽
GRID_MOVES: List[Tuple[int, int]] = [(-1, 0), (1, 0), (0, -1), (0, 1)]


def _apply_noise(transition: np.ndarray, noise: float) -> np.ndarray:
    """확률 noise로 균등하게 고른 행동이 대신 실행된다"""
    if noise <= 0:
        return transition
    slip = transition.mean(axis=1, keepdims=True)
    return (1.0 - noise) * transition + noise * slip


def _chain(spec: EnvSpec) -> TabularMDP:
    length, num_actions = spec.length, spec.chain_actions
    transition = np.zeros((length, num_actions, length))
    for s in range(length):
        transition[s, 0, min(s + 1, length - 1)] = 1.0
        if num_actions > 1:
            transition[s, 1, max(s - 1, 0)] = 1.0
    initial = np.zeros(length)
    initial[0] = 1.0
    success = np.zeros(length)
    success[spec.success_states or [length - 1]] = 1.0
    return TabularMDP(
        num_states=length,
        num_actions=num_actions,
        transition=_apply_noise(transition, spec.noise),
        initial_dist=initial,
        success_prob=success,
    )


def _delayed_success(spec: EnvSpec) -> TabularMDP:
    """
    갈림길 뒤의 두 복도

    상태 0에서 행동 1은 성공 복도(1..L, 끝 L이 흡수 성공 상태), 행동 0은
    막다른 복도(L+1..2L, 끝이 흡수 상태)로 들어갑니다. 복도 안에서는 두 행동
    모두 한 칸 전진하므로 성공은 갈림길 선택 후 L 스텝 뒤에만 관측됩니다.
    """
    length = spec.length
    num_states = 2 * length + 1
    transition = np.zeros((num_states, 2, num_states))
    transition[0, 1, 1] = 1.0
    transition[0, 0, length + 1] = 1.0
    for first in (1, length + 1):
        last = first + length - 1
        for s in range(first, last + 1):
            transition[s, :, min(s + 1, last)] = 1.0
    initial = np.zeros(num_states)
    initial[0] = 1.0
    success = np.zeros(num_states)
    success[length] = 1.0
    return TabularMDP(
        num_states=num_states,
        num_actions=2,
        transition=_apply_noise(transition, spec.noise),
        initial_dist=initial,
        success_prob=success,
    )


def cell_index(spec: EnvSpec, row: int, col: int) -> int:
    return row * spec.width + col


def _grid2d(spec: EnvSpec) -> TabularMDP:
    height, width = spec.height, spec.width
    num_states = height * width
    transition = np.zeros((num_states, len(GRID_MOVES), num_states))
    for row in range(height):
        for col in range(width):
            s = cell_index(spec, row, col)
            for a, (d_row, d_col) in enumerate(GRID_MOVES):
                # 벽에 부딪히면 제자리
                next_row = min(max(row + d_row, 0), height - 1)
                next_col = min(max(col + d_col, 0), width - 1)
                transition[s, a, cell_index(spec, next_row, next_col)] = 1.0

    start = spec.start if spec.start is not None else (height // 2, 0)
    initial = np.zeros(num_states)
    initial[cell_index(spec, *start)] = 1.0
    success = np.zeros(num_states)
    for region in spec.regions:
        for row, col in region:
            success[cell_index(spec, row, col)] = 1.0
    return TabularMDP(
        num_states=num_states,
        num_actions=len(GRID_MOVES),
        transition=_apply_noise(transition, spec.noise),
        initial_dist=initial,
        success_prob=success,
    )


def _random_dirichlet(spec: EnvSpec) -> TabularMDP:
    rng = np.random.default_rng(spec.seed)
    num_states, num_actions = spec.num_states, spec.num_actions
    transition = rng.dirichlet(np.full(num_states, spec.dirichlet_alpha), size=(num_states, num_actions))
    initial = rng.dirichlet(np.full(num_states, spec.dirichlet_alpha))
    success = rng.uniform(0.0, 1.0, size=num_states)
    # 행 합을 정확히 1로 맞춘다
    transition /= transition.sum(axis=2, keepdims=True)
    initial /= initial.sum()
    return TabularMDP(
        num_states=num_states,
        num_actions=num_actions,
        transition=_apply_noise(transition, spec.noise),
        initial_dist=initial,
        success_prob=success,
    )


def make_env(spec: EnvSpec) -> TabularMDP:
    """
    EnvSpec으로부터 TabularMDP 생성

    Args:
        spec: 환경 사양 (chain / grid2d / random_dirichlet / delayed_success)

    Returns:
        TabularMDP (결정적, 시드 고정)
    """
    builders = {
        EnvKind.CHAIN: _chain,
        EnvKind.GRID2D: _grid2d,
        EnvKind.RANDOM_DIRICHLET: _random_dirichlet,
        EnvKind.DELAYED_SUCCESS: _delayed_success,
    }
    try:
        mdp = builders[spec.kind](spec)
    except ValidationError as exc:
        raise as_invariant_violation(exc, "TabularMDP") from exc
    logger.info(f"✅ 환경 생성: {spec.kind.value}, states={mdp.num_states}, actions={mdp.num_actions}")
    return mdp


def corner_block(spec_height: int, spec_width: int, top: bool, size: int = 2) -> List[Tuple[int, int]]:
    """오른쪽 위/아래 모서리의 size×size 셀 목록"""
    rows = range(size) if top else range(spec_height - size, spec_height)
    cols = range(spec_width - size, spec_width)
    return [(r, c) for r in rows for c in cols]


def two_region_grid_spec(size: int = 11, noise: float = 0.0) -> EnvSpec:
    """
    두 성공 영역 내비게이션 격자

    시작점은 왼쪽 가운데에서 한 칸 위라서 오른쪽 위 영역이 엄격히 더 가깝습니다.
    """
    return EnvSpec(
        kind=EnvKind.GRID2D,
        width=size,
        height=size,
        start=(size // 2 - 1, 0),
        regions=[corner_block(size, size, top=True), corner_block(size, size, top=False)],
        noise=noise,
    )


def region_states(spec: EnvSpec) -> List[List[int]]:
    """영역별 상태 id"""
    return [[cell_index(spec, r, c) for r, c in region] for region in spec.regions]


def random_mdp_spec(seed: int, max_states: int = 10, max_actions: int = 4) -> EnvSpec:
    """시드로 크기까지 정해지는 random_dirichlet 사양 (검증 스위트용)"""
    rng = np.random.default_rng(seed)
    return EnvSpec(
        kind=EnvKind.RANDOM_DIRICHLET,
        num_states=int(rng.integers(2, max_states + 1)),
        num_actions=int(rng.integers(1, max_actions + 1)),
        seed=seed,
    )


# ============================================================================
# MDP JSON 입출력
# ============================================================================

def dumps_mdp(mdp: TabularMDP) -> str:
    """{num_states, num_actions, transition, initial_dist, success_prob} JSON (17자리 왕복 보장)"""
    return json.dumps(mdp.model_dump(mode="json"))


def save_mdp(mdp: TabularMDP, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_mdp(mdp) + "\n", encoding="utf-8")
    return path


def load_mdp(path: Path) -> TabularMDP:
    path = Path(path)
    if not path.exists():
        raise InvariantViolation("referenced files exist", str(path))
    try:
        return TabularMDP.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except ValidationError as exc:
        raise as_invariant_violation(exc, "TabularMDP") from exc
