"""강건 예시 기반 제어

사용자 방문 분포 p_U(s)를 모를 때의 max-min 문제:
최악의 p_U는 √(ρ·p)에 비례하고, 강건 목적값은 (Σ√(ρp))²·p(e=1) 입니다.
"""
import logging
from typing import Optional

import numpy as np

from schemas.data_models import (
    FixedPointReport,
    InnerMinConfig,
    InnerMinResult,
    IteratedRCEResult,
    RobustReport,
    SuccessExampleSet,
    TabularMDP,
    TrainConfig,
)
from schemas.errors import InvariantViolation

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 0.05
GRID_MAX_SUPPORT = 3


def _probability_vector(values, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or np.any(values < 0) or abs(values.sum() - 1.0) > 1e-9:
        raise InvariantViolation(f"{name} is a probability vector")
    return values


# ============================================================================
# 1. 닫힌 해
# ============================================================================

def bhattacharyya(p, q) -> float:
    """Σ√(p·q)"""
    return float(np.sum(np.sqrt(np.asarray(p) * np.asarray(q))))


def hellinger_sq(p, q) -> float:
    """Σ(√p - √q)² ∈ [0, 2]"""
    p = _probability_vector(p, "p")
    q = _probability_vector(q, "q")
    return float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def worst_case_pU(occupancy, success_dist) -> np.ndarray:
    """
    최악의 사용자 방문 분포 p_U(s) ∝ √(ρ(s)·p(s))

    Args:
        occupancy: 정책의 할인 점유 분포 ρ
        success_dist: 성공 예시 분포 p(s|e=1)

    Returns:
        정규화된 벡터 (지지집합은 두 지지집합의 교집합)
    """
    rho = _probability_vector(occupancy, "occupancy")
    p = _probability_vector(success_dist, "success dist")
    root = np.sqrt(rho * p)
    total = root.sum()
    if total <= 0:
        raise InvariantViolation("supports intersect", "ρ와 p의 지지집합이 겹치지 않습니다")
    return root / total


def robust_objective(occupancy, success_dist, prior: float) -> float:
    """(Σ√(ρp))² · p(e=1)"""
    rho = _probability_vector(occupancy, "occupancy")
    p = _probability_vector(success_dist, "success dist")
    return bhattacharyya(rho, p) ** 2 * prior


def robust_report(occupancy, success_dist, prior: float) -> RobustReport:
    """
    닫힌 해 보고서 - 지지집합 불일치(ρ=0, p>0)를 플래그로 남긴다

    raw_inner_value는 최소점에서의 Σ_{p>0} ρp/q 이고, 불일치가 있으면 inf 입니다.
    """
    rho = _probability_vector(occupancy, "occupancy")
    p = _probability_vector(success_dist, "success dist")
    coefficient = bhattacharyya(rho, p)
    mismatch = bool(np.any((rho <= 0) & (p > 0)))
    if mismatch:
        logger.warning("⚠️ 점유 분포가 0인 상태에 성공 질량이 있습니다 (내부 최소화 무한대)")
        raw = float("inf")
        worst = worst_case_pU(rho, p) if coefficient > 0 else np.zeros_like(p)
    else:
        worst = worst_case_pU(rho, p)
        support = p > 0
        raw = float(np.sum(rho[support] * p[support] / worst[support]))
    return RobustReport(
        worst_pU=worst,
        robust_value=coefficient ** 2 * prior,
        hellinger_sq=2.0 * (1.0 - coefficient),
        bhattacharyya=coefficient,
        prior=prior,
        support_mismatch=mismatch,
        raw_inner_value=raw,
    )


# ============================================================================
# 2. 수치 내부 최소화 오라클
# ============================================================================

def _inner_value(c: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(c / q))


def _exp_gradient(c: np.ndarray, config: InnerMinConfig) -> tuple:
    """단체 위에서 Σc/q 최소화: q ← q·exp(η c/q²) 후 정규화"""
    q = np.full(c.shape[0], 1.0 / c.shape[0])
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        gradient = c / q ** 2
        spread = gradient.max() / gradient.min() - 1.0
        if spread < config.tolerance:
            break
        step = config.step_scale / gradient.max()
        q = q * np.exp(step * gradient)
        q /= q.sum()
    return q, iterations


def _grid_search(c: np.ndarray, config: InnerMinConfig) -> np.ndarray:
    ticks = np.arange(1, config.grid_resolution) / config.grid_resolution
    if c.shape[0] == 1:
        return np.ones(1)
    if c.shape[0] == 2:
        candidates = np.stack([ticks, 1.0 - ticks], axis=1)
    else:
        first, second = np.meshgrid(ticks, ticks, indexing="ij")
        first, second = first.ravel(), second.ravel()
        keep = first + second < 1.0 - 0.5 / config.grid_resolution
        candidates = np.stack([first[keep], second[keep], 1.0 - first[keep] - second[keep]], axis=1)
    values = (c[None, :] / candidates).sum(axis=1)
    return candidates[int(np.argmin(values))]


def numeric_inner_min(
    occupancy,
    success_dist,
    prior: float,
    config: Optional[InnerMinConfig] = None,
) -> InnerMinResult:
    """
    Σ_s ρ(s)p(s)/p_U(s) 를 단체 위에서 수치적으로 최소화

    ρp > 0 인 상태만 변수로 두고 나머지 좌표는 0으로 둡니다.
    """
    config = config or InnerMinConfig()
    rho = _probability_vector(occupancy, "occupancy")
    p = _probability_vector(success_dist, "success dist")
    c = rho * p
    support = c > 0
    if not np.any(support):
        raise InvariantViolation("supports intersect", "ρ·p가 모두 0입니다")

    if config.method == "grid":
        if support.sum() > GRID_MAX_SUPPORT:
            raise InvariantViolation("grid mode needs at most 3 support states", f"{int(support.sum())}")
        q_support, iterations = _grid_search(c[support], config), 0
    else:
        q_support, iterations = _exp_gradient(c[support], config)

    q = np.zeros_like(c)
    q[support] = q_support
    value = _inner_value(c[support], q_support)
    logger.debug(f"🔍 내부 최소화 ({config.method}): value={value:.6f}, iterations={iterations}")
    return InnerMinResult(pU_hat=q, value=value, robust_value=value * prior, iterations=iterations)


# ============================================================================
# 3. 반복 RCE 고정점 진단
# ============================================================================

def fixed_point_report(occupancy, success_dist, tolerance: float = FIXED_POINT_TOL) -> FixedPointReport:
    """
    성공 지지집합에서 ρ(s)/p(s)가 상수인지 검사

    ρ는 지지집합으로 제한해 재정규화한 뒤 비교합니다.
    """
    rho = np.asarray(occupancy, dtype=np.float64)
    p = np.asarray(success_dist, dtype=np.float64)
    support = p > 0
    mass = rho[support].sum()
    if mass <= 0:
        return FixedPointReport(
            max_ratio_deviation=float("inf"), median_ratio=0.0, tolerance=tolerance, reached=False
        )
    ratios = (rho[support] / mass) / p[support]
    median = float(np.median(ratios))
    deviation = float(np.max(np.abs(ratios - median)))
    return FixedPointReport(
        max_ratio_deviation=deviation,
        median_ratio=median,
        tolerance=tolerance,
        reached=deviation < tolerance,
    )


def iterated_rce(
    env: TabularMDP,
    successes: SuccessExampleSet,
    cfg: TrainConfig,
    outer_iters: int,
    initial_data=None,
    num_steps: int = 20000,
    episode_len: int = 151,
    seed: int = 0,
) -> IteratedRCEResult:
    """
    π ← RCE(S*, D), D ← D ∪ {τ ~ π} 를 outer_iters번 번갈아 실행

    실제 루프는 LangGraph 워크플로우(agents.langgraph_workflow)가 돌립니다.
    """
    from agents.langgraph_workflow import IteratedRCEWorkflow

    workflow = IteratedRCEWorkflow()
    return workflow.run(
        env=env,
        successes=successes,
        cfg=cfg,
        outer_iters=outer_iters,
        initial_data=initial_data,
        num_steps=num_steps,
        episode_len=episode_len,
        seed=seed,
    )
