"""절제(ablation) 스윕

축 하나의 값마다 설정을 바꿔 시드별 최종 목적값(오라클 평가)을 모아
(axis, axis_value, seed, objective) CSV로 기록합니다.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from harness.experiments import run_seed
from harness.reports import SWEEP_COLUMNS, write_csv
from schemas.data_models import ExperimentConfig
from schemas.errors import UsageError

logger = logging.getLogger(__name__)

# 축 이름 → (설정 섹션, 필드)
AXES: Dict[str, tuple] = {
    "n_step": ("train", "n_step"),
    "num_successes": ("data", "num_successes"),
    "action_source": ("train", "action_source"),
    "gamma": ("train", "gamma"),
}

DEFAULT_VALUES: Dict[str, List[Any]] = {
    "n_step": [1, 10],
    "num_successes": [1, 20, 100, 200],
    "action_source": ["current_policy", "behavior_policy"],
    "gamma": [0.5, 0.9, 0.99],
}


def config_for(cfg: ExperimentConfig, axis: str, value: Any) -> ExperimentConfig:
    section, field = AXES[axis]
    updated = getattr(cfg, section).model_validate({**getattr(cfg, section).model_dump(), field: value})
    return cfg.model_copy(update={section: updated})


def run_sweep(
    cfg: ExperimentConfig,
    axis: str,
    values: Optional[Sequence[Any]] = None,
    output: Optional[Path] = None,
) -> List[List[Any]]:
    """
    축 하나에 대한 스윕 실행

    Args:
        cfg: 기준 실험 설정 (method, seeds 포함)
        axis: n_step / num_successes / action_source / gamma
        values: 축 값 목록 (None이면 기본값, 빈 목록이면 헤더만 기록)
        output: CSV 경로

    Returns:
        [axis, axis_value, seed, objective] 행 목록
    """
    if axis not in AXES:
        raise UsageError(f"알 수 없는 축: {axis}")
    values = DEFAULT_VALUES[axis] if values is None else list(values)

    rows: List[List[Any]] = []
    for value in values:
        cell_cfg = config_for(cfg, axis, value)
        objectives = []
        for seed in cell_cfg.seeds:
            result = run_seed(cell_cfg, seed)
            rows.append([axis, value, seed, result.objective])
            objectives.append(result.objective)
        logger.info(f"📈 {axis}={value}: mean objective={np.mean(objectives):.6f}")

    if output is not None:
        write_csv(output, SWEEP_COLUMNS, rows)
    return rows


def mean_by_value(rows: List[List[Any]]) -> Dict[Any, float]:
    """축 값별 시드 평균 목적값"""
    grouped: Dict[Any, List[float]] = {}
    for _, value, _, objective in rows:
        grouped.setdefault(value, []).append(objective)
    return {value: float(np.mean(objs)) for value, objs in grouped.items()}
