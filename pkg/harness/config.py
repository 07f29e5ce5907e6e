"""
실험실 설정 관리
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError

from schemas import data_models
from schemas.data_models import ExperimentConfig, parse_seed_list
from schemas.errors import InvariantViolation, MissingInputError, as_invariant_violation

# 환경 변수 로드
load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = Path(os.getenv("RCE_LAB_OUTPUT_DIR", "runs"))
LOG_LEVEL = os.getenv("RCE_LAB_LOG_LEVEL", "INFO")

# 허용 오차
STOCHASTICITY_TOL = float(os.getenv("RCE_LAB_STOCHASTICITY_TOL", "1e-12"))
RESIDUAL_TOL = float(os.getenv("RCE_LAB_RESIDUAL_TOL", "1e-9"))

# 설정 파일의 섹션 → ExperimentConfig 필드
SECTIONS = ("experiment", "env", "train", "data", "tolerances")


def setup_logging(level: Optional[str] = None) -> None:
    """루트 로거 설정 (CLI 진입점에서 한 번 호출)"""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def apply_tolerances(stochasticity: Optional[float] = None, residual: Optional[float] = None) -> None:
    """스키마 검사와 검증 스위트가 쓰는 전역 허용 오차 설정"""
    data_models.STOCHASTIC_TOL = STOCHASTICITY_TOL if stochasticity is None else stochasticity
    data_models.RESIDUAL_TOL = RESIDUAL_TOL if residual is None else residual


def env_seed_override() -> Optional[int]:
    """RCE_LAB_SEED가 있으면 단일 시드로 덮어쓴다"""
    value = os.getenv("RCE_LAB_SEED")
    return int(value) if value not in (None, "") else None


def _decode(value: Optional[str]) -> Any:
    if value is None:
        return None
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def parse_flat_config(path: Path) -> Dict[str, Any]:
    """
    `section.key = value` 형식의 설정 파일을 중첩 딕셔너리로 파싱

    Args:
        path: 설정 파일 경로

    Returns:
        {"experiment": {...}, "env": {...}, ...}
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))

    nested: Dict[str, Dict[str, Any]] = {}
    for key, raw in dotenv_values(path).items():
        section, _, name = key.strip().partition(".")
        if section not in SECTIONS or not name:
            raise InvariantViolation("config keys use known sections", key)
        nested.setdefault(section, {})[name] = _decode(raw)
    return nested


def build_experiment_config(nested: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """섹션 딕셔너리 → ExperimentConfig (RCE_LAB_SEED, RCE_LAB_OUTPUT_DIR 반영)"""
    payload: Dict[str, Any] = dict(nested.get("experiment", {}))
    for section in ("env", "train", "data"):
        if section in nested:
            payload[section] = nested[section]
    payload.setdefault("output_dir", str(OUTPUT_DIR))
    if isinstance(payload.get("seeds"), (int, float)):
        payload["seeds"] = [int(payload["seeds"])]
    elif isinstance(payload.get("seeds"), str):
        payload["seeds"] = parse_seed_list(payload["seeds"])
    payload.update(overrides or {})

    seed = env_seed_override()
    if seed is not None:
        payload["seeds"] = [seed]

    tolerances = nested.get("tolerances", {})
    apply_tolerances(tolerances.get("stochasticity"), tolerances.get("residual"))

    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise as_invariant_violation(exc, "ExperimentConfig") from exc


def load_experiment_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    return build_experiment_config(parse_flat_config(path), overrides)
