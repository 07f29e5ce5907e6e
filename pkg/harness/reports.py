"""CSV / JSON 리포트 작성

모든 CSV는 `# schema=1` 줄로 시작합니다.
"""
import csv
import io
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from schemas.data_models import EnvSpec, MetricRow, SeedResult
from schemas.errors import InvariantViolation

logger = logging.getLogger(__name__)

SCHEMA_LINE = "# schema=1"
METRIC_COLUMNS = ["iteration", "objective", "bellman_residual", "policy_delta", "wallclock_ns"]
SWEEP_COLUMNS = ["axis", "axis_value", "seed", "objective"]
HEATMAP_COLUMNS = ["x", "y", "mass"]
SUMMARY_COLUMNS = ["method", "seed", "objective", "optimal_objective", "iterations", "converged"]

# 실행마다 달라지는 산출물: 상태 파일(타임스탬프)과 벽시계 컬럼
VOLATILE_FILES = ("status.json",)
VOLATILE_COLUMNS = ("wallclock_ns",)


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    buffer.write(SCHEMA_LINE + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format(v) for v in row])
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    """(컬럼, 행) - 스키마 줄이 없으면 오류"""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != SCHEMA_LINE:
        raise InvariantViolation("csv starts with schema line", str(path))
    rows = list(csv.reader(lines[1:]))
    return rows[0], rows[1:]


def write_metrics_csv(path: Path, metrics: List[MetricRow]) -> Path:
    return write_csv(path, METRIC_COLUMNS, ([getattr(m, c) for c in METRIC_COLUMNS] for m in metrics))


def write_heatmap_csv(path: Path, occupancy: np.ndarray, spec: EnvSpec) -> Path:
    """grid 점유 분포 (x=열, y=행)"""
    rows = []
    for s, mass in enumerate(np.asarray(occupancy)):
        y, x = divmod(s, spec.width)
        rows.append((x, y, float(mass)))
    return write_csv(path, HEATMAP_COLUMNS, rows)


def write_json(path: Path, model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def write_summary(run_dir: Path, results: List[SeedResult]) -> Path:
    """시드 결과를 summary.csv / summary.json으로 저장 (단일 작성자)"""
    run_dir = Path(run_dir)
    rows = [[getattr(r, c).value if c == "method" else getattr(r, c) for c in SUMMARY_COLUMNS] for r in results]
    write_csv(run_dir / "summary.csv", SUMMARY_COLUMNS, rows)
    payload = [r.model_dump(mode="json") for r in results]
    (run_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return run_dir / "summary.csv"


def build_report(runs_dir: Path, output: Path) -> Path:
    """
    실행 디렉토리들의 summary.csv를 모아 하나의 리포트로 작성

    목적값은 각 실행이 오라클로 평가해 기록한 값만 옮깁니다.
    """
    runs_dir = Path(runs_dir)
    rows = []
    for summary in sorted(runs_dir.glob("*/summary.csv")):
        columns, body = read_csv(summary)
        for row in body:
            record = dict(zip(columns, row))
            rows.append([summary.parent.name] + [record[c] for c in SUMMARY_COLUMNS])
    logger.info(f"📊 리포트 작성: {len(rows)}개 행")
    return write_csv(output, ["run_id"] + SUMMARY_COLUMNS, rows)


def run_fingerprint(run_dir: Path) -> Dict[str, str]:
    """
    실행 디렉토리의 결정적 산출물 {상대 경로: 내용}

    status.json은 빼고, CSV의 벽시계 컬럼은 지운 뒤 비교용 텍스트로 만듭니다.
    같은 (설정, 시드)의 두 실행은 같은 지문을 가져야 합니다.
    """
    run_dir = Path(run_dir)
    fingerprint: Dict[str, str] = {}
    for path in sorted(p for p in run_dir.rglob("*") if p.is_file()):
        if path.name in VOLATILE_FILES:
            continue
        key = path.relative_to(run_dir).as_posix()
        if path.suffix != ".csv":
            fingerprint[key] = path.read_text(encoding="utf-8")
            continue
        columns, rows = read_csv(path)
        keep = [i for i, c in enumerate(columns) if c not in VOLATILE_COLUMNS]
        lines = [",".join(columns[i] for i in keep)] + [",".join(row[i] for i in keep) for row in rows]
        fingerprint[key] = "\n".join(lines)
    return fingerprint
