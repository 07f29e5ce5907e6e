"""
실행 상태 관리 시스템
"""
import hashlib
import json
import shutil
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from schemas.data_models import ExperimentConfig, RunStatus


def run_id_for(cfg: ExperimentConfig) -> str:
    """설정에서 결정적으로 유도한 실행 ID (같은 설정이면 같은 디렉토리)"""
    payload = cfg.model_dump_json(exclude={"output_dir"})
    return f"{cfg.method.value}-{hashlib.sha256(payload.encode('utf-8')).hexdigest()[:12]}"


class RunManager:
    """실행 상태를 JSON 파일로 관리"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.output_dir / run_id

    def _status_file(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "status.json"

    def create_run(self, cfg: ExperimentConfig) -> str:
        """
        새 실행 생성

        Args:
            cfg: 실험 설정

        Returns:
            생성된 실행 ID
        """
        run_id = run_id_for(cfg)
        self.run_dir(run_id).mkdir(parents=True, exist_ok=True)

        run_data = {
            "run_id": run_id,
            "status": RunStatus.PENDING.value,
            "progress": 0,
            "message": "실행이 생성되었습니다.",
            "created_at": datetime.now().isoformat(),
            "updated_at": datetime.now().isoformat(),
            "completed_at": None,
            "error": None,
            "metadata": {
                "method": cfg.method.value,
                "seeds": cfg.seeds,
            },
        }
        self._write(run_id, run_data)
        # 출력 위치는 실행 ID와 마찬가지로 설정 내용에서 제외
        config_json = cfg.model_dump_json(indent=2, exclude={"output_dir"})
        (self.run_dir(run_id) / "config.json").write_text(config_json + "\n", encoding="utf-8")
        return run_id

    def get_status(self, run_id: str) -> Optional[Dict[str, Any]]:
        status_file = self._status_file(run_id)
        if not status_file.exists():
            return None
        with open(status_file, "r", encoding="utf-8") as f:
            return json.load(f)

    def update_status(
        self,
        run_id: str,
        status: Optional[RunStatus] = None,
        progress: Optional[int] = None,
        message: Optional[str] = None,
        error: Optional[str] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> bool:
        """
        실행 상태 업데이트

        Returns:
            업데이트 성공 여부
        """
        run_data = self.get_status(run_id)
        if run_data is None:
            return False

        if status is not None:
            run_data["status"] = status.value
        if progress is not None:
            run_data["progress"] = progress
        if message is not None:
            run_data["message"] = message
        if error is not None:
            run_data["error"] = error
        if metadata is not None:
            run_data["metadata"].update(metadata)

        run_data["updated_at"] = datetime.now().isoformat()
        if status in (RunStatus.COMPLETED, RunStatus.FAILED):
            run_data["completed_at"] = datetime.now().isoformat()

        self._write(run_id, run_data)
        return True

    def delete_run(self, run_id: str) -> bool:
        run_dir = self.run_dir(run_id)
        if not run_dir.exists():
            return False
        shutil.rmtree(run_dir)
        return True

    def _write(self, run_id: str, run_data: Dict[str, Any]) -> None:
        with open(self._status_file(run_id), "w", encoding="utf-8") as f:
            json.dump(run_data, f, ensure_ascii=False, indent=2)
