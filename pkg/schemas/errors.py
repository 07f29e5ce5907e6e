"""실험실 공통 예외 정의"""
from typing import Optional

from pydantic import ValidationError


class RCELabError(Exception):
    """모든 실험실 예외의 기본 클래스"""


class InvariantViolation(RCELabError):
    """
    입력 또는 상태가 불변식을 위반했을 때 발생

    Args:
        invariant: 위반된 불변식 이름 (예: "gamma < 1")
        detail: 상세 설명
    """

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        message = f"불변식 위반 [{invariant}]"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class SupportMismatchError(RCELabError):
    """성공 예시 질량이 방문되지 않은 상태에 있을 때 발생"""

    def __init__(self, state: int, detail: str = ""):
        self.state = state
        super().__init__(f"상태 {state}: 성공 질량은 있지만 주변 분포가 0입니다. {detail}".strip())


class ConvergenceError(RCELabError):
    """반복 상한에 도달할 때까지 수렴하지 못했을 때 발생"""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{iterations}회 반복 후에도 수렴하지 못했습니다 (residual={residual:.3e})")


class MissingInputError(RCELabError):
    """필수 입력(파일/인자)이 빠졌을 때 발생"""

    def __init__(self, input_name: str):
        self.input_name = input_name
        super().__init__(f"필수 입력이 없습니다: {input_name}")


def as_invariant_violation(exc: ValidationError, model_name: Optional[str] = None) -> InvariantViolation:
    """pydantic 검증 오류를 이름 있는 불변식 위반으로 변환"""
    first = exc.errors()[0]
    message = str(first.get("msg", exc))
    # 모델 validator 메시지는 "Value error, <불변식>: <설명>" 형태
    message = message.removeprefix("Value error, ")
    invariant, _, detail = message.partition(": ")
    if model_name:
        detail = f"{model_name} {detail}".strip()
    return InvariantViolation(invariant, detail)


class UsageError(RCELabError):
    """명령 사용법 오류 (빈 스위트 선택 등)"""
