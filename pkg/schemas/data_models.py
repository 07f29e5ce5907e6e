"""통일된 데이터 스키마

모든 모듈이 공유하는 도메인 타입. numpy 배열은 `Array` 타입으로 감싸서
검증 시 float64 배열로 변환하고, JSON 직렬화 시 중첩 리스트로 내보냅니다.
"""
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)

# 허용 오차 (harness 설정으로 덮어쓸 수 있음)
STOCHASTIC_TOL = 1e-12
RESIDUAL_TOL = 1e-9


def _as_array(value: Any) -> np.ndarray:
    return np.array(value, dtype=np.float64)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


Array = Annotated[
    np.ndarray,
    BeforeValidator(_as_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list, when_used="json"),
]

IndexArray = Annotated[
    np.ndarray,
    BeforeValidator(lambda v: np.asarray(v, dtype=np.int64)),
    PlainSerializer(lambda a: a.tolist(), return_type=list, when_used="json"),
]


class FrozenModel(BaseModel):
    """생성 후 변경 불가능한 모델 (스레드 간 공유 가능)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def _check_stochastic(array: np.ndarray, axis: int, name: str) -> None:
    if np.any(~np.isfinite(array)) or np.any(array < 0):
        raise ValueError(f"{name} entries are nonnegative: 음수 또는 유한하지 않은 값이 있습니다")
    sums = array.sum(axis=axis)
    if np.any(np.abs(sums - 1.0) > STOCHASTIC_TOL):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise ValueError(f"{name} rows sum to 1: 최대 오차 {worst:.3e}")


# ============================================================================
# 1. 제어 마르코프 과정 (mdp_core)
# ============================================================================

class ControlledProcess(FrozenModel):
    """보상 없는 제어 마르코프 과정 - 학습 코드가 볼 수 있는 부분"""
    num_states: int = Field(..., gt=0, description="상태 개수")
    num_actions: int = Field(..., gt=0, description="행동 개수")
    transition: Array = Field(..., description="전이 텐서 P[s][a][s']")
    initial_dist: Array = Field(..., description="초기 상태 분포 p1[s]")

    @model_validator(mode="after")
    def _check_process(self):
        shape = (self.num_states, self.num_actions, self.num_states)
        if self.transition.shape != shape:
            raise ValueError(f"transition shape is (S, A, S): {self.transition.shape} != {shape}")
        if self.initial_dist.shape != (self.num_states,):
            raise ValueError(f"initial_dist shape is (S,): {self.initial_dist.shape}")
        _check_stochastic(self.transition, axis=2, name="transition")
        _check_stochastic(self.initial_dist, axis=0, name="initial_dist")
        _freeze(self.transition)
        _freeze(self.initial_dist)
        return self


class TabularMDP(ControlledProcess):
    """
    제어 마르코프 과정 + 정답 성공 확률

    success_prob는 오라클/환경 생성 코드에서만 읽습니다.
    학습 코드는 `dynamics()`로 잘라낸 ControlledProcess만 받습니다.
    """
    success_prob: Array = Field(..., description="정답 성공 확률 p(e=1|s)")

    @model_validator(mode="after")
    def _check_success(self):
        if self.success_prob.shape != (self.num_states,):
            raise ValueError(f"success_prob shape is (S,): {self.success_prob.shape}")
        if np.any(~np.isfinite(self.success_prob)) or np.any(self.success_prob < 0) or np.any(self.success_prob > 1):
            raise ValueError("success_prob entries lie in [0, 1]: 범위를 벗어난 값이 있습니다")
        _freeze(self.success_prob)
        return self

    def dynamics(self) -> ControlledProcess:
        """성공 확률을 제거한 동역학만 반환"""
        return ControlledProcess(
            num_states=self.num_states,
            num_actions=self.num_actions,
            transition=self.transition,
            initial_dist=self.initial_dist,
        )


class TaskSpec(FrozenModel):
    """할인율과 열거 오라클용 지평"""
    gamma: float = Field(..., ge=0.0, lt=1.0, description="할인율 γ")
    horizon_truncation: int = Field(default=60, gt=0, description="열거 오라클의 절단 지평 H")


class Policy(FrozenModel):
    """행 확률 행렬 π[s][a]"""
    probs: Array = Field(..., description="정책 확률 π(a|s)")

    @model_validator(mode="after")
    def _check_policy(self):
        if self.probs.ndim != 2:
            raise ValueError(f"policy is a matrix: ndim={self.probs.ndim}")
        _check_stochastic(self.probs, axis=1, name="policy")
        _freeze(self.probs)
        return self

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> "Policy":
        return cls(probs=np.full((num_states, num_actions), 1.0 / num_actions))

    @classmethod
    def deterministic(cls, actions: Any, num_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.shape[0], num_actions))
        probs[np.arange(actions.shape[0]), actions] = 1.0
        return cls(probs=probs)

    def greedy_actions(self) -> np.ndarray:
        return np.argmax(self.probs, axis=1)


class SuccessExampleSet(FrozenModel):
    """
    성공 예시 다중집합과 정규화된 분포 p_U(s|e=1), 사전확률 p(e=1)

    빈 집합은 dist가 모두 0인 경우로만 허용합니다 (SQIL 빈 보상 등).
    """
    examples: List[int] = Field(default_factory=list, description="성공 상태 id 다중집합")
    dist: Array = Field(..., description="p_U(s|e=1)")
    prior: float = Field(default=1.0, gt=0.0, le=1.0, description="p(e=1)")

    @model_validator(mode="after")
    def _check_examples(self):
        if self.dist.ndim != 1:
            raise ValueError("success dist is a vector: ndim != 1")
        if not self.examples:
            if np.any(self.dist != 0):
                raise ValueError("empty success set has zero dist: 예시 없이 질량이 있습니다")
        else:
            _check_stochastic(self.dist, axis=0, name="success dist")
            if min(self.examples) < 0 or max(self.examples) >= self.dist.shape[0]:
                raise ValueError(f"success examples are state ids: 0..{self.dist.shape[0] - 1} 범위를 벗어났습니다")
            present = np.zeros(self.dist.shape[0], dtype=bool)
            present[np.asarray(self.examples, dtype=int)] = True
            if np.any((self.dist > 0) & ~present):
                raise ValueError("success dist supported on examples: 예시에 없는 상태에 질량이 있습니다")
        _freeze(self.dist)
        return self

    @property
    def num_states(self) -> int:
        return self.dist.shape[0]

    @classmethod
    def from_examples(cls, examples: List[int], num_states: int, prior: float = 1.0) -> "SuccessExampleSet":
        """예시 목록으로부터 경험 빈도 분포를 만든다"""
        examples = [int(s) for s in examples]
        counts = np.bincount(np.asarray(examples, dtype=int), minlength=num_states).astype(np.float64)
        dist = counts / counts.sum() if examples else counts
        return cls(examples=examples, dist=dist, prior=prior)


class PosteriorEstimate(FrozenModel):
    """success_posterior 결과 - 클램프 여부를 함께 보고"""
    values: Array
    violated: bool = Field(default=False, description="클램프 전 값이 1+1e-9를 넘었는지")
    max_unclamped: float = 0.0


# ============================================================================
# 2. 오라클 (oracle)
# ============================================================================

class QTable(FrozenModel):
    """Q[s][a] 테이블"""
    values: Array

    @field_validator("values")
    @classmethod
    def _check_values(cls, values: np.ndarray) -> np.ndarray:
        if values.ndim != 2:
            raise ValueError("q table is a matrix: ndim != 2")
        return _freeze(values)


class Classifier(FrozenModel):
    """
    로짓으로 매개화된 분류기 C(s,a) = logistic(θ(s,a))

    비율 C/(1-C) = exp(θ)가 Q 함수 역할을 합니다. 비율이 정확히 0인
    항목은 θ = -inf로 표현하고, 정의되지 않은 항목은 NaN입니다.
    """
    logits: Array

    @field_validator("logits")
    @classmethod
    def _check_logits(cls, logits: np.ndarray) -> np.ndarray:
        if logits.ndim != 2:
            raise ValueError("classifier logits is a matrix: ndim != 2")
        if np.any(logits == np.inf):
            raise ValueError("classifier ratio is finite: +inf 로짓이 있습니다")
        return _freeze(logits)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.logits.shape

    def probs(self) -> np.ndarray:
        from scipy.special import expit
        return expit(self.logits)

    def ratios(self, clip: Optional[float] = None) -> np.ndarray:
        ratio = np.exp(self.logits)
        if clip is not None:
            ratio = np.minimum(ratio, clip)
        return ratio

    @classmethod
    def zeros(cls, num_states: int, num_actions: int) -> "Classifier":
        """C = 0.5 전체 초기화"""
        return cls(logits=np.zeros((num_states, num_actions)))

    @classmethod
    def from_ratio(cls, ratio: Any) -> "Classifier":
        with np.errstate(divide="ignore"):
            return cls(logits=np.log(np.asarray(ratio, dtype=np.float64)))

    @classmethod
    def from_probs(cls, probs: Any) -> "Classifier":
        from scipy.special import logit
        with np.errstate(divide="ignore"):
            return cls(logits=logit(np.asarray(probs, dtype=np.float64)))


class BayesOptimalClassifier(FrozenModel):
    """베이즈 최적 분류기와 정의되지 않은 (s,a) 목록"""
    classifier: Classifier
    undefined_pairs: List[Tuple[int, int]] = Field(default_factory=list)
    p_future_success: float = Field(..., description="데이터 주변분포 기준 p(e_{t+}=1)")


class ImprovementReport(FrozenModel):
    """정책 개선 검증 결과"""
    old: float
    new: float
    improved: bool


# ============================================================================
# 3. RCE (rce)
# ============================================================================

class TDTargets(FrozenModel):
    """다음 스텝 비율 w와 라벨 y = γw/(γw+1)"""
    w: Array
    y: Array

    @model_validator(mode="after")
    def _check_targets(self):
        if np.any(self.w < 0):
            raise ValueError("td target w >= 0: 음수 w가 있습니다")
        if np.any(self.y < 0) or np.any(self.y >= 1):
            raise ValueError("td label y in [0, 1): 범위를 벗어난 라벨이 있습니다")
        return self


class SuccessBatch(FrozenModel):
    """성공 예시 배치 (상태와 붙인 행동)"""
    states: IndexArray
    actions: IndexArray

    @property
    def size(self) -> int:
        return int(self.states.shape[0])


class TransitionBatch(FrozenModel):
    """
    리플레이에서 뽑은 전이 배치

    lookahead는 같은 궤적 안의 s_{t+n}, lookahead_valid가 False면 1-step 라벨로 대체합니다.
    """
    states: IndexArray
    actions: IndexArray
    next_states: IndexArray
    lookahead: Optional[IndexArray] = None
    lookahead_valid: Optional[IndexArray] = None

    @property
    def size(self) -> int:
        return int(self.states.shape[0])


class ActionSource(str, Enum):
    """성공 예시에 붙일 행동의 출처"""
    CURRENT_POLICY = "current_policy"
    BEHAVIOR_POLICY = "behavior_policy"


class PolicyMode(str, Enum):
    """학습 중 정책 추출 방식"""
    GREEDY = "greedy"
    SOFT = "soft"
    FIXED = "fixed"


class LearningRateSchedule(str, Enum):
    CONSTANT = "constant"
    ROBBINS_MONRO = "robbins_monro"


class TrainMode(str, Enum):
    EXPECTED = "expected"
    STOCHASTIC = "stochastic"


class TrainConfig(BaseModel):
    """RCE 학습 설정"""
    gamma: float = Field(default=0.99, ge=0.0, lt=1.0, description="할인율 γ")
    learning_rate: float = Field(default=0.1, ge=0.0, description="학습률 η")
    entropy_coeff: float = Field(default=1e-4, gt=0.0, description="soft 정책 온도 α")
    polyak: float = Field(default=0.005, gt=0.0, le=1.0, description="타깃 테이블 Polyak 계수 τ (1이면 타깃 없음)")
    n_step: int = Field(default=10, ge=1, description="n-step 라벨의 n (1이면 비활성)")
    success_batch_size: int = Field(default=256, ge=1, description="성공 예시 배치 크기")
    transition_batch_size: int = Field(default=256, ge=1, description="전이 배치 크기")
    max_iterations: int = Field(default=10000, ge=1, description="최대 반복 횟수")
    tolerance: float = Field(default=1e-10, gt=0.0, description="expected 모드 수렴 허용 오차")
    action_source: ActionSource = Field(default=ActionSource.CURRENT_POLICY, description="성공 예시 행동 출처")
    ratio_clip: float = Field(default=10.0, gt=0.0, description="타깃 안에서 쓰는 w의 상한 (prior 없는 모드에서는 1/prior 배)")
    policy_mode: PolicyMode = Field(default=PolicyMode.GREEDY, description="정책 추출 방식")
    lr_schedule: LearningRateSchedule = Field(default=LearningRateSchedule.CONSTANT, description="학습률 스케줄")
    lr_decay_steps: int = Field(default=1000, ge=1, description="Robbins-Monro 스케줄의 K")
    policy_update_every: int = Field(default=1, ge=1, description="정책 추출 주기")
    collect_every: int = Field(default=500, ge=1, description="online 모드 재수집 주기")
    collect_steps: int = Field(default=1510, ge=1, description="재수집 시 스텝 수")
    episode_len: int = Field(default=151, ge=1, description="에피소드 길이")
    metric_every: int = Field(default=1, ge=1, description="지표 기록 주기")
    use_prior: bool = Field(default=False, description="p(e=1)을 학습에 사용할지 여부")
    negatives_from_initial: bool = Field(default=False, description="초기 상태를 음성 예시로 사용")
    resample_successes_every: Optional[int] = Field(default=None, ge=1, description="성공 예시 재샘플링 주기")


class MetricRow(BaseModel):
    """반복별 학습 지표 (CSV 한 행)"""
    iteration: int
    objective: float
    bellman_residual: float
    policy_delta: float
    wallclock_ns: int


class TrainResult(BaseModel):
    """train 결과"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    classifier: Classifier
    policy: Policy
    metrics: List[MetricRow] = Field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    capped: bool = Field(default=False, description="반복 상한 도달 여부")
    best_iteration: int = Field(default=0, description="반환한 분류기/정책이 나온 반복")


# ============================================================================
# 4. 강건 제어 (robust)
# ============================================================================

class RobustReport(FrozenModel):
    """최악의 p_U와 강건 목적값 보고서"""
    worst_pU: Array
    robust_value: float
    hellinger_sq: float
    bhattacharyya: float
    prior: float
    support_mismatch: bool = Field(default=False, description="ρ=0 인데 p>0 인 상태가 있는지")
    raw_inner_value: float = Field(default=0.0, description="닫힌 해에서의 Σρp/q (정의되지 않으면 inf)")

    @model_validator(mode="after")
    def _check_identities(self):
        if abs(self.robust_value - self.bhattacharyya ** 2 * self.prior) > 1e-10:
            raise ValueError("robust_value = bhattacharyya^2 * prior: 항등식이 깨졌습니다")
        if abs(self.bhattacharyya - (1.0 - self.hellinger_sq / 2.0)) > 1e-10:
            raise ValueError("bhattacharyya = 1 - hellinger_sq / 2: 항등식이 깨졌습니다")
        return self


class InnerMinConfig(BaseModel):
    """내부 최소화 수치 오라클 설정"""
    method: Literal["exp_gradient", "grid"] = Field(default="exp_gradient", description="지수 경사 또는 격자 탐색")
    step_scale: float = Field(default=0.25, gt=0.0, le=0.5, description="지수 경사 스텝 (최대 기울기 대비)")
    max_iterations: int = Field(default=5000, ge=1)
    tolerance: float = Field(default=1e-12, gt=0.0, description="정상성 허용 오차")
    grid_resolution: int = Field(default=1000, ge=2, description="격자 모드 해상도")


class InnerMinResult(FrozenModel):
    pU_hat: Array
    value: float
    robust_value: float = Field(default=0.0, description="value · p(e=1)")
    iterations: int = 0


class FixedPointReport(BaseModel):
    """반복 RCE 고정점 진단: ρ(s)/p(s)가 성공 지지집합에서 상수인지"""
    max_ratio_deviation: float
    median_ratio: float
    tolerance: float = 0.05
    reached: bool = False


class IteratedRCEResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    policies: List[Policy] = Field(default_factory=list)
    occupancies: List[Array] = Field(default_factory=list)
    reports: List[FixedPointReport] = Field(default_factory=list)
    fixed_point_report: Optional[FixedPointReport] = None


# ============================================================================
# 5. 베이스라인 (baselines)
# ============================================================================

class RewardModel(FrozenModel):
    """상태 보상 벡터와 출처"""
    reward: Array
    provenance: Literal["sqil", "vice_ratio", "density"]

    @model_validator(mode="after")
    def _check_reward(self):
        if np.any(~np.isfinite(self.reward)):
            raise ValueError("reward entries are finite: 유한하지 않은 보상이 있습니다")
        if self.provenance == "sqil" and not np.all(np.isin(self.reward, (0.0, 1.0))):
            raise ValueError("sqil rewards in {0, 1}: 0/1 이외의 값이 있습니다")
        _freeze(self.reward)
        return self


class BaselineSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    q_table: QTable
    policy: Policy
    reward_model: RewardModel


# ============================================================================
# 6. 환경 및 데이터 (envs_data)
# ============================================================================

class EnvKind(str, Enum):
    GRID2D = "grid2d"
    CHAIN = "chain"
    RANDOM_DIRICHLET = "random_dirichlet"
    DELAYED_SUCCESS = "delayed_success"


Cell = Tuple[int, int]


class EnvSpec(BaseModel):
    """환경 생성 사양"""
    kind: EnvKind = Field(default=EnvKind.CHAIN, description="환경 종류")
    length: int = Field(default=2, ge=1, description="chain 길이 / delayed_success 복도 길이")
    chain_actions: int = Field(default=1, ge=1, le=2, description="chain 행동 수 (1: 전진만, 2: 전진/후진)")
    success_states: Optional[List[int]] = Field(default=None, description="chain 성공 상태 (기본: 마지막 상태)")
    width: int = Field(default=5, ge=1, description="grid 너비")
    height: int = Field(default=5, ge=1, description="grid 높이")
    regions: List[List[Cell]] = Field(default_factory=list, description="grid 성공 영역 (셀 목록의 목록)")
    start: Optional[Cell] = Field(default=None, description="grid 시작 셀 (기본: 중앙 왼쪽)")
    num_states: int = Field(default=5, ge=1, description="random_dirichlet 상태 수")
    num_actions: int = Field(default=2, ge=1, description="random_dirichlet 행동 수")
    dirichlet_alpha: float = Field(default=1.0, gt=0.0, description="Dirichlet 집중도")
    noise: float = Field(default=0.0, ge=0.0, le=1.0, description="미끄러짐 확률")
    seed: int = Field(default=0, description="생성 시드")

    @model_validator(mode="after")
    def _check_cells(self):
        if self.kind == EnvKind.GRID2D:
            cells = [c for region in self.regions for c in region]
            if self.start is not None:
                cells.append(self.start)
            for row, col in cells:
                if not (0 <= row < self.height and 0 <= col < self.width):
                    raise ValueError(f"grid cells inside the grid: ({row}, {col})")
        if self.kind == EnvKind.CHAIN and self.success_states:
            if any(not 0 <= s < self.length for s in self.success_states):
                raise ValueError("chain success states inside the chain: 범위를 벗어났습니다")
        return self


class Trajectory(BaseModel):
    """상태/행동 시퀀스 (states는 마지막 상태를 포함해 actions보다 하나 길다)"""
    states: List[int]
    actions: List[int]

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("trajectory states = actions + 1: 길이가 맞지 않습니다")
        if min(self.states) < 0 or (self.actions and min(self.actions) < 0):
            raise ValueError("trajectory ids are non-negative: 음수 id가 있습니다")
        return self


class TransitionDataset(BaseModel):
    """
    궤적 모음과 경험적 주변분포

    평탄화된 전이 (s, a, s')와 카운트는 궤적에서 파생됩니다.
    """
    num_states: int = Field(..., gt=0)
    num_actions: int = Field(..., gt=0)
    trajectories: List[Trajectory] = Field(default_factory=list)
    seed: Optional[int] = None
    env_spec: Optional[EnvSpec] = None

    @model_validator(mode="after")
    def _check_ids(self):
        for index, traj in enumerate(self.trajectories):
            if max(traj.states) >= self.num_states:
                raise ValueError(f"dataset states < num_states: 궤적 {index}에 상태 {max(traj.states)}")
            if traj.actions and max(traj.actions) >= self.num_actions:
                raise ValueError(f"dataset actions < num_actions: 궤적 {index}에 행동 {max(traj.actions)}")
        return self

    @property
    def num_transitions(self) -> int:
        return sum(len(t.actions) for t in self.trajectories)

    def flat(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(s, a, s') 배열"""
        if not self.trajectories:
            empty = np.zeros(0, dtype=int)
            return empty, empty, empty
        states = np.concatenate([np.asarray(t.states[:-1], dtype=int) for t in self.trajectories])
        actions = np.concatenate([np.asarray(t.actions, dtype=int) for t in self.trajectories])
        next_states = np.concatenate([np.asarray(t.states[1:], dtype=int) for t in self.trajectories])
        return states, actions, next_states

    def lookahead_states(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        각 전이 t에 대해 s_{t+n}과 유효 여부 (같은 궤적 안에 있을 때만)

        Args:
            n: 앞을 볼 스텝 수 (n=1이면 s')

        Returns:
            (상태 배열, 유효 마스크)
        """
        looked, valid = [], []
        for traj in self.trajectories:
            states = np.asarray(traj.states, dtype=int)
            length = len(traj.actions)
            idx = np.arange(length) + n
            ok = idx <= length
            looked.append(np.where(ok, states[np.minimum(idx, length)], 0))
            valid.append(ok)
        if not looked:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=bool)
        return np.concatenate(looked), np.concatenate(valid)

    def transition_counts(self) -> np.ndarray:
        """카운트 N[s][a][s']"""
        s, a, s_next = self.flat()
        counts = np.zeros((self.num_states, self.num_actions, self.num_states))
        np.add.at(counts, (s, a, s_next), 1.0)
        return counts

    def state_action_marginal(self) -> np.ndarray:
        """경험적 p(s,a)"""
        counts = self.transition_counts().sum(axis=2)
        total = counts.sum()
        return counts / total if total > 0 else counts

    def state_marginal(self) -> np.ndarray:
        """경험적 p(s)"""
        return self.state_action_marginal().sum(axis=1)

    def behavior_policy(self) -> Policy:
        """경험적 p(a|s) - 방문하지 않은 상태는 균등"""
        counts = self.transition_counts().sum(axis=2)
        totals = counts.sum(axis=1, keepdims=True)
        uniform = np.full_like(counts, 1.0 / self.num_actions)
        probs = np.where(totals > 0, counts / np.maximum(totals, 1.0), uniform)
        return Policy(probs=probs)

    def merge(self, other: "TransitionDataset") -> "TransitionDataset":
        """리플레이 버퍼 D ∪ τ"""
        return self.model_copy(update={"trajectories": self.trajectories + other.trajectories})


# ============================================================================
# 7. 하네스 (harness)
# ============================================================================

class Method(str, Enum):
    RCE_EXPECTED = "rce_expected"
    RCE_STOCHASTIC = "rce_stochastic"
    SQIL = "sqil"
    VICE = "vice"
    VICE_ITERATIVE = "vice_iterative"
    DENSITY = "density"
    ROBUST_ITERATED = "robust_iterated"


class DataConfig(BaseModel):
    """데이터 수집 설정"""
    num_steps: int = Field(default=20000, ge=1, description="행동 정책으로 수집할 스텝 수")
    episode_len: int = Field(default=151, ge=1, description="에피소드 길이")
    num_successes: int = Field(default=200, ge=1, description="성공 예시 개수")
    behavior: Literal["uniform"] = Field(default="uniform", description="행동 정책")


class ExperimentConfig(BaseModel):
    """실험 설정 (flat `section.key = value` 파일에서 로드)"""
    method: Method = Field(default=Method.RCE_EXPECTED)
    seeds: List[int] = Field(default_factory=lambda: [0])
    output_dir: Path = Field(default=Path("runs"))
    metric_every: int = Field(default=1, ge=1)
    outer_iters: int = Field(default=10, ge=1, description="반복 RCE / 반복 VICE 외부 반복 수")
    max_workers: int = Field(default=1, ge=1, description="시드 병렬 실행 워커 수")
    env: EnvSpec = Field(default_factory=EnvSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    env_file: Optional[Path] = None
    successes_file: Optional[Path] = None
    dataset_file: Optional[Path] = None

    @field_validator("seeds", mode="before")
    @classmethod
    def _parse_seeds(cls, value: Any) -> Any:
        if isinstance(value, int):
            return [value]
        if isinstance(value, str):
            return parse_seed_list(value)
        return value

    @model_validator(mode="after")
    def _check_files(self):
        if not self.seeds:
            raise ValueError("seeds nonempty: 시드 목록이 비어 있습니다")
        for name in ("env_file", "successes_file", "dataset_file"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"referenced files exist: {name}={path}")
        return self


def parse_seed_list(text: str) -> List[int]:
    """'0..99' 또는 '0,1,2' 형식의 시드 목록 파싱"""
    text = text.strip()
    if not text:
        return []
    if ".." in text:
        start, end = text.split("..", 1)
        return list(range(int(start), int(end) + 1))
    return [int(part) for part in text.split(",") if part.strip()]


class SeedResult(BaseModel):
    """시드 하나의 실행 결과 - 목적값은 항상 오라클 평가값"""
    method: Method
    seed: int
    objective: float = Field(..., description="학습 정책의 control_objective")
    optimal_objective: float = Field(..., description="가치 반복으로 구한 최적 목적값")
    iterations: int = 0
    converged: bool = True
    extra: Dict[str, float] = Field(default_factory=dict)


class ExperimentSummary(BaseModel):
    run_id: str
    run_dir: Path
    results: List[SeedResult] = Field(default_factory=list)

    @property
    def mean_objective(self) -> float:
        return float(np.mean([r.objective for r in self.results])) if self.results else float("nan")


class SuiteResult(BaseModel):
    """검증 스위트 결과"""
    suite: str
    cases: int = 0
    failures: int = 0
    max_residual: float = 0.0
    violations: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.cases > 0


class VerifyReport(BaseModel):
    suites: List[SuiteResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)


class CommandResponse(BaseModel):
    """모든 CLI 하위 명령의 표준 응답"""
    success: bool
    command: str
    data: Dict[str, Any] = Field(default_factory=dict)
    message: str = ""
    error: Optional[str] = None


class RunStatus(str, Enum):
    """실행 상태"""
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"
