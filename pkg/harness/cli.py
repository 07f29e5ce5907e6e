"""명령줄 인터페이스

하위 명령: gen-env, collect, train, oracle-eval, robust-eval, iterate, verify, report, sweep
종료 코드: 0 성공, 1 검증 실패, 2 사용법 오류, 3 입력 불변식 위반
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional

from pydantic import ValidationError

from schemas.data_models import (
    CommandResponse,
    EnvKind,
    EnvSpec,
    ExperimentConfig,
    Method,
    Policy,
    TrainConfig,
    parse_seed_list,
)
from schemas.errors import (
    InvariantViolation,
    MissingInputError,
    RCELabError,
    SupportMismatchError,
    UsageError,
    as_invariant_violation,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3


# ============================================================================
# 1. 하위 명령 구현
# ============================================================================

def _load_policy(path: Optional[str], num_states: int, num_actions: int) -> Policy:
    if path is None:
        return Policy.uniform(num_states, num_actions)
    file = Path(path)
    if not file.exists():
        raise InvariantViolation("referenced files exist", path)
    return Policy.model_validate(json.loads(file.read_text(encoding="utf-8")))


def cmd_gen_env(args) -> CommandResponse:
    from envs.generators import make_env, save_mdp, two_region_grid_spec

    if args.two_region:
        spec = two_region_grid_spec(noise=args.noise)
    else:
        spec = EnvSpec(
            kind=EnvKind(args.kind),
            length=args.len,
            chain_actions=args.chain_actions,
            width=args.width,
            height=args.height,
            num_states=args.num_states,
            num_actions=args.num_actions,
            noise=args.noise,
            seed=args.seed,
        )
    mdp = make_env(spec)
    save_mdp(mdp, args.output)
    return CommandResponse(
        success=True,
        command="gen-env",
        data={"num_states": mdp.num_states, "num_actions": mdp.num_actions, "path": str(args.output)},
        message=f"환경 저장: {args.output}",
    )


def cmd_collect(args) -> CommandResponse:
    from envs.datasets import collect, sample_success_examples, save_dataset, save_successes
    from envs.generators import load_mdp

    mdp = load_mdp(args.env)
    behavior = _load_policy(args.policy, mdp.num_states, mdp.num_actions)
    data = collect(mdp, behavior, args.steps, args.episode_len, args.seed)
    save_dataset(data, args.output)
    payload = {"transitions": data.num_transitions, "path": str(args.output)}
    if args.successes_out:
        successes = sample_success_examples(mdp, data.state_marginal(), args.num_successes, args.seed)
        save_successes(successes, args.successes_out)
        payload["successes"] = str(args.successes_out)
    return CommandResponse(success=True, command="collect", data=payload, message="수집 완료")


def _experiment_config(args, method: Optional[str] = None) -> ExperimentConfig:
    from harness.config import build_experiment_config, parse_flat_config

    nested = parse_flat_config(args.config) if getattr(args, "config", None) else {}
    overrides = {}
    if method or getattr(args, "method", None):
        overrides["method"] = method or args.method
    if getattr(args, "seeds", None):
        overrides["seeds"] = parse_seed_list(args.seeds)
    if getattr(args, "output", None):
        overrides["output_dir"] = str(args.output)
    for name in ("env", "successes", "data"):
        value = getattr(args, name, None)
        if value:
            overrides[f"{name}_file" if name != "data" else "dataset_file"] = value
    return build_experiment_config(nested, overrides)


def cmd_train(args) -> CommandResponse:
    from harness.experiments import run_experiment

    if not args.successes and not args.config:
        raise MissingInputError("--successes")
    cfg = _experiment_config(args)
    if cfg.successes_file is None and not args.config:
        raise MissingInputError("--successes")
    summary = run_experiment(cfg)
    return CommandResponse(
        success=True,
        command="train",
        data={
            "run_id": summary.run_id,
            "run_dir": str(summary.run_dir),
            "objectives": [r.objective for r in summary.results],
        },
        message=f"평균 목적값 {summary.mean_objective:.6f}",
    )


def cmd_oracle_eval(args) -> CommandResponse:
    from agents.mdp_core import control_objective, future_success_prob
    from envs.generators import load_mdp
    from harness.experiments import optimal_objective
    from schemas.data_models import TaskSpec

    mdp = load_mdp(args.env)
    task = TaskSpec(gamma=args.gamma)
    pi = _load_policy(args.policy, mdp.num_states, mdp.num_actions)
    return CommandResponse(
        success=True,
        command="oracle-eval",
        data={
            "objective": control_objective(mdp, task, pi),
            "optimal_objective": optimal_objective(mdp, task),
            "q": future_success_prob(mdp, task, pi).tolist(),
        },
        message="오라클 평가 완료",
    )


def cmd_robust_eval(args) -> CommandResponse:
    from agents.mdp_core import discounted_occupancy
    from agents.robust import robust_report
    from envs.datasets import check_inputs_match, load_successes
    from envs.generators import load_mdp
    from harness.reports import write_json
    from schemas.data_models import TaskSpec

    if not args.successes:
        raise MissingInputError("--successes")
    mdp = load_mdp(args.env)
    successes = load_successes(args.successes)
    check_inputs_match(mdp, successes=successes)
    pi = _load_policy(args.policy, mdp.num_states, mdp.num_actions)
    occupancy = discounted_occupancy(mdp, TaskSpec(gamma=args.gamma), pi)
    report = robust_report(occupancy, successes.dist, successes.prior)
    if args.output:
        write_json(args.output, report)
    return CommandResponse(success=True, command="robust-eval", data=report.model_dump(mode="json"))


def cmd_iterate(args) -> CommandResponse:
    from agents.langgraph_workflow import occupancy_mixture
    from agents.robust import iterated_rce
    from envs.datasets import check_inputs_match, load_dataset, load_successes
    from envs.generators import load_mdp, two_region_grid_spec
    from harness.reports import write_heatmap_csv, write_json

    if not args.successes:
        raise MissingInputError("--successes")
    mdp = load_mdp(args.env)
    successes = load_successes(args.successes)
    initial = load_dataset(args.data) if args.data else None
    check_inputs_match(mdp, initial, successes)
    cfg = TrainConfig(gamma=args.gamma)
    result = iterated_rce(
        mdp, successes, cfg, args.outer_iters,
        initial_data=initial, num_steps=args.steps, episode_len=args.episode_len, seed=args.seed,
    )
    out = Path(args.output)
    write_json(out / "fixed_point.json", result.fixed_point_report)
    if args.grid_width:
        spec = two_region_grid_spec(size=args.grid_width)
        write_heatmap_csv(out / "heatmap.csv", occupancy_mixture(result), spec)
    return CommandResponse(
        success=True,
        command="iterate",
        data={"outer_iters": len(result.policies), **result.fixed_point_report.model_dump(mode="json")},
        message=f"결과 저장: {out}",
    )


def cmd_verify(args) -> CommandResponse:
    from harness.reports import write_json
    from harness.verify import verify_all

    seeds = parse_seed_list(args.seeds) if args.seeds else None
    report = verify_all(args.suite, seeds, args.inject_fault)
    for suite in report.suites:
        print(f"{suite.suite}: {suite.cases - suite.failures}/{suite.cases}")
        for violation in suite.violations:
            print(f"  ❌ {violation}", file=sys.stderr)
    if args.output:
        write_json(args.output, report)
    return CommandResponse(
        success=report.passed,
        command="verify",
        data={"suites": [s.model_dump(mode="json") for s in report.suites]},
        error=None if report.passed else "검증 실패",
    )


def cmd_report(args) -> CommandResponse:
    from harness.job_manager import RunManager
    from harness.reports import build_report

    # --clean으로 지정한 실행은 취합 전에 삭제
    manager = RunManager(args.runs)
    for run_id in args.clean or []:
        if not manager.delete_run(run_id):
            raise MissingInputError(f"run {run_id}")
        logger.info(f"🗑️ 실행 삭제: {run_id}")

    path = build_report(args.runs, args.output)
    return CommandResponse(
        success=True,
        command="report",
        data={"path": str(path), "removed": list(args.clean or [])},
    )


def cmd_sweep(args) -> CommandResponse:
    from harness.sweep import mean_by_value, run_sweep

    cfg = _experiment_config(args)
    values = None
    if args.values is not None:
        values = [json.loads(v) if v.strip() and v.strip()[0] in "0123456789.-" else v
                  for v in args.values.split(",") if v.strip()]
    rows = run_sweep(cfg, args.axis, values, args.output_csv)
    means = {str(value): mean for value, mean in mean_by_value(rows).items()}
    return CommandResponse(
        success=True,
        command="sweep",
        data={"rows": len(rows), "path": str(args.output_csv), "means": means},
    )


# ============================================================================
# 2. 파서
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rce-lab", description="예시 기반 제어 실험실")
    parser.add_argument("--log-level", default=None, help="로그 레벨")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-env", help="환경 생성")
    p.add_argument("--kind", choices=[k.value for k in EnvKind], default="chain")
    p.add_argument("--len", type=int, default=2)
    p.add_argument("--chain-actions", type=int, default=1)
    p.add_argument("--width", type=int, default=5)
    p.add_argument("--height", type=int, default=5)
    p.add_argument("--num-states", type=int, default=5)
    p.add_argument("--num-actions", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--two-region", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(handler=cmd_gen_env)

    p = sub.add_parser("collect", help="궤적 수집")
    p.add_argument("--env", required=True)
    p.add_argument("--policy")
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--episode-len", type=int, default=151)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--successes-out", type=Path)
    p.add_argument("--num-successes", type=int, default=200)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(handler=cmd_collect)

    p = sub.add_parser("train", help="방법 학습 및 오라클 평가")
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--env")
    p.add_argument("--successes")
    p.add_argument("--data")
    p.add_argument("--config")
    p.add_argument("--seeds")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("oracle-eval", help="정책의 정확한 목적값")
    p.add_argument("--env", required=True)
    p.add_argument("--policy")
    p.add_argument("--gamma", type=float, default=0.99)
    p.set_defaults(handler=cmd_oracle_eval)

    p = sub.add_parser("robust-eval", help="강건 목적값 보고서")
    p.add_argument("--env", required=True)
    p.add_argument("--successes")
    p.add_argument("--policy")
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(handler=cmd_robust_eval)

    p = sub.add_parser("iterate", help="반복 RCE")
    p.add_argument("--env", required=True)
    p.add_argument("--successes")
    p.add_argument("--data")
    p.add_argument("--outer-iters", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--episode-len", type=int, default=151)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-width", type=int)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(handler=cmd_iterate)

    p = sub.add_parser("verify", help="검증 스위트")
    p.add_argument("--suite", action="append")
    p.add_argument("--seeds")
    p.add_argument("--inject-fault", choices=["gamma_one"])
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("report", help="실행 결과 취합")
    p.add_argument("--runs", type=Path, default=Path("runs"))
    p.add_argument("--clean", action="append", metavar="RUN_ID", help="취합 전에 삭제할 실행")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("sweep", help="절제 스윕")
    p.add_argument("--config")
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--seeds")
    p.add_argument("--axis", required=True)
    p.add_argument("--values")
    p.add_argument("--output-csv", type=Path, required=True)
    p.set_defaults(handler=cmd_sweep)

    return parser


# ============================================================================
# 3. 디스패치
# ============================================================================

def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """
    명령줄 인자를 해석해 하위 명령을 실행하고 종료 코드를 반환

    Args:
        argv: 인자 목록 (None이면 sys.argv[1:])

    Returns:
        0 성공, 1 검증 실패, 2 사용법 오류, 3 불변식 위반
    """
    from harness.config import apply_tolerances, setup_logging

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    setup_logging(args.log_level)
    apply_tolerances()
    handler: Callable = args.handler
    try:
        response = handler(args)
    except UsageError as e:
        print(f"❌ 사용법 오류: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantViolation, MissingInputError, SupportMismatchError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValidationError as e:
        print(f"❌ {as_invariant_violation(e)}", file=sys.stderr)
        return EXIT_INVARIANT
    except RCELabError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_FAILED

    if args.command not in ("verify",):
        print(json.dumps(response.model_dump(mode="json"), ensure_ascii=False))
    if not response.success:
        print(f"❌ {response.error}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK
