"""
명령행 진입점
Usage: python run.py <mine|ground|train|eval|pipeline|synth|sweep> [options]

종료 코드: 0 성공, 1 실행 오류 (KGCError / OSError), 2 인자 오류
"""
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from config.loader import load_run_config
from config.logging_setup import setup_logging
from config.schemas import SynthConfig
from config.settings import settings
from modules.errors import ConfigError, KGCError
from . import commands


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="key-value 설정 파일")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="설정 override (반복 가능)")
    parser.add_argument("--output-dir", type=Path, help="출력 디렉토리")
    parser.add_argument("--workers", type=int, help="worker 수")
    parser.add_argument("--seed", type=int, help="난수 seed")
    parser.add_argument("--log-level", default=None, help="DEBUG / INFO / WARNING")


def _data_flags(parser: argparse.ArgumentParser, valid: bool = True, test: bool = True, rules: bool = True):
    parser.add_argument("--train", type=Path, help="train TSV")
    if valid:
        parser.add_argument("--valid", type=Path, help="valid TSV")
    if test:
        parser.add_argument("--test", type=Path, help="test TSV")
    if rules:
        parser.add_argument("--rules", type=Path, help="rule 파일 (지정 시 mining 생략)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgc", description="rule-injected knowledge graph embedding")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="closed Horn rule mining")
    _common(p)
    _data_flags(p, valid=False, test=False, rules=False)
    p.add_argument("--min-confidence", type=float)
    p.add_argument("--max-length", type=int, choices=(1, 2))
    p.add_argument("--expected-count", type=int, help="비교용 기대 rule 수")

    p = sub.add_parser("ground", help="rule grounding 1 cycle")
    _common(p)
    _data_flags(p, valid=False, test=False)

    p = sub.add_parser("train", help="임베딩 반복 학습")
    _common(p)
    _data_flags(p, test=False)
    p.add_argument("--epochs", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--resume", action="store_true", default=None)

    p = sub.add_parser("eval", help="filtered link prediction 평가")
    _common(p)
    _data_flags(p, rules=False)
    p.add_argument("--model", type=Path, required=True, help="model.npz (같은 디렉토리에 entities.tsv / relations.tsv)")
    p.add_argument("--raw", action="store_true", help="filter 없이 raw ranking")

    p = sub.add_parser("pipeline", help="mine → ground → train → eval")
    _common(p)
    _data_flags(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--resume", action="store_true", default=None)

    p = sub.add_parser("sweep", help="rule confidence threshold sweep")
    _common(p)
    _data_flags(p)
    p.add_argument("--thresholds", help="쉼표 구분 threshold 목록")

    p = sub.add_parser("synth", help="planted-rule 합성 데이터셋 생성")
    p.add_argument("--output-dir", type=Path, required=True)
    p.add_argument("--entities", type=int, default=200)
    p.add_argument("--pairs", type=int, default=300, help="rule당 premise 인스턴스 수")
    p.add_argument("--confidences", default="1.0,0.8", help="rule별 confidence (쉼표 구분)")
    p.add_argument("--lengths", default="1,2", help="rule별 길이 (쉼표 구분, 순환)")
    p.add_argument("--holdout", type=float, default=0.2)
    p.add_argument("--false-fraction", type=float, default=0.05)
    p.add_argument("--noise", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--log-level", default=None)
    return parser


def _flag_values(args: argparse.Namespace) -> dict:
    def get(name: str):
        return getattr(args, name, None)

    values = {
        "run.output_dir": get("output_dir"),
        "run.workers": get("workers"),
        "run.seed": get("seed"),
        "run.resume": get("resume"),
        "paths.train": get("train"),
        "paths.valid": get("valid"),
        "paths.test": get("test"),
        "paths.rules": get("rules"),
        "mining.min_confidence": get("min_confidence"),
        "mining.max_length": get("max_length"),
        "train.epochs": get("epochs"),
        "train.dim": get("dim"),
        "eval.sweep_thresholds": get("thresholds"),
    }
    if get("raw"):
        values["eval.filtered"] = False
    return values


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    try:
        return SynthConfig(
            entity_count=args.entities,
            pairs_per_rule=args.pairs,
            rule_confidences=args.confidences,
            rule_lengths=args.lengths,
            holdout_fraction=args.holdout,
            false_fraction=args.false_fraction,
            noise_triples=args.noise,
            seed=args.seed if args.seed is not None else settings.seed,
        )
    except ValidationError as e:
        raise ConfigError(f"invalid synth options:\n{e}") from e


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "synth":
        return commands.cmd_synth(_synth_config(args), args.output_dir)

    config = load_run_config(args.config, args.overrides, _flag_values(args))
    if args.command == "mine":
        return commands.cmd_mine(config, args.expected_count)
    if args.command == "ground":
        return commands.cmd_ground(config)
    if args.command == "train":
        return commands.cmd_train(config)
    if args.command == "eval":
        return commands.cmd_eval(config, args.model)
    if args.command == "pipeline":
        return commands.cmd_pipeline(config)
    if args.command == "sweep":
        return commands.cmd_sweep(config)
    raise ConfigError(f"unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return dispatch(args)
    except (KGCError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
