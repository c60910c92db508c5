"""
Command-line entry point

    dwpi train-agent | gen-demos | train-dwpi | infer | baseline {pm,mwal} | eval

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error,
3 acceptance assertion failed.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import orjson
import structlog

from src.config import get_settings
from src.core.errors import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, ConfigurationError, DWPIError
from src.schemas.run_config import RunConfig, load_run_config
from src.services.pipeline_service import PipelineService
from src.utils.monitoring import configure_logging
from src.utils.serialization import dumps

logger = structlog.get_logger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; usage errors map to 1 here"""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="Run config JSON")
    parser.add_argument("--seed", type=int, default=None, help="Master seed override")
    parser.add_argument("--out", type=Path, default=None, help="Output directory override")
    parser.add_argument("--workers", type=int, default=None, help="Worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dwpi", description="Dynamic-weight preference inference toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-agent", help="Train the preference-conditioned agent")
    _common(p)
    p.add_argument("--episodes", type=int, default=None, help="Training episodes override")

    p = sub.add_parser("gen-demos", help="Generate noisy demonstrations with a trained agent")
    _common(p)
    p.add_argument("--agent", type=Path, default=None)
    p.add_argument("--eta", type=float, default=None, help="Noise level override")
    p.add_argument("--n", type=int, default=None, help="Number of demonstrations")

    p = sub.add_parser("train-dwpi", help="Fit the preference model on a demo file")
    _common(p)
    p.add_argument("--demos", type=Path, default=None)

    p = sub.add_parser("infer", help="Infer the preference behind one return vector")
    _common(p)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--features", required=True, help='Return vector, e.g. "[53.93,-8]" or "53.93,-8"')

    p = sub.add_parser("baseline", help="Run a baseline inference method")
    p.add_argument("method", choices=["pm", "mwal"])
    _common(p)
    p.add_argument("--demos", type=Path, default=None)
    p.add_argument("--features", default=None, help="Literal return vector instead of a demo file")
    p.add_argument("--max-queries", type=int, default=None)

    p = sub.add_parser("eval", help="Benchmark DWPI against the baselines")
    _common(p)
    p.add_argument("--agent", type=Path, default=None)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--demos", type=Path, nargs="+", default=None)
    p.add_argument("--max-queries", type=int, default=None)
    p.add_argument(
        "--assert-direction",
        action="store_true",
        help="Exit 3 unless DWPI beats both baselines on accuracy and speed",
    )
    return parser


def parse_features(text: str) -> list[float]:
    """
    Raises:
        ConfigurationError: not a JSON array or comma list of finite numbers
    """
    stripped = text.strip()
    try:
        values = orjson.loads(stripped) if stripped.startswith("[") else [float(x) for x in stripped.split(",")]
        numbers = [float(v) for v in values]
    except (orjson.JSONDecodeError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Malformed feature vector: {text!r}") from e
    if not numbers or any(n != n or n in (float("inf"), float("-inf")) for n in numbers):
        raise ConfigurationError(f"Feature vector must hold finite numbers: {text!r}")
    return numbers


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config)
    overrides: dict = {"seed": args.seed, "out_dir": args.out, "workers": args.workers}
    if getattr(args, "n", None) is not None:
        overrides["n_demos"] = args.n
    if getattr(args, "eta", None) is not None:
        overrides["noise_eta"] = args.eta
    if getattr(args, "episodes", None) is not None:
        overrides["train"] = {**cfg.train.model_dump(mode="json"), "episodes": args.episodes}
    if getattr(args, "max_queries", None) is not None and args.command == "eval":
        overrides["evaluation"] = {**cfg.evaluation.model_dump(mode="json"), "max_queries": args.max_queries}
    return cfg.with_overrides(**overrides)


def _emit(payload: object) -> None:
    sys.stdout.write(dumps(payload).decode() + "\n")
    sys.stdout.flush()


def run(args: argparse.Namespace) -> int:
    service = PipelineService(_config(args))

    if args.command == "train-agent":
        _, path, match = service.train_agent()
        _emit({"agent": str(path), "oracle_match_pct": round(100.0 * match, 2)})
    elif args.command == "gen-demos":
        ds, path = service.gen_demos(args.agent)
        _emit({"demos": str(path), "count": len(ds), "splits": ds.split_sizes()})
    elif args.command == "train-dwpi":
        result, path = service.train_dwpi(args.demos)
        _emit(
            {
                "model": str(path),
                "best_epoch": result.best_epoch,
                "best_validation_loss": result.best_validation_loss[-1] if result.best_validation_loss else None,
            }
        )
    elif args.command == "infer":
        result = service.infer(parse_features(args.features), args.model)
        _emit(
            {
                "raw": list(result.raw.weights),
                "snapped": list(result.snapped.weights),
                "lattice_index": result.lattice_index,
                "distance": result.distance,
            }
        )
    elif args.command == "baseline":
        features = parse_features(args.features) if args.features else None
        results, path = service.run_baseline(args.method, args.demos, features, args.max_queries)
        _emit({"results": str(path), "inferred": [list(r.inferred.weights) for r in results]})
    elif args.command == "eval":
        report, paths = service.evaluate(args.agent, args.model, args.demos, args.assert_direction)
        _emit({k: str(v) for k, v in paths.items()} | {"failed_queries": report.failed_queries})
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    try:
        return run(args)
    except DWPIError as e:
        logger.error("Command failed", command=args.command, **e.to_dict())
        sys.stderr.write(f"error: {e.message}\n")
        for line in e.details.get("errors", []):
            sys.stderr.write(f"  {line}\n")
        return e.exit_code
    except OSError as e:
        logger.error("I/O failure", command=args.command, error=str(e))
        sys.stderr.write(f"error: {e}\n")
        return EXIT_RUNTIME
    except Exception:
        logger.exception("Unexpected failure", command=args.command)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
