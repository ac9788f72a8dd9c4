"""Command-line front end for the Heun operator toolkit.

    python -m cli_app.main indeterminacy --p 1 --m 1 --J 2000
    python -m cli_app.main chaos-cert --p 1-3 --m 1,3 --out results

Every grid point writes its artifacts under --out and prints one JSON summary
line to stdout, in grid order.
"""

import argparse
import asyncio
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError, field_validator

from heun_core import chaos, exporters, indeterminacy, quadratic_bounds
from heun_core.config import apply_precision, toolkit_config
from heun_core.exceptions import HeunToolkitError
from heun_core.weights import CoefficientVector, OperatorParams, truncated_matrix

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("weights", "matrix", "indeterminacy", "chaos-cert", "eigenvector", "periodic",
               "recurrence", "approximant", "bound")


class CliUsageError(HeunToolkitError):
    """Malformed command line"""

    def __init__(self, message: str, context: str):
        super().__init__(message)
        self.context = context


class ToolkitArgumentParser(argparse.ArgumentParser):
    """Raises instead of exiting so errors can be emitted as JSON"""

    def error(self, message):
        flag = re.search(r"(--[\w-]+)", message)
        raise CliUsageError(message, context=flag.group(1) if flag else self.prog)


def parse_int_set(text: str) -> List[int]:
    """'3', '0-3' or '1,2,4'"""
    values: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if re.fullmatch(r"\d+-\d+", part):
                lo, hi = (int(x) for x in part.split("-"))
                if hi < lo:
                    raise ValueError(part)
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, a range a-b or a comma list, got {text!r}")
    return values


def parse_complex(text: str) -> str:
    try:
        complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")
    return text


def parse_targets(text: str, p: int) -> List[CoefficientVector]:
    """'k:value,k:value;k:value' with one group per target"""
    targets = []
    for group in text.split(";"):
        values = {}
        for pair in group.split(","):
            k, _, value = pair.partition(":")
            try:
                values[int(k)] = complex(value.replace("i", "j")) if value else 1
            except ValueError:
                raise CliUsageError(f"malformed target entry {pair!r}", context="--targets")
        if min(values) < p:
            raise CliUsageError(f"target index {min(values)} is below p={p}", context="--targets")
        targets.append(CoefficientVector.from_mapping(values))
    return targets


class RunConfig(BaseModel):
    """Validated command line for one subcommand over a (p, m) grid"""

    subcommand: Literal["weights", "matrix", "indeterminacy", "chaos-cert", "eigenvector", "periodic",
                        "recurrence", "approximant", "bound"]
    p_values: List[int] = Field(min_length=1)
    m_values: List[int] = Field(min_length=1)
    N: int = Field(default=100, ge=1)
    J: Optional[int] = Field(default=None, ge=1)
    lambdas: List[str] = Field(default_factory=list)
    epsilon: float = Field(default=1e-6, gt=0)
    s: Optional[int] = Field(default=None, ge=0)
    period: int = Field(default=3, ge=1)
    j: Optional[int] = Field(default=None, ge=1)
    targets: Optional[str] = None
    window: int = Field(default=1000, ge=10)
    samples: int = Field(default=0, ge=0)
    out: str = toolkit_config.output_dir
    precision_bits: int = Field(default=53, ge=53)
    error_json: bool = False

    @field_validator("p_values")
    @classmethod
    def validate_p(cls, v: List[int]) -> List[int]:
        if any(p < 0 for p in v):
            raise ValueError("p must be nonnegative")
        return v

    @field_validator("m_values")
    @classmethod
    def validate_m(cls, v: List[int]) -> List[int]:
        if any(m < 1 for m in v):
            raise ValueError("m must be at least 1")
        return v

    @property
    def lambda_values(self) -> List[complex]:
        return [complex(text.replace(" ", "").replace("i", "j")) for text in self.lambdas]

    def grid(self) -> List[OperatorParams]:
        return [OperatorParams(p=p, m=m) for p in self.p_values for m in self.m_values]

    def out_path(self, name: str) -> Path:
        return Path(self.out) / name


def build_parser() -> ToolkitArgumentParser:
    common = ToolkitArgumentParser(add_help=False)
    common.add_argument("--p", dest="p_values", type=parse_int_set, default=[1], help="p: int, range a-b or list")
    common.add_argument("--m", dest="m_values", type=parse_int_set, default=[1], help="m: int, range a-b or list")
    common.add_argument("--N", type=int, default=100, help="truncation size")
    common.add_argument("--J", type=int, default=None, help="window / number of terms")
    common.add_argument("--lambda", dest="lambdas", type=parse_complex, action="append", default=[],
                        help="complex eigenvalue parameter (repeatable), e.g. 2+3i")
    common.add_argument("--epsilon", type=float, default=1e-6)
    common.add_argument("--s", type=int, default=None, help="periodic point base index (default p)")
    common.add_argument("--period", type=int, default=3)
    common.add_argument("--j", type=int, default=None, help="power of a in the relative bound")
    common.add_argument("--targets", default=None, help="approximant targets 'k:v,k:v;k:v'")
    common.add_argument("--window", type=int, default=1000, help="hypothesis checker window")
    common.add_argument("--samples", type=int, default=0, help="random bound sweep size")
    common.add_argument("--out", default=toolkit_config.output_dir)
    common.add_argument("--precision-bits", type=int, default=toolkit_config.precision_bits)
    common.add_argument("--error-json", action="store_true", help="emit errors as JSON on stdout")
    common.add_argument("--log-level", default=toolkit_config.log_level)

    parser = ToolkitArgumentParser(prog="heun-toolkit", description="Generalized Heun operator toolkit")
    subparsers = parser.add_subparsers(dest="subcommand", required=True, parser_class=ToolkitArgumentParser)
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common])
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    args.pop("log_level", None)
    return RunConfig(**args)


def _configure_logging(argv: Sequence[str]) -> None:
    level = toolkit_config.log_level
    if "--log-level" in argv and argv.index("--log-level") + 1 < len(argv):
        level = argv[argv.index("--log-level") + 1]
    if not isinstance(logging.getLevelName(level.upper()), int):
        raise CliUsageError(f"unknown log level {level!r}", context="--log-level")
    logging.basicConfig(level=level.upper(), format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _lambda_tag(lam: complex) -> str:
    return f"{lam.real:g}{lam.imag:+g}i"


# Handlers: one grid point each, returning the stdout summary

def handle_weights(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    path = config.out_path(f"weights_{params.label}_N{config.N}.csv")
    exporters.write_weights_csv(params, params.p, params.p + config.N - 1, path)
    return {"params": params.label, "file": path.name}


def handle_matrix(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    path = config.out_path(f"matrix_{params.label}_N{config.N}.csv")
    exporters.write_matrix_csv(truncated_matrix(params, config.N), params.p, path)
    return {"params": params.label, "file": path.name}


def handle_indeterminacy(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    J = config.J or 2000
    report = indeterminacy.verdict(params, J)
    exporters.write_json(report, config.out_path(f"indeterminacy_{params.label}_J{J}.json"))
    exporters.write_block_norms_csv(indeterminacy.build_blocks(params, J), J,
                                    config.out_path(f"block_norms_{params.label}_J{J}.csv"))
    return {"params": params.label, "verdict": report.verdict,
            "defect_numbers": list(report.claimed_defect_numbers) if report.claimed_defect_numbers else None}


def handle_chaos(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    lambdas = config.lambda_values or list(chaos.DEFAULT_LAMBDA_GRID)
    report = chaos.build_chaos_report(params, window=config.window, lambdas=lambdas, N=config.N,
                                      periodic_J=config.J or 30, epsilon=config.epsilon)
    exporters.write_json(report, config.out_path(f"chaos_{params.label}.json"))
    return {"params": params.label, "chaotic_status": report.chaotic_status}


def handle_eigenvector(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    files = []
    for lam in config.lambda_values or [0j]:
        stem = f"eigenvector_{params.label}_lam{_lambda_tag(lam)}_N{config.N}"
        exporters.write_vector_csv(chaos.eigenvector(lam, params, config.N), config.out_path(stem + ".csv"))
        exporters.write_json(chaos.summarize_eigenvector(lam, params, config.N), config.out_path(stem + ".json"))
        files.append(stem)
    return {"params": params.label, "files": files}


def handle_periodic(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    s = params.p if config.s is None else config.s
    J = config.J or 30
    stem = f"periodic_{params.label}_s{s}_N{config.period}_J{J}"
    exporters.write_vector_csv(chaos.periodic_point(s, config.period, params, J), config.out_path(stem + ".csv"))
    summary = chaos.summarize_periodic(s, config.period, params, J)
    exporters.write_json(summary, config.out_path(stem + ".json"))
    return {"params": params.label, "residual": summary.residual, "file": stem}


def handle_recurrence(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    files = []
    for lam in config.lambda_values or [0j]:
        solution = chaos.recurrence_u(lam, params, max(config.N, 2))
        stem = f"recurrence_{params.label}_lam{_lambda_tag(lam)}_N{config.N}"
        exporters.write_series_csv(solution.u, config.out_path(stem + ".csv"))
        exporters.write_json(solution.summary(params), config.out_path(stem + ".json"))
        files.append(stem)
    return {"params": params.label, "files": files}


def handle_approximant(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    if config.targets:
        targets = parse_targets(config.targets, params.p)
    else:
        targets = [CoefficientVector.basis(params.p), CoefficientVector.basis(params.p + 1, 2)]
    result = chaos.approximant(targets, config.epsilon, params)
    stem = f"approximant_{params.label}_eps{config.epsilon:g}"
    exporters.write_vector_csv(result.phi, config.out_path(stem + ".csv"))
    summary = result.summary(config.epsilon)
    exporters.write_json(summary, config.out_path(stem + ".json"))
    return {"params": params.label, "hit_times": summary.hit_times, "max_error": summary.max_error}


def handle_bound(params: OperatorParams, config: RunConfig) -> Dict[str, Any]:
    j = config.j if config.j is not None else params.degree // 2 + 1
    cert = quadratic_bounds.derive_constants(params, j, config.epsilon)
    stem = f"bound_{params.label}_j{j}_eps{config.epsilon:g}"
    exporters.write_json(cert, config.out_path(stem + ".json"))
    summary = {"params": params.label, "j": j, "C_eps": cert.C_eps}
    if config.samples:
        sweep = quadratic_bounds.random_bound_sweep(cert, samples=config.samples)
        exporters.write_summary_json(sweep, config.out_path(stem + "_sweep.json"))
        summary["violations"] = sweep["violations"]
    return summary


HANDLERS: Dict[str, Callable[[OperatorParams, RunConfig], Dict[str, Any]]] = {
    "weights": handle_weights,
    "matrix": handle_matrix,
    "indeterminacy": handle_indeterminacy,
    "chaos-cert": handle_chaos,
    "eigenvector": handle_eigenvector,
    "periodic": handle_periodic,
    "recurrence": handle_recurrence,
    "approximant": handle_approximant,
    "bound": handle_bound,
}


async def run_grid(config: RunConfig) -> List[Dict[str, Any]]:
    """Fan the grid out to worker threads; gather keeps grid order"""
    handler = HANDLERS[config.subcommand]
    loop = asyncio.get_running_loop()
    loop.set_default_executor(ThreadPoolExecutor(max_workers=toolkit_config.max_workers))
    tasks = [asyncio.to_thread(handler, params, config) for params in config.grid()]
    return await asyncio.gather(*tasks)


def run(config: RunConfig) -> int:
    apply_precision(config.precision_bits)
    Path(config.out).mkdir(parents=True, exist_ok=True)
    summaries = asyncio.run(run_grid(config))
    for summary in summaries:
        print(json.dumps(summary, sort_keys=True))
    logger.info(f"✅ {config.subcommand}: {len(summaries)} grid point(s) written to {config.out}")
    return 0


def report_error(error: Exception, context: str, as_json: bool) -> None:
    if as_json:
        print(json.dumps({"error": str(error), "type": type(error).__name__, "context": context}, sort_keys=True))
    else:
        print(f"❌ {type(error).__name__}: {error}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--error-json" in argv
    subcommand = next((a for a in argv if a in SUBCOMMANDS), "heun-toolkit")
    try:
        _configure_logging(argv)
        config = parse_config(argv)
        return run(config)
    except CliUsageError as e:
        report_error(e, e.context, as_json)
        return 2
    except ValidationError as e:
        loc = e.errors()[0]["loc"] if e.errors() else ()
        flag = "--" + str(loc[0]).replace("_values", "").replace("_", "-") if loc else subcommand
        report_error(e, flag, as_json)
        return 2
    except HeunToolkitError as e:
        report_error(e, subcommand, as_json)
        return 1


if __name__ == "__main__":
    sys.exit(main())
