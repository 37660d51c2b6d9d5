"""``tsgen`` command line: validate, generate, stats, hmm-eval.

Exit codes: 0 ok, 1 I/O or parse failure, 2 invalid spec, 3 statistical
failure, 4 spec is not an HMM.

Seed precedence: ``--seed`` flag, then the spec file's ``generation.seed``, then
the ``TSGEN_SEED`` environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

from .dataset_io import dataset_to_json, read_csv, read_json, write_csv
from .errors import NotAnHmm, ParseError, SchemaError, SemanticError, StructureMismatch
from .hmm_eval import evaluate
from .model import GenerationConfig
from .sampler import generate_dataset
from .spec_io import SpecDocument, parse_document
from .stats import DEFAULT_ALPHA, build_report

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_STATS, EXIT_NOT_HMM = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse's own exit code 2 would collide with "invalid spec".
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def bundled_fixtures() -> dict[str, Path]:
    root = resources.files("tsgen") / "fixtures"
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_spec_path(arg: str) -> Path:
    """An existing file, or else a bundled fixture matched by file stem."""
    path = Path(arg)
    if path.exists():
        return path
    bundled = bundled_fixtures().get(path.stem if path.suffix == ".json" else path.name)
    if bundled is not None:
        return bundled
    raise CliError(f"{arg}: no such file (bundled fixtures: {', '.join(sorted(bundled_fixtures()))})",
                   EXIT_IO)


def _load(arg: str) -> SpecDocument:
    path = resolve_spec_path(arg)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{arg}: {exc.strerror}", EXIT_IO) from None
    try:
        return parse_document(text)
    except ParseError as exc:
        raise CliError(f"{arg}: {exc}", EXIT_IO) from None
    except SchemaError as exc:
        raise CliError(f"{arg}: {exc}", EXIT_INVALID) from None
    except SemanticError as exc:
        lines = "\n".join(f"{arg}: {v}" for v in exc.violations)
        raise CliError(lines, EXIT_INVALID) from None


def _config(doc: SpecDocument, args) -> GenerationConfig:
    env = os.environ.get("TSGEN_SEED")
    try:
        fallback = int(env) if env else 0
        return doc.generation.resolve(args.t, args.n, args.seed, fallback_seed=fallback)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_IO) from None


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}", EXIT_IO) from None


def cmd_validate(args) -> int:
    _load(args.spec)
    print("OK")
    return EXIT_OK


def cmd_generate(args) -> int:
    doc = _load(args.spec)
    config = _config(doc, args)
    fmt = args.format or ("json" if (args.output or "").endswith(".json") else "csv")
    start = time.perf_counter()
    data = generate_dataset(doc.network, config, workers=args.workers)
    out, close = _open_out(args.output)
    try:
        if fmt == "json":
            out.write(dataset_to_json(data, doc.network, config))
        else:
            write_csv(data, out)
    finally:
        if close:
            out.close()
    elapsed = time.perf_counter() - start
    print(f"generated N={config.n_samples} T={config.t_len} seed={config.seed} "
          f"in {elapsed:.4f} s", file=sys.stderr)
    return EXIT_OK


def _read_data(path: str, doc: SpecDocument):
    try:
        with open(path, encoding="utf-8", newline="") as f:
            if path.endswith(".json"):
                return read_json(f, doc.network)
            return read_csv(f, doc.network)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}", EXIT_IO) from None
    except StructureMismatch as exc:
        raise CliError(f"{path}: {exc}", EXIT_IO) from None


def cmd_stats(args) -> int:
    doc = _load(args.spec)
    if args.data:
        data = _read_data(args.data, doc)
    else:
        data = generate_dataset(doc.network, _config(doc, args), workers=args.workers)
    report = build_report(data, doc.network, alpha=args.alpha)
    text = (json.dumps(report.to_json(), indent=2) + "\n") if args.format == "json" else report.to_table() + "\n"
    out, close = _open_out(args.output)
    try:
        out.write(text)
    finally:
        if close:
            out.close()
    return EXIT_OK if report.passed else EXIT_STATS


def cmd_hmm_eval(args) -> int:
    doc = _load(args.spec)
    config = _config(doc, args)
    data = generate_dataset(doc.network, config, workers=args.workers)
    try:
        result = evaluate(data, doc.network)
    except NotAnHmm as exc:
        raise CliError(f"{args.spec}: not an HMM: {exc}", EXIT_NOT_HMM) from None
    print(f"samples {config.n_samples}  T {config.t_len}  seed {config.seed}")
    print(f"accuracy {result.accuracy:.4f}")
    print(f"mean_loglik {result.mean_loglik:.4f}")
    return EXIT_OK if result.accuracy >= args.min_accuracy else EXIT_STATS


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsgen", description="Synthetic time series from dynamic Bayesian networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spec_arg(p):
        p.add_argument("spec", help="spec JSON file, or the name of a bundled fixture")

    def gen_args(p):
        p.add_argument("-T", "--t", type=int, help="timesteps per sequence (overrides spec)")
        p.add_argument("-N", "--n", type=int, help="number of sequences (overrides spec)")
        p.add_argument("--seed", type=int, help="master seed (overrides spec and TSGEN_SEED)")
        p.add_argument("--workers", type=int, default=1, help="worker threads; output is identical for any value")

    p = sub.add_parser("validate", help="check a spec file")
    spec_arg(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="sample a dataset")
    spec_arg(p)
    gen_args(p)
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="default: from extension, else csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="test data against the declared CPDs")
    spec_arg(p)
    gen_args(p)
    p.add_argument("--data", help="dataset file (.csv or .json); generated if omitted")
    p.add_argument("-o", "--output", help="report file (default stdout)")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("hmm-eval", help="Viterbi decode accuracy with the true parameters")
    spec_arg(p)
    gen_args(p)
    p.add_argument("--min-accuracy", type=float, default=0.93)
    p.set_defaults(func=cmd_hmm_eval)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_IO
    for name in ("t", "n", "workers"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            print(f"tsgen: --{name} must be >= 1", file=sys.stderr)
            return EXIT_IO
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("tsgen: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
