"""Command line entry point: ``vecmean rates|fidelity|instances|compile-check``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .errors import ConfigError, DomainError, ResourceError
from .experiments import (SweepConfig, compile_case_matrix, emit, fidelity_suite, rate_sweep,
                          report_csv, report_json)
from .reductions import instance_unit_vectors, instance_walsh


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_rates(args) -> int:
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
    else:
        cfg = {}
    for key, val in (("seed", args.seed), ("out", args.out), ("format", args.format),
                     ("cap_qubits", args.cap_qubits)):
        if val is not None:
            cfg[key] = val
    config = SweepConfig.from_dict(cfg)
    report = rate_sweep(config)
    if config.out:
        emit(report, config.format, config.out)
    else:
        _write(report_csv(report) if config.format == "csv" else report_json(report), None)
    return 0


def cmd_fidelity(args) -> int:
    summary = fidelity_suite(seed=args.seed or 0, per_case=args.per_case)
    _write(_dump(summary), args.out)
    return 0 if summary["passed"] else 1


def cmd_instances(args) -> int:
    p = math.inf if str(args.p).lower() in ("inf", "infinity") else float(args.p)
    if args.family == "unitvec":
        a = instance_unit_vectors(p, args.size)
    else:
        k = int(round(math.log2(args.size)))
        if 2 ** k != args.size:
            raise DomainError("walsh instances need a power-of-two size")
        a = instance_walsh(k, p)
    _write(a.to_csv() if args.format == "csv" else a.to_json() + "\n", args.out)
    return 0


def cmd_compile_check(args) -> int:
    res = compile_case_matrix(seed=args.seed or 0, per_case=args.per_case)
    res["passed"] = bool(res["max_tv"] < 1e-9 and res["query_count_mismatches"] == 0)
    _write(_dump(res), args.out)
    return 0 if res["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vecmean", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default=None)

    r = sub.add_parser("rates", help="error-vs-n sweep from a JSON config")
    r.add_argument("--config", default=None)
    r.add_argument("--cap-qubits", type=int, default=None)
    common(r)
    r.set_defaults(func=cmd_rates)

    f = sub.add_parser("fidelity", help="run every identity and fidelity check")
    f.add_argument("--per-case", type=int, default=20)
    common(f, fmt=False)
    f.set_defaults(func=cmd_fidelity)

    i = sub.add_parser("instances", help="dump a hard weight instance")
    i.add_argument("--family", choices=("unitvec", "walsh"), required=True)
    i.add_argument("--size", type=int, required=True)
    i.add_argument("--p", default="2")
    common(i)
    i.set_defaults(func=cmd_instances)

    c = sub.add_parser("compile-check", help="compiled vs classical distribution matrix")
    c.add_argument("--per-case", type=int, default=20)
    common(c, fmt=False)
    c.set_defaults(func=cmd_compile_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, ResourceError, OSError, json.JSONDecodeError) as e:
        print(f"vecmean: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
