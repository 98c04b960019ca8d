"""Command-line entry points: validate, run, verify, dump-field.

Exit codes: 0 completed, 2 validation error, 3 solver failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, SolverFailureError
from .experiments import ExperimentConfig, preset_config, run_experiment, run_verification
from .fieldio import load_field
from .verification import SUITES


def _load_config(spec: str) -> ExperimentConfig:
    if spec.startswith("preset:"):
        return preset_config(spec.split(":", 1)[1])
    return ExperimentConfig.from_json(spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="waveshadow",
        description="Hidden-obstacle detection from a single recorded wave.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="validate a configuration file")
    p_val.add_argument("config", help="JSON config path or preset:<name>")

    p_run = sub.add_parser("run", help="run the full experiment pipeline")
    p_run.add_argument("config", help="JSON config path or preset:<name>")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--dump-records", action="store_true",
                       help="also write the B-patch wave records as CSV")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", choices=sorted(SUITES))
    p_ver.add_argument("--seed", type=int, default=42)
    p_ver.add_argument("--out", default="out")

    p_dump = sub.add_parser("dump-field", help="describe a stored binary field")
    p_dump.add_argument("run_dir")
    p_dump.add_argument("name")
    p_dump.add_argument("--out", default=None,
                        help="copy the raw little-endian float64 payload here")

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            cfg = _load_config(args.config)
            grid = cfg.validate()
            print(json.dumps({
                "valid": True,
                "T": cfg.resolved_T(),
                "grid_dims": list(grid.dims),
                "config_digest": cfg.digest(),
            }, indent=2))
            return 0
        if args.command == "run":
            cfg = _load_config(args.config)
            if args.dump_records:
                cfg.dump_records = True
            bundle = run_experiment(cfg, args.out)
            verdict = json.loads(Path(bundle.verdict_json).read_text())
            print(json.dumps(verdict, indent=2))
            print(f"artifacts in {args.out}", file=sys.stderr)
            return 0
        if args.command == "verify":
            bundle, ok = run_verification(args.suite, seed=args.seed, outdir=args.out)
            report = json.loads(Path(bundle.verification_json).read_text())
            for chk in report["checks"]:
                status = "pass" if chk["passed"] else "FAIL"
                print(f"[{status}] {chk['name']}: lhs={chk.get('lhs')} rhs={chk.get('rhs')}")
            return 0 if ok else 4
        if args.command == "dump-field":
            stem = Path(args.run_dir) / args.name
            values, header = load_field(stem)
            print(json.dumps({
                "header": header,
                "min": float(np.min(values)),
                "max": float(np.max(values)),
                "l2": float(np.linalg.norm(values)),
            }, indent=2))
            if args.out:
                Path(args.out).write_bytes(
                    np.asarray(values, dtype="<f8").ravel(order="F").tobytes())
            return 0
    except (ConfigurationError, DomainError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
