"""Command line entry point: ``gnet <experiment> --config c.json``."""

import argparse
import json
import logging
import os
import sys

from ..errors import GNetError
from .config import ExperimentConfig
from .studies import run_check_partition, run_oos_study, run_quad_study, run_rate_study, run_synth

log = logging.getLogger("gnet")

STUDIES = {"rate-study": run_rate_study, "oos-study": run_oos_study, "quad-study": run_quad_study}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnet", description="Sparse kernel network synthesis and rate studies.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "synthesize one network and write it as JSON",
        "rate-study": "error against N over an n sweep, with a Monte Carlo baseline",
        "oos-study": "manifold against tube error for a network fitted on a manifold sample",
        "quad-study": "integration errors of the network used as a quadrature rule",
        "check-partition": "build one partition and report its recomputed properties",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output file (synth) or directory (studies)")
        p.add_argument("--threads", type=int, help="worker threads (default: GNET_THREADS or 1)")
    return parser


def _write_json(path, doc):
    if path is None:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if cfg.experiment != args.command:
        log.info("config experiment %r overridden by command %r", cfg.experiment, args.command)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = args.out or cfg.output

    if args.command == "synth":
        net, report = run_synth(cfg, threads=args.threads)
        if out is None:
            sys.stdout.write(net.to_json() + "\n")
        else:
            net.save(out)
            _write_json(os.path.splitext(out)[0] + ".report.json", report.to_dict())
        log.warning("N=%d sup_error=%.3e", report.N, report.sup_error)
        return 0
    if args.command == "check-partition":
        doc = run_check_partition(cfg)
        _write_json(None if out is None else os.path.join(out, "partition.json"), doc)
        return 0 if doc["diagnostics"]["passed"] else 1

    report = STUDIES[args.command](cfg, threads=args.threads)
    if out is None:
        sys.stdout.write(report.to_csv())
    else:
        for path in report.write(out).values():
            log.info("wrote %s", path)
    slope = report.slope
    log.warning("%s: %d rows, slope %s, predicted exponent %s", args.command, len(report.rows),
                "n/a" if slope is None else f"{slope:.3f}", report.predicted_exponent)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (GNetError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
