"""Command line entry point: ``kobdyn run | suite | classify``."""

import argparse
import json
import logging
import os
import sys

from . import harness
from .errors import ConfigError, KobdynError


def _setup_logging():
    level = os.environ.get("KOBDYN_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def cmd_run(args):
    try:
        cfg = harness.load_config(args.config)
    except ConfigError as e:
        print("config error at %s: %s" % (e.field, e), file=sys.stderr)
        return harness.EXIT_CONFIG
    except OSError as e:
        print("cannot read config: %s" % e, file=sys.stderr)
        return harness.EXIT_CONFIG
    code, body = harness.run(cfg, args.out, args.seed)
    if "error" in body:
        err = body["error"]
        where = " at %s" % err["field"] if err.get("field") else ""
        print("%s%s: %s" % (err["type"], where, err["message"]), file=sys.stderr)
    else:
        rep = body["report"]
        print("%s: %s" % (body["name"], body["status"].upper()))
        for c in rep["checks"]:
            print("  [%s] %s" % ("ok" if c["passed"] else "FAIL", c["name"]))
    return code


def cmd_suite(args):
    code, summary = harness.suite(args.dir, args.out, args.seed)
    print(harness.summary_table(summary))
    return code


def cmd_classify(args):
    try:
        mspec = json.loads(args.map)
        dspec = json.loads(args.domain) if args.domain else _guess_domain(mspec)
    except json.JSONDecodeError as e:
        print("invalid JSON: %s" % e, file=sys.stderr)
        return harness.EXIT_CONFIG
    cfg = {"schema_version": harness.SCHEMA_VERSION, "name": "classify", "seed": args.seed,
           "task": "classify", "domain": dspec, "map": mspec}
    code, body = harness.run(cfg)
    if "error" in body:
        print("%s: %s" % (body["error"]["type"], body["error"]["message"]), file=sys.stderr)
        return code
    print(harness.dumps(body["report"]["data"]["classification"]), end="")
    return code


def _guess_domain(mspec):
    if isinstance(mspec, dict) and mspec.get("type") == "ball_mobius_axis":
        return {"type": "ball", "dim": int(mspec.get("d", 2))}
    if isinstance(mspec, dict) and mspec.get("type") == "unitary":
        return {"type": "ball", "dim": len(mspec.get("matrix", [[0]]))}
    return {"type": "disk"}


def build_parser():
    ap = argparse.ArgumentParser(prog="kobdyn", description="Iteration of holomorphic self-maps of convex domains")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="directory for report.json, orbit.csv, plot.json")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("suite", help="run every config in a directory")
    s.add_argument("dir")
    s.add_argument("--out", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_suite)
    c = sub.add_parser("classify", help="classify a map given as JSON")
    c.add_argument("--map", required=True)
    c.add_argument("--domain", default=None, help="domain JSON (default inferred from the map)")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_classify)
    return ap


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KobdynError as e:
        print("%s: %s" % (type(e).__name__, e), file=sys.stderr)
        return harness.EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
