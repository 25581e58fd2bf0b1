"""Command-line interface: plan, generate, reduce, verify, distinguish.

Exit codes: 0 pass, 1 usage, 2 planning/parameter error, 3 statistical alarm
or failed verification, 4 file format error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Optional

from . import __version__
from .dataset import LabeledDataset
from .distinguisher import AdvantageConfig, advantage_experiment, distinguish
from .errors import ContractError, FormatError, ParameterError, PlanningError, StatisticalAlarm
from .io import canonical_json, file_sha256, read_file, write_batch, write_dataset, write_report
from .lwe import LweBatch, gen_lwe
from .planner import plan_parameters
from .reduction import (STAGES, apply_stages, desk_lwe_spec, direct_hard_instance,
                        to_ltf_instance, to_relu_instance)
from .samplers import sample_unit_sphere
from .streams import RandomStream
from .verification import (ReluHypothesis, VerificationReport,
                           batch_independence_test, check_fact_a4, check_witness_gap,
                           correlation_to_l2, null_independence_test,
                           relu_correlation_empirical, relu_correlation_quadrature,
                           relu_pointwise_fraction)

SCHEMA = "lwe-hardness-report/1"
IO_KEYS = ("in_path", "out", "config", "report", "command")
CLAIMS = ("witness-gap", "null-independence", "relu-correlation", "l2-conversion",
          "fact-a4", "batch-independence")

EXIT_OK, EXIT_USAGE, EXIT_PARAM, EXIT_ALARM, EXIT_FORMAT = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv(kind):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in kind]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown item(s) {bad}; choose from {', '.join(kind)}")
        return items
    return parse


def _add_plan_args(p, dim_default=16):
    p.add_argument("--dim", type=int, default=dim_default, help="dimension n")
    p.add_argument("--sparsity", type=int, default=4, help="secret sparsity k")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--kappa", type=int, default=4)
    p.add_argument("--c-prime", type=float, default=10.0, dest="c_prime")
    p.add_argument("--c-sparsity", type=float, default=0.25, dest="c_sparsity")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="lwe-hardness", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("plan", help="derive reduction parameters")
    _add_plan_args(p)
    p.add_argument("--samples", type=int, default=1_000_000, help="desk sample count m")
    p.add_argument("--desk", action="store_true",
                   help="treat the asymptotic checklist as advisory (exit 0 if preconditions hold)")
    subs["plan"] = p

    p = sub.add_parser("generate", help="generate an LWE batch or a direct hard instance")
    _add_plan_args(p)
    p.add_argument("--source", choices=("lwe", "direct"), default="lwe")
    p.add_argument("--hypothesis", choices=("alternative", "null"), default="alternative")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--period", type=float, default=None, help="period T (direct source)")
    p.add_argument("--noise-scale", type=float, default=None, dest="noise_scale")
    p.add_argument("--kind", choices=("ltf", "relu"), default="ltf")
    p.add_argument("--disclose-secret", action="store_true", dest="disclose_secret")
    subs["generate"] = p

    p = sub.add_parser("reduce", help="push a batch through reduction stages")
    _add_plan_args(p)
    p.add_argument("--stages", type=_csv(STAGES), default=list(STAGES))
    p.add_argument("--kind", choices=("ltf", "relu", "none"), default="ltf")
    subs["reduce"] = p

    p = sub.add_parser("verify", help="check claims on a dataset or batch")
    p.add_argument("--claims", type=_csv(CLAIMS), default=None)
    p.add_argument("--projections", type=int, default=8)
    p.add_argument("--period", type=float, default=None)
    p.add_argument("--noise-scale", type=float, default=None, dest="noise_scale")
    p.add_argument("--scale", type=float, default=2.0, help="sigma for fact-a4")
    p.add_argument("--dim", type=int, default=1, help="n for fact-a4")
    subs["verify"] = p

    p = sub.add_parser("distinguish", help="run the polynomial-regression distinguisher")
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--period", type=float, default=0.5)
    p.add_argument("--noise-scale", type=float, default=None, dest="noise_scale")
    p.add_argument("--samples", type=int, default=500_000)
    p.add_argument("--threshold", type=float, default=None)
    subs["distinguish"] = p

    for name, p in subs.items():
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None, help="JSON file of flag defaults")
        p.add_argument("--out", default=None)
        if name in ("reduce", "verify", "distinguish"):
            p.add_argument("--in", dest="in_path", default=None, required=name != "distinguish")
        if name in ("generate", "reduce"):
            p.add_argument("--report", default=None, help="also write the JSON report here")
    return parser, subs


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        sp = subs[args.command]
        known = {a.dest for a in sp._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config keys {unknown}")
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def config_of(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in IO_KEYS}
    path = getattr(args, "in_path", None)
    if path:
        cfg["input_sha256"] = file_sha256(path)
    return cfg


def envelope(args, results) -> dict:
    cfg = config_of(args)
    return {
        "schema": SCHEMA,
        "command": args.command,
        "code_version": __version__,
        "seed": args.seed,
        "config": cfg,
        "config_hash": hashlib.sha256(canonical_json(cfg).encode()).hexdigest(),
        "results": results,
    }


def _emit(args, report: dict, path: Optional[str]):
    text = json.dumps(report, sort_keys=True, indent=2)
    if path:
        write_report(path, report)
    print(text)


def _plan(args, m=None):
    return plan_parameters(args.dim, args.sparsity, args.beta, args.gamma, args.kappa,
                           m=m if m is not None else getattr(args, "samples", 1_000_000),
                           c_prime=args.c_prime, c_sparsity=args.c_sparsity)


def cmd_plan(args) -> int:
    plan = _plan(args)
    report = envelope(args, [plan.to_dict()])
    report["checklist_passed"] = plan.ok
    _emit(args, report, args.out)
    failed = plan.failed()
    for p in failed:
        print(f"predicate failed: {p.name} (lhs={p.lhs:.6g}, rhs={p.rhs:.6g}, {p.relation})",
              file=sys.stderr)
    if failed and not args.desk:
        return EXIT_PARAM
    return EXIT_OK


def _require_out(args):
    if not args.out:
        raise UsageError("--out is required")


def cmd_generate(args) -> int:
    _require_out(args)
    root = RandomStream(args.seed)
    if args.source == "lwe":
        plan = _plan(args, m=max(args.samples, 1))
        spec = desk_lwe_spec(plan, args.samples, noise=args.noise_scale)
        batch = gen_lwe(spec, args.hypothesis, args.disclose_secret, root.substream(1))
        write_batch(args.out, batch)
        summary = {"record": "lwe-batch", "m": batch.m, "n": batch.n, "q": batch.modulus}
    else:
        if args.period is None:
            raise UsageError("--period is required for the direct source")
        noise = 0.0 if args.noise_scale is None else args.noise_scale
        secret = sample_unit_sphere(args.dim, root.substream(0))
        ds = direct_hard_instance(args.dim, secret, noise, args.period, args.samples,
                                  args.hypothesis, root.substream(1), kind=args.kind)
        if not args.disclose_secret:
            ds.secret = None
        write_dataset(args.out, ds)
        summary = {"record": "dataset", "m": ds.m, "n": ds.n, "T": ds.period}
    _emit(args, envelope(args, [summary]), args.report)
    return EXIT_OK


def cmd_reduce(args) -> int:
    _require_out(args)
    batch = read_file(args.in_path)
    if not isinstance(batch, LweBatch):
        raise ParameterError("reduce needs an lwe-batch file")
    plan = _plan(args, m=max(batch.m, 1)) if args.dim == batch.n else None
    if plan is None:
        raise ParameterError(f"--dim {args.dim} does not match the batch dimension {batch.n}")
    out = apply_stages(batch, plan, RandomStream(args.seed).substream(2), args.stages)
    if args.kind == "none":
        write_batch(args.out, out)
        summary = {"record": "lwe-batch", "m": out.m, "stages": args.stages}
    else:
        make = to_ltf_instance if args.kind == "ltf" else to_relu_instance
        T = out.modulus
        ds = make(out, T)
        write_dataset(args.out, ds)
        summary = {"record": "dataset", "m": ds.m, "T": T, "stages": args.stages}
    _emit(args, envelope(args, [summary]), args.report)
    return EXIT_OK


def _verify_dataset(ds: LabeledDataset, claim: str, args) -> VerificationReport:
    stream = RandomStream(args.seed, 7)
    if claim == "witness-gap":
        return check_witness_gap(ds, T=args.period, noise=args.noise_scale, seed=args.seed)
    if claim == "null-independence":
        return null_independence_test(ds, args.projections, stream, seed=args.seed)
    T = args.period if args.period is not None else ds.period
    if ds.secret is None or T is None:
        raise ParameterError(f"{claim} needs a disclosed secret and a period")
    noise = args.noise_scale if args.noise_scale is not None else 0.0
    ts = (T / 6, T / 4, T / 3)
    emp = [relu_correlation_empirical(ds, t) for t in ts]
    if claim == "relu-correlation":
        quad = [relu_correlation_quadrature(T, t, noise) for t in ts]
        zs = [abs(e - q) / se if se > 0 else 0.0 for (e, se), q in zip(emp, quad)]
        best = max(range(3), key=lambda i: abs(emp[i][0]))
        passed = abs(emp[best][0]) >= T * T / 50 and max(zs) <= 4
        return VerificationReport("relu-correlation", emp[best][0], emp[best][1], 4.0, passed,
                                  ds.m, args.seed, quad[best],
                                  details={"t": list(ts), "empirical": [e for e, _ in emp],
                                           "se": [s for _, s in emp], "quadrature": quad,
                                           "z": zs, "bound": T * T / 50})
    best = max(range(3), key=lambda i: abs(emp[i][0]))
    eps = abs(emp[best][0])
    f = ReluHypothesis(ds.secret, ts[best])
    try:
        g, err, se = correlation_to_l2(ds, f, eps)
        ok = True
    except ContractError:
        g, err, se, ok = None, float("nan"), 0.0, False
    frac = relu_pointwise_fraction(ds, ts[best])
    return VerificationReport("l2-conversion", err, se, 4.0, ok and frac == 1.0, ds.m, args.seed,
                              1 - eps**2, details={"eps": eps, "t": ts[best],
                                                   "scale": None if g is None else g.scale,
                                                   "pointwise_fraction": frac})


def cmd_verify(args) -> int:
    obj = read_file(args.in_path)
    claims = args.claims
    if claims is None:
        claims = ["null-independence"] if isinstance(obj, LabeledDataset) else ["batch-independence"]
    reports = []
    for claim in claims:
        if claim == "fact-a4":
            reports.append(check_fact_a4(args.scale, args.dim, seed=args.seed))
        elif claim == "batch-independence":
            if not isinstance(obj, LweBatch):
                raise ParameterError("batch-independence needs an lwe-batch file")
            reports.append(batch_independence_test(obj, args.projections,
                                                   RandomStream(args.seed, 7), seed=args.seed))
        else:
            if not isinstance(obj, LabeledDataset):
                raise ParameterError(f"{claim} needs a dataset file")
            reports.append(_verify_dataset(obj, claim, args))
    report = envelope(args, [r.to_dict() for r in reports])
    report["passed"] = all(r.passed for r in reports)
    _emit(args, report, args.out)
    return EXIT_OK if report["passed"] else EXIT_ALARM


def cmd_distinguish(args) -> int:
    noise = args.noise_scale if args.noise_scale is not None else args.period / 100
    if args.in_path:
        ds = read_file(args.in_path)
        if not isinstance(ds, LabeledDataset):
            raise ParameterError("distinguish needs a dataset file")
        train, test = ds.split(0.5)
        dec, info = distinguish(train, test, args.degree, args.threshold, details=True)
        results = [{"decision": dec.value, **info}]
    else:
        cfg = AdvantageConfig(n=args.dim, T=args.period, noise=noise, degree=args.degree,
                              m=args.samples, trials=args.trials, seed=args.seed,
                              threshold=args.threshold)
        results = [advantage_experiment(cfg).to_dict()]
    _emit(args, envelope(args, results), args.out)
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "generate": cmd_generate, "reduce": cmd_reduce,
            "verify": cmd_verify, "distinguish": cmd_distinguish}


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlanningError as exc:
        print(f"planning error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ParameterError, ContractError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except StatisticalAlarm as exc:
        print(f"statistical alarm: {exc}", file=sys.stderr)
        return EXIT_ALARM


if __name__ == "__main__":
    sys.exit(main())
