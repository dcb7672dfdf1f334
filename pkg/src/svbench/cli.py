"""Command-line entry point: ``svb <command> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 stage failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import DEFAULT_THRESHOLD, aggregate_records, capability_summary, eps_by_width, ShapeAggregate
from .circuit import load_circuit, load_device, save_circuit
from .errors import CircuitParseError, ConfigError, StageError, SvbError
from .lcu import PREPARE_MODES, SELECT_MODES, TOY_OPERATORS, assemble_lcu, load_terms, plan_registers, toy_operator
from .noise import load_noise
from .pipeline import run_pipeline
from .report import emit_summary, emit_volumetric
from .sim import SimBudget, read_records, run_snippet_batch, write_records
from .snip import Shape, Snippet, parse_shapes, snip_experiment
from .transpile import transpile

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


def _dump(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_lcu(args) -> None:
    if bool(args.terms) == bool(args.operator):
        raise ConfigError("give exactly one of --terms or --operator")
    terms = load_terms(args.terms) if args.terms else toy_operator(args.operator)
    spec = plan_registers(terms, args.select)
    save_circuit(assemble_lcu(spec, args.prepare), args.out)


def cmd_transpile(args) -> None:
    result = transpile(load_circuit(args.inp), load_device(args.device), args.seed)
    save_circuit(result.circuit, args.out)
    _dump(result.to_dict(), Path(args.out).with_suffix(".meta.json"))


def cmd_snip(args) -> None:
    target, dev = load_circuit(args.target), load_device(args.device)
    proto = load_device(args.proto) if args.proto else dev
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = []
    for shape, k, s in snip_experiment(target, dev, proto, parse_shapes(args.shapes), args.K, args.seed,
                                       args.neighbor_mode):
        name = f"w{shape.w}_d{shape.d}_k{k}.json"
        save_circuit(s.circuit, out / name)
        prov.append({"file": name, "k": k, **s.provenance()})
    _dump(prov, out / "provenance.json")


def cmd_simulate(args) -> None:
    sdir = Path(args.snippets)
    try:
        prov = json.loads((sdir / "provenance.json").read_text())
    except FileNotFoundError:
        raise ConfigError(f"{sdir} has no provenance.json") from None
    items = []
    for p in prov:
        c = load_circuit(sdir / p["file"])
        s = Snippet(Shape(p["w"], p["d"]), c, p["start_layer"], tuple(p["qubits"]), p["dropped_gates"],
                    p["total_boundary_gates"], p["relabeling"])
        items.append((s.shape, p["k"], s))
    proto = load_device(args.proto) if args.proto else None
    budget = SimBudget(args.exact_max_width, args.fault_samples, args.state_samples, args.workers)
    write_records(run_snippet_batch(items, load_noise(args.noise), budget, args.seed, proto), args.out)


def _target_shape(args):
    if args.target:
        c = load_circuit(args.target)
        return c.width, c.depth
    if args.target_shape:
        s = Shape.parse(args.target_shape)
        return s.w, s.d
    raise ConfigError("give --target or --target-shape")


def cmd_analyze(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    shape = _target_shape(args)
    aggs = aggregate_records(read_records(args.records), args.threshold)
    _dump([a.to_dict() for a in aggs], out / "aggregates.json")
    eps_w = eps_by_width(aggs)
    summary = capability_summary(eps_w, shape, strict=False)
    emit_summary(summary, out, args.label, {"eps_by_width": {str(w): e for w, e in eps_w.items()},
                                            "target_shape": list(shape)})


def cmd_report(args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        aggs = [ShapeAggregate(**a) for a in json.loads(Path(args.aggregates).read_text())]
    except (FileNotFoundError, json.JSONDecodeError, TypeError) as exc:
        raise ConfigError(f"cannot read aggregates: {exc}") from None
    shape = _target_shape(args)
    emit_volumetric(aggs, shape, out, title=args.label)


def cmd_bench(args) -> None:
    if not args.config:
        raise ConfigError("bench needs --config")
    manifest = run_pipeline(args.config, args.out, seed=args.seed)
    print(json.dumps(manifest["counts"], sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("-o", "--out", help="output file or directory")

    p = argparse.ArgumentParser(prog="svb", description="Subcircuit volumetric benchmarking toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lcu", parents=[common], help="generate an LCU block-encoding circuit")
    s.add_argument("--terms", help="JSON list of {c, p} terms")
    s.add_argument("--operator", choices=sorted(TOY_OPERATORS), help="built-in toy operator")
    s.add_argument("--select", choices=SELECT_MODES, default="unary")
    s.add_argument("--prepare", choices=PREPARE_MODES, default="multiplexed")
    s.set_defaults(func=cmd_lcu, need_out=True)

    s = sub.add_parser("transpile", parents=[common], help="compile to rz/sx/cx on a device")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--device", required=True)
    s.set_defaults(func=cmd_transpile, need_out=True)

    s = sub.add_parser("snip", parents=[common], help="sample snippets from a compiled target")
    s.add_argument("--target", required=True)
    s.add_argument("--device", required=True)
    s.add_argument("--proto")
    s.add_argument("--shapes", required=True, help='e.g. "2x4,3x8"')
    s.add_argument("-K", type=int, default=5)
    s.add_argument("--neighbor-mode", choices=("qubit", "edge"), default="qubit")
    s.set_defaults(func=cmd_snip, need_out=True)

    s = sub.add_parser("simulate", parents=[common], help="estimate snippet process fidelities")
    s.add_argument("--snippets", required=True, help="directory written by 'snip'")
    s.add_argument("--noise", required=True)
    s.add_argument("--proto", help="device giving crosstalk adjacency")
    s.add_argument("--exact-max-width", type=int, default=SimBudget.exact_max_width)
    s.add_argument("--fault-samples", type=int, default=SimBudget.n_fault_samples)
    s.add_argument("--state-samples", type=int, default=SimBudget.n_state_samples)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_simulate, need_out=True)

    for name, fn, help_text in (("analyze", cmd_analyze, "aggregate records into a capability summary"),
                                ("report", cmd_report, "draw the volumetric plot from aggregates")):
        s = sub.add_parser(name, parents=[common], help=help_text)
        if name == "analyze":
            s.add_argument("--records", required=True)
            s.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
        else:
            s.add_argument("--aggregates", required=True)
        s.add_argument("--target", help="compiled target circuit (gives the target shape)")
        s.add_argument("--target-shape", help="target shape as WxD")
        s.add_argument("--label", default="")
        s.set_defaults(func=fn, need_out=True)

    s = sub.add_parser("bench", parents=[common], help="run the whole pipeline from a config")
    s.set_defaults(func=cmd_bench, need_out=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.seed is None:
        args.seed = 0 if args.command != "bench" else None
    try:
        if args.need_out and not args.out:
            raise ConfigError(f"{args.command} needs -o/--out")
        args.func(args)
    except (ConfigError, CircuitParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"svb {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"svb {args.command}: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except SvbError as exc:
        print(f"svb {args.command}: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
