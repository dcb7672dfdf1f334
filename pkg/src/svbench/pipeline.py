"""End-to-end benchmark runs driven by a single JSON config.

Stages run in order: lcu (optional) -> transpile -> snip -> sim -> analysis
-> report.  Each stage writes its outputs as soon as it finishes, so a failed
run keeps everything produced before the failing stage.

Config keys (relative paths resolve against the config file's directory):

    seed            integer seed for every random stage (default 0)
    label           free text copied into the summary
    lcu             {"operator": NAME} or {"terms": PATH}, plus optional
                    "select" and "prepare" modes
    target          PATH to an already compiled circuit (instead of lcu)
    target_shape    [w, d] when neither lcu nor target is given
    device          PATH, {"line": n} or {"grid": [rows, cols]}
    proto           prototype device in the same forms (default: device)
    noise           PATH or an inline noise-model object
    records         PATH to external fidelity records (skips snip and sim)
    shapes          {"widths": [...], "depths": [...]} or "WxD,WxD,..."
    K               snippets per shape
    sim             {"exact_max_width", "n_fault_samples", "n_state_samples"}
    threshold       exclusion threshold (default 0.07)
    neighbor_mode   "qubit" or "edge"
    workers         thread count for snip and sim (results do not depend on it)
"""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import networkx
import numpy as np
import scipy

from . import __version__
from .analysis import DEFAULT_THRESHOLD, aggregate_records, capability_summary, eps_by_width
from .circuit import Circuit, DeviceModel, load_circuit, load_device, save_circuit
from .errors import ConfigError, StageError, SvbError
from .lcu import assemble_lcu, load_terms, plan_registers, toy_operator
from .noise import load_noise, noise_from_dict
from .report import emit_summary, emit_volumetric
from .sim import SimBudget, read_records, run_snippet_batch, write_records
from .snip import Shape, parse_shapes, shape_grid, snip_experiment
from .transpile import transpile

BUNDLE_FILES = ("records.jsonl", "aggregates.json", "summary.json", "summary.csv",
                "volumetric.svg", "volumetric.csv")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


class _Config:
    def __init__(self, data: dict, base: Path):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        self.data = data
        self.base = base
        self.inputs: dict[str, Path] = {}

    def get(self, key, default=None):
        return self.data.get(key, default)

    def path(self, key, value) -> Path:
        p = Path(value)
        p = p if p.is_absolute() else self.base / p
        if not p.exists():
            raise ConfigError(f"{key}: file not found: {value}")
        self.inputs[key] = p
        return p

    def device(self, key) -> DeviceModel | None:
        spec = self.data.get(key)
        if spec is None:
            return None
        if isinstance(spec, str):
            return load_device(self.path(key, spec))
        if isinstance(spec, dict) and "line" in spec:
            return DeviceModel.line(int(spec["line"]))
        if isinstance(spec, dict) and "grid" in spec:
            rows, cols = spec["grid"]
            return DeviceModel.grid(int(rows), int(cols))
        if isinstance(spec, dict) and "qubits" in spec:
            from .circuit import device_from_dict
            return device_from_dict(spec)
        raise ConfigError(f"{key}: expected a path, {{'line': n}}, {{'grid': [r, c]}} or a device object")

    def shapes(self) -> list[Shape]:
        spec = self.data.get("shapes")
        if isinstance(spec, str):
            return parse_shapes(spec)
        if isinstance(spec, dict):
            return shape_grid(spec["widths"], spec["depths"])
        if isinstance(spec, list):
            return [Shape(int(w), int(d)) for w, d in spec]
        raise ConfigError("shapes must be 'WxD,...', {'widths': [...], 'depths': [...]} or [[w, d], ...]")


def load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        return json.loads(path.read_text()), path.resolve().parent
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except ConfigError:
                raise
            except (SvbError, ValueError, KeyError, OSError) as exc:
                raise StageError(name, exc) from exc
        return run
    return wrap


@_stage("lcu")
def _stage_lcu(cfg: _Config, out: Path) -> Circuit | None:
    spec = cfg.get("lcu")
    if spec is None:
        return None
    if "operator" in spec:
        terms = toy_operator(spec["operator"])
    elif "terms" in spec:
        terms = load_terms(cfg.path("lcu.terms", spec["terms"]))
    else:
        raise ConfigError("lcu needs 'operator' or 'terms'")
    lspec = plan_registers(terms, spec.get("select", "unary"))
    circuit = assemble_lcu(lspec, spec.get("prepare", "multiplexed"))
    save_circuit(circuit, out / "target" / "lcu.json")
    return circuit


@_stage("transpile")
def _stage_transpile(circuit: Circuit, dev: DeviceModel, seed: int, out: Path) -> Circuit:
    result = transpile(circuit, dev, seed)
    save_circuit(result.circuit, out / "target" / "target.json")
    _dump(result.to_dict(), out / "target" / "transpile.json")
    return result.circuit


@_stage("snip")
def _stage_snip(target, dev, proto, shapes, K, seed, mode, workers, out: Path):
    items = snip_experiment(target, dev, proto, shapes, K, seed, mode, workers)
    sdir = out / "snippets"
    sdir.mkdir(exist_ok=True)
    prov = []
    for shape, k, s in items:
        name = f"w{shape.w}_d{shape.d}_k{k}.json"
        save_circuit(s.circuit, sdir / name)
        prov.append({"file": name, "k": k, **s.provenance()})
    _dump(prov, sdir / "provenance.json")
    return items


@_stage("sim")
def _stage_sim(items, nm, budget, seed, proto, out: Path):
    records = run_snippet_batch(items, nm, budget, seed, proto)
    write_records(records, out / "records.jsonl")
    return records


@_stage("analysis")
def _stage_analysis(records, target_shape, threshold, out: Path):
    aggs = aggregate_records(records, threshold)
    _dump([a.to_dict() for a in aggs], out / "aggregates.json")
    eps_w = eps_by_width(aggs)
    summary = capability_summary(eps_w, target_shape, strict=False)
    return aggs, eps_w, summary


@_stage("report")
def _stage_report(aggs, eps_w, summary, target_shape, label, out: Path):
    extra = {"eps_by_width": {str(w): e for w, e in eps_w.items()},
             "target_shape": list(target_shape)}
    emit_summary(summary, out, label, extra)
    emit_volumetric(aggs, target_shape, out, title=label)


def run_pipeline(config, out_dir, seed: int | None = None, base_dir=None) -> dict:
    """Run every configured stage and write the bundle into ``out_dir``.

    ``config`` is a dict or a path to a JSON file; ``seed`` overrides the
    config's seed.  Returns the manifest.
    """
    if isinstance(config, (str, Path)):
        cfg_path = Path(config)
        data, base = load_config(cfg_path)
        cfg = _Config(data, base)
        cfg.inputs["config"] = cfg_path
    else:
        cfg = _Config(dict(config), Path(base_dir or "."))
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    out = Path(out_dir)
    (out / "target").mkdir(parents=True, exist_ok=True)
    label = str(cfg.get("label", ""))
    threshold = float(cfg.get("threshold", DEFAULT_THRESHOLD))

    dev = cfg.device("device")
    proto = cfg.device("proto") or dev
    generated = _stage_lcu(cfg, out)
    target = None
    if generated is not None:
        if dev is None:
            raise ConfigError("a device is required to compile the generated circuit")
        target = _stage_transpile(generated, dev, seed, out)
    elif cfg.get("target"):
        target = load_circuit(cfg.path("target", cfg.get("target")))
        save_circuit(target, out / "target" / "target.json")

    if target is not None:
        target_shape = (target.width, target.depth)
    elif cfg.get("target_shape"):
        target_shape = tuple(int(v) for v in cfg.get("target_shape"))
    else:
        raise ConfigError("need one of 'lcu', 'target' or 'target_shape'")

    stages = ["lcu"] if generated is not None else []
    stages += ["transpile"] if generated is not None else []
    if cfg.get("records"):
        records = read_records(cfg.path("records", cfg.get("records")))
        write_records(records, out / "records.jsonl")
        stages.append("ingest")
    else:
        if target is None or dev is None:
            raise ConfigError("simulation needs a target circuit and a device")
        spec = cfg.get("noise")
        if spec is None:
            raise ConfigError("simulation needs a noise model (or supply 'records')")
        nm = load_noise(cfg.path("noise", spec)) if isinstance(spec, str) else noise_from_dict(spec)
        K = int(cfg.get("K", 5))
        workers = cfg.get("workers")
        items = _stage_snip(target, dev, proto, cfg.shapes(), K, seed,
                            cfg.get("neighbor_mode", "qubit"), workers, out)
        try:
            budget = SimBudget(**cfg.get("sim", {}), workers=workers)
        except TypeError as exc:
            raise ConfigError(f"sim: {exc}") from None
        records = _stage_sim(items, nm, budget, seed, proto, out)
        stages += ["snip", "sim"]
    aggs, eps_w, summary = _stage_analysis(records, target_shape, threshold, out)
    _stage_report(aggs, eps_w, summary, target_shape, label, out)
    stages += ["analysis", "report"]

    manifest = {
        "schema_version": 1,
        "seed": seed,
        "stages": stages,
        "target_shape": list(target_shape),
        "versions": {"svbench": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "networkx": networkx.__version__},
        "inputs": {k: sha256_file(p) for k, p in sorted(cfg.inputs.items())},
        "config": cfg.data,
        "outputs": {name: sha256_file(out / name) for name in BUNDLE_FILES if (out / name).exists()},
        "counts": {"records": len(records), "aggregates": len(aggs),
                   "snippets": len(list((out / "snippets").glob("w*_d*_k*.json")))
                   if (out / "snippets").exists() else 0},
    }
    _dump(manifest, out / "manifest.json")
    return manifest

