import json
from pathlib import Path

import pytest

from svbench.circuit import DeviceModel, load_circuit, save_circuit, serialize_device, validate_compiled
from svbench.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, main
from svbench.errors import ConfigError, StageError
from svbench.pipeline import BUNDLE_FILES, run_pipeline
from svbench.sim import FidelityRecord, write_records

ROOT = Path(__file__).resolve().parents[1]
TOY = ROOT / "configs" / "toy.json"


@pytest.fixture(scope="module")
def toy_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    return out, run_pipeline(TOY, out)


# --- pipeline ------------------------------------------------------------------------------


def test_toy_bundle_counts(toy_bundle):
    out, manifest = toy_bundle
    assert manifest["counts"] == {"snippets": 45, "records": 45, "aggregates": 9}
    assert manifest["stages"] == ["lcu", "transpile", "snip", "sim", "analysis", "report"]
    for name in BUNDLE_FILES + ("manifest.json",):
        assert (out / name).exists(), name
    assert len(json.loads((out / "snippets" / "provenance.json").read_text())) == 45


def test_toy_target_is_fully_compiled(toy_bundle):
    out, manifest = toy_bundle
    target = load_circuit(out / "target" / "target.json")
    assert validate_compiled(target, DeviceModel.line(3)).ok
    assert manifest["target_shape"] == [target.width, target.depth]


def test_manifest_records_provenance(toy_bundle):
    out, manifest = toy_bundle
    assert manifest["seed"] == 7
    assert set(manifest["versions"]) >= {"svbench", "numpy", "scipy", "networkx", "python"}
    assert set(manifest["inputs"]) == {"config"}
    assert manifest["outputs"]["summary.json"] and manifest["config"]["K"] == 5


def test_seed_override_changes_snippets(toy_bundle, tmp_path):
    out, _ = toy_bundle
    run_pipeline(TOY, tmp_path, seed=8)
    assert (tmp_path / "snippets" / "provenance.json").read_text() != \
        (out / "snippets" / "provenance.json").read_text()


def test_external_records_skip_simulation(tmp_path):
    recs = [FidelityRecord(w, d, k, (1 - 0.01) ** (w * d), method="external")
            for w in (1, 2, 3) for d in (2, 4) for k in range(3)]
    write_records(recs, tmp_path / "measured.jsonl")
    config = {"target_shape": [3, 20], "records": "measured.jsonl", "label": "measured"}
    manifest = run_pipeline(config, tmp_path / "out", base_dir=tmp_path)
    assert manifest["stages"] == ["ingest", "analysis", "report"]
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["eps_2"] == pytest.approx(0.01) and summary["scalability"] == pytest.approx(1.0)


def test_precompiled_target_with_device_file(tmp_path):
    dev = DeviceModel.line(3)
    (tmp_path / "dev.json").write_text(serialize_device(dev))
    toy_out = tmp_path / "toy"
    run_pipeline(TOY, toy_out)
    save_circuit(load_circuit(toy_out / "target" / "target.json"), tmp_path / "target.json")
    config = {"target": "target.json", "device": "dev.json", "noise": {"*": {"dep": 0.01}},
              "shapes": "1x2,2x2", "K": 2}
    manifest = run_pipeline(config, tmp_path / "out", base_dir=tmp_path)
    assert manifest["stages"] == ["snip", "sim", "analysis", "report"]
    assert set(manifest["inputs"]) == {"target", "device"}


def test_stage_failure_names_stage_and_keeps_outputs(tmp_path):
    config = json.loads(TOY.read_text())
    config["shapes"] = "5x2"
    with pytest.raises(StageError) as info:
        run_pipeline(config, tmp_path)
    assert info.value.stage == "snip"
    assert (tmp_path / "target" / "target.json").exists()
    assert not (tmp_path / "records.jsonl").exists()


@pytest.mark.parametrize("patch", [{"noise": None}, {"device": None}, {"shapes": 3}, {"device": "missing.json"}])
def test_config_errors(tmp_path, patch):
    config = json.loads(TOY.read_text())
    for k, v in patch.items():
        if v is None:
            config.pop(k)
        else:
            config[k] = v
    with pytest.raises(ConfigError):
        run_pipeline(config, tmp_path, base_dir=tmp_path)


# --- CLI --------------------------------------------------------------------------------------


def test_cli_bench_and_exit_codes(tmp_path, capsys):
    assert main(["bench", "--config", str(TOY), "-o", str(tmp_path / "b")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["records"] == 45
    assert main(["bench", "-o", str(tmp_path / "c")]) == EXIT_CONFIG
    assert main(["bench", "--config", str(tmp_path / "nope.json"), "-o", str(tmp_path / "c")]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    bad = json.loads(TOY.read_text())
    bad["shapes"] = "5x2"
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    assert main(["bench", "--config", str(tmp_path / "bad.json"), "-o", str(tmp_path / "d")]) == EXIT_STAGE


def test_cli_stage_by_stage(tmp_path):
    (tmp_path / "dev.json").write_text(serialize_device(DeviceModel.line(3)))
    (tmp_path / "noise.json").write_text(json.dumps({"*": {"dep": 0.005}}))
    t = str(tmp_path)
    assert main(["lcu", "--operator", "two_qubit_mixed", "-o", f"{t}/lcu.json"]) == EXIT_OK
    assert main(["transpile", "--in", f"{t}/lcu.json", "--device", f"{t}/dev.json", "-o", f"{t}/target.json"]) == 0
    assert json.loads((tmp_path / "target.meta.json").read_text())["width"] == 3
    assert main(["snip", "--target", f"{t}/target.json", "--device", f"{t}/dev.json", "--shapes", "1x2,2x4,3x4",
                 "-K", "3", "--seed", "1", "-o", f"{t}/snips"]) == 0
    assert main(["simulate", "--snippets", f"{t}/snips", "--noise", f"{t}/noise.json", "-o", f"{t}/rec.jsonl"]) == 0
    assert len((tmp_path / "rec.jsonl").read_text().splitlines()) == 9
    assert main(["analyze", "--records", f"{t}/rec.jsonl", "--target", f"{t}/target.json", "-o", f"{t}/an"]) == 0
    summary = json.loads((tmp_path / "an" / "summary.json").read_text())
    assert summary["eps_2"] == pytest.approx(0.005, rel=0.1)
    assert main(["report", "--aggregates", f"{t}/an/aggregates.json", "--target-shape", "3x20",
                 "-o", f"{t}/rep"]) == 0
    assert (tmp_path / "rep" / "volumetric.svg").exists()


def test_cli_missing_output_and_inputs(tmp_path):
    assert main(["lcu", "--operator", "two_qubit_mixed"]) == EXIT_CONFIG
    assert main(["lcu", "-o", str(tmp_path / "x.json")]) == EXIT_CONFIG
    assert main(["simulate", "--snippets", str(tmp_path), "--noise", "n.json", "-o", str(tmp_path / "r")]) \
        == EXIT_CONFIG
    assert main(["analyze", "--records", str(tmp_path / "none.jsonl"), "--target-shape", "2x2",
                 "-o", str(tmp_path / "a")]) == EXIT_CONFIG
