import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

import mmgou as mg
from mmgou.cli import main
from mmgou.config import dump_config, parse_config, parse_config_file
from mmgou.errors import ConfigError
from mmgou.runner import run

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _minimal_doc(**overrides):
    doc = {
        "schema_version": 1,
        "task": "solve-kappa",
        "model": {
            "kind": "mmlifs",
            "states": ["s"],
            "P": [[1.0]],
            "coefficients": [
                {
                    "from": "s",
                    "to": "s",
                    "log_abs": {"family": "normal", "mean": -0.25, "var": 0.25},
                    "intercept": {"family": "normal", "mean": 0.0, "var": 1.0},
                }
            ],
        },
    }
    doc.update(overrides)
    return doc


def test_minimal_document_fills_defaults():
    config = parse_config(_minimal_doc())
    assert config.seed == 0
    assert config.samples == 100_000
    assert config.tolerance == 1e-6
    assert config.quantile_window == (0.99, 0.9999)
    assert config.output_formats == ("csv", "json")
    assert isinstance(config.model, mg.MmlifsSpec)


def test_roundtrip_equality():
    config = parse_config(_minimal_doc(seed=42, samples=5000))
    again = parse_config(yaml.safe_load(dump_config(config)))
    assert again == config
    assert again.to_document() == config.to_document()


def test_unknown_keys_rejected_with_paths():
    doc = _minimal_doc()
    doc["bogus"] = 1
    doc["model"]["extra"] = 2
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    messages = {path for path, _ in err.value.errors}
    assert "$.bogus" in messages
    assert "$.model.extra" in messages


def test_all_errors_reported_at_once():
    doc = _minimal_doc()
    doc["samples"] = 10  # below the floor
    doc["tolerance"] = -1.0
    doc["model"]["coefficients"][0]["log_abs"] = {
        "family": "normal",
        "mean": 0.0,
        "var": -2.0,
    }
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    paths = [path for path, _ in err.value.errors]
    assert "$.samples" in paths
    assert "$.tolerance" in paths
    assert any("log_abs" in p for p in paths)


def test_negative_variance_named_field():
    doc = _minimal_doc()
    doc["model"]["coefficients"][0]["intercept"]["var"] = -1.0
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert any("intercept" in path for path, _ in err.value.errors)


def test_exactly_one_chain_parameterization():
    doc = _minimal_doc()
    doc["model"]["Q"] = [[0.0]]
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert any(
        "exactly one chain parameterization" in msg for _, msg in err.value.errors
    )


def test_unknown_family_and_task():
    doc = _minimal_doc(task="fly-to-the-moon")
    doc["model"]["coefficients"][0]["log_abs"]["family"] = "cauchy"
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    paths = [p for p, _ in err.value.errors]
    assert "$.task" in paths
    assert any("family" in p for p in paths)


def test_shipped_configs_parse():
    for name in sorted(CONFIG_DIR.glob("*.yaml")):
        config = parse_config_file(name)
        assert config.task in (
            "solve-kappa",
            "simulate-tail",
            "constants",
            "check-conditions",
            "validate",
            "mmgou-demo",
            "upsilon-compare",
        )


def test_cli_solve_kappa_json(tmp_path):
    status = main(
        [
            "solve-kappa",
            "--config",
            str(CONFIG_DIR / "brownian1d.yaml"),
            "--out",
            str(tmp_path),
        ]
    )
    assert status == 0
    payload = json.loads((tmp_path / "solve-kappa.json").read_text())
    assert abs(payload["results"]["kappa"] - 1.0) <= 1e-8
    assert payload["results"]["residual"] <= 1e-10
    assert (tmp_path / "solve-kappa.csv").exists()


def test_cli_rejects_bad_config(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\ntask: solve-kappa\n")
    assert main(["solve-kappa", "--config", str(bad)]) == 2


def test_cli_override_seed_and_samples(tmp_path):
    status = main(
        [
            "simulate-tail",
            "--config",
            str(CONFIG_DIR / "perpetuity1d.yaml"),
            "--out",
            str(tmp_path),
            "--samples",
            "20000",
            "--seed",
            "99",
        ]
    )
    assert status == 0
    payload = json.loads((tmp_path / "simulate-tail.json").read_text())
    assert payload["seed"] == 99
    assert payload["results"]["n_samples"] == 20_000
    dump = (tmp_path / "samples.txt").read_text().splitlines()
    assert len(dump) == 20_000
    state, value, weight = dump[0].split()
    assert state == "s" and weight == "1.0"
    float(value)


def test_cli_format_selection(tmp_path):
    status = main(
        [
            "solve-kappa",
            "--config",
            str(CONFIG_DIR / "brownian1d.yaml"),
            "--out",
            str(tmp_path),
            "--format",
            "csv",
        ]
    )
    assert status == 0
    assert (tmp_path / "solve-kappa.csv").exists()
    assert not (tmp_path / "solve-kappa.json").exists()


def test_run_determinism_across_workers(tmp_path):
    config = parse_config_file(CONFIG_DIR / "perpetuity1d.yaml").replace(
        task="constants", samples=16_000
    )
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    assert run(config.replace(workers=1), out_dir=out1) == 0
    assert run(config.replace(workers=2), out_dir=out2) == 0
    assert (out1 / "constants.json").read_bytes() == (out2 / "constants.json").read_bytes()
    assert (out1 / "constants.csv").read_bytes() == (out2 / "constants.csv").read_bytes()


def test_mmgou_demo_outputs(tmp_path):
    config = parse_config_file(CONFIG_DIR / "mmgou_demo.yaml").replace(horizon=5.0)
    assert run(config, out_dir=tmp_path) == 0
    rows = (tmp_path / "path.txt").read_text().splitlines()
    assert len(rows) > 100
    t, state, z, e, v = rows[1].split()
    assert state in ("calm", "storm")
    for x in (t, z, e, v):
        float(x)


def test_validate_exits_zero_on_shipped_models(tmp_path):
    for name in ("perpetuity1d.yaml", "two_state_map.yaml"):
        config = parse_config_file(CONFIG_DIR / name).replace(
            task="validate", samples=8_000
        )
        assert run(config, out_dir=tmp_path / name) == 0


def test_upsilon_compare_reports_deviation(tmp_path):
    config = parse_config_file(CONFIG_DIR / "two_state_map.yaml").replace(samples=20_000)
    assert run(config, out_dir=tmp_path) == 0
    payload = json.loads((tmp_path / "upsilon-compare.json").read_text())
    results = payload["results"]
    assert results["max_z_closed_vs_mc"] < 3.5
    assert results["max_abs_deviation_paper_vs_closed"] > 1e-3
