from __future__ import annotations

import csv
import json

import pytest

from tdagkit.config import PipelineConfig
from tdagkit.ledger import write_ledger
from tdagkit.pipeline import OUTPUT_FILES, StageError, run_pipeline, sha256_file, stderr_progress
from tdagkit.synth import generate, top10_spec


@pytest.fixture(scope="module")
def ledger_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("led") / "l.jsonl"
    write_ledger(generate(top10_spec()), p)
    return p


def _cfg(ledger_file, out, **kw):
    return PipelineConfig(str(ledger_file), str(out), **kw)


def test_outputs_and_manifest(ledger_file, tmp_path):
    res = run_pipeline(_cfg(ledger_file, tmp_path / "o"))
    out = tmp_path / "o"
    manifest = json.loads((out / "manifest.json").read_text())
    for name in OUTPUT_FILES + ("class_frequency.png", "class_shapes.png"):
        assert manifest["outputs"][name] == sha256_file(out / name)
    assert set(manifest) >= {"config_sha256", "input_sha256", "versions", "stage_seconds"}
    assert res.stats["pruned"] == 10 and res.stats["compressed"] == 3
    assert not list(out.glob(".partial-*"))


def test_deterministic_across_threads(ledger_file, tmp_path):
    run_pipeline(_cfg(ledger_file, tmp_path / "a", threads=1))
    run_pipeline(_cfg(ledger_file, tmp_path / "b", threads=2))
    for name in OUTPUT_FILES + ("class_frequency.png", "class_shapes.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_prune_toggle(ledger_file, tmp_path):
    res = run_pipeline(_cfg(ledger_file, tmp_path / "o", prune_height1=False, figures=False))
    rows = list(csv.DictReader(open(tmp_path / "o" / "classes.csv")))
    h1 = [r for r in rows if r["height"] == "1"]
    assert len(h1) == 1 and h1[0]["count"] == "10" and h1[0]["edges"] == "1"
    assert res.stats["pruned"] == 0


def test_stage_failure_leaves_no_outputs(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    with pytest.raises(StageError) as err:
        run_pipeline(_cfg(bad, tmp_path / "o"))
    assert err.value.stage == "ingest"
    assert not (tmp_path / "o").exists()


def test_progress_lines(ledger_file, tmp_path):
    import io

    buf = io.StringIO()
    run_pipeline(_cfg(ledger_file, tmp_path / "o", figures=False), stderr_progress(buf))
    lines = buf.getvalue().splitlines()
    assert lines and all(line.startswith("stage=") and " done=" in line and " total=" in line for line in lines)
