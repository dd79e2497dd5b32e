"""End-to-end run: ledger file in, forest dump, class report and manifest out."""

from __future__ import annotations

import hashlib
import json
import platform
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, TextIO

from . import __version__
from .cluster import (
    IsoClassReport,
    cluster,
    dropped_json,
    filter_indices,
    labels_for,
    match_component,
    report_csv,
    report_json,
)
from .config import PipelineConfig
from .ledger import ingest, link
from .script import ScriptMatcher, default_matcher, load_rules, trivial_matcher
from .tdag import Forest, add_super_root, build_forest, compress, height, write_forest
from .tiograph import find_alpha_nodes

OUTPUT_FILES = ("forest.jsonl", "classes.csv", "classes.json", "dropped.json")
FIGURE_FILES = ("class_frequency.png", "class_shapes.png")


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")


def stderr_progress(stream: TextIO = sys.stderr) -> Callable[[str, int, int], None]:
    def emit(stage: str, done: int, total: int) -> None:
        print(f"stage={stage} done={done} total={total}", file=stream, flush=True)

    return emit


def _quiet(stage: str, done: int, total: int) -> None:
    pass


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunResult:
    reports: list[IsoClassReport]
    dropped: dict[str, int]
    stats: dict[str, int]
    timings: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)


def _versions() -> dict[str, str]:
    import matplotlib
    import numpy

    return {
        "tdagkit": __version__,
        "python": platform.python_version(),
        "matplotlib": matplotlib.__version__,
        "numpy": numpy.__version__,
    }


def _matchers(cfg: PipelineConfig) -> tuple[ScriptMatcher, ScriptMatcher]:
    extra = load_rules(cfg.trivial_rules_path) if cfg.trivial_rules_path else []
    trivial = trivial_matcher(extra)
    filt = ScriptMatcher(load_rules(cfg.filter_rules_path)) if cfg.filter_rules_path else default_matcher()
    return trivial, filt


def run_pipeline(
    cfg: PipelineConfig,
    progress: Optional[Callable[[str, int, int], None]] = None,
) -> RunResult:
    """Run every stage; outputs appear in ``cfg.output_dir`` only if all succeed."""
    progress = progress or _quiet
    timings: dict[str, float] = {}
    stats: dict[str, int] = {}

    def stage(name: str, fn: Callable, *args):
        t0 = time.perf_counter()
        try:
            out = fn(*args)
        except Exception as exc:
            raise StageError(name, exc) from exc
        timings[name] = round(time.perf_counter() - t0, 6)
        return out

    trivial, filt = stage("config", _matchers, cfg)
    ledger = stage("ingest", ingest, cfg.ledger_path)
    progress("ingest", len(ledger.blocks), len(ledger.blocks))
    stats["blocks"] = len(ledger.blocks)
    stats["transactions"] = ledger.tx_count
    stage("link", link, ledger)
    progress("link", ledger.tx_count, ledger.tx_count)
    alphas = stage("alpha", find_alpha_nodes, ledger)
    stats["alpha_nodes"] = len(alphas)
    progress("alpha", len(alphas), len(alphas))
    forest = stage("extract", build_forest, ledger, True, alphas)
    stats["components_extracted"] = len(forest)
    progress("extract", len(forest), len(forest))
    ids = list(range(len(forest)))

    def prune(f: Forest, ids: list[int]):
        if not cfg.prune_height1:
            return f, ids
        keep = [
            i
            for i, c in enumerate(f.components)
            if height(c) != 1 or (cfg.keep_two_vertex and len(c) == 2)
        ]
        return Forest([f.components[i] for i in keep]), [ids[i] for i in keep]

    forest, ids = stage("prune", prune, forest, ids)
    stats["pruned"] = stats["components_extracted"] - len(forest)
    progress("prune", len(forest), stats["components_extracted"])

    def compress_all(f: Forest):
        out = [compress(c, trivial) for c in f.components]
        changed = sum(1 for a, b in zip(f.components, out) if a is not b)
        return Forest(out), changed

    forest, stats["compressed"] = stage("compress", compress_all, forest)
    progress("compress", len(forest), len(forest))
    forest = stage("super-root", lambda f: Forest([add_super_root(c) for c in f]), forest)
    stats["super_rooted"] = sum(1 for c in forest if c.root_count > 1)
    progress("super-root", len(forest), len(forest))
    labels = stage("label", labels_for, forest.components, cfg.threads)
    progress("label", len(labels), len(forest))
    kept, dropped = stage("filter", filter_indices, forest, filt)
    stats["filtered"] = len(forest) - len(kept)
    progress("filter", len(kept), len(forest))
    kept_forest = Forest([forest.components[i] for i in kept])
    reports = stage(
        "cluster", cluster, kept_forest, [labels[i] for i in kept], [ids[i] for i in kept]
    )
    stats["components"] = len(kept_forest)
    stats["classes"] = len(reports)
    progress("cluster", len(reports), len(reports))

    extras = [
        {"component_id": ids[i], "label": labels[i], "dropped_by": match_component(c, filt)}
        for i, c in enumerate(forest.components)
    ]

    result = RunResult(reports, dropped, stats, timings)
    stage("write", _write_outputs, cfg, forest, extras, result)
    progress("write", 1, 1)
    return result


def _write_outputs(cfg: PipelineConfig, forest: Forest, extras: list[dict], result: RunResult) -> None:
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    try:
        write_forest(forest, tmp / "forest.jsonl", extras)
        (tmp / "classes.csv").write_text(report_csv(result.reports), encoding="utf-8")
        (tmp / "classes.json").write_text(report_json(result.reports), encoding="utf-8")
        (tmp / "dropped.json").write_text(dropped_json(result.dropped), encoding="utf-8")
        names = list(OUTPUT_FILES)
        if cfg.figures:
            from .figures import render_all

            render_all(result.reports, tmp)
            names += FIGURE_FILES
        result.outputs = {n: sha256_file(tmp / n) for n in names}
        manifest = {
            "config_sha256": cfg.digest(),
            "config": json.loads(json.dumps(cfg.__dict__)),
            "input_sha256": sha256_file(Path(cfg.ledger_path)),
            "versions": _versions(),
            "stage_seconds": result.timings,
            "stats": result.stats,
            "outputs": result.outputs,
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        for n in names + ["manifest.json"]:
            (tmp / n).replace(out_dir / n)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
