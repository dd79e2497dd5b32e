"""Group normalized T-DAGs by canonical label and filter known root scripts."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .canon import canonical_label
from .script import ScriptMatcher, default_matcher
from .tdag import Forest, TDag, height

__all__ = [
    "IsoClassReport",
    "cluster",
    "component_stats",
    "default_matcher",
    "dropped_json",
    "filter_by_script",
    "filter_indices",
    "labels_for",
    "match_component",
    "report_csv",
    "report_json",
]

CSV_HEADER = ["label", "count", "height", "cardinality", "edges", "roots"]
SAMPLE_IDS = 5


@dataclass
class IsoClassReport:
    label: str
    count: int
    height: int
    cardinality: int
    edges: int
    roots: int
    sample_component_ids: list = field(default_factory=list)

    @property
    def stats(self) -> tuple[int, int, int, int]:
        return (self.height, self.cardinality, self.edges, self.roots)


def component_stats(c: TDag) -> tuple[int, int, int, int]:
    """(height, cardinality, edges, roots) as reported for one component.

    Height, edges and roots describe the component before super-rooting;
    cardinality counts the normalized vertex set.
    """
    synthetic = [v for v in range(len(c)) if c.vertices[v].synthetic]
    h = height(c)
    edges = c.edge_count
    if synthetic:
        h -= 1
        edges -= sum(len(c.succ[v]) for v in synthetic)
    return (h, len(c), edges, c.root_count)


def _label_one(c: TDag) -> str:
    return canonical_label(c)


def labels_for(components: Sequence[TDag], threads: int = 1) -> list[str]:
    """Canonical label per component, in input order regardless of ``threads``."""
    if threads <= 1 or len(components) < 2:
        return [canonical_label(c) for c in components]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, len(components) // (threads * 4))
        return list(pool.map(_label_one, components, chunksize=chunk))


def cluster(
    forest: Forest,
    labels: Optional[Sequence[str]] = None,
    ids: Optional[Sequence] = None,
    threads: int = 1,
) -> list[IsoClassReport]:
    """One report per distinct label, by count descending then label ascending."""
    comps = forest.components
    labels = labels_for(comps, threads) if labels is None else labels
    ids = list(range(len(comps))) if ids is None else ids
    groups: dict[str, IsoClassReport] = {}
    for c, lbl, cid in zip(comps, labels, ids):
        st = component_stats(c)
        rep = groups.get(lbl)
        if rep is None:
            groups[lbl] = IsoClassReport(lbl, 1, *st, sample_component_ids=[cid])
            continue
        if rep.stats != st:
            raise AssertionError(
                f"class stats differ within label {lbl[:40]}...: {rep.stats} vs {st}"
            )
        rep.count += 1
        if len(rep.sample_component_ids) < SAMPLE_IDS:
            rep.sample_component_ids.append(cid)
    out = sorted(groups.values(), key=lambda r: (-r.count, r.label))
    assert sum(r.count for r in out) == len(comps)
    return out


def root_scripts(c: TDag) -> list[bytes]:
    return [s for v in c.vertices for s in v.root_scripts]


def filter_by_script(forest: Forest, matcher: ScriptMatcher) -> tuple[Forest, dict[str, int]]:
    """Drop components whose root transactions' unknown-output scripts match a rule.

    A dropped component is counted under the first rule that matches, trying
    root scripts in vertex order.  :func:`filter_indices` also returns the
    surviving positions.
    """
    kept_idx, dropped = filter_indices(forest, matcher)
    return Forest([forest.components[i] for i in kept_idx]), dropped


def match_component(c: TDag, matcher: ScriptMatcher) -> Optional[str]:
    """First rule matching any root script of ``c``."""
    for s in root_scripts(c):
        hit = matcher.match(s)
        if hit is not None:
            return hit
    return None


def filter_indices(forest: Forest, matcher: ScriptMatcher) -> tuple[list[int], dict[str, int]]:
    kept: list[int] = []
    dropped: dict[str, int] = {}
    for i, c in enumerate(forest.components):
        hit = match_component(c, matcher)
        if hit is None:
            kept.append(i)
        else:
            dropped[hit] = dropped.get(hit, 0) + 1
    return kept, dict(sorted(dropped.items()))


def report_csv(reports: Sequence[IsoClassReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow([r.label, r.count, r.height, r.cardinality, r.edges, r.roots])
    return buf.getvalue()


def report_json(reports: Sequence[IsoClassReport]) -> str:
    return json.dumps([asdict(r) for r in reports], indent=1) + "\n"


def dropped_json(dropped: dict[str, int]) -> str:
    return json.dumps(dict(sorted(dropped.items())), indent=1) + "\n"
