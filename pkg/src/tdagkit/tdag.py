"""Unknown-output T-DAG extraction, forest assembly, pruning and compression."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Optional, Sequence

from .ledger import Ledger, Tio, funded_input, funded_outputs, is_unknown_output
from .script import ScriptMatcher
from .tiograph import AlphaNode, find_alpha_nodes
from .unionfind import UnionFind

ROOT = "root"
INTERNAL = "internal"
LEAF = "leaf"
SUPER_ROOT_KEY = ("super-root",)


@dataclass(frozen=True)
class Vertex:
    """Payload of one T-DAG vertex; ``key`` is its global identity."""

    key: Hashable
    address: Optional[str] = None
    script: Optional[bytes] = None
    spent: bool = False
    synthetic: bool = False
    root_scripts: tuple[bytes, ...] = ()

    @property
    def is_alpha(self) -> bool:
        return isinstance(self.key, tuple) and bool(self.key) and self.key[0] == "alpha"

    def describe(self) -> str:
        if isinstance(self.key, Tio):
            return self.key.describe()
        return ":".join(str(k) for k in self.key)


class TDag:
    """Directed acyclic graph over integer vertex ids with ordered child lists."""

    def __init__(
        self,
        vertices: Sequence[Vertex],
        succ: Sequence[Sequence[int]],
        root_count: Optional[int] = None,
    ) -> None:
        if len(vertices) != len(succ):
            raise ValueError("vertices and adjacency differ in length")
        self.vertices = list(vertices)
        self.succ = [list(s) for s in succ]
        self.pred: list[list[int]] = [[] for _ in self.vertices]
        for u, children in enumerate(self.succ):
            for v in children:
                self.pred[v].append(u)
        self.root_count = len(self.roots) if root_count is None else root_count

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], **kw) -> "TDag":
        succ: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            succ[u].append(v)
        verts = kw.pop("vertices", None) or [Vertex(i) for i in range(n)]
        return cls(verts, succ, **kw)

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"TDag(n={len(self)}, edges={self.edge_count}, roots={len(self.roots)})"

    @property
    def cardinality(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.succ)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, children in enumerate(self.succ) for v in children]

    @property
    def roots(self) -> list[int]:
        return [v for v in range(len(self.vertices)) if not self.pred[v]]

    def outdegree(self, v: int) -> int:
        return len(self.succ[v])

    def indegree(self, v: int) -> int:
        return len(self.pred[v])

    def role(self, v: int) -> str:
        if not self.pred[v]:
            return ROOT
        return LEAF if not self.succ[v] else INTERNAL

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.pred]
        queue = deque(v for v in range(len(indeg)) if indeg[v] == 0)
        order = []
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in self.succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    queue.append(v)
        if len(order) != len(indeg):
            raise ValueError("graph has a cycle")
        return order

    def is_weakly_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.succ[u] + self.pred[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.vertices)

    def is_tree(self) -> bool:
        return len(self.roots) == 1 and all(len(p) <= 1 for p in self.pred)

    def keys(self) -> list[Hashable]:
        return [v.key for v in self.vertices]


def height(tdag: TDag) -> int:
    """Longest source-to-sink path in edges."""
    depth = [0] * len(tdag)
    for u in reversed(tdag.topological_order()):
        if tdag.succ[u]:
            depth[u] = 1 + max(depth[v] for v in tdag.succ[u])
    return max(depth, default=0)


def vertex_degrees(tdag: TDag) -> list[tuple[int, int]]:
    return [(tdag.indegree(v), tdag.outdegree(v)) for v in range(len(tdag))]


# -- stack-based extraction --------------------------------------------------


def _output_vertex(ledger: Ledger, tio: Tio) -> Vertex:
    rec = ledger.output(tio)
    return Vertex(tio, rec.address, rec.script, rec.spent_by is not None)


def _root_vertex(ledger: Ledger, alpha: AlphaNode) -> Vertex:
    tx = ledger.tx(alpha.blockhash, alpha.txid)
    scripts = tuple(o.script for o in tx.vout if o.address is None)
    return Vertex(alpha.key, root_scripts=scripts)


def generate_tdag(ledger: Ledger, alpha: AlphaNode) -> TDag:
    """Grow the unknown-output T-DAG rooted at ``alpha``.

    Funded outputs of the root are added first; every popped output with a
    Null address is followed to its funded input, whose transaction outputs
    become its children.  Addressed and unspent outputs end the expansion.
    """
    index: dict[Hashable, int] = {}
    vertices: list[Vertex] = []
    succ: list[list[int]] = []

    def add(vertex: Vertex) -> tuple[int, bool]:
        if vertex.key in index:
            return index[vertex.key], False
        index[vertex.key] = len(vertices)
        vertices.append(vertex)
        succ.append([])
        return len(vertices) - 1, True

    root, _ = add(_root_vertex(ledger, alpha))
    stack: list[tuple[int, Tio]] = []
    for out in ledger.tx(alpha.blockhash, alpha.txid).outputs():
        v, _ = add(_output_vertex(ledger, out))
        succ[root].append(v)
        stack.append((v, out))
    while stack:
        v, out = stack.pop()
        if is_unknown_output(ledger.output(out)):
            continue
        fi = funded_input(ledger, out)
        if fi is None:
            continue
        for new_out in funded_outputs(ledger, fi):
            w, fresh = add(_output_vertex(ledger, new_out))
            succ[v].append(w)
            if fresh:
                stack.append((w, new_out))
    return TDag(vertices, succ)


# -- forest -----------------------------------------------------------------


@dataclass
class Forest:
    components: list[TDag] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[TDag]:
        return iter(self.components)

    @property
    def stats(self) -> dict[str, int]:
        return {
            "node_count": sum(len(c) for c in self.components),
            "edge_count": sum(c.edge_count for c in self.components),
            "component_count": len(self.components),
        }


def has_unknown_output(ledger: Ledger, alpha: AlphaNode) -> bool:
    return any(o.address is None for o in ledger.tx(alpha.blockhash, alpha.txid).vout)


def build_forest(
    ledger: Ledger,
    unknown_roots_only: bool = True,
    alphas: Optional[Sequence[AlphaNode]] = None,
) -> Forest:
    """Run the stack-based extraction from every alpha node and merge T-DAGs sharing vertices.

    With ``unknown_roots_only`` (the default) only alpha nodes whose
    transaction creates at least one Null-address output seed a T-DAG;
    the others can only produce root-to-addressed-leaf pairs.
    """
    uf = UnionFind()
    gid: dict[Hashable, int] = {}
    payload: list[Vertex] = []
    edges: list[tuple[int, int]] = []
    for alpha in find_alpha_nodes(ledger) if alphas is None else alphas:
        if unknown_roots_only and not has_unknown_output(ledger, alpha):
            continue
        t = generate_tdag(ledger, alpha)
        local = []
        for vert in t.vertices:
            g = gid.get(vert.key)
            if g is None:
                g = gid[vert.key] = uf.add()
                payload.append(vert)
            local.append(g)
        for u, v in t.edges():
            uf.union(local[u], local[v])
            edges.append((local[u], local[v]))
    members = uf.groups()
    comp_edges: dict[int, list[tuple[int, int]]] = {r: [] for r in members}
    seen_edges: set[tuple[int, int]] = set()
    for e in edges:
        if e not in seen_edges:
            seen_edges.add(e)
            comp_edges[uf.find(e[0])].append(e)
    components = []
    for rep in sorted(members):
        ids = members[rep]
        local = {g: i for i, g in enumerate(ids)}
        succ: list[list[int]] = [[] for _ in ids]
        for u, v in comp_edges[rep]:
            succ[local[u]].append(local[v])
        components.append(TDag([payload[g] for g in ids], succ))
    return Forest(components)


def prune_height1(forest: Forest, keep_two_vertex: bool = False) -> Forest:
    """Drop components whose longest path is a single edge.

    ``keep_two_vertex`` retains height-1 components made of exactly two
    vertices (a root with one leaf).
    """
    kept = [
        c
        for c in forest.components
        if height(c) != 1 or (keep_two_vertex and len(c) == 2)
    ]
    return Forest(kept)


def trivial_internal(tdag: TDag, trivial: ScriptMatcher) -> list[int]:
    return [
        v
        for v in range(len(tdag))
        if tdag.pred[v]
        and tdag.succ[v]
        and tdag.vertices[v].script is not None
        and trivial.matches(tdag.vertices[v].script)
    ]


def compress(tdag: TDag, trivial: ScriptMatcher) -> TDag:
    """Elide internal vertices with anyone-can-spend scripts.

    Each removed vertex's predecessors are wired to the outputs it funded,
    transitively across runs of removed vertices.
    """
    drop = set(trivial_internal(tdag, trivial))
    if not drop:
        return tdag
    keep = [v for v in range(len(tdag)) if v not in drop]
    new_id = {v: i for i, v in enumerate(keep)}
    succ: list[list[int]] = []
    for u in keep:
        out: list[int] = []
        seen: set[int] = set()
        stack = list(reversed(tdag.succ[u]))
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            if w in drop:
                stack.extend(reversed(tdag.succ[w]))
            else:
                out.append(new_id[w])
        succ.append(out)
    return TDag([tdag.vertices[v] for v in keep], succ, root_count=tdag.root_count)


def add_super_root(tdag: TDag) -> TDag:
    """Give a multi-root component one synthetic source linked to every old root."""
    roots = tdag.roots
    if len(roots) <= 1:
        return tdag
    vertices = tdag.vertices + [Vertex(SUPER_ROOT_KEY, synthetic=True)]
    succ = tdag.succ + [roots]
    return TDag(vertices, succ, root_count=tdag.root_count)


# -- dumps ------------------------------------------------------------------


def component_record(tdag: TDag, **extra) -> dict:
    """JSON-ready description of one component."""
    ids = [v.describe() for v in tdag.vertices]
    verts = []
    for i, v in enumerate(tdag.vertices):
        entry = {"id": ids[i], "role": tdag.role(i)}
        if v.synthetic:
            entry["synthetic"] = True
        if v.address is not None:
            entry["address"] = v.address
        if v.script is not None:
            entry["script"] = v.script.hex()
        if v.spent:
            entry["spent"] = True
        if v.root_scripts:
            entry["root_scripts"] = [s.hex() for s in v.root_scripts]
        verts.append(entry)
    rec = {
        "roots": [ids[r] for r in tdag.roots],
        "vertices": verts,
        "edges": [[ids[u], ids[v]] for u, v in tdag.edges()],
        "height": height(tdag),
        "cardinality": len(tdag),
        "root_count": tdag.root_count,
    }
    rec.update(extra)
    return rec


def _key_from_id(text: str) -> Hashable:
    parts = text.split(":")
    if parts[0] in ("input", "output") and len(parts) == 4:
        return Tio(parts[0], parts[2], parts[1], int(parts[3]))
    return tuple(parts)


def component_from_record(rec: dict) -> TDag:
    ids = [v["id"] for v in rec["vertices"]]
    index = {k: i for i, k in enumerate(ids)}
    verts = []
    for v in rec["vertices"]:
        verts.append(
            Vertex(
                _key_from_id(v["id"]),
                address=v.get("address"),
                script=bytes.fromhex(v["script"]) if "script" in v else None,
                spent=v.get("spent", False),
                synthetic=v.get("synthetic", False),
                root_scripts=tuple(bytes.fromhex(s) for s in v.get("root_scripts", [])),
            )
        )
    succ: list[list[int]] = [[] for _ in ids]
    for u, v in rec["edges"]:
        succ[index[u]].append(index[v])
    return TDag(verts, succ, root_count=rec.get("root_count"))


def write_forest(forest: Forest, path: str | Path, extras: Sequence[dict] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, comp in enumerate(forest.components):
            extra = extras[i] if extras else {}
            fh.write(json.dumps(component_record(comp, **extra), separators=(",", ":")))
            fh.write("\n")


def read_forest(path: str | Path) -> tuple[Forest, list[dict]]:
    comps, records = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                records.append(rec)
                comps.append(component_from_record(rec))
    return Forest(comps), records


def with_vertices(tdag: TDag, vertices: Sequence[Vertex]) -> TDag:
    return TDag(list(vertices), tdag.succ, root_count=tdag.root_count)

