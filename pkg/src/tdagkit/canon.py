"""Total ordering, class representatives and canonical labels for T-DAGs.

Ordering of sub-DAGs (``compare``): smaller reachable-vertex count first,
then smaller root outdegree, then the lexicographic comparison of the
sorted child sub-DAG sequences.  Siblings that compare equal are then
ordered by the sorted indegree sequence of their children (``delta_reorder``).

A label is produced by a breadth-first walk: ids are handed out in FIFO
discovery order starting at 0 for the root, and each vertex contributes one
clause listing its children's ids.  Clauses are comma-separated ids, joined
by ``:`` and terminated by ``;``.  Label format v1: decimal ids, no spaces.

When sharing (indegree >= 2) leaves siblings tied after both keys, the
representative is the tie resolution with the lexicographically smallest
clause sequence.  Tied siblings whose dominated regions can be swapped by an
automorphism are interchangeable and are not branched on; for trees this
always applies, so trees are labeled in a single pass.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional, Sequence

from .tdag import TDag

LABEL_FORMAT_VERSION = 1
MAX_SEARCH_LEAVES = 200_000

LT, EQ, GT = -1, 0, 1


class CanonError(ValueError):
    pass


class LabelParseError(CanonError):
    def __init__(self, offset: int, message: str) -> None:
        self.offset = offset
        super().__init__(f"byte {offset}: {message}")


@dataclass(frozen=True)
class SubDagView:
    """The sub-DAG induced on everything reachable from ``root``."""

    tdag: TDag
    root: int

    @property
    def reach(self) -> frozenset[int]:
        seen = {self.root}
        stack = [self.root]
        while stack:
            for v in self.tdag.succ[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return frozenset(seen)

    @property
    def size(self) -> int:
        return len(self.reach)


@dataclass(frozen=True)
class ClassRepresentative:
    """Canonically ordered T-DAG: vertex ``i`` carries label id ``i``."""

    tdag: TDag
    label: str

    @property
    def clauses(self) -> list[list[int]]:
        return [list(c) for c in self.tdag.succ]


def _single_root(tdag: TDag) -> int:
    roots = tdag.roots
    if len(roots) != 1:
        raise CanonError(f"expected a single-source T-DAG, found {len(roots)} sources")
    return roots[0]


def _topo(succ: Sequence[Sequence[int]]) -> list[int]:
    indeg = [0] * len(succ)
    for children in succ:
        for v in children:
            indeg[v] += 1
    queue = deque(v for v in range(len(succ)) if indeg[v] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    if len(order) != len(succ):
        raise CanonError("graph has a cycle")
    return order


def reach_sizes(succ: Sequence[Sequence[int]], topo: Optional[list[int]] = None) -> list[int]:
    """|reach(v)| for every vertex, counting shared descendants once per sub-DAG."""
    topo = _topo(succ) if topo is None else topo
    bits = [0] * len(succ)
    for u in reversed(topo):
        b = 1 << u
        for v in succ[u]:
            b |= bits[v]
        bits[u] = b
    return [b.bit_count() for b in bits]


def preceq_ranks(succ: Sequence[Sequence[int]], sizes: Optional[list[int]] = None) -> list[int]:
    """Dense rank of every vertex's sub-DAG under the total preorder.

    Equal ranks mean the sub-DAGs are equal under the ordering.  Children
    always reach strictly fewer vertices than their parent, so ranking size
    classes in ascending order sees every child ranked before its parent.
    """
    sizes = reach_sizes(succ) if sizes is None else sizes
    by_size: dict[int, list[int]] = {}
    for v, s in enumerate(sizes):
        by_size.setdefault(s, []).append(v)
    rank = [0] * len(succ)
    next_rank = 0
    for s in sorted(by_size):
        keys = {v: (len(succ[v]), tuple(sorted(rank[c] for c in succ[v]))) for v in by_size[s]}
        distinct = sorted(set(keys.values()))
        pos = {k: next_rank + i for i, k in enumerate(distinct)}
        for v, k in keys.items():
            rank[v] = pos[k]
        next_rank += len(distinct)
    return rank


def compare(s: SubDagView, t: SubDagView) -> int:
    """LT, EQ or GT for ``s`` against ``t`` under the T-DAG total preorder."""
    if s.tdag is t.tdag:
        ranks = preceq_ranks(s.tdag.succ)
        a, b = ranks[s.root], ranks[t.root]
    else:
        offset = len(s.tdag)
        succ = [list(c) for c in s.tdag.succ] + [[v + offset for v in c] for c in t.tdag.succ]
        ranks = preceq_ranks(succ)
        a, b = ranks[s.root], ranks[t.root + offset]
    return (a > b) - (a < b)


def delta_key(tdag: TDag, v: int) -> tuple[int, ...]:
    """Non-decreasing indegrees (in the whole T-DAG) of ``v``'s children."""
    return tuple(sorted(len(tdag.pred[c]) for c in tdag.succ[v]))


def preceq_sort(tdag: TDag) -> TDag:
    """T*: every child list sorted non-decreasingly by the sub-DAG order (stable)."""
    rank = preceq_ranks(tdag.succ)
    succ = [sorted(children, key=rank.__getitem__) for children in tdag.succ]
    return TDag(tdag.vertices, succ, root_count=tdag.root_count)


def delta_reorder(tdag: TDag) -> TDag:
    """Reorder each run of order-equal siblings by their children's indegree sequences.

    Child lists must already be sorted by :func:`preceq_sort`; siblings that
    are not order-equal keep their positions.
    """
    rank = preceq_ranks(tdag.succ)
    dkey = [delta_key(tdag, v) for v in range(len(tdag))]
    succ = []
    for children in tdag.succ:
        out: list[int] = []
        i = 0
        while i < len(children):
            j = i
            while j < len(children) and rank[children[j]] == rank[children[i]]:
                j += 1
            out.extend(sorted(children[i:j], key=dkey.__getitem__))
            i = j
        succ.append(out)
    return TDag(tdag.vertices, succ, root_count=tdag.root_count)


def refine_colors(tdag: TDag, initial: Sequence) -> list[int]:
    """Colour refinement over parents and children, seeded with ``initial``.

    Colours are integers assigned from sorted signatures, so they are
    invariant under vertex renaming.
    """
    n = len(tdag)
    color = _dense(initial)
    count = len(set(color))
    while True:
        sigs = [
            (
                color[v],
                tuple(sorted(color[p] for p in tdag.pred[v])),
                tuple(sorted(color[c] for c in tdag.succ[v])),
            )
            for v in range(n)
        ]
        new = _dense(sigs)
        new_count = len(set(new))
        if new_count == count:
            return new
        color, count = new, new_count


def _dense(values: Sequence) -> list[int]:
    pos = {k: i for i, k in enumerate(sorted(set(values)))}
    return [pos[v] for v in values]


def dominator_tree(tdag: TDag, root: int) -> list[int]:
    """Immediate dominator of each vertex reachable from ``root`` (-1 otherwise)."""
    n = len(tdag)
    idom = [-1] * n
    depth = [0] * n
    idom[root] = root
    for v in _topo(tdag.succ):
        if v == root or not tdag.pred[v]:
            continue
        preds = [p for p in tdag.pred[v] if idom[p] != -1]
        if not preds:
            continue
        d = preds[0]
        for p in preds[1:]:
            a, b = d, p
            while a != b:
                if depth[a] >= depth[b]:
                    a = idom[a]
                else:
                    b = idom[b]
            d = a
        idom[v] = d
        depth[v] = depth[d] + 1
    return idom


class _Canonizer:
    def __init__(self, tdag: TDag, max_leaves: int = MAX_SEARCH_LEAVES) -> None:
        self.t = tdag
        self.root = _single_root(tdag)
        self.max_leaves = max_leaves
        topo = _topo(tdag.succ)
        self.rank = preceq_ranks(tdag.succ, reach_sizes(tdag.succ, topo))
        dkey = [delta_key(tdag, v) for v in range(len(tdag))]
        self.color = refine_colors(tdag, list(zip(self.rank, dkey)))
        # T* then delta, then split surviving runs by colour
        ordered = delta_reorder(preceq_sort(tdag))
        key = [(self.rank[v], dkey[v], self.color[v]) for v in range(len(tdag))]
        self.groups: list[list[list[int]]] = []
        for children in ordered.succ:
            groups: list[list[int]] = []
            for c in sorted(children, key=key.__getitem__):
                if groups and key[groups[-1][0]] == key[c]:
                    groups[-1].append(c)
                else:
                    groups.append([c])
            self.groups.append(groups)
        self._dom_children: Optional[list[list[int]]] = None
        self._idom: Optional[list[int]] = None
        self._twin_cache: dict[tuple[int, int], bool] = {}
        self.leaves = 0

    # -- twins ----------------------------------------------------------

    def _dominated(self, c: int) -> list[int]:
        if self._dom_children is None:
            self._idom = dominator_tree(self.t, self.root)
            kids: list[list[int]] = [[] for _ in range(len(self.t))]
            for v, d in enumerate(self._idom):
                if d != -1 and v != self.root:
                    kids[d].append(v)
            self._dom_children = kids
        out = [c]
        i = 0
        while i < len(out):
            out.extend(self._dom_children[out[i]])
            i += 1
        return out

    def twins(self, c: int, d: int) -> bool:
        """True when swapping the regions dominated by ``c`` and ``d`` is an automorphism."""
        key = (c, d) if c < d else (d, c)
        hit = self._twin_cache.get(key)
        if hit is None:
            hit = self._twin_cache[key] = self._check_twins(c, d)
        return hit

    def _check_twins(self, c: int, d: int) -> bool:
        t = self.t
        if set(t.pred[c]) != set(t.pred[d]):
            return False
        dc, dd = self._dominated(c), self._dominated(d)
        if len(dc) != len(dd):
            return False
        in_c, in_d = set(dc), set(dd)
        color = self.color
        psi = {c: d}
        queue = deque([(c, d)])
        while queue:
            x, y = queue.popleft()
            xs, ys = t.succ[x], t.succ[y]
            if len(xs) != len(ys):
                return False
            if {z for z in xs if z not in in_c} != {w for w in ys if w not in in_d}:
                return False
            inner_x = sorted((z for z in xs if z in in_c), key=color.__getitem__)
            inner_y = sorted((w for w in ys if w in in_d), key=color.__getitem__)
            if [color[z] for z in inner_x] != [color[w] for w in inner_y]:
                return False
            for z, w in zip(inner_x, inner_y):
                if z in psi:
                    if psi[z] != w:
                        return False
                else:
                    psi[z] = w
                    queue.append((z, w))
        if len(psi) != len(dc) or set(psi.values()) != in_d:
            return False
        for x in dc:
            y = psi[x]
            if {psi.get(z, z) for z in t.succ[x]} != set(t.succ[y]):
                return False
            if x != c and {psi[p] for p in t.pred[x]} != set(t.pred[y]):
                return False
        return True

    def _twin_classes(self, members: list[int]) -> list[list[int]]:
        classes: list[list[int]] = []
        for c in members:
            for cls in classes:
                if self.twins(cls[0], c):
                    cls.append(c)
                    break
            else:
                classes.append([c])
        return classes

    # -- search ---------------------------------------------------------

    def run(self) -> tuple[list[tuple[int, ...]], list[int], list[list[int]]]:
        n = len(self.t)
        ids = [-1] * n
        ids[self.root] = 0
        best: Optional[list[tuple[int, ...]]] = None
        best_order: list[int] = []
        best_lists: dict[int, list[int]] = {}
        # each entry: (pos, ids, order, clauses, lists, chosen child list for order[pos] or None)
        stack: list[tuple] = [(0, ids, [self.root], [], {}, None)]
        while stack:
            pos, ids, order, clauses, lists, pending = stack.pop()
            below = False
            if best is not None:
                prefix = best[: len(clauses)]
                if clauses > prefix:
                    continue
                below = clauses < prefix
            alive = True
            while pos < len(order):
                v = order[pos]
                if pending is None:
                    options = self._options(v, ids)
                    if len(options) > 1:
                        for opt in reversed(options):
                            stack.append((pos, ids[:], order[:], clauses[:], dict(lists), opt))
                        alive = False
                        break
                    pending = options[0]
                clause = self._assign(pending, ids, order)
                if best is not None and not below:
                    ref = best[pos]
                    if clause > ref:
                        alive = False
                        break
                    below = clause < ref
                clauses.append(clause)
                lists[v] = pending
                pending = None
                pos += 1
            if not alive:
                continue
            self.leaves += 1
            if self.leaves > self.max_leaves:
                raise CanonError(f"canonical search exceeded {self.max_leaves} leaves")
            if best is None or clauses < best:
                best, best_order, best_lists = clauses, order, lists
        assert best is not None
        return best, best_order, [best_lists[v] for v in best_order]

    @staticmethod
    def _assign(children: list[int], ids: list[int], order: list[int]) -> tuple[int, ...]:
        # FIFO: first enqueue order equals first dequeue order, so ids go out here
        for c in children:
            if ids[c] < 0:
                ids[c] = len(order)
                order.append(c)
        return tuple(ids[c] for c in children)

    def _options(self, v: int, ids: list[int]) -> list[list[int]]:
        per_group: list[list[list[int]]] = []
        for group in self.groups[v]:
            seen = sorted((c for c in group if ids[c] >= 0), key=ids.__getitem__)
            fresh = [c for c in group if ids[c] < 0]
            if len(fresh) <= 1:
                per_group.append([seen + fresh])
                continue
            classes = self._twin_classes(fresh)
            if len(classes) == 1:
                per_group.append([seen + fresh])
                continue
            arrangements = []
            for pattern in _multiset_permutations([i for i, cls in enumerate(classes) for _ in cls]):
                cursor = [0] * len(classes)
                seq = []
                for i in pattern:
                    seq.append(classes[i][cursor[i]])
                    cursor[i] += 1
                arrangements.append(seen + seq)
            per_group.append(arrangements)
        if all(len(p) == 1 for p in per_group):
            return [[c for p in per_group for c in p[0]]]
        return [[c for part in combo for c in part] for combo in product(*per_group)]


def _multiset_permutations(items: list[int]) -> Iterator[list[int]]:
    seq = sorted(items)
    while True:
        yield list(seq)
        i = len(seq) - 2
        while i >= 0 and seq[i] >= seq[i + 1]:
            i -= 1
        if i < 0:
            return
        j = len(seq) - 1
        while seq[j] <= seq[i]:
            j -= 1
        seq[i], seq[j] = seq[j], seq[i]
        seq[i + 1 :] = reversed(seq[i + 1 :])


def _render(clauses: Sequence[Sequence[int]]) -> str:
    return ":".join(",".join(map(str, c)) for c in clauses) + ";"


def representative(tdag: TDag, max_leaves: int = MAX_SEARCH_LEAVES) -> ClassRepresentative:
    """Canonically ordered, id-renamed copy of a single-source T-DAG."""
    if len(tdag) == 0:
        raise CanonError("empty T-DAG")
    canon = _Canonizer(tdag, max_leaves)
    clauses, order, _ = canon.run()
    rep = TDag([tdag.vertices[v] for v in order], [list(c) for c in clauses], root_count=tdag.root_count)
    return ClassRepresentative(rep, _render(clauses))


def label(tdag: TDag) -> str:
    """Two-pass FIFO labeling of an ordered single-source T-DAG."""
    root = _single_root(tdag)
    ids: dict[int, int] = {}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if v in ids:
            continue
        ids[v] = len(ids)
        queue.extend(tdag.succ[v])
    clauses = []
    processed: set[int] = set()
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if v in processed:
            continue
        processed.add(v)
        clauses.append(",".join(str(ids[c]) for c in tdag.succ[v]))
        queue.extend(tdag.succ[v])
    return ":".join(clauses) + ";"


def canonical_label(tdag: TDag) -> str:
    return representative(tdag).label


def isomorphic(a: TDag, b: TDag) -> bool:
    if len(a) != len(b) or a.edge_count != b.edge_count:
        return False
    return canonical_label(a) == canonical_label(b)


_LABEL_RX = re.compile(r"(?:\d+(?:,\d+)*)?(?::(?:\d+(?:,\d+)*)?)*;")


def _syntax_error_offset(text: str) -> tuple[int, str]:
    expect_id = False
    for i, ch in enumerate(text):
        if ch.isdigit():
            expect_id = False
        elif ch == ",":
            if i == 0 or not text[i - 1].isdigit():
                return i, "empty identifier before ','"
            expect_id = True
        elif ch in ":;":
            if expect_id:
                return i, f"empty identifier before {ch!r}"
            if ch == ";":
                if i != len(text) - 1:
                    return i + 1, "data after terminating ';'"
                return -1, ""
        else:
            return i, f"unexpected character {ch!r}"
    return len(text), "missing terminating ';'"


def parse_label(lbl: str) -> list[list[int]]:
    """Split a label into clauses of integer ids, validating syntax."""
    if not _LABEL_RX.fullmatch(lbl):
        off, msg = _syntax_error_offset(lbl)
        raise LabelParseError(max(off, 0), msg or "malformed label")
    body = lbl[:-1]
    return [[int(x) for x in part.split(",")] if part else [] for part in body.split(":")]


def outdegree_from_label(lbl: str) -> list[int]:
    """Outdegree of the vertex with id ``i`` at position ``i``, replaying the FIFO walk."""
    clauses = parse_label(lbl)
    m = max((i for c in clauses for i in c), default=0)
    if len(clauses) != m + 1:
        raise LabelParseError(
            len(lbl) - 1, f"{len(clauses)} clauses for {m + 1} vertex ids"
        )
    out_deg = [0] * (m + 1)
    processed = [False] * (m + 1)
    queue: deque[int] = deque()
    n_id = 0
    for c in clauses:
        while queue:
            n_id = queue.popleft()
            if not processed[n_id]:
                break
        if not processed[n_id]:
            processed[n_id] = True
            out_deg[n_id] = len(c)
            queue.extend(c)
    return out_deg


def tdag_from_label(lbl: str) -> TDag:
    """Ordered T-DAG whose vertex ``i`` is the vertex with id ``i``."""
    clauses = parse_label(lbl)
    n = len(clauses)
    for c in clauses:
        for i in c:
            if i >= n:
                raise LabelParseError(len(lbl) - 1, f"id {i} out of range for {n} clauses")
    return TDag.from_edges(n, [(u, v) for u, c in enumerate(clauses) for v in c])
