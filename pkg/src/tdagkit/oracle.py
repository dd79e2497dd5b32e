"""Independent validation oracles: exhaustive isomorphism search and tree enumeration.

Nothing here imports the canonical-labeling code; these routines are the
reference the labels are checked against.
"""

from __future__ import annotations

import random
from typing import Iterator, Optional, Sequence

from .tdag import TDag

BRUTE_FORCE_MAX = 9


def brute_force_isomorphic(a: TDag, b: TDag, max_n: int = BRUTE_FORCE_MAX) -> bool:
    """Search for a root-preserving bijection mapping edges onto edges exactly."""
    n = len(a)
    if n > max_n or len(b) > max_n:
        raise ValueError(f"brute force is limited to {max_n} vertices")
    if n != len(b) or a.edge_count != b.edge_count:
        return False
    ea = {(u, v) for u, v in a.edges()}
    eb = {(u, v) for u, v in b.edges()}
    deg_a = [(a.indegree(v), a.outdegree(v)) for v in range(n)]
    deg_b = [(b.indegree(v), b.outdegree(v)) for v in range(n)]
    if sorted(deg_a) != sorted(deg_b):
        return False
    roots_a, roots_b = a.roots, b.roots
    if len(roots_a) != len(roots_b):
        return False

    mapping = [-1] * n
    used = [False] * n

    def consistent(x: int, y: int) -> bool:
        for z in range(n):
            w = mapping[z]
            if w < 0:
                continue
            if ((x, z) in ea) != ((y, w) in eb) or ((z, x) in ea) != ((w, y) in eb):
                return False
        return True

    order = list(range(n))
    if len(roots_a) == 1:
        order.remove(roots_a[0])
        order.insert(0, roots_a[0])

    def extend(k: int) -> bool:
        if k == n:
            return True
        x = order[k]
        for y in range(n):
            if used[y] or deg_a[x] != deg_b[y]:
                continue
            if k == 0 and len(roots_a) == 1 and y != roots_b[0]:
                continue
            if not consistent(x, y):
                continue
            mapping[x], used[y] = y, True
            if extend(k + 1):
                return True
            mapping[x], used[y] = -1, False
        return False

    return extend(0)


def rooted_trees_by_parent_arrays(n: int) -> Iterator[TDag]:
    """Every tree on ``n`` vertices where vertex ``i > 0`` hangs under some ``j < i``.

    Each unlabeled rooted tree appears at least once (number its vertices in
    breadth-first order), so the distinct isomorphism classes among the
    outputs are exactly the rooted trees with ``n`` vertices.
    """
    if n < 1:
        return
    parents = [0] * n

    def rec(i: int) -> Iterator[TDag]:
        if i == n:
            yield TDag.from_edges(n, [(parents[v], v) for v in range(1, n)])
            return
        for p in range(i):
            parents[i] = p
            yield from rec(i + 1)

    yield from rec(1)


def count_rooted_trees(n: int) -> int:
    """Number of unlabeled rooted trees with ``n`` vertices via the Euler transform recurrence."""
    a = [0, 1]
    for m in range(1, n):
        total = 0
        for k in range(1, m + 1):
            s = sum(d * a[d] for d in range(1, k + 1) if k % d == 0)
            total += s * a[m - k + 1]
        a.append(total // m)
    return a[n]


def permute(tdag: TDag, perm: Sequence[int]) -> TDag:
    """Rename vertex ``v`` to ``perm[v]`` and shuffle nothing else."""
    n = len(tdag)
    succ: list[list[int]] = [[] for _ in range(n)]
    verts = [None] * n
    for v in range(n):
        verts[perm[v]] = tdag.vertices[v]
        succ[perm[v]] = [perm[c] for c in tdag.succ[v]]
    return TDag(verts, succ, root_count=tdag.root_count)


def random_permutation(tdag: TDag, rng: random.Random, shuffle_children: bool = True) -> TDag:
    perm = list(range(len(tdag)))
    rng.shuffle(perm)
    out = permute(tdag, perm)
    if shuffle_children:
        for children in out.succ:
            rng.shuffle(children)
        out = TDag(out.vertices, out.succ, root_count=out.root_count)
    return out


def random_tree(n: int, rng: random.Random) -> TDag:
    return TDag.from_edges(n, [(rng.randrange(v), v) for v in range(1, n)])


def random_tdag(
    n: int,
    rng: random.Random,
    extra_edges: int = 2,
    roots: int = 1,
    require_sharing: bool = False,
) -> Optional[TDag]:
    """Random DAG whose first ``roots`` vertices are the only sources.

    Vertices are in topological order; every non-root gets one parent among
    earlier vertices, then ``extra_edges`` more forward edges are attempted.
    Returns None when the sources come out differently, the graph is not
    weakly connected, or ``require_sharing`` asks for an indegree >= 2 vertex
    that could not be placed.
    """
    roots = max(1, min(roots, n))
    edges = set()
    for v in range(roots, n):
        edges.add((rng.randrange(v), v))
    for _ in range(extra_edges):
        if n - roots < 1:
            break
        v = rng.randrange(roots, n)
        u = rng.randrange(v)
        edges.add((u, v))
    t = TDag.from_edges(n, sorted(edges))
    if len(t.roots) != roots or not t.is_weakly_connected():
        return None
    if require_sharing and not any(len(p) >= 2 for p in t.pred):
        return None
    return t
