from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import addr, ledger, tx, unk
from tdagkit.ledger import Tio, is_unknown_output, link
from tdagkit.oracle import random_tdag
from tdagkit.script import trivial_matcher
from tdagkit.synth import GeneratorSpec, TRIVIAL_SCRIPT, generate, random_ledger
from tdagkit.tdag import (
    LEAF,
    ROOT,
    Forest,
    TDag,
    Vertex,
    add_super_root,
    build_forest,
    compress,
    generate_tdag,
    height,
    prune_height1,
    read_forest,
    vertex_degrees,
    write_forest,
)
from tdagkit.tiograph import find_alpha_nodes

TRIVIAL = trivial_matcher()


def _alpha(led, t):
    return next(a for a in find_alpha_nodes(led) if a.txid == t.hash)


def _forest(plant, **kw):
    led = link(generate(GeneratorSpec.from_dict({"seed": 1, "plant": plant, **kw})))
    return build_forest(led)


def test_path_root_unknown_addressed():
    cb = tx("cb", [], [addr()])
    r = tx("r", [("cb", 0)], [unk()])
    s = tx("s", [("r", 0)], [addr()])
    led = link(ledger([cb, r, s]))
    t = generate_tdag(led, _alpha(led, r))
    assert (len(t), t.edge_count, height(t)) == (3, 2, 2)
    assert t.role(0) == ROOT and t.role(2) == LEAF


def test_addressed_only_root_stops():
    cb = tx("cb", [], [addr()])
    r = tx("r", [("cb", 0)], [addr()])
    s = tx("s", [("r", 0)], [addr()])
    led = link(ledger([cb, r, s]))
    t = generate_tdag(led, _alpha(led, r))
    assert (len(t), t.edge_count) == (2, 1)


def test_worked_example_trace():
    # root -> n1; n1 -> n3, n4, n5; n3 -> unspent; n4 -> two addressed;
    # n5 -> n12; n12 -> two addressed + unspent
    shape = {
        "shape": "fig",
        "roots": [["u:n1"]],
        "txs": [
            {"spends": ["n1"], "outputs": ["u:n3", "u:n4", "u:n5"]},
            {"spends": ["n3"], "outputs": ["u"]},
            {"spends": ["n4"], "outputs": ["a", "a"]},
            {"spends": ["n5"], "outputs": ["u:n12"]},
            {"spends": ["n12"], "outputs": ["a", "a", "u"]},
        ],
    }
    (c,) = _forest([shape]).components
    assert (len(c), c.edge_count, height(c), c.root_count) == (12, 11, 4, 1)
    leaves = [v for v in range(len(c)) if c.role(v) == LEAF]
    assert len(leaves) == 6
    assert sum(1 for v in leaves if c.vertices[v].address is None) == 2


def test_converging_roots_merge():
    f = _forest([{"shape": "t2", "count": 1}])
    (c,) = f.components
    assert c.root_count == 2 and len(c.roots) == 2
    assert (height(c), len(c), c.edge_count) == (2, 10, 14)
    assert len(add_super_root(c)) == 11


def test_independent_chains():
    f = _forest([{"shape": "t1", "count": 7}], noise=5)
    assert len(f) == 7
    assert f.stats == {"node_count": 21, "edge_count": 14, "component_count": 7}


def test_prune_height1():
    f = _forest([{"shape": "h1", "count": 4}, {"shape": "t3", "count": 6}])
    assert len(f) == 10
    assert len(prune_height1(f)) == 6
    two = Forest([TDag.from_edges(2, [(0, 1)]), TDag.from_edges(3, [(0, 1), (0, 2)])])
    assert len(prune_height1(two)) == 0
    assert len(prune_height1(two, keep_two_vertex=True)) == 1


def _scripted(n, edges, trivial):
    verts = [Vertex(i, script=TRIVIAL_SCRIPT if i in trivial else b"\x74") for i in range(n)]
    return TDag.from_edges(n, edges, vertices=verts)


def test_compress_elides_trivial_output():
    # in1 -> out1 (trivial) -> out3, out4, out5
    t = _scripted(5, [(0, 1), (1, 2), (1, 3), (1, 4)], {1})
    c = compress(t, TRIVIAL)
    assert sorted(c.edges()) == [(0, 1), (0, 2), (0, 3)]
    assert compress(c, TRIVIAL) is c


def test_compress_identity_without_trivial():
    t = _scripted(3, [(0, 1), (1, 2)], set())
    assert compress(t, TRIVIAL) is t


def test_compress_consecutive_trivial():
    t = _scripted(4, [(0, 1), (1, 2), (2, 3)], {1, 2})
    c = compress(t, TRIVIAL)
    assert (len(c), c.edges()) == (2, [(0, 1)])


def test_compress_keeps_trivial_leaf():
    t = _scripted(3, [(0, 1), (1, 2)], {2})
    assert len(compress(t, TRIVIAL)) == 3


def test_super_root():
    single = TDag.from_edges(3, [(0, 1), (1, 2)])
    assert add_super_root(single) is single
    width = 20000
    edges = [(i, width + i) for i in range(width)] + [(width + i, 2 * width) for i in range(width)]
    wide = TDag.from_edges(2 * width + 1, edges)
    s = add_super_root(wide)
    assert (len(wide), wide.edge_count) == (40001, 40000)
    assert (len(s), s.edge_count, len(s.roots), s.root_count) == (40002, 60000, 1, 20000)


def test_height():
    assert height(TDag.from_edges(1, [])) == 0
    assert height(TDag.from_edges(3, [(0, 1), (1, 2)])) == 2
    chain = TDag.from_edges(2261, [(i, i + 1) for i in range(2260)])
    assert height(chain) == 2260
    (c,) = _forest([{"shape": "chain", "height": 60}]).components
    assert height(c) == 60 and len(c) == 61


def test_forest_dump_roundtrip(tmp_path):
    f = _forest([{"shape": "t2", "count": 2}, {"shape": "t10", "count": 1}])
    f = Forest([add_super_root(c) for c in f])
    p = tmp_path / "f.jsonl"
    write_forest(f, p)
    back, recs = read_forest(p)
    assert [sorted(c.edges()) for c in back] == [sorted(c.edges()) for c in f]
    assert [c.root_count for c in back] == [c.root_count for c in f]
    assert {"roots", "vertices", "edges", "height", "cardinality"} <= set(recs[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_extraction_invariants(seed):
    led = link(random_ledger(seed, n_txs=120, unknown_p=0.6))
    forest = build_forest(led)
    seen: set = set()
    for c in forest:
        keys = {v.key for v in c.vertices}
        assert not keys & seen
        seen |= keys
        assert c.is_weakly_connected()
        indeg = [len(p) for p in c.pred]
        for v, vert in enumerate(c.vertices):
            if isinstance(vert.key, Tio):
                rec = led.output(vert.key)
                if c.succ[v]:
                    assert is_unknown_output(rec) == 0
                if rec.address is not None:
                    assert not c.succ[v]
            else:
                assert vert.is_alpha and indeg[v] == 0
        degs = vertex_degrees(c)
        assert sum(d[0] for d in degs) == sum(d[1] for d in degs) == c.edge_count
        assert c.cardinality == len(keys)
        norm = add_super_root(compress(c, TRIVIAL))
        assert len(norm.roots) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 12))
def test_compress_idempotent(seed, n):
    import random

    rng = random.Random(seed)
    t = random_tdag(n, rng, extra_edges=rng.randint(0, 4), roots=rng.randint(1, 3))
    if t is None:
        return
    t = _scripted(n, t.edges(), {v for v in range(n) if rng.random() < 0.4})
    once = compress(t, TRIVIAL)
    twice = compress(once, TRIVIAL)
    assert sorted(once.edges()) == sorted(twice.edges()) and len(once) == len(twice)
    assert len(once.roots) == len(t.roots)
    assert len(add_super_root(once).roots) == 1
