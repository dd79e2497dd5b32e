from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdagkit.canon import (
    EQ,
    GT,
    LT,
    CanonError,
    LabelParseError,
    SubDagView,
    canonical_label,
    compare,
    delta_key,
    delta_reorder,
    isomorphic,
    label,
    outdegree_from_label,
    parse_label,
    preceq_sort,
    representative,
    tdag_from_label,
)
from tdagkit.oracle import brute_force_isomorphic, permute, random_permutation, random_tdag, random_tree
from tdagkit.synth import BUILTIN_SHAPES, TOP10_COUNTS, shape_tdag
from tdagkit.tdag import TDag, add_super_root

PATH3 = TDag.from_edges(3, [(0, 1), (1, 2)])
STAR3 = TDag.from_edges(3, [(0, 1), (0, 2)])


def view(t, v=None):
    return SubDagView(t, t.roots[0] if v is None else v)


def test_compare_examples():
    two = TDag.from_edges(2, [(0, 1)])
    assert compare(view(two), view(PATH3)) == LT
    path4 = TDag.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    star4 = TDag.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert compare(view(path4), view(star4)) == LT
    assert compare(view(star4), view(path4)) == GT
    assert compare(view(PATH3), view(TDag.from_edges(3, [(2, 0), (0, 1)]))) == EQ
    assert compare(view(PATH3), view(STAR3)) == LT


def test_compare_lexicographic_children():
    # equal size and outdegree; children (1-leaf, 2-path) vs (leaf, leaf+...)
    a = TDag.from_edges(5, [(0, 1), (0, 2), (2, 3), (3, 4)])  # children sizes 1, 3
    b = TDag.from_edges(5, [(0, 1), (0, 2), (2, 3), (2, 4)])  # children sizes 1, 3 (star)
    assert compare(view(a), view(b)) == LT


def _preorder_triple(seed):
    rng = random.Random(seed)
    ts = []
    for _ in range(3):
        t = random_tdag(rng.randint(1, 7), rng, extra_edges=rng.randint(0, 3))
        while t is None:
            t = random_tdag(rng.randint(1, 7), rng, extra_edges=rng.randint(0, 3))
        ts.append(view(t))
    return ts


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_compare_total_preorder(seed):
    a, b, c = _preorder_triple(seed)
    assert compare(a, b) == -compare(b, a)
    assert compare(a, a) == EQ
    if compare(a, b) <= 0 and compare(b, c) <= 0:
        assert compare(a, c) <= 0


def test_delta_orders_tied_siblings():
    # r -> b, a, c ; a -> x, y ; b -> z, w ; c -> w
    r, a, b, c, x, y, z, w = range(8)
    t = TDag.from_edges(8, [(r, b), (r, a), (r, c), (a, x), (a, y), (b, z), (b, w), (c, w)])
    assert delta_key(t, a) == (1, 1) and delta_key(t, b) == (1, 2)
    out = delta_reorder(preceq_sort(t))
    assert out.succ[r] == [c, a, b]


def test_delta_identity_on_trees():
    t = preceq_sort(random_tree(30, random.Random(4)))
    assert delta_reorder(t).succ == t.succ


def test_label_examples():
    assert label(TDag.from_edges(1, [])) == ";"
    assert label(PATH3) == "1:2:;"
    assert label(STAR3) == "1,2::;"
    assert canonical_label(PATH3) != canonical_label(STAR3)


def test_label_shared_child_not_renumbered():
    t = TDag.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    assert label(t) == "1,2:3:3:;"
    assert canonical_label(t) == "1,2:3:3:;"


def test_representative_star_ascending():
    # children listed largest first
    t = TDag.from_edges(6, [(0, 1), (0, 4), (1, 2), (2, 3), (4, 5)])
    rep = representative(t)
    sizes = [len(SubDagView(rep.tdag, c).reach) for c in rep.tdag.succ[0]]
    assert sizes == sorted(sizes)


def test_representative_worked_sequence():
    # reorder steps: input -> sorted -> delta -> representative, each isomorphic
    r, a, b, c, x, y, z, w, q = range(9)
    t = TDag.from_edges(9, [(r, a), (r, c), (r, b), (a, x), (a, y), (b, z), (b, w), (c, w), (c, q)])
    star = preceq_sort(t)
    delta = delta_reorder(star)
    rep = representative(t)
    for step in (star, delta, rep.tdag):
        assert brute_force_isomorphic(t, step)
    again = representative(rep.tdag)
    assert again.label == rep.label and again.tdag.succ == rep.tdag.succ
    assert label(rep.tdag) == rep.label


def test_multi_root_rejected():
    with pytest.raises(CanonError):
        canonical_label(TDag.from_edges(3, [(0, 2), (1, 2)]))


def test_outdegree_examples():
    assert outdegree_from_label("1,2::;") == [2, 0, 0]
    assert outdegree_from_label("1:2:;") == [1, 1, 0]
    assert outdegree_from_label(";") == [0]
    assert outdegree_from_label("1,2:3:3:;") == [2, 1, 1, 0]


@pytest.mark.parametrize(
    "bad, offset",
    [("1,2::", 5), ("1,,2::;", 2), ("1:a:;", 2), ("1:2:;;", 5), ("1,2:;", 4), (":1:;", 3)],
)
def test_parse_errors_have_offsets(bad, offset):
    with pytest.raises(LabelParseError) as err:
        outdegree_from_label(bad)
    assert err.value.offset == offset


def test_parse_label_clauses():
    assert parse_label("1,2:3:3:;") == [[1, 2], [3], [3], []]


def test_isomorphic_examples():
    rng = random.Random(9)
    t = random_tdag(9, rng, extra_edges=4)
    assert isomorphic(t, random_permutation(t, rng))
    assert not isomorphic(PATH3, TDag.from_edges(4, [(0, 1), (1, 2), (2, 3)]))
    labels = {canonical_label(add_super_root(shape_tdag(BUILTIN_SHAPES[k]))) for k in TOP10_COUNTS}
    assert len(labels) == 10
    # most frequent class (3 vertices) vs cardinality-4, 3-edge class
    assert canonical_label(shape_tdag(BUILTIN_SHAPES["t1"])) != canonical_label(shape_tdag(BUILTIN_SHAPES["t9"]))


def test_brute_force_bound():
    big = TDag.from_edges(10, [(0, i) for i in range(1, 10)])
    with pytest.raises(ValueError):
        brute_force_isomorphic(big, big)
    assert brute_force_isomorphic(PATH3, PATH3)
    assert not brute_force_isomorphic(PATH3, STAR3)


def _random_shared(seed, max_n=12):
    rng = random.Random(seed)
    while True:
        t = random_tdag(rng.randint(2, max_n), rng, extra_edges=rng.randint(1, 6))
        if t is not None:
            return t, rng


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_label_invariants(seed):
    t, rng = _random_shared(seed)
    rep = representative(t)
    lbl = rep.label
    assert lbl == canonical_label(random_permutation(t, rng))
    assert label(rep.tdag) == lbl
    clauses = parse_label(lbl)
    assert len(clauses) == len(t)
    assert sum(len(c) for c in clauses) == t.edge_count
    assert outdegree_from_label(lbl) == [len(c) for c in rep.tdag.succ]
    back = tdag_from_label(lbl)
    assert canonical_label(back) == lbl
    if len(t) <= 9:
        assert brute_force_isomorphic(t, rep.tdag)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_agrees_with_brute_force(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 8)
    a = random_tdag(n, rng, extra_edges=rng.randint(0, 4))
    b = random_tdag(n, rng, extra_edges=rng.randint(0, 4))
    if a is None or b is None:
        return
    if rng.random() < 0.3:
        b = permute(a, rng.sample(range(n), n))
    assert isomorphic(a, b) == brute_force_isomorphic(a, b)
