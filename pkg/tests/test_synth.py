from __future__ import annotations

import pytest

from tdagkit.ledger import link, to_records
from tdagkit.synth import GeneratorSpec, SpecError, expected_counts, generate, shape_tdag, top10_spec


def test_deterministic():
    a = to_records(generate(top10_spec(seed=5)))
    b = to_records(generate(top10_spec(seed=5)))
    c = to_records(generate(top10_spec(seed=6)))
    assert a == b and a != c


def test_links_cleanly():
    led = link(generate(top10_spec()))
    assert led.spent_count == led.input_count
    assert all(t.vin for t in led.txs() if not t.coinbase)


def test_expected_counts():
    spec = top10_spec()
    counts = expected_counts(spec)
    assert counts["t1"] == 50 and counts["h1"] == 10 and counts["trivial_chain"] == 3


@pytest.mark.parametrize(
    "raw",
    [
        [],
        {"plant": [{"shape": "nope"}]},
        {"plant": [{"shape": "x", "roots": [["u:x"]], "txs": []}]},
        {"plant": [{"shape": "x", "roots": [["a:x"]]}]},
        {"plant": [{"shape": "x", "roots": [["u:x"]], "txs": [{"spends": ["y"], "outputs": ["a"]}]}]},
        {"seed": -1},
        {"bogus": 1},
        {"plant": [{"shape": "t1", "count": -2}]},
    ],
)
def test_invalid_specs(raw):
    with pytest.raises(SpecError):
        GeneratorSpec.from_dict(raw)


def test_shape_tdag_compresses_trivial():
    spec = GeneratorSpec.from_dict({"plant": [{"shape": "trivial_chain"}]})
    shape = spec.plants[0].shape
    assert len(shape_tdag(shape, compress_trivial=False)) == 5
    t = shape_tdag(shape)
    assert (len(t), t.edge_count) == (4, 3)
