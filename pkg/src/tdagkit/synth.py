"""Deterministic synthetic ledgers with planted T-DAG shapes.

A shape is a small transaction pattern::

    {"roots": [["u:x", "a"], ...],
     "txs": [{"spends": ["x"], "outputs": ["a", "a"]}, ...],
     "root_script": "OP_IF ..."}          # optional

Every root is a transaction spending an addressed output, so it is an
alpha node.  Output codes: ``a`` addressed, ``u`` unspent unknown output,
``u:NAME`` unknown output spent later by the tx listing ``NAME``, ``t:NAME``
the same but locked by an anyone-can-spend script.  ``root_script`` replaces
the locking script of the roots' unknown outputs (used for filter fixtures).

A generator spec plants shapes ``count`` times each, mixed with noise
transfers, and is fully determined by its seed.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .ledger import Block, InputRef, Ledger, OutputRecord, Tx
from .script import assemble
from .tdag import TDag

TRIVIAL_SCRIPT = assemble("OP_1")


class SpecError(ValueError):
    pass


def _chain(height: int) -> dict:
    # root -> x0 -> ... -> x{height-2} -> addressed leaf
    if height < 2:
        raise SpecError("chain height must be at least 2")
    txs = [{"spends": [f"x{i}"], "outputs": [f"u:x{i + 1}"]} for i in range(height - 2)]
    txs.append({"spends": [f"x{height - 2}"], "outputs": ["a"]})
    return {"roots": [["u:x0"]], "txs": txs}


def _fan_in(width: int) -> dict:
    return {
        "roots": [[f"u:x{i}"] for i in range(width)],
        "txs": [{"spends": [f"x{i}" for i in range(width)], "outputs": ["a"]}],
    }


BUILTIN_SHAPES: dict[str, dict] = {
    "t1": {"roots": [["u:x"]], "txs": [{"spends": ["x"], "outputs": ["a"]}]},
    "t2": {
        "roots": [["u:x"], ["u:y"]],
        "txs": [{"spends": ["x", "y"], "outputs": ["a"] * 6}],
    },
    "t3": {"roots": [["u:x", "u:y", "a"]], "txs": [{"spends": ["x", "y"], "outputs": ["a", "a"]}]},
    "t4": {"roots": [["u:x"]], "txs": [{"spends": ["x"], "outputs": ["a"] * 4}]},
    "t5": {"roots": [["u:x"]], "txs": [{"spends": ["x"], "outputs": ["a"] * 3}]},
    "t6": {"roots": [["u:x"]], "txs": [{"spends": ["x"], "outputs": ["a"] * 5}]},
    "t7": {"roots": [["u:x", "a"]], "txs": [{"spends": ["x"], "outputs": ["a"] * 4}]},
    "t8": {"roots": [["u:x", "u:y", "a", "a"]], "txs": [{"spends": ["x", "y"], "outputs": ["a"]}]},
    "t9": {"roots": [["u:x", "a"]], "txs": [{"spends": ["x"], "outputs": ["a"]}]},
    "t10": {
        "roots": [["u:x", "u:y"]],
        "txs": [{"spends": ["x"], "outputs": ["a", "a"]}, {"spends": ["y"], "outputs": ["a"]}],
    },
    "h1": {"roots": [["u"]], "txs": []},
    "trivial_chain": {
        "roots": [["t:x"]],
        "txs": [{"spends": ["x"], "outputs": ["u:y"]}, {"spends": ["y"], "outputs": ["a", "a"]}],
    },
    "wide": _fan_in(20000),
}

# planted counts for the ten most frequent classes, scaled down
TOP10_COUNTS = {"t1": 50, "t2": 30, "t3": 20, "t4": 16, "t5": 14, "t6": 12, "t7": 10, "t8": 8, "t9": 6, "t10": 4}


def resolve_shape(entry: dict) -> dict:
    """Shape dict for a plant entry: a builtin name, a parametric family or inline."""
    name = entry.get("shape")
    if name == "chain":
        return _chain(int(entry["height"]))
    if name == "fan_in":
        return _fan_in(int(entry["width"]))
    if name in BUILTIN_SHAPES:
        shape = dict(BUILTIN_SHAPES[name])
    elif "roots" in entry:
        shape = {"roots": entry["roots"], "txs": entry.get("txs", [])}
    else:
        raise SpecError(f"unknown shape {name!r}")
    if "root_script" in entry:
        shape["root_script"] = entry["root_script"]
    validate_shape(shape)
    return shape


def _parse_code(code: Any) -> tuple[str, Optional[str]]:
    if not isinstance(code, str):
        raise SpecError(f"output code must be a string, got {code!r}")
    kind, _, name = code.partition(":")
    if kind not in ("a", "u", "t") or (kind == "a" and name) or (kind == "t" and not name):
        raise SpecError(f"bad output code {code!r}")
    return kind, name or None


def validate_shape(shape: dict) -> None:
    roots = shape.get("roots")
    if not isinstance(roots, list) or not roots:
        raise SpecError("shape needs a non-empty 'roots' list")
    made: dict[str, str] = {}
    spent: set[str] = set()

    def declare(outputs: Any) -> None:
        if not isinstance(outputs, list) or not outputs:
            raise SpecError("every transaction needs at least one output")
        for code in outputs:
            kind, name = _parse_code(code)
            if name is not None:
                if name in made:
                    raise SpecError(f"output name {name!r} declared twice")
                made[name] = kind

    for outs in roots:
        declare(outs)
    for tx in shape.get("txs", []):
        spends = tx.get("spends")
        if not isinstance(spends, list) or not spends:
            raise SpecError("spending transaction needs a non-empty 'spends' list")
        for name in spends:
            if name not in made:
                raise SpecError(f"spend of undeclared output {name!r}")
            if name in spent:
                raise SpecError(f"output {name!r} spent twice")
            spent.add(name)
        declare(tx.get("outputs"))
    unspent = sorted(set(made) - spent)
    if unspent:
        raise SpecError(f"named outputs never spent: {unspent}")
    if "root_script" in shape:
        try:
            assemble(shape["root_script"])
        except ValueError as exc:
            raise SpecError(f"bad root_script: {exc}") from None


def shape_tdag(shape: dict, compress_trivial: bool = True) -> TDag:
    """The component a shape should produce, built straight from its description."""
    succ: list[list[int]] = []
    kinds: list[str] = []
    by_name: dict[str, int] = {}

    def new(kind: str) -> int:
        succ.append([])
        kinds.append(kind)
        return len(succ) - 1

    def outputs(codes: list[str]) -> list[int]:
        ids = []
        for code in codes:
            kind, name = _parse_code(code)
            v = new(kind)
            if name:
                by_name[name] = v
            ids.append(v)
        return ids

    for outs in shape["roots"]:
        r = new("root")
        succ[r] = outputs(outs)
    for tx in shape.get("txs", []):
        outs = outputs(tx["outputs"])
        for name in tx["spends"]:
            succ[by_name[name]] = list(outs)
    n = len(succ)
    drop = {v for v in range(n) if compress_trivial and kinds[v] == "t" and succ[v]}
    keep = [v for v in range(n) if v not in drop]
    new_id = {v: i for i, v in enumerate(keep)}

    def expand(v: int) -> list[int]:
        if v not in drop:
            return [v]
        return [w for c in succ[v] for w in expand(c)]

    edges = []
    for u in keep:
        seen = []
        for c in succ[u]:
            for w in expand(c):
                if w not in seen:
                    seen.append(w)
        edges.extend((new_id[u], new_id[w]) for w in seen)
    return TDag.from_edges(len(keep), edges)


@dataclass
class PlantEntry:
    shape_name: str
    count: int
    shape: dict


@dataclass
class GeneratorSpec:
    seed: int = 0
    txs_per_block: int = 50
    noise: int = 0
    plants: list[PlantEntry] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: Any) -> "GeneratorSpec":
        if not isinstance(raw, dict):
            raise SpecError("generator spec must be a JSON object")
        unknown = set(raw) - {"seed", "txs_per_block", "noise", "plant"}
        if unknown:
            raise SpecError(f"unknown spec keys {sorted(unknown)}")
        seed = raw.get("seed", 0)
        tpb = raw.get("txs_per_block", 50)
        noise = raw.get("noise", 0)
        for key, val, lo in (("seed", seed, 0), ("txs_per_block", tpb, 1), ("noise", noise, 0)):
            if not isinstance(val, int) or isinstance(val, bool) or val < lo:
                raise SpecError(f"{key} must be an integer >= {lo}")
        plants = []
        entries = raw.get("plant", [])
        if not isinstance(entries, list):
            raise SpecError("'plant' must be a list")
        for entry in entries:
            if not isinstance(entry, dict) or "shape" not in entry:
                raise SpecError("each plant entry needs a 'shape'")
            count = entry.get("count", 1)
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise SpecError("count must be a non-negative integer")
            plants.append(PlantEntry(str(entry["shape"]), count, resolve_shape(entry)))
        return cls(seed, tpb, noise, plants)

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON: {exc}") from None
        except OSError as exc:
            raise SpecError(f"cannot read spec {path}: {exc.strerror}") from None
        return cls.from_dict(raw)


def _hash(*parts: object) -> str:
    return hashlib.sha256(":".join(map(str, parts)).encode()).hexdigest()


class _Builder:
    def __init__(self, seed: int) -> None:
        self.seed = seed
        self.rng = random.Random(seed)
        self.counter = 0

    def txid(self) -> str:
        self.counter += 1
        return _hash("tx", self.seed, self.counter)

    def addressed(self) -> OutputRecord:
        h = _hash("addr", self.seed, self.counter, self.rng.random())[:40]
        script = assemble(f"OP_DUP OP_HASH160 {h} OP_EQUALVERIFY OP_CHECKSIG")
        return OutputRecord(f"syn{h[:34]}", script, self.rng.randrange(1_000, 5_000_000))

    def unknown(self, kind: str, override: Optional[bytes] = None) -> OutputRecord:
        if kind == "t":
            script = TRIVIAL_SCRIPT
        elif override is not None:
            script = override
        else:
            h = _hash("unk", self.seed, self.counter, self.rng.random())[:40]
            script = assemble(f"{h} OP_DROP OP_DEPTH OP_0 OP_EQUAL")
        return OutputRecord(None, script, self.rng.randrange(1_000, 5_000_000))


def generate(spec: GeneratorSpec) -> Ledger:
    """Build the ledger: coinbase-funded roots, planted spends and noise, in blocks."""
    b = _Builder(spec.seed)
    # a job is one instance's transactions in dependency order
    jobs: list[list[tuple]] = []
    for plant in spec.plants:
        shape = plant.shape
        override = assemble(shape["root_script"]) if "root_script" in shape else None
        for _ in range(plant.count):
            job = [("root", outs, override) for outs in shape["roots"]]
            job += [("spend", tx["spends"], tx["outputs"]) for tx in shape.get("txs", [])]
            jobs.append(job)
    jobs += [[("noise",)] for _ in range(spec.noise)]

    # random interleaving that keeps each job's order
    schedule: list[int] = []
    for j, job in enumerate(jobs):
        schedule += [j] * len(job)
    b.rng.shuffle(schedule)
    cursor = [0] * len(jobs)
    steps = []
    for j in schedule:
        steps.append((j, jobs[j][cursor[j]]))
        cursor[j] += 1

    names: list[dict[str, tuple[str, int]]] = [{} for _ in jobs]
    ledger = Ledger()
    height = 0
    for start in range(0, len(steps), spec.txs_per_block) or [0]:
        chunk = steps[start : start + spec.txs_per_block]
        funded = sum(1 for _, step in chunk if step[0] in ("root", "noise"))
        coinbase = Tx(b.txid(), "", [], [b.addressed() for _ in range(max(1, funded))], True)
        txs = [coinbase]
        k = 0
        for j, step in chunk:
            if step[0] in ("root", "noise"):
                vin = [InputRef(coinbase.hash, k)]
                k += 1
            else:
                vin = [InputRef(*names[j][name]) for name in step[1]]
            txid = b.txid()
            if step[0] == "noise":
                vout = [b.addressed(), b.addressed()]
            else:
                codes = step[1] if step[0] == "root" else step[2]
                override = step[2] if step[0] == "root" else None
                vout = []
                for i, code in enumerate(codes):
                    kind, name = _parse_code(code)
                    vout.append(b.addressed() if kind == "a" else b.unknown(kind, override))
                    if name:
                        names[j][name] = (txid, i)
            txs.append(Tx(txid, "", vin, vout, False))
        ledger.add_block(Block(_hash("block", spec.seed, height), height, txs))
        height += 1
    return ledger


def expected_counts(spec: GeneratorSpec) -> dict[str, int]:
    """Planted instance count per shape name."""
    out: dict[str, int] = {}
    for p in spec.plants:
        out[p.shape_name] = out.get(p.shape_name, 0) + p.count
    return out


def top10_spec(seed: int = 7, scale: float = 1.0, noise: int = 25) -> GeneratorSpec:
    """The ten most frequent classes plus 10 height-1 and 3 trivially locked chains."""
    raw = {
        "seed": seed,
        "noise": noise,
        "plant": [
            {"shape": k, "count": max(1, round(v * scale))} for k, v in TOP10_COUNTS.items()
        ]
        + [{"shape": "h1", "count": 10}, {"shape": "trivial_chain", "count": 3}],
    }
    return GeneratorSpec.from_dict(raw)


def random_ledger(seed: int, n_txs: int = 200, txs_per_block: int = 20, unknown_p: float = 0.4) -> Ledger:
    """Unstructured ledger: each tx spends 1-3 random unspent outputs and makes 1-4 outputs."""
    b = _Builder(seed)
    rng = b.rng
    pool: list[tuple[str, int]] = []
    ledger = Ledger()
    made = 0
    height = 0
    while made < n_txs:
        cb = Tx(b.txid(), "", [], [b.addressed() for _ in range(rng.randint(1, 3))], True)
        pool += [(cb.hash, i) for i in range(len(cb.vout))]
        txs = [cb]
        made += 1
        for _ in range(min(txs_per_block - 1, n_txs - made)):
            k = rng.randint(1, min(3, len(pool)))
            vin = [InputRef(*pool.pop(rng.randrange(len(pool)))) for _ in range(k)]
            vout = [
                b.unknown("u") if rng.random() < unknown_p else b.addressed()
                for _ in range(rng.randint(1, 4))
            ]
            t = Tx(b.txid(), "", vin, vout, False)
            pool += [(t.hash, i) for i in range(len(vout))]
            txs.append(t)
            made += 1
        ledger.add_block(Block(_hash("block", seed, height), height, txs))
        height += 1
    return ledger
