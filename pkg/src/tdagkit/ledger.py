"""Portable ledger model: blocks, transactions, TIO identifiers and spend linkage.

The interchange format is newline-delimited JSON, one block per line::

    {"hash": hex64, "height": int,
     "tx": [{"hash": hex64, "coinbase": bool,
             "vin": [{"prev_txid": hex64, "prev_vout": int}],
             "vout": [{"address": str|null, "script": hex, "value": int}]}]}

A transaction is identified by the pair ``(blockhash, hash)`` because the
chain contains repeated transaction hashes in different blocks.
"""

from __future__ import annotations

import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional

log = logging.getLogger(__name__)

INPUT = "input"
OUTPUT = "output"

_HEX64 = re.compile(r"^[0-9a-f]{64}$")
_HEX = re.compile(r"^(?:[0-9a-f]{2})*$")


class LedgerError(Exception):
    """Base class for ledger ingestion and linkage failures."""


class SchemaError(LedgerError):
    def __init__(self, line: int, field: str, message: str) -> None:
        self.line = line
        self.field = field
        super().__init__(f"line {line}: field {field!r}: {message}")


class LinkError(LedgerError):
    pass


class LedgerWarning(UserWarning):
    pass


class Tio(NamedTuple):
    """Unique identifier of one transaction input or output."""

    kind: str
    txid: str
    blockhash: str
    index: int

    def describe(self) -> str:
        return f"{self.kind}:{self.blockhash}:{self.txid}:{self.index}"


class SpendRef(NamedTuple):
    """Where an output is spent: transaction identity plus input position."""

    blockhash: str
    txid: str
    vin: int


@dataclass(frozen=True)
class InputRef:
    prev_txid: str
    prev_vout: int


@dataclass
class OutputRecord:
    address: Optional[str]
    script: bytes
    value: int
    spent_by: Optional[SpendRef] = None


@dataclass
class Tx:
    hash: str
    blockhash: str
    vin: list[InputRef]
    vout: list[OutputRecord]
    coinbase: bool
    height: int = 0
    position: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return (self.blockhash, self.hash)

    @property
    def order(self) -> tuple[int, int]:
        return (self.height, self.position)

    def input_tio(self, i: int) -> Tio:
        return Tio(INPUT, self.hash, self.blockhash, i)

    def output_tio(self, i: int) -> Tio:
        return Tio(OUTPUT, self.hash, self.blockhash, i)

    def inputs(self) -> list[Tio]:
        return [self.input_tio(i) for i in range(len(self.vin))]

    def outputs(self) -> list[Tio]:
        return [self.output_tio(i) for i in range(len(self.vout))]


@dataclass
class Block:
    hash: str
    height: int
    tx: list[Tx] = field(default_factory=list)


class Ledger:
    """Ordered chain data with (blockhash, txhash) transaction identity.

    After :func:`link` every output carries ``spent_by`` and every input of a
    non-coinbase transaction knows the output it spends.
    """

    def __init__(self, blocks: Iterable[Block] = ()) -> None:
        self.blocks: list[Block] = []
        self._by_key: dict[tuple[str, str], Tx] = {}
        self._spends: dict[Tio, Tio] = {}
        self.linked = False
        for block in blocks:
            self.add_block(block)

    def add_block(self, block: Block) -> None:
        if self.blocks and block.height <= self.blocks[-1].height:
            raise LedgerError(
                f"block {block.hash} at height {block.height} is not above {self.blocks[-1].height}"
            )
        for i, tx in enumerate(block.tx):
            tx.blockhash = block.hash
            tx.height = block.height
            tx.position = i
            if tx.key in self._by_key:
                raise LedgerError(f"transaction {tx.hash} appears twice in block {block.hash}")
            self._by_key[tx.key] = tx
        self.blocks.append(block)
        self.linked = False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ledger):
            return NotImplemented
        return to_records(self) == to_records(other)

    def txs(self) -> Iterator[Tx]:
        for block in self.blocks:
            yield from block.tx

    @property
    def tx_count(self) -> int:
        return len(self._by_key)

    def tx(self, blockhash: str, txid: str) -> Tx:
        try:
            return self._by_key[(blockhash, txid)]
        except KeyError:
            raise LedgerError(f"unknown transaction ({blockhash}, {txid})") from None

    def tx_of(self, tio: Tio) -> Tx:
        tx = self.tx(tio.blockhash, tio.txid)
        size = len(tx.vin) if tio.kind == INPUT else len(tx.vout)
        if not 0 <= tio.index < size:
            raise LedgerError(f"unresolvable {tio.describe()}")
        return tx

    def output(self, tio: Tio) -> OutputRecord:
        if tio.kind != OUTPUT:
            raise LedgerError(f"{tio.describe()} is not an output")
        return self.tx_of(tio).vout[tio.index]

    def spending_output(self, inp: Tio) -> Tio:
        """The output consumed by input ``inp``."""
        self._require_linked()
        try:
            return self._spends[inp]
        except KeyError:
            raise LedgerError(f"unresolvable {inp.describe()}") from None

    @property
    def input_count(self) -> int:
        return sum(len(tx.vin) for tx in self.txs())

    @property
    def output_count(self) -> int:
        return sum(len(tx.vout) for tx in self.txs())

    @property
    def spent_count(self) -> int:
        return sum(1 for tx in self.txs() for o in tx.vout if o.spent_by is not None)

    @property
    def utxo_count(self) -> int:
        return self.output_count - self.spent_count

    def _require_linked(self) -> None:
        if not self.linked:
            raise LedgerError("ledger is not linked")


def is_unknown_output(out: OutputRecord) -> int:
    """Termination indicator: 0 for a Null-address output, 1 otherwise."""
    return 0 if out.address is None else 1


def link(ledger: Ledger) -> Ledger:
    """Populate ``spent_by`` on every output and the input→output spend map.

    A repeated transaction hash resolves to its latest occurrence at or before
    the spending transaction, like the reference node does.
    """
    latest: dict[str, Tx] = {}
    spends: dict[Tio, Tio] = {}
    for tx in ledger.txs():
        for o in tx.vout:
            o.spent_by = None
    for tx in ledger.txs():
        for i, ref in enumerate(tx.vin):
            src = latest.get(ref.prev_txid)
            where = f"({tx.blockhash}, {tx.hash}, vin {i})"
            if src is None or not 0 <= ref.prev_vout < len(src.vout):
                raise LinkError(
                    f"dangling input {where}: no output {ref.prev_txid}:{ref.prev_vout}"
                )
            out = src.vout[ref.prev_vout]
            if out.spent_by is not None:
                raise LinkError(
                    f"double spend {where}: output {ref.prev_txid}:{ref.prev_vout} "
                    f"already spent by {out.spent_by}"
                )
            out.spent_by = SpendRef(tx.blockhash, tx.hash, i)
            spends[tx.input_tio(i)] = src.output_tio(ref.prev_vout)
        latest[tx.hash] = tx
    ledger._spends = spends
    ledger.linked = True
    return ledger


def funded_input(ledger: Ledger, out: Tio) -> Optional[Tio]:
    """Input that spends ``out``, or None for an unspent output."""
    ledger._require_linked()
    record = ledger.output(out)
    if record.spent_by is None:
        return None
    ref = record.spent_by
    inp = Tio(INPUT, ref.txid, ref.blockhash, ref.vin)
    spender = ledger.tx_of(inp)
    assert spender.order > ledger.tx_of(out).order, "funded input must be more recent"
    return inp


def funded_outputs(ledger: Ledger, inp: Tio) -> list[Tio]:
    """All outputs of the transaction holding ``inp``, in vout order."""
    if inp.kind != INPUT:
        raise LedgerError(f"{inp.describe()} is not an input")
    return ledger.tx_of(inp).outputs()


# -- interchange -------------------------------------------------------------


def _require(obj: dict, name: str, kind: type | tuple, line: int, path: str):
    if not isinstance(obj, dict) or name not in obj:
        raise SchemaError(line, f"{path}{name}", "missing")
    value = obj[name]
    if kind is int and isinstance(value, bool):
        raise SchemaError(line, f"{path}{name}", "expected integer")
    if not isinstance(value, kind):
        raise SchemaError(line, f"{path}{name}", f"unexpected type {type(value).__name__}")
    return value


def _hex64(value: str, line: int, path: str) -> str:
    if not _HEX64.match(value):
        raise SchemaError(line, path, "expected 64 lowercase hex characters")
    return value


def _parse_block(obj: dict, line: int) -> Block:
    bhash = _hex64(_require(obj, "hash", str, line, ""), line, "hash")
    height = _require(obj, "height", int, line, "")
    if height < 0:
        raise SchemaError(line, "height", "negative height")
    txs = []
    for t, tobj in enumerate(_require(obj, "tx", list, line, "")):
        p = f"tx[{t}]."
        thash = _hex64(_require(tobj, "hash", str, line, p), line, p + "hash")
        coinbase = _require(tobj, "coinbase", bool, line, p)
        vin = []
        for i, iobj in enumerate(_require(tobj, "vin", list, line, p)):
            ip = f"{p}vin[{i}]."
            prev = _hex64(_require(iobj, "prev_txid", str, line, ip), line, ip + "prev_txid")
            pv = _require(iobj, "prev_vout", int, line, ip)
            if pv < 0:
                raise SchemaError(line, ip + "prev_vout", "negative index")
            vin.append(InputRef(prev, pv))
        vout = []
        for o, oobj in enumerate(_require(tobj, "vout", list, line, p)):
            op = f"{p}vout[{o}]."
            if not isinstance(oobj, dict) or "address" not in oobj:
                raise SchemaError(line, op + "address", "missing")
            address = oobj["address"]
            if address is not None and not isinstance(address, str):
                raise SchemaError(line, op + "address", "expected string or null")
            script = _require(oobj, "script", str, line, op)
            if not _HEX.match(script):
                raise SchemaError(line, op + "script", "expected lowercase hex")
            value = _require(oobj, "value", int, line, op)
            vout.append(OutputRecord(address, bytes.fromhex(script), value))
        if coinbase != (not vin):
            raise SchemaError(line, p + "coinbase", "coinbase must be true iff vin is empty")
        txs.append(Tx(thash, bhash, vin, vout, coinbase))
    return Block(bhash, height, txs)


def iter_blocks(path: str | Path) -> Iterator[Block]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(lineno, "<line>", f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise SchemaError(lineno, "<line>", "expected a JSON object")
            yield _parse_block(obj, lineno)


def ingest(path: str | Path) -> Ledger:
    """Read an interchange file into a height-ordered, unlinked Ledger."""
    blocks = list(iter_blocks(path))
    seen: set[str] = set()
    heights: set[int] = set()
    for b in blocks:
        if b.hash in seen:
            raise LedgerError(f"duplicate block hash {b.hash}")
        if b.height in heights:
            raise LedgerError(f"duplicate block height {b.height}")
        seen.add(b.hash)
        heights.add(b.height)
    blocks.sort(key=lambda b: b.height)
    for prev, cur in zip(blocks, blocks[1:]):
        if cur.height != prev.height + 1:
            warnings.warn(
                f"non-contiguous heights {prev.height} -> {cur.height}", LedgerWarning, stacklevel=2
            )
    return Ledger(blocks)


def block_record(block: Block) -> dict:
    return {
        "hash": block.hash,
        "height": block.height,
        "tx": [
            {
                "hash": tx.hash,
                "coinbase": tx.coinbase,
                "vin": [{"prev_txid": r.prev_txid, "prev_vout": r.prev_vout} for r in tx.vin],
                "vout": [
                    {"address": o.address, "script": o.script.hex(), "value": o.value}
                    for o in tx.vout
                ],
            }
            for tx in block.tx
        ],
    }


def dump_block(block: Block) -> str:
    return json.dumps(block_record(block), separators=(",", ":"))


def to_records(ledger: Ledger) -> list[dict]:
    return [block_record(b) for b in ledger.blocks]


def write_ledger(ledger: Ledger, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for block in ledger.blocks:
            fh.write(dump_block(block))
            fh.write("\n")
