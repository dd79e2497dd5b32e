from __future__ import annotations

import hashlib

from tdagkit.ledger import Block, InputRef, Ledger, OutputRecord, Tx
from tdagkit.script import assemble

P2PKH = assemble("OP_DUP OP_HASH160 " + "ab" * 20 + " OP_EQUALVERIFY OP_CHECKSIG")
ODD = assemble("OP_DEPTH OP_0 OP_EQUAL")


def h(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def addr(name: str = "x", value: int = 1000) -> OutputRecord:
    return OutputRecord(f"addr-{name}", P2PKH, value)


def unk(script: bytes = ODD, value: int = 1000) -> OutputRecord:
    return OutputRecord(None, script, value)


def tx(name: str, spends: list[tuple[str, int]], outs: list[OutputRecord]) -> Tx:
    vin = [InputRef(h(t), i) for t, i in spends]
    return Tx(h(name), "", vin, outs, coinbase=not spends)


def ledger(*blocks: list[Tx]) -> Ledger:
    led = Ledger()
    for height, txs in enumerate(blocks):
        led.add_block(Block(h(f"block{height}"), height, list(txs)))
    return led


def chain_ledger(n: int) -> Ledger:
    """Coinbase followed by n-1 transactions each spending the previous output."""
    txs = [tx("t0", [], [addr("0")])]
    for i in range(1, n):
        txs.append(tx(f"t{i}", [(f"t{i - 1}", 0)], [addr(str(i))]))
    return ledger(txs)
