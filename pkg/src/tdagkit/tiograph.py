"""TIO graph, alpha-node detection and the contracted TIO graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Hashable, Iterable, Union

from .ledger import INPUT, OUTPUT, Ledger, LedgerError, Tio, Tx, funded_input

COINBASE = "coinbase"
ADDRESSED_SPEND = "addressed-spend"


class CycleFound(Exception):
    def __init__(self, cycle: list) -> None:
        self.cycle = cycle
        self.witness = list(zip(cycle, cycle[1:]))
        super().__init__(f"graph has a cycle of length {len(self.witness)}: {cycle}")


@dataclass(frozen=True)
class AlphaNode:
    """Input set of one transaction that may root an unknown-output pattern."""

    txid: str
    blockhash: str
    inputs: tuple[Tio, ...]
    kind: str

    @property
    def key(self) -> tuple[str, str, str]:
        return ("alpha", self.blockhash, self.txid)

    def describe(self) -> str:
        return f"alpha:{self.blockhash}:{self.txid}"


Node = Union[Tio, AlphaNode]


@dataclass
class TioGraph:
    vertices: set[Tio] = field(default_factory=set)
    edges: set[tuple[Tio, Tio]] = field(default_factory=set)


@dataclass
class ContractedTioGraph:
    vertices: set[Node] = field(default_factory=set)
    edges: set[tuple[Node, Node]] = field(default_factory=set)


def build_tio_graph(ledger: Ledger) -> TioGraph:
    """Complete bipartite input→output edges per tx plus output→funded-input edges."""
    if not ledger.linked:
        raise LedgerError("ledger is not linked")
    g = TioGraph()
    for tx in ledger.txs():
        ins, outs = tx.inputs(), tx.outputs()
        g.vertices.update(ins)
        g.vertices.update(outs)
        g.edges.update((i, o) for i in ins for o in outs)
        for o in outs:
            fi = funded_input(ledger, o)
            if fi is not None:
                g.edges.add((o, fi))
    return g


def assert_acyclic(g: TioGraph | ContractedTioGraph) -> None:
    preds: dict[Hashable, set] = {v: set() for v in g.vertices}
    for u, v in g.edges:
        preds.setdefault(v, set()).add(u)
        preds.setdefault(u, set())
    try:
        TopologicalSorter(preds).prepare()
    except CycleError as exc:
        # graphlib lists the cycle in edge direction, first node repeated at the end
        raise CycleFound(list(exc.args[1])) from None


def alpha_kind(ledger: Ledger, tx: Tx) -> str | None:
    if tx.coinbase:
        return COINBASE
    for inp in tx.inputs():
        if ledger.output(ledger.spending_output(inp)).address is not None:
            return ADDRESSED_SPEND
    return None


def alpha_of(ledger: Ledger, tx: Tx) -> AlphaNode | None:
    kind = alpha_kind(ledger, tx)
    if kind is None:
        return None
    return AlphaNode(tx.hash, tx.blockhash, tuple(tx.inputs()), kind)


def find_alpha_nodes(ledger: Ledger) -> list[AlphaNode]:
    """Alpha nodes in ledger order; every other tx spends only Null-address outputs."""
    if not ledger.linked:
        raise LedgerError("ledger is not linked")
    alphas = []
    for tx in ledger.txs():
        a = alpha_of(ledger, tx)
        if a is not None:
            alphas.append(a)
        else:
            assert all(
                ledger.output(ledger.spending_output(i)).address is None for i in tx.inputs()
            )
    return alphas


def contract(g: TioGraph, alphas: Iterable[AlphaNode], ledger: Ledger) -> ContractedTioGraph:
    """Merge each alpha node's inputs, then elide inputs of the remaining transactions."""
    owner: dict[Tio, AlphaNode] = {}
    cg = ContractedTioGraph()
    for a in alphas:
        cg.vertices.add(a)
        for i in a.inputs:
            owner[i] = a
        if not a.inputs:
            # coinbase: no stored inputs, the contracted vertex stands for the empty input set
            cg.edges.update((a, o) for o in ledger.tx(a.blockhash, a.txid).outputs())
    cg.vertices.update(v for v in g.vertices if v.kind == OUTPUT)
    for u, v in g.edges:
        if u.kind == INPUT:
            if u in owner:
                cg.edges.add((owner[u], v))
        elif v in owner:
            cg.edges.add((u, owner[v]))
        else:
            cg.edges.update((u, o) for o in ledger.tx_of(v).outputs())
    assert not any(isinstance(v, Tio) and v.kind == INPUT for v in cg.vertices)
    return cg


def contract_ledger(ledger: Ledger) -> ContractedTioGraph:
    """Contracted graph built per transaction without materializing the TIO graph."""
    if not ledger.linked:
        raise LedgerError("ledger is not linked")
    cg = ContractedTioGraph()
    for tx in ledger.txs():
        outs = tx.outputs()
        cg.vertices.update(outs)
        a = alpha_of(ledger, tx)
        if a is not None:
            cg.vertices.add(a)
            cg.edges.update((a, o) for o in outs)
            cg.edges.update((ledger.spending_output(i), a) for i in a.inputs)
        else:
            for i in tx.inputs():
                src = ledger.spending_output(i)
                cg.edges.update((src, o) for o in outs)
    return cg


def _node_descriptor(node: Node) -> dict:
    if isinstance(node, AlphaNode):
        return {
            "type": "alpha",
            "kind": node.kind,
            "txid": node.txid,
            "blockhash": node.blockhash,
            "inputs": [i.index for i in node.inputs],
        }
    return {"type": node.kind, "txid": node.txid, "blockhash": node.blockhash, "index": node.index}


def _node_sort_key(node: Node) -> tuple:
    if isinstance(node, AlphaNode):
        return (node.blockhash, node.txid, 0, -1)
    return (node.blockhash, node.txid, 1 if node.kind == INPUT else 2, node.index)


def dump_edge_list(g: TioGraph | ContractedTioGraph, path: str | Path) -> Path:
    """Write ``tail<TAB>head`` lines plus a ``.nodes.json`` id→descriptor sidecar."""
    path = Path(path)
    order = sorted(g.vertices, key=_node_sort_key)
    ids = {v: i for i, v in enumerate(order)}
    lines = sorted((ids[u], ids[v]) for u, v in g.edges)
    path.write_text("".join(f"{u}\t{v}\n" for u, v in lines), encoding="utf-8")
    sidecar = path.with_suffix(path.suffix + ".nodes.json")
    sidecar.write_text(
        json.dumps({str(i): _node_descriptor(v) for v, i in ids.items()}, indent=1, sort_keys=True),
        encoding="utf-8",
    )
    return sidecar
