"""Locking-script disassembly and regex rule matching.

Scripts are rendered as space-separated tokens: opcode names (``OP_DUP``,
``OP_1``, ...) and lowercase hex for data pushes.  Rules are regular
expressions over that text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

OPCODES: dict[int, str] = {
    0x00: "OP_0",
    0x4C: "OP_PUSHDATA1",
    0x4D: "OP_PUSHDATA2",
    0x4E: "OP_PUSHDATA4",
    0x4F: "OP_1NEGATE",
    0x50: "OP_RESERVED",
    0x61: "OP_NOP",
    0x62: "OP_VER",
    0x63: "OP_IF",
    0x64: "OP_NOTIF",
    0x65: "OP_VERIF",
    0x66: "OP_VERNOTIF",
    0x67: "OP_ELSE",
    0x68: "OP_ENDIF",
    0x69: "OP_VERIFY",
    0x6A: "OP_RETURN",
    0x6B: "OP_TOALTSTACK",
    0x6C: "OP_FROMALTSTACK",
    0x6D: "OP_2DROP",
    0x6E: "OP_2DUP",
    0x6F: "OP_3DUP",
    0x70: "OP_2OVER",
    0x71: "OP_2ROT",
    0x72: "OP_2SWAP",
    0x73: "OP_IFDUP",
    0x74: "OP_DEPTH",
    0x75: "OP_DROP",
    0x76: "OP_DUP",
    0x77: "OP_NIP",
    0x78: "OP_OVER",
    0x79: "OP_PICK",
    0x7A: "OP_ROLL",
    0x7B: "OP_ROT",
    0x7C: "OP_SWAP",
    0x7D: "OP_TUCK",
    0x7E: "OP_CAT",
    0x7F: "OP_SUBSTR",
    0x80: "OP_LEFT",
    0x81: "OP_RIGHT",
    0x82: "OP_SIZE",
    0x83: "OP_INVERT",
    0x84: "OP_AND",
    0x85: "OP_OR",
    0x86: "OP_XOR",
    0x87: "OP_EQUAL",
    0x88: "OP_EQUALVERIFY",
    0x89: "OP_RESERVED1",
    0x8A: "OP_RESERVED2",
    0x8B: "OP_1ADD",
    0x8C: "OP_1SUB",
    0x8D: "OP_2MUL",
    0x8E: "OP_2DIV",
    0x8F: "OP_NEGATE",
    0x90: "OP_ABS",
    0x91: "OP_NOT",
    0x92: "OP_0NOTEQUAL",
    0x93: "OP_ADD",
    0x94: "OP_SUB",
    0x95: "OP_MUL",
    0x96: "OP_DIV",
    0x97: "OP_MOD",
    0x98: "OP_LSHIFT",
    0x99: "OP_RSHIFT",
    0x9A: "OP_BOOLAND",
    0x9B: "OP_BOOLOR",
    0x9C: "OP_NUMEQUAL",
    0x9D: "OP_NUMEQUALVERIFY",
    0x9E: "OP_NUMNOTEQUAL",
    0x9F: "OP_LESSTHAN",
    0xA0: "OP_GREATERTHAN",
    0xA1: "OP_LESSTHANOREQUAL",
    0xA2: "OP_GREATERTHANOREQUAL",
    0xA3: "OP_MIN",
    0xA4: "OP_MAX",
    0xA5: "OP_WITHIN",
    0xA6: "OP_RIPEMD160",
    0xA7: "OP_SHA1",
    0xA8: "OP_SHA256",
    0xA9: "OP_HASH160",
    0xAA: "OP_HASH256",
    0xAB: "OP_CODESEPARATOR",
    0xAC: "OP_CHECKSIG",
    0xAD: "OP_CHECKSIGVERIFY",
    0xAE: "OP_CHECKMULTISIG",
    0xAF: "OP_CHECKMULTISIGVERIFY",
    0xB0: "OP_NOP1",
    0xB1: "OP_CHECKLOCKTIMEVERIFY",
    0xB2: "OP_CHECKSEQUENCEVERIFY",
    0xB3: "OP_NOP4",
    0xB4: "OP_NOP5",
    0xB5: "OP_NOP6",
    0xB6: "OP_NOP7",
    0xB7: "OP_NOP8",
    0xB8: "OP_NOP9",
    0xB9: "OP_NOP10",
}
for _n in range(1, 17):
    OPCODES[0x50 + _n] = f"OP_{_n}"

NAME_TO_OP = {name: op for op, name in OPCODES.items()}


def disassemble(script: bytes) -> str:
    tokens: list[str] = []
    i, n = 0, len(script)
    while i < n:
        op = script[i]
        i += 1
        if 0x01 <= op <= 0x4B:
            size = op
        elif op in (0x4C, 0x4D, 0x4E):
            width = {0x4C: 1, 0x4D: 2, 0x4E: 4}[op]
            if i + width > n:
                tokens.append("[error]")
                break
            size = int.from_bytes(script[i : i + width], "little")
            i += width
        else:
            tokens.append(OPCODES.get(op, f"OP_UNKNOWN{op:#04x}"))
            continue
        if i + size > n:
            tokens.append("[error]")
            break
        tokens.append(script[i : i + size].hex())
        i += size
    return " ".join(tokens)


def assemble(text: str) -> bytes:
    """Inverse of :func:`disassemble` for well-formed token strings."""
    out = bytearray()
    for tok in text.split():
        if tok in NAME_TO_OP:
            out.append(NAME_TO_OP[tok])
            continue
        data = bytes.fromhex(tok)
        if len(data) <= 0x4B:
            out.append(len(data))
        elif len(data) <= 0xFF:
            out += bytes([0x4C, len(data)])
        elif len(data) <= 0xFFFF:
            out += b"\x4d" + len(data).to_bytes(2, "little")
        else:
            out += b"\x4e" + len(data).to_bytes(4, "little")
        out += data
    return bytes(out)


@dataclass(frozen=True)
class ScriptRule:
    name: str
    pattern: str
    doc: str = ""


@dataclass
class ScriptMatcher:
    rules: list[ScriptRule] = field(default_factory=list)

    def __post_init__(self) -> None:
        names = [r.name for r in self.rules]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate rule names in {names}")
        self._compiled = [(r.name, re.compile(r.pattern)) for r in self.rules]

    def match(self, script: bytes) -> Optional[str]:
        """Name of the first rule whose pattern matches, else None."""
        text = disassemble(script)
        for name, rx in self._compiled:
            if rx.search(text):
                return name
        return None

    def matches(self, script: bytes) -> bool:
        return self.match(script) is not None

    def extended(self, rules: Iterable[ScriptRule]) -> "ScriptMatcher":
        return ScriptMatcher(list(self.rules) + list(rules))

    def to_json(self) -> list[dict]:
        return [{"name": r.name, "pattern": r.pattern, "doc": r.doc} for r in self.rules]


def load_rules(path: str | Path) -> list[ScriptRule]:
    """Rules file: JSON list of ``{"name", "pattern"[, "doc"]}`` objects."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError(f"{path}: expected a JSON list of rules")
    rules = []
    for entry in raw:
        if not isinstance(entry, dict) or "name" not in entry or "pattern" not in entry:
            raise ValueError(f"{path}: each rule needs 'name' and 'pattern'")
        re.compile(entry["pattern"])
        rules.append(ScriptRule(entry["name"], entry["pattern"], entry.get("doc", "")))
    return rules


def default_matcher() -> ScriptMatcher:
    """Root-script filters for non-standard scripts with known, benign semantics."""
    return ScriptMatcher(
        [
            ScriptRule(
                "P2PKH_NOP",
                r"^OP_DUP OP_HASH160 [0-9a-f]{40} OP_EQUALVERIFY OP_CHECKSIG(?: OP_NOP\d*)+$",
                "pay-to-pubkey-hash followed by NOPs; used to exercise OP_NOP",
            ),
            ScriptRule(
                "OP_MIN_OP_EQUAL",
                r"^OP_MIN(?: \S+)? OP_EQUAL$",
                "arithmetic puzzle anyone can solve without a key",
            ),
            ScriptRule(
                "PAY_TO_HASH",
                r"^OP_(?:SHA256|HASH256|SHA1|RIPEMD160) [0-9a-f]+ OP_EQUAL$",
                "hash preimage contest; P2SH (OP_HASH160) is standard and excluded",
            ),
            ScriptRule(
                "OP_IF",
                r"^OP_IF\b",
                "conditional script whose redeem branch needs no signature",
            ),
            ScriptRule(
                "OP_CHECKMULTISIG_TRIVIAL",
                r"^OP_0 (?:\S+ )*OP_\d+ OP_CHECKMULTISIG$",
                "zero-of-n multisig: satisfiable without any private key",
            ),
        ]
    )


def trivial_matcher(extra: Iterable[ScriptRule] = ()) -> ScriptMatcher:
    """Anyone-can-spend locking scripts elided by compression."""
    base = [
        ScriptRule("EMPTY", r"^$", "empty locking script"),
        ScriptRule("OP_TRUE", r"^OP_1$", "OP_TRUE only"),
    ]
    return ScriptMatcher(base + list(extra))
