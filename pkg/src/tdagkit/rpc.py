"""Block fetcher for a node's JSON-RPC interface, writing interchange lines.

Only ``getblockhash`` and ``getblock`` (verbosity 2) are used.  The node URL
and ``user:password`` credentials come from ``NODE_RPC_URL`` and
``NODE_RPC_AUTH`` unless passed explicitly.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import urllib.error
import urllib.request
from decimal import Decimal
from pathlib import Path
from typing import Callable, Optional

from .ledger import Block, InputRef, OutputRecord, Tx, dump_block

log = logging.getLogger(__name__)

SATS = Decimal(100_000_000)


class RpcError(Exception):
    def __init__(self, message: str, last_good_height: Optional[int] = None) -> None:
        self.last_good_height = last_good_height
        super().__init__(message)


class RpcClient:
    def __init__(self, url: str, auth: Optional[str] = None, timeout: float = 30.0) -> None:
        self.url = url
        self.auth = auth
        self.timeout = timeout
        self._id = 0

    @classmethod
    def from_env(cls, url: Optional[str] = None) -> "RpcClient":
        url = url or os.environ.get("NODE_RPC_URL")
        if not url:
            raise RpcError("no node URL: pass --node-url or set NODE_RPC_URL")
        return cls(url, os.environ.get("NODE_RPC_AUTH"))

    def call(self, method: str, *params):
        self._id += 1
        body = json.dumps({"jsonrpc": "1.0", "id": self._id, "method": method, "params": list(params)})
        req = urllib.request.Request(self.url, data=body.encode(), method="POST")
        req.add_header("Content-Type", "application/json")
        if self.auth:
            token = base64.b64encode(self.auth.encode()).decode()
            req.add_header("Authorization", f"Basic {token}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read(), parse_float=Decimal)
        except urllib.error.HTTPError as exc:
            raise RpcError(f"{method}: HTTP {exc.code}") from None
        except (urllib.error.URLError, OSError) as exc:
            raise RpcError(f"{method}: {exc}") from None
        except json.JSONDecodeError:
            raise RpcError(f"{method}: response is not JSON") from None
        if payload.get("error"):
            raise RpcError(f"{method}: {payload['error']}")
        return payload["result"]


def _address(spk: dict) -> Optional[str]:
    if "address" in spk:
        return spk["address"]
    addrs = spk.get("addresses")
    if addrs:
        return ",".join(addrs)
    return None


def block_from_rpc(raw: dict) -> Block:
    """Convert a verbosity-2 ``getblock`` result; values become integer satoshis."""
    txs = []
    for t in raw["tx"]:
        coinbase = any("coinbase" in i for i in t["vin"])
        vin = [] if coinbase else [InputRef(i["txid"], int(i["vout"])) for i in t["vin"]]
        vout = []
        for o in t["vout"]:
            spk = o.get("scriptPubKey", {})
            value = int(Decimal(o["value"]) * SATS)
            vout.append(OutputRecord(_address(spk), bytes.fromhex(spk.get("hex", "")), value))
        txs.append(Tx(t["txid"], raw["hash"], vin, vout, coinbase))
    return Block(raw["hash"], int(raw["height"]), txs)


def last_height(path: Path) -> Optional[int]:
    """Height of the last complete line of an interchange file, if any."""
    if not path.exists():
        return None
    last = None
    with open(path, "rb") as fh:
        for line in fh:
            if line.endswith(b"\n") and line.strip():
                last = json.loads(line)["height"]
    return last


def _truncate_partial(path: Path) -> None:
    if not path.exists():
        return
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])


def fetch(
    client: RpcClient,
    from_height: int,
    to_height: int,
    out_path: str | Path,
    progress: Optional[Callable[[int, int], None]] = None,
) -> int:
    """Append blocks ``from_height..to_height`` inclusive, resuming after the last line.

    Returns the number of blocks written.  On failure raises RpcError with
    ``last_good_height`` set to the highest height safely on disk.
    """
    out_path = Path(out_path)
    _truncate_partial(out_path)
    done = last_height(out_path)
    start = from_height if done is None else max(from_height, done + 1)
    written = 0
    last_good = done
    total = to_height - from_height + 1
    with open(out_path, "a", encoding="utf-8", newline="\n") as fh:
        for h in range(start, to_height + 1):
            try:
                bhash = client.call("getblockhash", h)
                block = block_from_rpc(client.call("getblock", bhash, 2))
            except RpcError as exc:
                raise RpcError(str(exc), last_good) from None
            except (KeyError, TypeError, ValueError) as exc:
                raise RpcError(f"height {h}: malformed block: {exc}", last_good) from None
            fh.write(dump_block(block) + "\n")
            fh.flush()
            written += 1
            last_good = h
            if progress:
                progress(h - from_height + 1, total)
    return written
