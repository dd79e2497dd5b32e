from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from helpers import h
from tdagkit.ledger import ingest, link
from tdagkit.rpc import RpcClient, RpcError, block_from_rpc, fetch, last_height

AUTH = "user:secret"


def _block(height: int) -> dict:
    cb = {
        "txid": h(f"cb{height}"),
        "vin": [{"coinbase": "04ffff"}],
        "vout": [
            {"value": 50.0, "scriptPubKey": {"hex": "51", "address": f"addr{height}"}},
            {"value": 0.00000001, "scriptPubKey": {"hex": "6a"}},
        ],
    }
    txs = [cb]
    if height:
        txs.append(
            {
                "txid": h(f"t{height}"),
                "vin": [{"txid": h(f"cb{height - 1}"), "vout": 0}],
                "vout": [{"value": 1.5, "scriptPubKey": {"hex": "52", "addresses": ["x", "y"]}}],
            }
        )
    return {"hash": h(f"b{height}"), "height": height, "tx": txs}


class _Node(BaseHTTPRequestHandler):
    fail_at = None
    calls: list = []

    def do_POST(self):
        want = "Basic " + base64.b64encode(AUTH.encode()).decode()
        if self.headers.get("Authorization") != want:
            self.send_response(401)
            self.end_headers()
            return
        req = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        method, params = req["method"], req["params"]
        type(self).calls.append((method, params))
        if method == "getblockhash":
            if params[0] == type(self).fail_at:
                result, error = None, {"code": -8, "message": "Block height out of range"}
            else:
                result, error = h(f"b{params[0]}"), None
        else:
            height = next(i for i in range(100) if h(f"b{i}") == params[0])
            result, error = _block(height), None
        body = json.dumps({"result": result, "error": error, "id": req["id"]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def node():
    _Node.fail_at = None
    _Node.calls = []
    srv = HTTPServer(("127.0.0.1", 0), _Node)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}/"
    srv.shutdown()


def test_fetch_and_resume(node, tmp_path):
    out = tmp_path / "l.jsonl"
    client = RpcClient(node, AUTH)
    assert fetch(client, 0, 4, out) == 5
    assert fetch(client, 0, 9, out) == 5
    assert len(out.read_text().splitlines()) == 10
    heights = [p[0] for m, p in _Node.calls if m == "getblockhash"]
    assert heights == list(range(10))
    led = link(ingest(out))
    assert led.tx_count == 19
    first = led.blocks[0].tx[0]
    assert first.coinbase and first.vout[0].value == 5_000_000_000 and first.vout[1].value == 1
    assert first.vout[1].address is None
    assert led.blocks[1].tx[1].vout[0].address == "x,y"


def test_failure_reports_last_good(node, tmp_path):
    _Node.fail_at = 3
    out = tmp_path / "l.jsonl"
    with pytest.raises(RpcError) as err:
        fetch(RpcClient(node, AUTH), 0, 9, out)
    assert err.value.last_good_height == 2
    assert last_height(out) == 2


def test_auth_failure(node, tmp_path):
    with pytest.raises(RpcError, match="401"):
        fetch(RpcClient(node, "user:wrong"), 0, 1, tmp_path / "l.jsonl")


def test_partial_line_dropped_on_resume(node, tmp_path):
    out = tmp_path / "l.jsonl"
    fetch(RpcClient(node, AUTH), 0, 1, out)
    with open(out, "a") as fh:
        fh.write('{"hash": "trunc')
    fetch(RpcClient(node, AUTH), 0, 2, out)
    assert [json.loads(x)["height"] for x in out.read_text().splitlines()] == [0, 1, 2]


def test_block_conversion_values_exact():
    from decimal import Decimal

    raw = _block(1)
    raw["tx"][1]["vout"][0]["value"] = Decimal("0.29999999")
    assert block_from_rpc(raw).tx[1].vout[0].value == 29_999_999
