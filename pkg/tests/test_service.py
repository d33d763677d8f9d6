import json
import threading
import urllib.error
import urllib.request

import pytest

from gastimate.chainmodel import Block, ChainView, Transaction
from gastimate.ingest import chain_to_jsonl
from gastimate.service import make_server
from gastimate.synthchain import SynthConfig, generate


@pytest.fixture()
def server():
    srv = make_server(bind="127.0.0.1", port=0)
    thread = threading.Thread(target=lambda: srv.serve_forever(poll_interval=0.02), daemon=True)
    thread.start()
    host, port = srv.server_address[:2]
    base = f"http://{host}:{port}"
    yield base, srv.state
    srv.shutdown()
    srv.server_close()
    thread.join(timeout=5)


def get(base, path):
    try:
        with urllib.request.urlopen(base + path) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode())


def post(base, path, body: str):
    req = urllib.request.Request(
        base + path, data=body.encode(), headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode())


def table_tx(h, price, pending, number, ts):
    return Transaction(
        hash=h, sender=f"s-{h}", nonce=0, gas_price_gwei=price,
        pending_ts=pending, block_number=number, processed_ts=ts,
    )


def lookup_shape_chain() -> ChainView:
    """Two price plateaus and two delay levels; trained with lookback 2 the
    service predicts > 5 minutes below 6 GWEI and < 5 minutes from 6 up."""
    def fillers(number, ts, count):
        return [table_tx(f"fil{number}_{i}", 5.5, ts - 1800, number, ts) for i in range(count)]

    blocks = [
        Block(1, 10000, tuple(fillers(1, 10000, 6))),
        Block(2, 10100, tuple(fillers(2, 10100, 6))),
        Block(
            3, 10200,
            tuple([table_tx(f"A{i}", 20.0, 10200 - 240, 3, 10200) for i in range(3)] + fillers(3, 10200, 3)),
        ),
        Block(
            4, 10300,
            tuple([table_tx(f"B{i}", 2.0, 10300 - 1800, 4, 10300) for i in range(3)] + fillers(4, 10300, 3)),
        ),
    ]
    return ChainView(blocks)


class TestHealthAndRouting:
    def test_health_empty_state(self, server):
        base, _ = server
        status, body = get(base, "/health")
        assert status == 200
        assert body == {"status": "ok", "head": None}

    def test_health_after_ingest(self, server):
        base, _ = server
        chain = generate(SynthConfig(seed=1, n_blocks=20, block_capacity=4, arrival_rate=3.0))
        status, body = post(base, "/v1/chain", chain_to_jsonl(chain))
        assert status == 200
        assert body["head"] == 20
        assert get(base, "/health")[1]["head"] == 20

    def test_unknown_path_404(self, server):
        base, _ = server
        status, body = get(base, "/nope")
        assert status == 404
        assert body["code"] == "not_found"


class TestGuards:
    def test_lookup_without_chain(self, server):
        base, _ = server
        status, body = get(base, "/v1/lookup")
        assert status == 409
        assert body["code"] == "no_chain"

    def test_lookup_without_model(self, server):
        base, _ = server
        chain = generate(SynthConfig(seed=2, n_blocks=20, block_capacity=4, arrival_rate=3.0))
        post(base, "/v1/chain", chain_to_jsonl(chain))
        status, body = get(base, "/v1/lookup")
        assert status == 409
        assert body["code"] == "no_model"

    def test_model_endpoint_guard(self, server):
        base, _ = server
        status, body = get(base, "/v1/model")
        assert status == 409
        assert body["code"] == "no_model"

    def test_recommend_validation(self, server):
        base, _ = server
        status, body = get(base, "/v1/recommend?deadline_minutes=0&kth=1")
        assert status == 400
        status, body = get(base, "/v1/recommend?deadline_minutes=5&kth=0")
        assert status == 400

    def test_bad_chain_body(self, server):
        base, _ = server
        status, body = post(base, "/v1/chain", "{broken")
        assert status == 409 or status == 400

    def test_ingest_resets_model(self, server):
        base, _ = server
        chain = lookup_shape_chain()
        post(base, "/v1/chain", chain_to_jsonl(chain))
        post(base, "/v1/train", json.dumps({"lookback": 2}))
        assert get(base, "/v1/model")[0] == 200
        post(base, "/v1/chain", chain_to_jsonl(chain))
        assert get(base, "/v1/model")[0] == 409


class TestLookupAndRecommend:
    def prepared(self, base):
        post(base, "/v1/chain", chain_to_jsonl(lookup_shape_chain()))
        status, model = post(base, "/v1/train", json.dumps({"lookback": 2}))
        assert status == 200
        return model

    def test_train_returns_model(self, server):
        base, _ = server
        model = self.prepared(base)
        assert model["n_train"] == 18
        assert model["slope_b"] < 0
        status, fetched = get(base, "/v1/model")
        assert status == 200
        assert fetched == model

    def test_train_range_filters_samples(self, server):
        base, _ = server
        post(base, "/v1/chain", chain_to_jsonl(lookup_shape_chain()))
        # from 9000 only the fast high-price txs remain: one feature value
        status, body = post(
            base, "/v1/train", json.dumps({"lookback": 2, "from_ts": 9000})
        )
        assert status == 409
        assert body["code"] == "degeneratedesign"
        # from 8400 both plateaus survive (12 of the 18 full-range samples)
        status, model = post(
            base, "/v1/train", json.dumps({"lookback": 2, "from_ts": 8400})
        )
        assert status == 200
        assert model["n_train"] == 12
        assert model["train_from"] >= 8400

    def test_default_lookup_has_60_rows(self, server):
        base, _ = server
        self.prepared(base)
        status, table = get(base, "/v1/lookup")
        assert status == 200
        assert len(table["rows"]) == 60
        assert table["monotone_ok"] is True
        assert table["head_block"] == 4
        labels = {row["category"] for row in table["rows"]}
        assert labels <= {"very_cheap", "cheap", "regular", "expensive", "very_expensive"}

    def test_single_row_lookup(self, server):
        base, _ = server
        self.prepared(base)
        status, table = get(base, "/v1/lookup?min=10&max=10")
        assert status == 200
        assert len(table["rows"]) == 1
        assert table["rows"][0]["gas_price_gwei"] == 10.0

    def test_table_shape_recommendations(self, server):
        base, _ = server
        self.prepared(base)
        status, rec = get(base, "/v1/recommend?deadline_minutes=5&kth=1")
        assert status == 200
        assert rec["gas_price_gwei"] == 6.0
        status, rec = get(base, "/v1/recommend?deadline_minutes=5&kth=3")
        assert status == 200
        assert rec["gas_price_gwei"] == 8.0

    def test_infeasible_deadline(self, server):
        base, _ = server
        self.prepared(base)
        status, body = get(base, "/v1/recommend?deadline_minutes=0.001&kth=1")
        assert status == 404
        assert body["code"] == "no_price_meets_deadline"

    def test_recommend_consistent_with_lookup(self, server):
        base, _ = server
        self.prepared(base)
        _, table = get(base, "/v1/lookup")
        for kth in (1, 2, 3, 5):
            for deadline in (4.5, 5.0, 8.0, 31.0):
                qualifying = [r for r in table["rows"] if r["predicted_minutes"] <= deadline]
                status, rec = get(base, f"/v1/recommend?deadline_minutes={deadline}&kth={kth}")
                if len(qualifying) < kth:
                    assert status == 404
                else:
                    assert status == 200
                    assert rec["gas_price_gwei"] == qualifying[kth - 1]["gas_price_gwei"]


class TestSnapshotAtomicity:
    def test_reads_never_see_half_updated_state(self, server):
        base, state = server
        post(base, "/v1/chain", chain_to_jsonl(lookup_shape_chain()))
        post(base, "/v1/train", json.dumps({"lookback": 2}))
        snap = state.snapshot
        assert snap.model is not None and snap.chain is not None
        # swapping in a new chain yields a fresh snapshot object; the old
        # reference still carries its consistent pair
        post(base, "/v1/chain", chain_to_jsonl(lookup_shape_chain()))
        assert snap.model is not None
        assert state.snapshot.model is None
