"""HTTP facade: lookup tables, recommendations, ingest and training.

Endpoints (all JSON):

    GET  /health                              -> {"status": "ok", "head": n|null}
    GET  /v1/lookup?min=1&max=60&step=1       -> lookup table at the current head
    GET  /v1/recommend?deadline_minutes=&kth= -> kth cheapest price meeting the deadline
    GET  /v1/model                            -> serialized linear model
    POST /v1/chain   (body: blocks JSONL)     -> replaces the chain snapshot
    POST /v1/train   (body: {"from_ts","to_ts","lookback"}) -> fits a model

State is a single immutable snapshot swapped atomically on ingest/train;
in-flight reads keep the snapshot they started with. Errors carry
{"code", "message"}.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlparse

import numpy as np

from .chainmodel import ChainView
from .errors import DegenerateDesign, GastimateError
from .estimator import LinearModel, LookupTable, fit_arrays, lookup_table
from .features import AnchorMode, collect_samples
from .ingest import parse_chain
from .pricing import DEFAULT_LOOKBACK

DEFAULT_PRICE_MIN = 1.0
DEFAULT_PRICE_MAX = 60.0
DEFAULT_PRICE_STEP = 1.0


@dataclass(frozen=True, slots=True)
class Snapshot:
    """One consistent (chain, model) pair."""

    chain: Optional[ChainView] = None
    model: Optional[LinearModel] = None
    trained_at: Optional[int] = None

    @property
    def head(self) -> Optional[int]:
        if self.chain is None or self.chain.head is None:
            return None
        return self.chain.head.number


class ServiceState:
    """Holds the current snapshot; swaps are atomic reference assignments."""

    def __init__(self) -> None:
        self._snapshot = Snapshot()
        self._swap_lock = threading.Lock()

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def ingest_chain(self, jsonl_text: str) -> Snapshot:
        chain = parse_chain(jsonl_text.splitlines())
        with self._swap_lock:
            # a fresh chain invalidates any model trained on the old one
            snap = Snapshot(chain=chain, model=None, trained_at=None)
            self._snapshot = snap
        return snap

    def train(self, from_ts: Optional[int], to_ts: Optional[int], lookback: int) -> Snapshot:
        base = self._snapshot
        if base.chain is None:
            raise NoChain()
        samples, _ = collect_samples(base.chain, lookback, AnchorMode.BY_CONTAINING_BLOCK)
        picked = [
            s
            for s in samples
            if (from_ts is None or s.pending_ts >= from_ts)
            and (to_ts is None or s.pending_ts <= to_ts)
        ]
        if len(picked) < 2:
            raise DegenerateDesign("fewer than 2 training samples in range")
        feats = np.array([s.feature_pct for s in picked])
        minutes = np.array([s.actual_minutes for s in picked])
        pend = [s.pending_ts for s in picked]
        model = fit_arrays(
            feats, minutes, train_range=(min(pend), max(pend)), lookback=lookback
        )
        with self._swap_lock:
            snap = replace(self._snapshot, model=model, trained_at=int(time.time()))
            self._snapshot = snap
        return snap


class NoChain(GastimateError):
    pass


class NoModel(GastimateError):
    pass


def _lookup_for(snapshot: Snapshot, price_min: float, price_max: float, step: float) -> LookupTable:
    if snapshot.chain is None or snapshot.head is None:
        raise NoChain()
    if snapshot.model is None:
        raise NoModel()
    return lookup_table(
        snapshot.model,
        snapshot.chain,
        snapshot.head,
        price_min=price_min,
        price_max=price_max,
        price_step=step,
        lookback=snapshot.model.lookback,
    )


def recommend_from_table(table: LookupTable, deadline_minutes: float, kth: int) -> Optional[dict]:
    """kth-smallest price whose prediction meets the deadline; None if fewer than k."""
    qualifying = [r for r in table.rows if r.predicted_minutes <= deadline_minutes]
    if len(qualifying) < kth:
        return None
    row = qualifying[kth - 1]
    return {
        "gas_price_gwei": row.gas_price_gwei,
        "predicted_minutes": row.predicted_minutes,
        "category": row.category.label,
    }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    state: ServiceState  # attached by make_server

    # --- plumbing

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"code": code, "message": message})

    def _query(self) -> dict:
        return parse_qs(urlparse(self.path).query)

    def _qparam(self, query: dict, name: str, default, cast):
        if name not in query:
            return default
        return cast(query[name][0])

    # --- verbs

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = urlparse(self.path).path
        snapshot = self.state.snapshot
        try:
            if path == "/health":
                self._send(200, {"status": "ok", "head": snapshot.head})
            elif path == "/v1/lookup":
                self._handle_lookup(snapshot)
            elif path == "/v1/recommend":
                self._handle_recommend(snapshot)
            elif path == "/v1/model":
                if snapshot.model is None:
                    self._error(409, "no_model", "no model trained yet")
                else:
                    self._send(200, json.loads(snapshot.model.to_json()))
            else:
                self._error(404, "not_found", f"unknown path {path}")
        except NoChain:
            self._error(409, "no_chain", "no chain ingested yet")
        except NoModel:
            self._error(409, "no_model", "no model trained yet")
        except ValueError as exc:
            self._error(400, "bad_request", str(exc))
        except GastimateError as exc:
            self._error(409, type(exc).__name__.lower(), str(exc))

    def do_POST(self):
        path = urlparse(self.path).path
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length).decode("utf-8") if length else ""
        try:
            if path == "/v1/chain":
                snap = self.state.ingest_chain(body)
                self._send(200, {"head": snap.head, "blocks": len(snap.chain.blocks)})
            elif path == "/v1/train":
                params = json.loads(body) if body.strip() else {}
                snap = self.state.train(
                    from_ts=params.get("from_ts"),
                    to_ts=params.get("to_ts"),
                    lookback=int(params.get("lookback", DEFAULT_LOOKBACK)),
                )
                self._send(200, json.loads(snap.model.to_json()))
            else:
                self._error(404, "not_found", f"unknown path {path}")
        except json.JSONDecodeError as exc:
            self._error(400, "bad_request", f"invalid JSON body: {exc.msg}")
        except NoChain:
            self._error(409, "no_chain", "no chain ingested yet")
        except GastimateError as exc:
            self._error(409, type(exc).__name__.lower(), str(exc))

    # --- endpoint bodies

    def _handle_lookup(self, snapshot: Snapshot) -> None:
        q = self._query()
        price_min = self._qparam(q, "min", DEFAULT_PRICE_MIN, float)
        price_max = self._qparam(q, "max", DEFAULT_PRICE_MAX, float)
        step = self._qparam(q, "step", DEFAULT_PRICE_STEP, float)
        table = _lookup_for(snapshot, price_min, price_max, step)
        self._send(200, table.to_dict())

    def _handle_recommend(self, snapshot: Snapshot) -> None:
        q = self._query()
        deadline = self._qparam(q, "deadline_minutes", None, float)
        kth = self._qparam(q, "kth", 1, int)
        if deadline is None or deadline <= 0:
            self._error(400, "bad_request", "deadline_minutes must be > 0")
            return
        if kth < 1:
            self._error(400, "bad_request", "kth must be >= 1")
            return
        price_min = self._qparam(q, "min", DEFAULT_PRICE_MIN, float)
        price_max = self._qparam(q, "max", DEFAULT_PRICE_MAX, float)
        step = self._qparam(q, "step", DEFAULT_PRICE_STEP, float)
        table = _lookup_for(snapshot, price_min, price_max, step)
        result = recommend_from_table(table, deadline, kth)
        if result is None:
            self._error(404, "no_price_meets_deadline", "fewer than kth prices meet the deadline")
            return
        result["head_block"] = table.head_block
        self._send(200, result)


def make_server(bind: str = "127.0.0.1", port: int = 8080, state: Optional[ServiceState] = None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    state = state or ServiceState()
    handler = type("BoundHandler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer((bind, port), handler)
    server.state = state  # type: ignore[attr-defined]
    return server
