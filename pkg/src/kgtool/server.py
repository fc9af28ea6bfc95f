"""Network binding of the four verbs.

Stream protocol: each message is a 4-byte big-endian length followed by that
many bytes of UTF-8 JSON. One reply per request, in request order; clients may
pipeline and match replies by ``request_id``. The same JSON bodies are also
accepted over HTTP at ``POST /tool``.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .graph import DEFAULT_CAP, ENTITY_VERBS, RELATION_VERBS, KnowledgeGraph

logger = logging.getLogger(__name__)

HEADER = struct.Struct(">I")
MAX_FRAME = 1 << 20


@dataclass(frozen=True)
class ToolRequest:
    verb: str
    entity: str
    relation: str | None = None
    request_id: str | None = None


@dataclass(frozen=True)
class ToolReply:
    ok: bool
    results: tuple[str, ...] = ()
    truncated: bool = False
    error: str | None = None
    request_id: str | None = None

    def to_json(self) -> dict:
        out = {"ok": self.ok, "results": list(self.results), "truncated": self.truncated}
        if self.error is not None:
            out["error"] = self.error
        if self.request_id is not None:
            out["request_id"] = self.request_id
        return out


def _fail(error: str, request_id=None) -> ToolReply:
    return ToolReply(ok=False, error=error, request_id=request_id)


def parse_request(body) -> ToolRequest | ToolReply:
    """Validate a request body (bytes, str or dict); returns a failing reply on bad input."""
    if isinstance(body, (bytes, str)):
        try:
            body = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            return _fail("bad_request")
    if not isinstance(body, dict):
        return _fail("bad_request")
    rid = body.get("request_id")
    if rid is not None and not isinstance(rid, (str, int)):
        return _fail("bad_request")
    rid = None if rid is None else str(rid)
    verb, entity, relation = body.get("verb"), body.get("entity"), body.get("relation")
    if not isinstance(verb, str) or not isinstance(entity, str) or not entity:
        return _fail("bad_request", rid)
    if relation is not None and not isinstance(relation, str):
        return _fail("bad_request", rid)
    if verb not in RELATION_VERBS and verb not in ENTITY_VERBS:
        return _fail("unknown_verb", rid)
    if (verb in ENTITY_VERBS) != (relation is not None and relation != ""):
        return _fail("bad_arity", rid)
    return ToolRequest(verb, entity, relation or None, rid)


def handle_request(g: KnowledgeGraph, req, cap: int | None = DEFAULT_CAP, mode: str = "label") -> ToolReply:
    if not isinstance(req, ToolRequest):
        req = parse_request(req)
        if isinstance(req, ToolReply):
            return req
    res = g.query(req.verb, req.entity, req.relation, cap=cap, mode=mode)
    return ToolReply(True, tuple(res.lines), res.truncated, None, req.request_id)


def encode_frame(obj) -> bytes:
    data = json.dumps(obj, ensure_ascii=False, sort_keys=True).encode("utf-8")
    return HEADER.pack(len(data)) + data


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> bytes | None:
    header = _recv_exact(sock, HEADER.size)
    if header is None:
        return None
    (size,) = HEADER.unpack(header)
    if size > MAX_FRAME:
        raise ValueError(f"frame of {size} bytes exceeds limit")
    return _recv_exact(sock, size)


class _StreamHandler(socketserver.BaseRequestHandler):
    def handle(self):
        server: ToolServer = self.server
        while True:
            try:
                body = read_frame(self.request)
            except ValueError:
                self.request.sendall(encode_frame(_fail("bad_request").to_json()))
                return
            except OSError:
                return
            if body is None:
                return
            reply = handle_request(server.graph, body, server.cap, server.mode)
            self.request.sendall(encode_frame(reply.to_json()))


class ToolServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, graph: KnowledgeGraph, cap: int | None = DEFAULT_CAP, mode: str = "label"):
        self.graph, self.cap, self.mode = graph, cap, mode
        super().__init__(addr, _StreamHandler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]


class _HttpHandler(BaseHTTPRequestHandler):
    server_version = "kgtool"

    def do_POST(self):
        if self.path.rstrip("/") != "/tool":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_FRAME:
            reply = _fail("bad_request")
        else:
            srv = self.server
            reply = handle_request(srv.graph, self.rfile.read(length), srv.cap, srv.mode)
        data = json.dumps(reply.to_json(), ensure_ascii=False, sort_keys=True).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):
        logger.debug("http: " + fmt, *args)


class HttpToolServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, addr, graph: KnowledgeGraph, cap: int | None = DEFAULT_CAP, mode: str = "label"):
        self.graph, self.cap, self.mode = graph, cap, mode
        super().__init__(addr, _HttpHandler)


def parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


def start_in_thread(server: socketserver.BaseServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread


class ToolClient:
    """Blocking client for the stream protocol."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)

    def send(self, body: dict) -> None:
        self.sock.sendall(encode_frame(body))

    def receive(self) -> dict:
        data = read_frame(self.sock)
        if data is None:
            raise ConnectionError("server closed the connection")
        return json.loads(data)

    def request(self, body: dict) -> dict:
        self.send(body)
        return self.receive()

    def call(self, verb: str, entity: str, relation: str | None = None) -> dict:
        body = {"verb": verb, "entity": entity}
        if relation is not None:
            body["relation"] = relation
        return self.request(body)

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
