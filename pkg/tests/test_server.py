import json
import random
import urllib.request

import pytest

from kgtool.graph import VERBS
from kgtool.server import (
    HttpToolServer,
    ToolClient,
    ToolRequest,
    ToolServer,
    encode_frame,
    handle_request,
    parse_addr,
    parse_request,
    start_in_thread,
)


@pytest.fixture
def served(g0):
    srv = ToolServer(("127.0.0.1", 0), g0)
    start_in_thread(srv)
    yield srv
    srv.shutdown()
    srv.server_close()


def test_handle_examples(g0):
    ok = handle_request(g0, {"verb": "get_tail_entities", "entity": "m.01", "relation": "people.person.religion"})
    assert ok.to_json() == {"ok": True, "results": ["judaism"], "truncated": False}
    assert handle_request(g0, {"verb": "get_tail_entities", "entity": "m.01"}).error == "bad_arity"
    assert handle_request(g0, {"verb": "get_tail_relations", "entity": "m.01", "relation": "x"}).error == "bad_arity"
    silent = handle_request(g0, {"verb": "get_tail_relations", "entity": "m.99"})
    assert silent.ok and silent.results == ()
    assert handle_request(g0, {"verb": "lookup", "entity": "m.01"}).error == "unknown_verb"
    for bad in (b"{not json", b"[1, 2]", {"entity": "m.01"}, {"verb": "get_tail_relations"}, {"verb": 3, "entity": "m.01"}):
        assert handle_request(g0, bad).error == "bad_request"


def test_request_id_echo(g0):
    reply = handle_request(g0, {"verb": "get_head_relations", "entity": "m.02", "request_id": 7})
    assert reply.request_id == "7" and reply.results == ("people.person.religion",)
    assert isinstance(parse_request('{"verb": "get_tail_relations", "entity": "m.01"}'), ToolRequest)


def test_cap_and_rendering(g0):
    r = handle_request(g0, {"verb": "get_tail_relations", "entity": "m.01"}, cap=1)
    assert r.truncated and len(r.results) == 1
    ids = handle_request(g0, {"verb": "get_tail_entities", "entity": "m.01", "relation": "people.person.religion"}, mode="id")
    assert ids.results == ("m.02",)


def test_stream_round_trip(served, g0):
    host, port = served.address
    with ToolClient(host, port) as client:
        assert client.call("get_tail_entities", "m.04", "film.actor.film")["results"] == ["roman holiday"]
        assert client.call("get_tail_entities", "m.04")["error"] == "bad_arity"
        assert client.call("frobnicate", "m.04")["error"] == "unknown_verb"


def test_pipelining(served):
    host, port = served.address
    with ToolClient(host, port) as client:
        for i in range(20):
            client.send({"verb": "get_tail_relations", "entity": "m.01", "request_id": f"r{i}"})
        ids = [client.receive()["request_id"] for _ in range(20)]
    assert ids == [f"r{i}" for i in range(20)]


def test_malformed_frame(served):
    host, port = served.address
    with ToolClient(host, port) as client:
        client.sock.sendall(len(b"oops").to_bytes(4, "big") + b"oops")
        assert client.receive() == {"ok": False, "results": [], "truncated": False, "error": "bad_request"}


def test_wire_equivalence(served, g0):
    rng = random.Random(0)
    ents = sorted(g0.entities) + ["m.99"]
    rels = sorted(g0.relations) + ["nope"]
    host, port = served.address
    with ToolClient(host, port) as client:
        for _ in range(200):
            verb = rng.choice(VERBS)
            body = {"verb": verb, "entity": rng.choice(ents)}
            if verb.endswith("entities"):
                body["relation"] = rng.choice(rels)
            assert client.request(body) == handle_request(g0, body).to_json()
            assert client.request(body)["results"] == g0.query(verb, body["entity"], body.get("relation")).lines


def test_http_binding(g0):
    srv = HttpToolServer(("127.0.0.1", 0), g0)
    start_in_thread(srv)
    try:
        host, port = srv.server_address[:2]
        body = json.dumps({"verb": "get_tail_entities", "entity": "m.01", "relation": "people.person.religion"})
        req = urllib.request.Request(f"http://{host}:{port}/tool", data=body.encode(), method="POST")
        with urllib.request.urlopen(req) as resp:
            assert json.loads(resp.read()) == {"ok": True, "results": ["judaism"], "truncated": False}
    finally:
        srv.shutdown()
        srv.server_close()


def test_frame_and_addr():
    frame = encode_frame({"a": 1})
    assert int.from_bytes(frame[:4], "big") == len(frame) - 4
    assert parse_addr("0.0.0.0:9000") == ("0.0.0.0", 9000)
    assert parse_addr(":9000") == ("127.0.0.1", 9000)
