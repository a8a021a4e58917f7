"""HTTP API tests: REST semantics, obligation reporting, and the
single-writer contract."""

import pytest
from fastapi.testclient import TestClient

from qbc.server import create_app

FAIR_COIN_SPEC = {
    "name": "fair_coin",
    "vars": [["q", 2]],
    "mode": "total",
    "params": [["x", [0, 1]]],
    "clauses": [{"pre": "0.5*I", "post": "proj(ket(x))"}],
}

TELEPORT_SPEC = {
    "name": "teleport",
    "vars": [["q", 2], ["a", 2], ["b", 2], ["r", 2]],
    "mode": "total",
    "clauses": [
        {
            "pre": "on [q, r] (proj((1/sqrt(2))*(ket(0,0) + ket(1,1)))) * "
                   "on [a, b] (proj((1/sqrt(2))*(ket(0,0) + ket(1,1))))",
            "post": "on [b, r] (proj((1/sqrt(2))*(ket(0,0) + ket(1,1))))",
        }
    ],
}


@pytest.fixture()
def client():
    return TestClient(create_app())


def _create(client, spec=FAIR_COIN_SPEC):
    resp = client.post("/session", json=spec)
    assert resp.status_code == 201, resp.text
    return resp.json()


# ---------------------------------------------------------------------------
# creation


def test_create_session_lists_one_hole(client):
    state = _create(client)
    assert len(state["holes"]) == 1
    assert state["holes"][0]["id"] == "h0"
    assert state["params"] == [["x", [0, 1]]]
    assert not state["complete"]


def test_create_teleport_spec(client):
    state = _create(client, TELEPORT_SPEC)
    assert state["params"] == []
    assert [v[0] for v in state["vars"]] == ["q", "a", "b", "r"]


def test_create_rejects_non_psd_pre(client):
    spec = dict(FAIR_COIN_SPEC, clauses=[{"pre": "-1*I", "post": "I"}], params=[])
    resp = client.post("/session", json=spec)
    assert resp.status_code == 400
    assert "PSD" in resp.json()["detail"]


def test_create_rejects_predicate_above_identity(client):
    spec = dict(FAIR_COIN_SPEC, clauses=[{"pre": "2*I", "post": "I"}], params=[])
    resp = client.post("/session", json=spec)
    assert resp.status_code == 400
    assert "identity" in resp.json()["detail"]


def test_create_rejects_malformed_body(client):
    resp = client.post("/session", json={"vars": [["q", 2]]})
    assert resp.status_code == 400


# ---------------------------------------------------------------------------
# refinement


def _fair_coin_chain(client):
    state = _create(client)
    sid = state["id"]
    r = client.post(
        f"/session/{sid}/refine",
        json={
            "hole": "h0",
            "rule": "H.seq",
            "args": {"R": "H*proj(ket(x))*H"},
            "names": ["prep", "rot"],
        },
    )
    assert r.status_code == 200, r.text
    assert r.json()["new_holes"] == ["prep", "rot"]
    r = client.post(
        f"/session/{sid}/refine",
        json={"hole": "prep", "rule": "H.init", "args": {"vars": ["q"]}},
    )
    assert r.status_code == 200, r.text
    r = client.post(
        f"/session/{sid}/refine",
        json={"hole": "rot", "rule": "H.unit", "args": {"U": "H", "vars": ["q"]}},
    )
    assert r.status_code == 200, r.text
    return sid, r.json()


def test_fair_coin_chain_over_http(client):
    sid, last = _fair_coin_chain(client)
    assert last["state"]["complete"]
    assert all(o["verdict"] == "holds" for o in last["obligations"])
    v = client.post(f"/session/{sid}/verify")
    assert v.status_code == 200
    assert v.json()["holds"]


def test_rejected_refinement_is_422_and_leaves_state_unchanged(client):
    state = _create(client)
    sid = state["id"]
    before = client.get(f"/session/{sid}").json()
    r = client.post(
        f"/session/{sid}/refine",
        json={"hole": "h0", "rule": "H.skip", "args": {}},
    )
    assert r.status_code == 422
    detail = r.json()["detail"]
    assert detail["accepted"] is False
    failing = [o for o in detail["obligations"] if o["verdict"] == "fails"]
    assert failing and "witness" in failing[0]
    after = client.get(f"/session/{sid}").json()
    assert after["program"] == before["program"]
    assert after["ledger"] == before["ledger"]


def test_malformed_rule_args_is_400(client):
    sid = _create(client)["id"]
    r = client.post(
        f"/session/{sid}/refine",
        json={"hole": "h0", "rule": "H.unit", "args": {"U": "kron(H, H)", "vars": ["q"]}},
    )
    assert r.status_code == 400  # wrong-dimension unitary for a single qubit
    r = client.post(
        f"/session/{sid}/refine",
        json={"hole": "h0", "rule": "H.unit", "args": {"U": "((", "vars": ["q"]}},
    )
    assert r.status_code == 400
    r = client.post(
        f"/session/{sid}/refine",
        json={"hole": "h0", "rule": "No.such", "args": {}},
    )
    assert r.status_code == 400


def test_unknown_session_is_404(client):
    assert client.get("/session/deadbeef").status_code == 404
    assert client.post("/session/deadbeef/refine", json={"hole": "h0", "rule": "H.skip"}).status_code == 404
    assert client.post("/session/deadbeef/undo").status_code == 404


def test_single_writer_conflict_is_409(client):
    sid = _create(client)["id"]
    rec = client.app.state.store[sid]
    rec.lock.acquire()  # simulate another request mid-mutation
    try:
        r = client.post(
            f"/session/{sid}/refine",
            json={"hole": "h0", "rule": "H.skip", "args": {}},
        )
        assert r.status_code == 409
        assert client.post(f"/session/{sid}/undo").status_code == 409
    finally:
        rec.lock.release()
    # reads stay available while the lock is held elsewhere
    assert client.get(f"/session/{sid}").status_code == 200


def test_undo_restores_previous_state(client):
    sid, _ = _fair_coin_chain(client)
    full = client.get(f"/session/{sid}").json()
    assert full["complete"]
    r = client.post(f"/session/{sid}/undo")
    assert r.status_code == 200
    state = r.json()
    assert not state["complete"]
    assert [h["id"] for h in state["holes"]] == ["rot"]
    assert len(state["ledger"]) == 2


def test_undo_on_fresh_session_is_400(client):
    sid = _create(client)["id"]
    assert client.post(f"/session/{sid}/undo").status_code == 400


def test_verify_requires_complete_program(client):
    sid = _create(client)["id"]
    r = client.post(f"/session/{sid}/verify")
    assert r.status_code == 400
    assert "holes" in r.json()["detail"]


# ---------------------------------------------------------------------------
# catalog, examples, export


def test_rules_catalog_has_exactly_15_rules(client):
    r = client.get("/rules")
    assert r.status_code == 200
    rules = r.json()["rules"]
    assert len(rules) == 15
    names = {x["name"] for x in rules}
    assert {"H.skip", "H.seq", "HT.while", "HP.while", "H.boostRep"} <= names
    for x in rules:
        assert set(x) == {"name", "summary", "modes", "args", "children", "available"}


def test_examples_endpoint_lists_corpus(client):
    r = client.get("/examples")
    assert r.status_code == 200
    assert "teleport" in r.json()["examples"]


def test_from_example_replays_to_final_state(client):
    r = client.post("/session/from-example/teleport")
    assert r.status_code == 201
    state = r.json()
    assert state["complete"]
    assert len(state["ledger"]) == 7
    assert "[q, a]" in state["program"]
    assert "b *= X*Z" in state["program"]
    v = client.post(f"/session/{state['id']}/verify")
    assert v.json()["holds"]


def test_from_example_unknown_is_404(client):
    assert client.post("/session/from-example/not_a_case").status_code == 404


def test_exported_script_replays_identically(client, tmp_path):
    sid, _ = _fair_coin_chain(client)
    text = client.get(f"/session/{sid}/script").text
    from qbc.cli import main

    p = tmp_path / "exported.qbc"
    p.write_text(text)
    assert main(["check", str(p)]) == 0
    # determinism: a fresh session built from the export equals the original
    from qbc.qlang.parse import parse_script
    from qbc.refine import run_script

    sess, outs = run_script(parse_script(text))
    assert all(o.accepted for o in outs)
    state = client.get(f"/session/{sid}").json()
    from qbc.qlang.pretty import program_source

    assert program_source(sess.program) == state["program"]


def test_matrix_argument_form(client):
    sid = _create(client)["id"]
    ident = {"matrix": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}
    r = client.post(
        f"/session/{sid}/refine",
        json={
            "hole": "h0",
            "rule": "H.seq",
            "args": {"R": ident},
            "names": ["a", "b"],
        },
    )
    assert r.status_code == 200, r.text


def test_limits_endpoint(client):
    assert client.get("/limits").json()["dim_cap"] == 1024


def test_static_mount_serves_ui_without_shadowing_api(tmp_path):
    (tmp_path / "index.html").write_text("<h1>ui</h1>")
    c = TestClient(create_app(static_dir=str(tmp_path)))
    assert c.get("/").text == "<h1>ui</h1>"
    assert c.get("/limits").json()["dim_cap"] == 1024
