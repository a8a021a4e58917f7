"""HTTP session service: the refinement engine behind a small JSON API.

Sessions live in memory, keyed by opaque ids.  Mutating routes take a
per-session try-lock: concurrent writers do not queue, the loser gets 409.
Predicate and unitary arguments cross the wire as DSL strings (re-parsed and
validated here — client matrices are accepted only via an explicit
``{"matrix": ...}`` form).  Matrices in responses are nested ``[re, im]``
pairs.

Routes:
    POST /session                     create from a JSON spec block
    GET  /session/{sid}               full state (program, holes, ledger)
    POST /session/{sid}/refine        apply a rule to a hole
    POST /session/{sid}/undo          drop the last accepted step
    POST /session/{sid}/verify        re-check the constructed program
    GET  /session/{sid}/script        export as a replayable script
    GET  /rules                       rule catalog with argument docs
    GET  /examples                    bundled corpus names
    POST /session/from-example/{name} replay a bundled script into a session
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .examples import example_names, get_case
from .matrixcore import DIM_CAP, VariableRegistry
from .qlang import ast as A
from .qlang import exprs as E
from .qlang.parse import (
    MapArg,
    QbcSyntaxError,
    RefineStep,
    Script,
    SeqLambdaArg,
    StdArg,
    VarListArg,
    parse_expr,
)
from .qlang.pretty import program_source, step_source
from .refine import RULES, RuleArgumentError, Session, rule_available, run_script
from .refine.base import binding_key
from .semantics import SemanticsError


# ---------------------------------------------------------------------------
# Wire helpers


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(np.real(x)), float(np.imag(x))] for x in row] for row in np.asarray(m)]


def _obligation_json(ob) -> dict:
    out = {
        "kind": ob.kind,
        "description": ob.description,
        "binding": dict(ob.binding),
        "verdict": ob.verdict,
        "margin": ob.margin,
    }
    if ob.witness is not None:
        out["witness"] = _matrix_json(np.asarray(ob.witness).reshape(-1, 1))
    return out


def _map_key(text: str):
    text = text.strip()
    if text == "_":
        return "_"
    if "=" in text:
        pairs = []
        for part in text.split(","):
            sym, _, val = part.partition("=")
            try:
                pairs.append((sym.strip(), int(val)))
            except ValueError as exc:
                raise ValueError(f"bad binding key {text!r}") from exc
        return tuple(pairs)
    return text


def _decode_arg(value):
    """JSON form -> script argument. See the module docstring for forms."""
    if isinstance(value, str):
        if value.strip() == "std":
            return StdArg()
        return parse_expr(value)
    if isinstance(value, bool):
        raise ValueError("boolean arguments are not part of the rule language")
    if isinstance(value, (int, float)):
        return E.Num(complex(value))
    if isinstance(value, list):
        if value and all(isinstance(x, str) for x in value):
            return VarListArg(tuple(value))
        raise ValueError("list arguments must be non-empty variable-name lists")
    if isinstance(value, dict):
        if "map" in value:
            return MapArg(
                tuple((_map_key(k), parse_expr(v)) for k, v in value["map"].items())
            )
        if "lambda" in value:
            return SeqLambdaArg(str(value["lambda"]), parse_expr(value["body"]))
        if "matrix" in value:
            rows = tuple(
                tuple(E.Num(complex(re, im)) for re, im in row) for row in value["matrix"]
            )
            return E.MatLit(rows)
        raise ValueError("object arguments need one of the keys: map, lambda, matrix")
    raise ValueError(f"cannot decode argument of type {type(value).__name__}")


# ---------------------------------------------------------------------------
# Session store


@dataclass
class SessionRecord:
    sid: str
    sess: Session
    created: float
    updated: float
    lock: threading.Lock = field(default_factory=threading.Lock)


def _hole_json(sess: Session, hid: str) -> dict:
    hole = sess.holes[hid]
    clauses = []
    for b in hole.bindings():
        key = binding_key(hole.params, b)
        srcs = hole.srcs.get(key)
        clauses.append(
            {
                "binding": dict(b),
                "pre": srcs[0] if srcs else None,
                "post": srcs[1] if srcs else None,
            }
        )
    return {
        "id": hid,
        "params": [[name, list(dom)] for name, dom in hole.params],
        "clauses": clauses,
        "note": hole.note,
    }


def _state_json(rec: SessionRecord) -> dict:
    sess = rec.sess
    reg = sess.reg
    return {
        "id": rec.sid,
        "name": sess.name,
        "mode": sess.mode,
        "vars": [[n, c] for n, c in zip(reg.names, reg.cards)],
        "params": [[s, list(dom)] for s, dom in sess.params],
        "program": program_source(sess.program),
        "complete": sess.is_complete(),
        "holes": [_hole_json(sess, hid) for hid in sess.holes],
        "ledger": [
            {
                "hole": st.step.hole,
                "rule": st.step.rule,
                "text": step_source(st.step),
                "new_holes": list(st.new_holes),
                "note": st.note,
                "obligations": [_obligation_json(o) for o in st.obligations],
            }
            for st in sess.steps
        ],
        "created": rec.created,
        "updated": rec.updated,
    }


def _session_from_body(body: dict) -> Session:
    try:
        names = body.get("name", "session")
        raw_vars = body["vars"]
        mode = body.get("mode", "total")
        reg = VariableRegistry(tuple((str(n), int(c)) for n, c in raw_vars))
        params = tuple(
            (str(sym), tuple(int(v) for v in dom)) for sym, dom in body.get("params", [])
        )
        clauses = tuple(
            A.SpecClause(parse_expr(str(c["pre"])), parse_expr(str(c["post"])))
            for c in body["clauses"]
        )
        if not clauses:
            raise ValueError("spec needs at least one pre => post clause")
        hole_id = str(body.get("hole_id", "h0"))
        script = Script(str(names), reg, str(mode), params, hole_id, clauses)
        return Session(script)
    except (KeyError, TypeError) as exc:
        raise HTTPException(400, f"malformed spec body: {exc!r}") from exc
    except (QbcSyntaxError, RuleArgumentError, ValueError) as exc:
        raise HTTPException(400, f"invalid spec: {exc}") from exc


def create_app(static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="qbc session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store: dict[str, SessionRecord] = {}
    app.state.store = store  # reachable for tests and debugging

    def record(sid: str) -> SessionRecord:
        rec = store.get(sid)
        if rec is None:
            raise HTTPException(404, f"unknown session {sid}")
        return rec

    def locked(rec: SessionRecord):
        if not rec.lock.acquire(blocking=False):
            raise HTTPException(409, "session is being mutated by another request")
        return rec.lock

    def remember(sess: Session) -> dict:
        sid = uuid.uuid4().hex[:12]
        now = time.time()
        rec = SessionRecord(sid, sess, now, now)
        store[sid] = rec
        return _state_json(rec)

    @app.post("/session", status_code=201)
    def create_session(body: dict = Body(...)) -> dict:
        return remember(_session_from_body(body))

    @app.get("/session/{sid}")
    def get_session(sid: str) -> dict:
        return _state_json(record(sid))

    @app.post("/session/{sid}/refine")
    def refine(sid: str, body: dict = Body(...)) -> dict:
        rec = record(sid)
        lock = locked(rec)
        try:
            try:
                hole = str(body["hole"])
                rule = str(body["rule"])
                raw_args = body.get("args", {})
                names = tuple(str(n) for n in body.get("names", ()))
                args = tuple((str(k), _decode_arg(v)) for k, v in raw_args.items())
            except (KeyError, TypeError, ValueError, QbcSyntaxError) as exc:
                raise HTTPException(400, f"malformed rule application: {exc}") from exc
            step = RefineStep(hole, rule, args, names)
            try:
                out = rec.sess.apply(step)
            except (RuleArgumentError, SemanticsError, ValueError) as exc:
                # bad arity, wrong-dimension operator, out-of-range value:
                # all client-side argument faults
                raise HTTPException(400, str(exc)) from exc
            payload = {
                "accepted": out.accepted,
                "obligations": [_obligation_json(o) for o in out.obligations],
                "new_holes": list(out.new_holes),
                "note": out.note,
            }
            if not out.accepted:
                raise HTTPException(422, payload)
            rec.updated = time.time()
            payload["state"] = _state_json(rec)
            return payload
        finally:
            lock.release()

    @app.post("/session/{sid}/undo")
    def undo(sid: str) -> dict:
        rec = record(sid)
        lock = locked(rec)
        try:
            try:
                rec.sess.undo()
            except RuleArgumentError as exc:
                raise HTTPException(400, str(exc)) from exc
            rec.updated = time.time()
            return _state_json(rec)
        finally:
            lock.release()

    @app.post("/session/{sid}/verify")
    def verify(sid: str) -> dict:
        rec = record(sid)
        if not rec.sess.is_complete():
            raise HTTPException(400, "the program still has holes; finish refining first")
        results = [
            {
                "binding": dict(b),
                "status": v.status,
                "margin": v.margin,
                "detail": v.detail,
                "witness": _matrix_json(np.asarray(v.witness).reshape(-1, 1))
                if v.witness is not None
                else None,
            }
            for b, v in rec.sess.verify_constructed()
        ]
        return {"holds": all(r["status"] == "holds" for r in results), "results": results}

    @app.get("/session/{sid}/script", response_class=PlainTextResponse)
    def script(sid: str) -> str:
        return record(sid).sess.export_script()

    @app.get("/rules")
    def rules() -> dict:
        return {
            "rules": [
                {
                    "name": r.name,
                    "summary": r.summary,
                    "modes": sorted(r.modes),
                    "args": r.args_doc,
                    "children": r.children_doc,
                    "available": {
                        "total": rule_available(r, "total", False),
                        "partial": rule_available(r, "partial", False),
                        "partial_strict": rule_available(r, "partial", True),
                    },
                }
                for r in RULES.values()
            ]
        }

    @app.get("/examples")
    def examples() -> dict:
        return {"examples": list(example_names())}

    @app.post("/session/from-example/{name}", status_code=201)
    def from_example(name: str) -> dict:
        try:
            case = get_case(name)
        except KeyError as exc:
            raise HTTPException(404, exc.args[0]) from exc
        sess, outcomes = run_script(case.script())
        if any(not o.accepted for o in outcomes):  # bundled scripts replay cleanly
            raise HTTPException(500, "a bundled step was rejected during replay")
        return remember(sess)

    # make DIM_CAP visible to clients sizing registries
    @app.get("/limits")
    def limits() -> dict:
        return {"dim_cap": DIM_CAP}

    if static_dir is not None:
        # mounted last so the API routes above always win
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
