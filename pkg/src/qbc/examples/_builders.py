"""Text builders for the bundled corpus.

Every bundled ``.qbc``/``.qw`` pair under ``data/`` is the verbatim output of
one of these functions; a regression test keeps the files and the builders in
lock step.  The parameterized families (``search_grover(n, T)``) also use the
builders directly for instances that are not shipped as files.
"""

from __future__ import annotations

import math

BELL = "(1/sqrt(2))*(ket(0,0) + ket(1,1))"


def fair_coin() -> tuple[str, str]:
    script = """spec fair_coin {
  vars q:2;
  mode total;
  param x in {0, 1};
  hole h0 : 0.5*I => proj(ket(x));
}

refine h0 with H.seq(R = H*proj(ket(x))*H) -> prep, rot;
refine prep with H.init(vars = [q]);
refine rot with H.unit(U = H, vars = [q]);
"""
    program = """vars q:2;
q := |0>;
q *= H
"""
    return script, program


def toss_until_zero() -> tuple[str, str]:
    plus = "proj((1/sqrt(2))*(ket(0) + ket(1)))"
    minus = "proj((1/sqrt(2))*(ket(0) - ket(1)))"
    script = f"""spec toss_until_zero {{
  vars q:2;
  mode total;
  hole h0 : I => proj(ket(0));
}}

refine h0 with H.seq(R = {plus}) -> prep, loop;
refine prep with H.seq(R = proj(ket(0))) -> zero, had;
refine zero with H.init(vars = [q]);
refine had with H.unit(U = H, vars = [q]);
refine loop with HT.while(B = proj(ket(1)), vars = [q], R = n => I - (0.5^n)*{minus}) -> body;
refine body with HT.split(w = {{0: 1; 1: 1 - 0.5^n}}, pre = {{0: {plus}; 1: {minus}}}, post = {{0: proj(ket(0)); 1: proj(ket(1))}}) -> flip;
refine flip with H.unit(U = H, vars = [q]);
"""
    program = """vars q:2;
q := |0>;
q *= H;
while [q] {
  q *= H
}
"""
    return script, program


def teleport() -> tuple[str, str]:
    bell_qr = f"on [q, r] (proj({BELL}))"
    bell_ab = f"on [a, b] (proj({BELL}))"
    bell_br = f"on [b, r] (proj({BELL}))"

    def corrected(u: str | None) -> str:
        if u is None:
            return bell_br
        return f"on [b] (adj({u})) * {bell_br} * on [b] ({u})"

    terms = {"00": corrected(None), "01": corrected("Z"), "10": corrected("X"), "11": corrected("X*Z")}
    mid = " + ".join(f"on [q, a] (proj(ket({k[0]},{k[1]}))) * ({v})" for k, v in terms.items())
    pre_entries = "; ".join(
        f"{k}: on [q, a] (proj(ket({k[0]},{k[1]}))) * ({v})" for k, v in terms.items()
    )
    script = f"""spec teleport {{
  vars q:2, a:2, b:2, r:2;
  mode total;
  hole h0 : {bell_qr} * {bell_ab} => {bell_br};
}}

refine h0 with H.seq(R = {mid}) -> alice, bob;
refine alice with H.unit(U = on [a] (H) * on [a, q] (CNOT), vars = [q, a]);
refine bob with H.case(M = std, vars = [q, a], pre = {{{pre_entries}}}) -> b00, b01, b10, b11;
refine b00 with H.unit(U = I, vars = [b]);
refine b01 with H.unit(U = Z, vars = [b]);
refine b10 with H.unit(U = X, vars = [b]);
refine b11 with H.unit(U = X*Z, vars = [b]);
"""
    program = """vars q:2, a:2, b:2, r:2;
q, a *= on [a] (H) * on [a, q] (CNOT);
case [q, a] {
  00: b *= I;
  01: b *= Z;
  10: b *= X;
  11: b *= X*Z
}
"""
    return script, program


def search_random() -> tuple[str, str]:
    tt = "01100100"
    script = f"""spec search_random {{
  vars q1:2, q2:2, q3:2;
  mode total;
  hole h0 : (3/8)*I => marked("{tt}");
}}

refine h0 with H.seq(R = kpow(H, 3)*marked("{tt}")*kpow(H, 3)) -> prep, rot;
refine prep with H.init(vars = [q1, q2, q3]);
refine rot with H.unit(U = kpow(H, 3), vars = [q1, q2, q3]);
"""
    program = """vars q1:2, q2:2, q3:2;
q1, q2, q3 := |0>;
q1, q2, q3 *= kpow(H, 3)
"""
    return script, program


def grover_rounds(n: int, t: int) -> int:
    """Number of amplification rounds for t marked items out of 2**n."""
    upsilon = math.asin(math.sqrt(t / 2**n))
    return math.floor(math.pi / (4 * upsilon))


def grover(n: int, t: int, tt: str | None = None, p_text: str | None = None) -> tuple[str, str]:
    big_n = 2**n
    if not 1 <= t <= big_n // 2:
        raise ValueError(f"need 1 <= T <= {big_n // 2} marked items for n={n}")
    if tt is None:
        tt = "1" * t + "0" * (big_n - t)
    if tt.count("1") != t or len(tt) != big_n:
        raise ValueError("truth table does not match n and T")
    r = grover_rounds(n, t)
    if p_text is None:
        p_text = f"sin({2 * r + 1}*arcsin(sqrt({t}/{big_n})))^2"
    bad = "".join("0" if c == "1" else "1" for c in tt)
    qs = ", ".join(f"q{i + 1}" for i in range(n))
    decls = ", ".join(f"q{i + 1}:2" for i in range(n))
    ang = f"(pi/2 - {2 * r}*arcsin(sqrt({t}/{big_n})))"
    step = f"(2*arcsin(sqrt({t}/{big_n})))"
    good = f'sol_state("{tt}")'
    badst = f'sol_state("{bad}")'

    def at_angle(angle: str) -> str:
        return f"proj(cos({angle})*{badst} + sin({angle})*{good})"

    th0 = at_angle(ang)
    thj = at_angle(f"{ang} + j*{step}")
    mthj = f"proj(cos({ang} + j*{step})*{badst} - sin({ang} + j*{step})*{good})"
    unif = 'sol_state("' + "1" * big_n + '")'
    script = f"""spec search_grover_{n}_{t} {{
  vars {decls};
  mode total;
  hole h0 : {p_text}*I => marked("{tt}");
}}

refine h0 with H.sw(P = {p_text}*I, Q = proj({good})) -> strong;
refine strong with H.seq(R = {th0}) -> start, rounds;
refine start with H.seq(R = kpow(H, {n})*{th0}*kpow(H, {n})) -> zero, spread;
refine zero with H.init(vars = [{qs}]);
refine spread with H.unit(U = kpow(H, {n}), vars = [{qs}]);
refine rounds with H.repeat(N = {r}, R = j => {thj}) -> round;
refine round with H.seq(R = {mthj}) -> flip, reflect;
refine flip with H.unit(U = phase_oracle("{tt}"), vars = [{qs}]);
refine reflect with H.unit(U = 2*proj({unif}) - I, vars = [{qs}]);
"""
    program = f"""vars {decls};
{qs} := |0>;
{qs} *= kpow(H, {n});
repeat {r} {{
  {qs} *= phase_oracle("{tt}");
  {qs} *= 2*proj({unif}) - I
}}
"""
    return script, program


_AMPLIFIER = (
    "H.ifElse(B = H*proj(ket(0))*H, vars = [q], "
    "R1 = {clause=0: H*proj(ket(0))*H; clause=1: I}, "
    "R0 = {clause=0: proj(ket(0)); clause=1: I})"
)

_AMPLIFIER_BODY = """  if (I - proj(ket(0))) [q] {
    if (H*proj(ket(0))*H) [q] {
      q *= H
    } else {
      skip
    }
  } else {
    skip
  }"""


def boost_rep() -> tuple[str, str]:
    script = f"""spec boost_rep {{
  vars q:2;
  mode total;
  hole h0 : 0.9*I => proj(ket(0)), I => I;
}}

refine h0 with H.boostRep(Q = proj(ket(0)), vars = [q], p = 0.9, eps = 0.5) -> amp;
refine amp with {_AMPLIFIER} -> hit, miss;
refine hit with H.unit(U = H, vars = [q]);
refine miss with H.skip();
"""
    program = f"""vars q:2;
repeat 4 {{
{_AMPLIFIER_BODY}
}}
"""
    return script, program


def boost_while() -> tuple[str, str]:
    script = f"""spec boost_while {{
  vars q:2;
  mode total;
  hole h0 : I => proj(ket(0));
}}

refine h0 with H.boostWhile(Q = proj(ket(0)), vars = [q], eps = 0.5) -> amp;
refine amp with {_AMPLIFIER} -> hit, miss;
refine hit with H.unit(U = H, vars = [q]);
refine miss with H.skip();
"""
    program = """vars q:2;
while (I - proj(ket(0))) [q] {
  if (H*proj(ket(0))*H) [q] {
    q *= H
  } else {
    skip
  }
}
"""
    return script, program


def qft(n: int) -> tuple[str, str]:
    if not 1 <= n <= 4:
        raise ValueError("the transform corpus covers n in 1..4")
    decls = ", ".join([f"q{i + 1}:2" for i in range(n)] + [f"r{i + 1}:2" for i in range(n)])
    phi = " * ".join(f"on [q{j + 1}, r{j + 1}] (proj({BELL}))" for j in range(n))

    def state_after(k: int, prefix_gates: list[str]) -> str:
        qk = ", ".join(f"q{i + 1}" for i in range(k))
        core = f"on [{qk}] (QFT({k})) * {phi} * adj(on [{qk}] (QFT({k})))" if k else phi
        for g in prefix_gates:
            core = f"{g} * ({core}) * adj({g})"
        return core

    lines = [
        f"spec qft_{n} {{",
        f"  vars {decls};",
        "  mode total;",
        f"  hole h0 : {phi} => {state_after(n, [])};",
        "}",
        "",
    ]
    counter = [0]

    def fresh(stem: str) -> str:
        counter[0] += 1
        return f"{stem}{counter[0]}"

    def gate_stmts(k: int) -> list[tuple[str, str]]:
        """(vars, unitary) pairs appended after the size-(k-1) block."""
        out = [(f"q{i}, q{i - 1}", "SWAP") for i in range(k, 1, -1)]
        out += [(f"q1, q{j}", f"CRz({j})") for j in range(2, k + 1)]
        out.append(("q1", "H"))
        return out

    def build(hole: str, k: int) -> None:
        if k == 1:
            lines.append(f"refine {hole} with H.unit(U = H, vars = [q1]);")
            return
        sub, tail = fresh("s"), fresh("t")
        lines.append(f"refine {hole} with H.seq(R = {state_after(k - 1, [])}) -> {sub}, {tail};")
        build(sub, k - 1)
        applied: list[str] = []
        cur = tail
        stmts = gate_stmts(k)
        for gv, ge in stmts[:-1]:
            applied.append(f"on [{gv}] ({ge})")
            u, rest = fresh("u"), fresh("t")
            lines.append(
                f"refine {cur} with H.seq(R = {state_after(k - 1, applied)}) -> {u}, {rest};"
            )
            lines.append(f"refine {u} with H.unit(U = {ge}, vars = [{gv}]);")
            cur = rest
        lines.append(f"refine {cur} with H.unit(U = H, vars = [q1]);")

    build("h0", n)
    script = "\n".join(lines) + "\n"

    prog_lines = [f"vars {decls};"]
    for k in range(1, n + 1):
        if k == 1:
            prog_lines.append("q1 *= H;")
        else:
            prog_lines += [f"{gv} *= {ge};" for gv, ge in gate_stmts(k)]
    prog_lines[-1] = prog_lines[-1].rstrip(";")
    program = "\n".join(prog_lines) + "\n"
    return script, program
