// Turn the text a user typed into an argument form into the JSON the
// server's argument decoder expects. This is purely syntactic packaging —
// the strings themselves are parsed, validated, and evaluated server-side,
// and a bad expression comes back as an inline 400.
//
// Accepted shapes, mirroring script syntax:
//   [q, a]            -> ["q", "a"]              variable list
//   std               -> "std"                   standard-basis marker
//   n => expr         -> {lambda: "n", body}     predicate family
//   {0: e0; 1: e1}    -> {map: {...}}            tabulated family / case arms
//   anything else     -> the raw string          a DSL expression

export class FormError extends Error {}

/** Split on `sep` at bracket depth zero. Quotes don't exist in the DSL. */
function splitTop(text: string, sep: string): string[] {
  const parts: string[] = [];
  let depth = 0;
  let start = 0;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i]!;
    if (ch === "(" || ch === "[" || ch === "{") depth++;
    else if (ch === ")" || ch === "]" || ch === "}") depth--;
    else if (ch === sep && depth === 0) {
      parts.push(text.slice(start, i));
      start = i + 1;
    }
  }
  parts.push(text.slice(start));
  return parts;
}

export function encodeArgText(text: string): unknown {
  const t = text.trim();
  if (!t) throw new FormError("argument is empty");
  if (t === "std") return "std";

  if (t.startsWith("[") && t.endsWith("]")) {
    const names = splitTop(t.slice(1, -1), ",").map((s) => s.trim());
    if (names.some((n) => !/^[A-Za-z_]\w*$/.test(n))) {
      throw new FormError("a [...] argument must be a list of variable names");
    }
    return names;
  }

  if (t.startsWith("{") && t.endsWith("}")) {
    const map: Record<string, string> = {};
    for (const entry of splitTop(t.slice(1, -1), ";")) {
      const e = entry.trim();
      if (!e) continue; // tolerate a trailing semicolon
      const colon = e.indexOf(":");
      if (colon < 0) throw new FormError(`map entry ${JSON.stringify(e)} needs a colon`);
      const key = e.slice(0, colon).trim();
      const value = e.slice(colon + 1).trim();
      if (!key || !value) throw new FormError(`map entry ${JSON.stringify(e)} needs key: value`);
      map[key] = value;
    }
    if (Object.keys(map).length === 0) throw new FormError("map argument is empty");
    return { map };
  }

  const lambda = /^([A-Za-z_]\w*)\s*=>\s*([\s\S]+)$/.exec(t);
  if (lambda) return { lambda: lambda[1], body: lambda[2]!.trim() };

  return t;
}

/** Encode every non-empty field. Blank fields are simply omitted. */
export function encodeArgs(fields: Record<string, string>): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  for (const [name, raw] of Object.entries(fields)) {
    if (raw.trim() === "") continue;
    out[name] = encodeArgText(raw);
  }
  return out;
}

/** Child names field: comma-separated identifiers, optional. */
export function parseNames(text: string): string[] {
  const t = text.trim();
  if (!t) return [];
  const names = t.split(",").map((s) => s.trim());
  if (names.some((n) => !/^[A-Za-z_]\w*$/.test(n))) {
    throw new FormError("child names must be comma-separated identifiers");
  }
  return names;
}

/** "q:2, a:2" -> [["q", 2], ["a", 2]] for the new-session form. */
export function parseVarsField(text: string): [string, number][] {
  const out: [string, number][] = [];
  for (const piece of text.split(",")) {
    const p = piece.trim();
    if (!p) continue;
    const m = /^([A-Za-z_]\w*)\s*:\s*(\d+)$/.exec(p);
    if (!m) throw new FormError(`variable ${JSON.stringify(p)} must look like q:2`);
    out.push([m[1]!, parseInt(m[2]!, 10)]);
  }
  if (out.length === 0) throw new FormError("declare at least one variable, e.g. q:2");
  return out;
}

/** "x in {0, 1}; y in {0, 1}" -> [["x", [0, 1]], ...]; blank is fine. */
export function parseParamsField(text: string): [string, number[]][] {
  const out: [string, number[]][] = [];
  for (const piece of splitTop(text, ";")) {
    const p = piece.trim();
    if (!p) continue;
    const m = /^([A-Za-z_]\w*)\s+in\s+\{([^}]*)\}$/.exec(p);
    if (!m) throw new FormError(`parameter ${JSON.stringify(p)} must look like x in {0, 1}`);
    const dom = m[2]!
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s !== "")
      .map((s) => {
        if (!/^-?\d+$/.test(s)) throw new FormError(`domain value ${JSON.stringify(s)} is not an integer`);
        return parseInt(s, 10);
      });
    if (dom.length === 0) throw new FormError(`parameter ${m[1]} has an empty domain`);
    out.push([m[1]!, dom]);
  }
  return out;
}
