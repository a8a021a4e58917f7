// Wire types for the session service. These mirror the server's JSON
// shapes field for field; nothing here is interpreted client-side beyond
// display. Matrices cross the wire as row-major nested [re, im] pairs.

export type ComplexPair = [number, number];
export type MatrixJson = ComplexPair[][];

export interface ObligationJson {
  kind: string;
  description: string;
  binding: Record<string, number>;
  verdict: "holds" | "fails";
  margin: number | null;
  /** Column vector witnessing a failed PSD check, when the server found one. */
  witness?: MatrixJson;
}

export interface ClauseJson {
  binding: Record<string, number>;
  pre: string | null;
  post: string | null;
}

export interface HoleJson {
  id: string;
  params: [string, number[]][];
  clauses: ClauseJson[];
  note: string | null;
}

export interface LedgerEntryJson {
  hole: string;
  rule: string;
  text: string;
  new_holes: string[];
  note: string | null;
  obligations: ObligationJson[];
}

export interface SessionJson {
  id: string;
  name: string;
  mode: "total" | "partial";
  vars: [string, number][];
  params: [string, number[]][];
  program: string;
  complete: boolean;
  holes: HoleJson[];
  ledger: LedgerEntryJson[];
  created: number;
  updated: number;
}

export interface RefineResponseJson {
  accepted: true;
  obligations: ObligationJson[];
  new_holes: string[];
  note: string | null;
  state: SessionJson;
}

/** Body of a 422: the step was rejected and the session is unchanged. */
export interface RefineRejectionJson {
  accepted: false;
  obligations: ObligationJson[];
  new_holes: string[];
  note: string | null;
}

export interface VerifyResultJson {
  binding: Record<string, number>;
  status: "holds" | "fails" | "inconclusive";
  margin: number | null;
  detail: string | null;
  witness: MatrixJson | null;
}

export interface VerifyResponseJson {
  holds: boolean;
  results: VerifyResultJson[];
}

export interface RuleInfoJson {
  name: string;
  summary: string;
  modes: string[];
  /** Argument name -> one-line usage doc, straight from the rule catalog. */
  args: Record<string, string>;
  children: string;
  available: { total: boolean; partial: boolean; partial_strict: boolean };
}

export interface SpecDraft {
  name: string;
  vars: [string, number][];
  mode: string;
  params: [string, number[]][];
  clauses: { pre: string; post: string }[];
}

export interface RefineRequest {
  hole: string;
  rule: string;
  args: Record<string, unknown>;
  names?: string[];
}
