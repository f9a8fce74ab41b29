"""Report documents: a JSON payload plus provenance, renderable as markdown."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

SCHEMA_VERSION = 1
REPORT_KINDS = ("params", "phi-table", "ramanujan-scan", "hecke", "verify")


@dataclass
class ReportDocument:
    kind: str
    payload: dict[str, Any]
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in REPORT_KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        from . import __version__

        prov = {"tool": "mpcong", "version": __version__, **self.provenance}
        return {"schema_version": SCHEMA_VERSION, "kind": self.kind, "provenance": prov, "payload": self.payload}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        d = json.loads(text)
        prov = {k: v for k, v in d.get("provenance", {}).items() if k not in ("tool", "version")}
        return cls(d["kind"], d["payload"], prov)

    def to_markdown(self) -> str:
        render = _MARKDOWN[self.kind]
        lines = render(self.payload)
        prov = self.to_dict()["provenance"]
        lines += ["", "_" + ", ".join(f"{k}: {v}" for k, v in prov.items()) + "_"]
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "markdown":
            return self.to_markdown()
        raise ValueError(f"unknown format {fmt!r}")


def _table(headers: list[str], rows: list[list[Any]]) -> list[str]:
    out = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
    out += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return out


def _verif_note(cert: dict) -> str:
    notes = []
    for v in cert.get("verifications", []):
        tag = v["method"] + ("" if v["passed"] else " FAILED")
        if v.get("sturm_grade"):
            tag += " (sturm)"
        notes.append(tag)
    return ", ".join(notes) or "unverified"


def _md_params(p: dict) -> list[str]:
    keys = ["m", "k", "r", "modulus", "beta", "gamma", "lambda", "w", "c_k", "dim", "sturm_bound"]
    return ["## Parameters", ""] + _table(keys, [[p[k] for k in keys]])


def _md_phi(p: dict) -> list[str]:
    rows = []
    for row in p["rows"]:
        phi = row["phi"]
        expr = phi["rendered"]
        g = row["gamma"]
        shown = expr if expr == "0" else f"η^{g}·({expr})"
        rows.append([row["r"], row["m"], row["k"], g, phi["lambda"], shown,
                     f"{phi['verified_to']}{' sturm' if phi['sturm_grade'] else ''}"])
    return ["## φ table (mod m^k)", ""] + _table(["r", "m", "k", "γ", "λ", "η^γ·φ", "verified to"], rows)


def _md_scan(p: dict) -> list[str]:
    rows = [
        [c["r"], c["k"], f"({c['modulus']},{c['beta']})", c["certificate"]["statement"], _verif_note(c["certificate"])]
        for c in p["congruences"]
    ]
    head = [f"## Ramanujan-type scan: r ∈ {p['r_range']}, m ∈ {p['m_range']}, k ∈ {p['k_range']}", ""]
    body = _table(["r", "k", "(m^k, β)", "congruence", "verification"], rows)
    return head + body + ["", f"{p['cells']} cells examined, {len(p['congruences'])} congruences."]


def _md_hecke(p: dict) -> list[str]:
    out = [f"## Hecke systems for (m,k,r) = ({p['m']},{p['k']},{p['r']})", ""]
    rows = []
    for s in p["systems"]:
        a = s["A"][0][0] if s["d"] == 1 else "matrix"
        rows.append([s["ell"], s["d"], a, s["K"], s["c"], s["M"]])
    out += _table(["ℓ", "d", "a_ℓ", "K", "c", "M"], rows)
    for s in p["systems"]:
        if s["d"] > 1:
            out += ["", f"A (ℓ = {s['ell']}, basis {', '.join(s['monomials'])}):", "", "```"]
            out += [" ".join(f"{x:>4}" for x in row) for row in s["A"]]
            out += ["```"]
    if p.get("certificates"):
        out += ["", "### Certificates", ""]
        for c in p["certificates"]:
            out.append(f"- {c['statement']} for {c['side_condition']} [{_verif_note(c)}]")
    return out


def _md_verify(p: dict) -> list[str]:
    out = ["## Oracle verification", ""]
    for r in p["results"]:
        status = "ok" if r["ok"] else "COUNTEREXAMPLE"
        if r["ok"] is None:
            status = "skipped: " + r["skipped"]
        out.append(f"- {status}: {r['description']} (checked {r['checked']}, max index {r['max_index']})")
        if r.get("counterexample"):
            ce = r["counterexample"]
            out.append(f"  - n = {ce['n']}, index {ce['index']}, residue {ce['residue']}")
    return out


_MARKDOWN = {
    "params": _md_params,
    "phi-table": _md_phi,
    "ramanujan-scan": _md_scan,
    "hecke": _md_hecke,
    "verify": _md_verify,
}
