from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from mpcong.cli import (
    EXIT_COUNTEREXAMPLE,
    EXIT_HYPOTHESIS,
    EXIT_IDENTITY,
    EXIT_INPUT,
    EXIT_OK,
    InputError,
    main,
    parse_range,
)
from mpcong.reports import SCHEMA_VERSION, ReportDocument

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("UPDATE_GOLDEN") == "1"


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(["--no-cache" if a == "@nocache" else a for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def check_golden(name: str, text: str) -> None:
    path = GOLDEN / name
    if UPDATE:
        path.write_text(text)
    assert path.exists(), f"missing golden file {path}; run with UPDATE_GOLDEN=1"
    assert json.loads(text) == json.loads(path.read_text())
    assert text == path.read_text()


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("Q_CACHE_DIR", str(tmp_path / "qcache"))


def test_parse_range():
    assert parse_range("2-4,9") == [2, 3, 4, 9]
    assert parse_range("5") == [5]
    assert parse_range("") == []
    with pytest.raises(InputError):
        parse_range("a-b")


# -- golden documents -------------------------------------------------------------------


GOLDEN_CASES = {
    "params_5_2_3.json": ["params", "--m", "5", "--k", "2", "--r", "3"],
    "phi_7_1_3.json": ["phi", "--m", "7", "--k", "1", "--r", "3", "--sturm"],
    "scan_r2_m5-7.json": ["scan", "--r", "2", "--m", "5-7", "--k", "1"],
    "hecke_7_1_3_l13.json": ["hecke", "--m", "7", "--k", "1", "--r", "3", "--ell", "13", "--oracle-n", "30"],
    "verify_p2_5n3.json": ["verify", "--m", "5", "--k", "1", "--r", "2", "--n-max", "200"],
}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_json(capsys, name):
    code, out, _ = run(capsys, *GOLDEN_CASES[name], "--format", "json")
    assert code == EXIT_OK
    check_golden(name, out)


def test_json_documents_roundtrip(capsys):
    for argv in GOLDEN_CASES.values():
        code, out, _ = run(capsys, *argv, "--format", "json")
        doc = ReportDocument.from_json(out)
        assert doc.to_json() == out
        data = json.loads(out)
        assert data["schema_version"] == SCHEMA_VERSION
        assert data["provenance"]["tool"] == "mpcong"


# -- command behaviour ---------------------------------------------------------------------


def test_params_values(capsys):
    code, out, _ = run(capsys, "params", "--m", "7", "--k", "1", "--r", "2", "--format", "json")
    p = json.loads(out)["payload"]
    assert code == 0 and (p["beta"], p["gamma"], p["lambda"], p["dim"]) == (3, 10, 0, 1)


def test_params_markdown_default(capsys):
    code, out, _ = run(capsys, "params", "--m", "5", "--k", "2", "--r", "3")
    assert code == 0 and out.startswith("## Parameters") and "| 22 | 21 | 48 |" in out


def test_bad_m_exit_2(capsys):
    code, out, err = run(capsys, "params", "--m", "4", "--k", "1", "--r", "1")
    assert code == EXIT_INPUT and out == ""
    assert "m must be a prime ≥ 5" in err


def test_phi_examples(capsys):
    code, out, _ = run(capsys, "phi", "--m", "5", "--k", "1", "--r", "6", "--format", "json")
    assert json.loads(out)["payload"]["rows"][0]["phi"]["rendered"] == "0"
    code, out, _ = run(capsys, "phi", "--m", "19", "--k", "1", "--r", "2", "--sturm", "--format", "json")
    phi = json.loads(out)["payload"]["rows"][0]["phi"]
    assert phi["sturm_grade"] and phi["monomials"] == ["E4^3", "Δ"]


def test_phi_table1_markdown(capsys):
    code, out, _ = run(capsys, "phi", "--table1")
    assert code == 0
    assert out.count("\n| ") == 36 + 1  # header + 36 rows
    assert "η^3·(3·E6)" in out


def test_phi_needs_triple(capsys):
    code, _, err = run(capsys, "phi", "--m", "7")
    assert code == EXIT_INPUT and "--table1" in err


def test_phi_identity_failure_exit_3(capsys, monkeypatch):
    import mpcong.congruence as cg
    from mpcong.series import QSeries

    real = cg.contracted_quotient
    monkeypatch.setattr(
        cg, "contracted_quotient",
        lambda params, T, modulus="default": real(params, T, modulus) + QSeries.monomial(5, T, 1, params.modulus),
    )
    code, _, err = run(capsys, "phi", "--m", "7", "--k", "1", "--r", "3")
    assert code == EXIT_IDENTITY and "identity failure" in err


def test_scan_empty_range(capsys):
    code, out, _ = run(capsys, "scan", "--r", "", "--format", "json")
    payload = json.loads(out)["payload"]
    assert code == 0 and payload["cells"] == 0 and payload["congruences"] == []


def test_scan_r7_k2(capsys):
    code, out, _ = run(capsys, "scan", "--r", "7", "--m", "5-11", "--k", "2", "--format", "json", "--jobs", "2")
    pairs = {(c["modulus"], c["beta"]) for c in json.loads(out)["payload"]["congruences"]}
    assert pairs == {(25, 18), (121, 86)}


def test_scan_rows_carry_verification(capsys):
    code, out, _ = run(capsys, "scan", "--r", "2-4", "--m", "5-13", "--k", "1", "--format", "json")
    for row in json.loads(out)["payload"]["congruences"]:
        recs = row["certificate"]["verifications"]
        assert recs and all(v["passed"] for v in recs)
        assert row["certificate"]["sturm_grade"]


def test_hecke_even_r_exit_4(capsys):
    code, _, err = run(capsys, "hecke", "--m", "7", "--k", "1", "--r", "2", "--ell", "5")
    assert code == EXIT_HYPOTHESIS and "r odd" in err


def test_hecke_bad_ell_exit_4(capsys):
    code, _, err = run(capsys, "hecke", "--m", "7", "--k", "1", "--r", "3", "--ell", "7")
    assert code == EXIT_HYPOTHESIS and "ell" in err


def test_hecke_range_primes_only(capsys):
    code, out, _ = run(
        capsys, "hecke", "--m", "7", "--k", "1", "--r", "3", "--ell", "4-20", "--primes-only",
        "--no-certificates", "--format", "json",
    )
    ells = [s["ell"] for s in json.loads(out)["payload"]["systems"]]
    assert code == 0 and ells == [5, 11, 13, 17, 19]


def test_hecke_5_2_3(capsys):
    code, out, _ = run(
        capsys, "hecke", "--m", "5", "--k", "2", "--r", "3", "--ell", "13", "--oracle-budget", "1000", "--format", "json"
    )
    pay = json.loads(out)["payload"]
    (sys,) = pay["systems"]
    assert (sys["K"], sys["M"], sys["d"]) == (100, 100, 5)
    assert sorted(c["exponent"] for c in pay["certificates"]) == [199, 200]


def test_hecke_cap_exit_2(capsys):
    code, _, err = run(capsys, "hecke", "--m", "5", "--k", "2", "--r", "3", "--ell", "13", "--cap", "10")
    assert code == EXIT_INPUT and "cap" in err


def test_verify_certificate_file(tmp_path, capsys):
    code, out, _ = run(capsys, "scan", "--r", "8", "--m", "11", "--k", "2", "--format", "json")
    report = tmp_path / "scan.json"
    report.write_text(out)
    code, out, _ = run(capsys, "verify", "--cert", str(report), "--n-max", "40", "--format", "json")
    (res,) = json.loads(out)["payload"]["results"]
    assert code == EXIT_OK and res["ok"] and res["checked"] == 41


def test_verify_corrupted_certificate_exit_5(tmp_path, capsys):
    # beta + 1 on p_2(5n + 3) would still hold (p_2(5n + 4) vanishes mod 5 too), so use 121
    code, out, _ = run(capsys, "scan", "--r", "8", "--m", "11", "--k", "2", "--format", "json")
    cert = json.loads(out)["payload"]["congruences"][0]["certificate"]
    cert["beta"] += 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cert))
    code, out, _ = run(capsys, "verify", "--cert", str(path), "--format", "json")
    (res,) = json.loads(out)["payload"]["results"]
    assert code == EXIT_COUNTEREXAMPLE
    assert res["ok"] is False and res["counterexample"]["n"] < 5


def test_verify_markdown_counterexample(capsys):
    code, out, _ = run(capsys, "verify", "--m", "5", "--k", "1", "--r", "2", "--beta", "1")
    assert code == EXIT_COUNTEREXAMPLE and "COUNTEREXAMPLE" in out


def test_verify_malformed_certificate_exit_2(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text('{"kind": "nope"}')
    assert run(capsys, "verify", "--cert", str(path))[0] == EXIT_INPUT
    path.write_text("not json")
    assert run(capsys, "verify", "--cert", str(path))[0] == EXIT_INPUT
    assert run(capsys, "verify", "--cert", str(tmp_path / "missing.json"))[0] == EXIT_INPUT


def test_verify_hecke_inline(capsys):
    code, out, _ = run(
        capsys, "verify", "--m", "7", "--k", "1", "--r", "3", "--kind", "hecke-vanishing",
        "--ell", "13", "--order", "2", "--n-max", "100", "--format", "json",
    )
    (res,) = json.loads(out)["payload"]["results"]
    assert code == 0 and res["ok"] and res["max_index"] > 50000


def test_verify_over_budget_is_skipped_not_passed(capsys):
    code, out, _ = run(
        capsys, "verify", "--m", "7", "--k", "1", "--r", "3", "--kind", "hecke-vanishing",
        "--ell", "37", "--order", "3", "--n-max", "20", "--format", "json",
    )
    (res,) = json.loads(out)["payload"]["results"]
    assert code == 0 and res["ok"] is None and "budget" in res["skipped"]


def test_verify_kind_needs_order(capsys):
    code, _, err = run(capsys, "verify", "--m", "7", "--k", "1", "--r", "3", "--kind", "hecke-periodicity")
    assert code == EXIT_INPUT


def test_out_flag_writes_file(tmp_path, capsys):
    target = tmp_path / "p.md"
    code, out, _ = run(capsys, "params", "--m", "7", "--k", "1", "--r", "3", "--out", str(target))
    assert code == 0 and out == "" and target.read_text().startswith("## Parameters")


def test_cache_gives_identical_reports(tmp_path, capsys, monkeypatch):
    argv = ["hecke", "--m", "11", "--k", "1", "--r", "5", "--ell", "5", "--format", "json"]
    monkeypatch.setenv("Q_CACHE_DIR", str(tmp_path / "c"))
    cold = run(capsys, *argv)
    files = list((tmp_path / "c").glob("*.qser"))
    warm = run(capsys, *argv)
    bare = run(capsys, *argv, "--no-cache")
    assert files
    assert cold == warm == bare
    scan = ["scan", "--r", "3-5", "--m", "5-13", "--k", "1", "--format", "json"]
    assert run(capsys, *scan) == run(capsys, *scan) == run(capsys, *scan, "--no-cache")
