"""End-to-end tests for the command-line client.

Every invocation goes through main(argv) against the in-process service,
checking stdout/stderr text, exit codes, output files, and environment
variable overrides.
"""

import json
import os

import pytest

from misocache.cli import main

WORKED = ["--k", "4", "--n", "8", "--m", "1"]


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_compute_text(capsys):
    code, out, err = run(capsys, ["compute", *WORKED, "--alpha", "0"])
    assert code == 0 and err == ""
    assert "regime = FirstBranch" in out
    assert "T      = 19/12 (1.58333333)" in out
    assert "T_lb   = 1 (1)  [argmax s=2]" in out
    assert "gap    = 19/12 (1.58333333)" in out
    assert "delta  = 69/494" in out


def test_compute_json(capsys):
    code, out, _ = run(capsys, ["compute", *WORKED, "--alpha", "0", "--format", "json"])
    assert code == 0
    data = json.loads(out)
    assert data["time"] == {"num": 19, "den": 12}
    assert data["delta"] == {"num": 69, "den": 494}


def test_compute_parameter_error_is_exit_2(capsys):
    code, out, err = run(capsys, ["compute", "--k", "4", "--n", "2", "--m", "1", "--alpha", "0"])
    assert code == 2 and out == ""
    assert "N < K" in err
    code, _, err = run(capsys, ["compute", *WORKED, "--alpha", "3/2"])
    assert code == 2 and "alpha" in err


def test_csv_format_is_sweep_only(capsys):
    code, _, err = run(capsys, ["compute", *WORKED, "--alpha", "0", "--format", "csv"])
    assert code == 2
    assert "only available for sweep" in err


def test_sweep_defaults_to_csv(capsys):
    code, out, _ = run(capsys, ["sweep", "--k", "4", "--n", "8", "--m", "1"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "K,N,M,gamma,Gamma,alpha,regime,eta,T,dof,T_lb,argmax_s,gap,delta"
    assert len(lines) == 22
    assert lines[1].startswith("4,8,1,1/8,1/2,0,FirstBranch,,19/12,")
    assert out.endswith("\n")


def test_sweep_json_drops_csv_blob(capsys):
    code, out, _ = run(
        capsys,
        ["sweep", "--k", "4", "--n", "8", "--m", "1", "--alpha", "0", "--format", "json"],
    )
    assert code == 0
    data = json.loads(out)
    assert "csv" not in data
    assert data["count"] == 1
    assert data["rows"][0]["T"] == {"num": 19, "den": 12}


def test_sweep_out_file_reruns_byte_identical(tmp_path, capsys):
    target = tmp_path / "rows.csv"
    argv = ["sweep", "--k", "2:4", "--alpha", "0,1/2,1", "--out", str(target)]
    assert main(argv) == 0
    first = target.read_bytes()
    assert main(argv) == 0
    assert target.read_bytes() == first
    assert first.startswith(b"K,N,M,")
    assert [p.name for p in tmp_path.iterdir()] == ["rows.csv"]
    capsys.readouterr()


def test_failed_run_leaves_no_output_file(tmp_path, capsys):
    target = tmp_path / "never.csv"
    code = main(["sweep", "--k", "4", "--n", "7", "--m", "N/0K", "--out", str(target)])
    capsys.readouterr()
    assert code == 2
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_gap_audit_text(capsys):
    code, out, _ = run(
        capsys, ["gap-audit", "--k", "2:6", "--alpha", "0,1/2,1", "--threads", "2"]
    )
    assert code == 0
    assert "points  = 225" in out
    assert "verdict = PASS (max gap < 4)" in out


def test_gap_audit_large_k(capsys):
    code, out, _ = run(
        capsys,
        ["gap-audit", "--k", "2", "--n", "2", "--m", "0", "--alpha", "0", "--large-k"],
    )
    assert code == 0
    assert "large-K trend" in out
    assert "K= 1000000" in out


def test_delta_table(capsys):
    code, out, _ = run(capsys, ["delta", *WORKED, "--alpha", "0:1:1/4"])
    assert code == 0
    assert out.count("  yes") == 3 and out.count("  NO") == 2
    assert "2 disagreement(s)" in out
    assert "oracle is authoritative" in out


def test_simulate_text(capsys):
    code, out, _ = run(capsys, ["simulate", *WORKED, "--alpha", "12/25", "--f", "96"])
    assert code == 0
    assert "airtime  = 25/24 (1.04166667)  (matches closed form: yes)" in out
    assert "decoded  = all users OK" in out
    assert "units    = Xor=6 ZeroForce=12 MatCommon=0" in out


def test_simulate_trace(capsys):
    code, out, _ = run(capsys, ["simulate", *WORKED, "--alpha", "0", "--f", "96", "--trace"])
    assert code == 0
    assert "trace (phase kind users bits offset):" in out
    assert "\n  1 Xor 1,2 12 0\n" in out


def test_simulate_suggest_f(capsys):
    code, out, _ = run(capsys, ["simulate", *WORKED, "--alpha", "12/25", "--suggest-f"])
    assert code == 0
    assert out == "smallest valid file size: 8\n"
    code, out, _ = run(
        capsys,
        ["simulate", *WORKED, "--alpha", "12/25", "--suggest-f", "--format", "json"],
    )
    assert code == 0 and json.loads(out) == {"f": 8}


def test_simulate_bad_file_size(capsys):
    code, _, err = run(capsys, ["simulate", *WORKED, "--alpha", "0", "--f", "100"])
    assert code == 2
    assert "smallest valid size 8" in err


def test_simulate_bad_requests(capsys):
    code, _, err = run(capsys, ["simulate", *WORKED, "--alpha", "0", "--requests", "1,2,3,9"])
    assert code == 2 and "file ids" in err
    code, _, err = run(capsys, ["simulate", *WORKED, "--alpha", "0", "--requests", "a,b"])
    assert code == 2 and "bad request list" in err


def test_simulate_requests_roundtrip(capsys):
    code, out, _ = run(
        capsys, ["simulate", *WORKED, "--alpha", "0", "--requests", "5,5,5,5"]
    )
    assert code == 0
    assert "requests = 5,5,5,5" in out


def test_env_format_override(capsys, monkeypatch):
    monkeypatch.setenv("MISOCACHE_FORMAT", "json")
    code, out, _ = run(capsys, ["compute", *WORKED, "--alpha", "0"])
    assert code == 0
    assert json.loads(out)["time"] == {"num": 19, "den": 12}
    monkeypatch.setenv("MISOCACHE_FORMAT", "xml")
    code, _, err = run(capsys, ["compute", *WORKED, "--alpha", "0"])
    assert code == 2 and "unknown format" in err


def test_env_seed_override(capsys, monkeypatch):
    monkeypatch.setenv("MISOCACHE_SEED", "5")
    code, out, _ = run(capsys, ["simulate", *WORKED, "--alpha", "0"])
    assert code == 0
    assert "seed=5" in out


def test_bad_thread_count(capsys):
    code, _, err = run(capsys, ["sweep", "--k", "4", "--threads", "0"])
    assert code == 2 and "--threads" in err


def test_unreachable_server(capsys):
    env_server = os.environ.get("MISOCACHE_SERVER")
    assert env_server is None
    code, _, err = run(
        capsys,
        ["compute", *WORKED, "--alpha", "0", "--server", "http://127.0.0.1:9"],
    )
    assert code == 2
    assert "cannot reach service" in err
