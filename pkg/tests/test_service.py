"""Tests for the HTTP service endpoints.

Exact rationals must cross the wire as {"num", "den"} objects; invalid
parameters must come back as HTTP 400 with a readable detail string and
malformed bodies as HTTP 422.
"""

import pytest
from fastapi.testclient import TestClient

from misocache import __version__
from misocache.service import create_app
from misocache.simulator import default_requests
from misocache.sweeps import SWEEP_HEADER


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(), raise_server_exceptions=False) as c:
        yield c


def rat(num, den=1):
    return {"num": num, "den": den}


def test_health(client):
    body = client.get("/health").json()
    assert body == {"status": "ok", "version": __version__}


def test_compute_worked_instance(client):
    resp = client.post("/compute", json={"k": 4, "n": 8, "m": "1", "alpha": "0"})
    assert resp.status_code == 200
    body = resp.json()
    assert body == {
        "k": 4,
        "n": 8,
        "m": rat(1),
        "gamma": rat(1, 8),
        "cum_gamma": rat(1, 2),
        "alpha": rat(0),
        "regime": "FirstBranch",
        "eta": None,
        "time": rat(19, 12),
        "dof": rat(21, 38),
        "lower_bound": rat(1),
        "argmax_s": 2,
        "gap": rat(19, 12),
        "delta": rat(69, 494),
    }


def test_compute_eta_branch(client):
    body = client.post(
        "/compute", json={"k": 4, "n": 8, "m": "1", "alpha": "36/43"}
    ).json()
    assert body["regime"] == "EtaBranch" and body["eta"] == 2
    assert body["time"] == rat(43, 48)


def test_compute_float_alpha_uses_float_path(client):
    body = client.post(
        "/compute", json={"k": 4, "n": 8, "m": "1", "alpha": 0.05}
    ).json()
    assert isinstance(body["time"], float)
    assert isinstance(body["alpha"], float)


def test_compute_bad_parameters_are_400(client):
    resp = client.post("/compute", json={"k": 4, "n": 2, "m": "1", "alpha": "0"})
    assert resp.status_code == 400
    assert "N < K" in resp.json()["detail"]
    resp = client.post("/compute", json={"k": 4, "n": 8, "m": "1", "alpha": "3/2"})
    assert resp.status_code == 400


def test_compute_malformed_body_is_422(client):
    resp = client.post("/compute", json={"n": 8, "m": "1", "alpha": "0"})
    assert resp.status_code == 422
    resp = client.post("/compute", json={"k": [], "n": 8, "m": "1", "alpha": "0"})
    assert resp.status_code == 422


def test_sweep_endpoint(client):
    req = {"k_spec": "4", "n_spec": "8", "m_spec": "1", "alpha_spec": "0:1:1/20"}
    first = client.post("/sweep", json=req)
    assert first.status_code == 200
    body = first.json()
    assert body["header"] == list(SWEEP_HEADER)
    assert body["count"] == 21 == len(body["rows"])
    assert body["rows"][0]["T"] == rat(19, 12)
    assert body["csv"].startswith(",".join(SWEEP_HEADER) + "\n")
    assert body["csv"].count("\n") == 22
    assert client.post("/sweep", json=req).json() == body


def test_gap_audit_endpoint(client):
    body = client.post(
        "/gap-audit",
        json={"k_spec": "2:6", "alpha_spec": "0,1/2,1", "threads": 2},
    ).json()
    assert body["points"] == 5 * 3 * 5 * 3
    assert body["passed"] is True
    assert body["max_gap_decimal"] == pytest.approx(
        body["max_gap"]["num"] / body["max_gap"]["den"]
    )
    assert set(body["argmax"]) == {"K", "N", "M", "alpha", "gap"}
    assert body["large_k"] is None


def test_gap_audit_large_k(client):
    body = client.post(
        "/gap-audit",
        json={"k_spec": "2", "n_spec": "2", "m_spec": "0", "alpha_spec": "0", "large_k": True},
    ).json()
    assert [row["K"] for row in body["large_k"]] == [10**3, 10**4, 10**5, 10**6]
    assert all(row["gap"] <= 2.6 for row in body["large_k"])


def test_delta_endpoint(client):
    body = client.post(
        "/delta", json={"k": 4, "n": 8, "m": "1", "alpha_spec": "0:1:1/4"}
    ).json()
    assert body["disagreements"] == 2
    assert "authoritative" in body["note"]
    assert [row["agree"] for row in body["rows"]] == [True, True, False, False, True]
    assert body["rows"][0]["closed"] == rat(69, 494)


def test_suggest_f_endpoint(client):
    body = client.post(
        "/suggest-f", json={"k": 4, "n": 8, "m": "1", "alpha": "12/25"}
    ).json()
    assert body == {"f": 8}


def test_simulate_endpoint(client):
    resp = client.post(
        "/simulate", json={"k": 4, "n": 8, "m": "1", "alpha": "12/25", "f": 96}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["airtime"] == rat(25, 24) == body["expected_time"]
    assert body["airtime_matches"] and body["decoded_ok"]
    assert body["unit_counts"] == {"Xor": 6, "ZeroForce": 12, "MatCommon": 0}
    assert body["requests"] == list(default_requests(4, 8, 0))
    assert len(body["durations"]) == 7
    assert body["trace"] is None


def test_simulate_trace_and_requests(client):
    body = client.post(
        "/simulate",
        json={
            "k": 4, "n": 8, "m": "1", "alpha": "0", "f": 96,
            "requests": [5, 5, 5, 5], "trace": True, "seed": 9,
        },
    ).json()
    assert body["requests"] == [5, 5, 5, 5]
    assert body["seed"] == 9
    assert len(body["trace"]) == 10
    assert body["trace"][0] == "1 Xor 1,2 12 0"


def test_simulate_bad_file_size_is_400(client):
    resp = client.post(
        "/simulate", json={"k": 4, "n": 8, "m": "1", "alpha": "0", "f": 100}
    )
    assert resp.status_code == 400
    assert "smallest valid size 8" in resp.json()["detail"]


def test_schedule_endpoint(client):
    body = client.post(
        "/schedule", json={"k": 4, "n": 8, "m": "1", "alpha": "0"}
    ).json()
    assert body["f"] == 8
    assert body["subfile_bits"] == 1
    assert body["zf_bits_per_user"] == 0
    assert body["common_bits_per_user"] == 4
    assert body["total"] == rat(19, 12)
    assert len(body["durations"]) == 7
    assert body["units"][0] == {
        "phase": 1, "kind": "Xor", "users": [1, 2], "bits": 1, "offset": 0,
    }
    assert len(body["units"]) == 10


def test_schedule_above_breakpoint_is_400(client):
    resp = client.post(
        "/schedule", json={"k": 4, "n": 8, "m": "1", "alpha": "1/2"}
    )
    assert resp.status_code == 400
    assert "above first-branch breakpoint" in resp.json()["detail"]
