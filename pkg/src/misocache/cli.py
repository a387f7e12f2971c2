"""Command-line client for the misocache service.

By default the CLI instantiates the bundled FastAPI app in process and
talks to it over an ASGI test transport, so no server needs to be running.
Point ``--server`` (or the MISOCACHE_SERVER environment variable) at a
deployed instance to send the same requests over the network instead; the
payloads and outputs are identical either way.

Exit codes: 0 success; 1 a reported verification failure (an audit point at
gap >= 4, a failed decode); 2 usage or parameter errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import warnings
from typing import Optional

import httpx

from .sweeps import (
    DEFAULT_ALPHA_SPEC,
    DEFAULT_K_SPEC,
    DEFAULT_M_SPEC,
    DEFAULT_N_SPEC,
)

__all__ = ["build_parser", "entry", "main", "make_client"]


def make_client(server: Optional[str]):
    """An httpx-style client: remote when a server URL is given, else in-process."""
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    with warnings.catch_warnings():
        # Some starlette builds warn about their own test client import.
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _write_output(text: str, out: Optional[str]) -> None:
    """Print to stdout, or replace the target file atomically."""
    if not text.endswith("\n"):
        text += "\n"
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".misocache-")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _post(client, path: str, payload: dict):
    """POST and map transport/HTTP errors to exit codes (None, code) or (data, None)."""
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return None, 2
    if response.status_code in (400, 422):
        detail = response.json().get("detail")
        if not isinstance(detail, str):
            detail = json.dumps(detail)
        print(f"error: {detail}", file=sys.stderr)
        return None, 2
    if response.status_code != 200:
        print(
            f"error: service returned {response.status_code}: {response.text[:500]}",
            file=sys.stderr,
        )
        return None, 1
    return response.json(), None


def _rat_str(value) -> str:
    """Bare rendering of a wire value: p/q, repr'd float, or str."""
    if value is None:
        return "-"
    if isinstance(value, dict) and "num" in value:
        if value["den"] == 1:
            return str(value["num"])
        return f"{value['num']}/{value['den']}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _value_str(value) -> str:
    """Exact rendering plus a decimal column, e.g. ``19/12 (1.583333333)``."""
    if value is None:
        return "-"
    if isinstance(value, dict) and "num" in value:
        return f"{_rat_str(value)} ({value['num'] / value['den']:.9g})"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _cmd_compute(client, args, fmt: str, threads: int) -> int:
    payload = {"k": args.k, "n": args.n, "m": args.m, "alpha": args.alpha}
    data, code = _post(client, "/compute", payload)
    if code:
        return code
    if fmt == "json":
        _write_output(json.dumps(data, indent=2), args.out)
        return 0
    regime = data["regime"]
    if data["eta"] is not None:
        regime = f"{regime}({data['eta']})"
    lines = [
        f"K={data['k']} N={data['n']} M={_rat_str(data['m'])} "
        f"gamma={_rat_str(data['gamma'])} Gamma={_rat_str(data['cum_gamma'])} "
        f"alpha={_rat_str(data['alpha'])}",
        f"regime = {regime}",
        f"T      = {_value_str(data['time'])}",
        f"dof    = {_value_str(data['dof'])}",
        f"T_lb   = {_value_str(data['lower_bound'])}  [argmax s={data['argmax_s']}]",
        f"gap    = {_value_str(data['gap'])}",
        f"delta  = {_value_str(data['delta'])}",
    ]
    _write_output("\n".join(lines), args.out)
    return 0


def _cmd_sweep(client, args, fmt: str, threads: int) -> int:
    payload = {
        "k_spec": args.k,
        "n_spec": args.n,
        "m_spec": args.m,
        "alpha_spec": args.alpha,
        "threads": threads,
    }
    data, code = _post(client, "/sweep", payload)
    if code:
        return code
    if fmt == "json":
        slim = {key: value for key, value in data.items() if key != "csv"}
        _write_output(json.dumps(slim, indent=2), args.out)
        return 0
    _write_output(data["csv"], args.out)
    return 0


def _cmd_gap_audit(client, args, fmt: str, threads: int) -> int:
    payload = {
        "k_spec": args.k,
        "n_spec": args.n,
        "m_spec": args.m,
        "alpha_spec": args.alpha,
        "threads": threads,
        "large_k": args.large_k,
    }
    data, code = _post(client, "/gap-audit", payload)
    if code:
        return code
    if fmt == "json":
        _write_output(json.dumps(data, indent=2), args.out)
    else:
        argmax = data["argmax"]
        where = " ".join(f"{key}={_rat_str(argmax[key])}" for key in ("K", "N", "M", "alpha"))
        lines = [
            f"points  = {data['points']}",
            f"max gap = {_rat_str(data['max_gap'])} ({data['max_gap_decimal']:.9g}) at {where}",
            f"verdict = {'PASS (max gap < 4)' if data['passed'] else 'FAIL (gap >= 4)'}",
        ]
        if data.get("large_k"):
            lines.append("large-K trend (gamma = K^-1/2, alpha = 0):")
            for row in data["large_k"]:
                lines.append(
                    f"  K={row['K']:>8} gamma={row['gamma']:.6f} "
                    f"gap={row['gap']:.6f} argmax_s={row['argmax_s']}"
                )
        _write_output("\n".join(lines), args.out)
    return 0 if data["passed"] else 1


def _cmd_delta(client, args, fmt: str, threads: int) -> int:
    payload = {"k": args.k, "n": args.n, "m": args.m, "alpha_spec": args.alpha}
    data, code = _post(client, "/delta", payload)
    if code:
        return code
    if fmt == "json":
        _write_output(json.dumps(data, indent=2), args.out)
        return 0
    lines = [
        f"{'alpha':>8}  {'regime':<16} {'closed':>22} {'oracle':>14} {'|diff|':>10}  agree"
    ]
    for row in data["rows"]:
        regime = row["regime"]
        if row["eta"] is not None:
            regime = f"{regime}({row['eta']})"
        lines.append(
            f"{_rat_str(row['alpha']):>8}  {regime:<16} {_value_str(row['closed']):>22} "
            f"{row['oracle']:>14.9f} {row['abs_diff']:>10.2e}  {'yes' if row['agree'] else 'NO'}"
        )
    if data["disagreements"]:
        lines.append(
            f"{data['disagreements']} disagreement(s); {data['note']}"
        )
    _write_output("\n".join(lines), args.out)
    return 0


def _parse_request_list(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    try:
        return [int(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad request list {text!r}")


def _cmd_simulate(client, args, fmt: str, threads: int) -> int:
    base = {"k": args.k, "n": args.n, "m": args.m, "alpha": args.alpha}
    if args.suggest_f:
        data, code = _post(client, "/suggest-f", base)
        if code:
            return code
        if fmt == "json":
            _write_output(json.dumps(data, indent=2), args.out)
        else:
            _write_output(f"smallest valid file size: {data['f']}", args.out)
        return 0
    try:
        requests = _parse_request_list(args.requests)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = dict(base, f=args.f, seed=args.seed, requests=requests, trace=args.trace)
    data, code = _post(client, "/simulate", payload)
    if code:
        return code
    ok = data["decoded_ok"] and data["airtime_matches"]
    if fmt == "json":
        _write_output(json.dumps(data, indent=2), args.out)
        return 0 if ok else 1
    counts = " ".join(f"{kind}={num}" for kind, num in data["unit_counts"].items())
    coverage = " ".join(f"{src}={bits}" for src, bits in data["coverage"].items())
    lines = [
        f"K={data['k']} N={data['n']} M={_rat_str(data['m'])} f={data['f']} "
        f"alpha={_rat_str(data['alpha'])} seed={data['seed']}",
        f"requests = {','.join(str(r) for r in data['requests'])}",
        f"airtime  = {_value_str(data['airtime'])}  "
        f"(matches closed form: {'yes' if data['airtime_matches'] else 'NO'})",
        f"decoded  = {'all users OK' if data['decoded_ok'] else 'FAILED'}",
        f"units    = {counts}",
        f"coverage = {coverage}",
    ]
    if data.get("trace"):
        lines.append("trace (phase kind users bits offset):")
        lines.extend(f"  {line}" for line in data["trace"])
    _write_output("\n".join(lines), args.out)
    return 0 if ok else 1


_COMMANDS = {
    "compute": _cmd_compute,
    "sweep": _cmd_sweep,
    "gap-audit": _cmd_gap_audit,
    "delta": _cmd_delta,
    "simulate": _cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--server",
        default=os.environ.get("MISOCACHE_SERVER"),
        help="service base URL; default is the in-process app (env MISOCACHE_SERVER)",
    )
    common.add_argument(
        "--format",
        choices=("text", "csv", "json"),
        default=None,
        help="output format; sweep defaults to csv, others to text (env MISOCACHE_FORMAT)",
    )
    common.add_argument("--out", default=None, help="write output to this file atomically")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for sweeps/audits (env MISOCACHE_THREADS, default 1)",
    )

    parser = argparse.ArgumentParser(
        prog="misocache",
        description="Delivery-time analysis, audits, and bit-exact simulation "
        "for feedback-aided coded caching.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    compute = sub.add_parser("compute", parents=[common], help="evaluate one operating point")
    compute.add_argument("--k", type=int, required=True)
    compute.add_argument("--n", type=int, required=True)
    compute.add_argument("--m", required=True, help="cache size, rational like 1 or 1/2")
    compute.add_argument("--alpha", required=True, help="CSIT quality in [0,1], e.g. 0.3 or 12/25")

    sweep = sub.add_parser("sweep", parents=[common], help="evaluate a parameter grid")
    sweep.add_argument("--k", required=True, help='K spec, e.g. "4" or "2:50"')
    sweep.add_argument("--n", default=DEFAULT_N_SPEC, help='N spec, e.g. "K,2K,4K" or "8"')
    sweep.add_argument("--m", default=DEFAULT_M_SPEC, help='M spec, e.g. "0,N/2K,N/K" or "1"')
    sweep.add_argument("--alpha", default=DEFAULT_ALPHA_SPEC, help='alpha spec, e.g. "0:1:1/20"')

    audit = sub.add_parser("gap-audit", parents=[common], help="scan the optimality gap")
    audit.add_argument("--k", default=DEFAULT_K_SPEC)
    audit.add_argument("--n", default=DEFAULT_N_SPEC)
    audit.add_argument("--m", default=DEFAULT_M_SPEC)
    audit.add_argument("--alpha", default=DEFAULT_ALPHA_SPEC)
    audit.add_argument(
        "--large-k",
        action="store_true",
        help="also report the K in 10^3..10^6, gamma = K^-1/2 gap trend",
    )

    delta = sub.add_parser("delta", parents=[common], help="CSIT savings: closed form vs oracle")
    delta.add_argument("--k", type=int, required=True)
    delta.add_argument("--n", type=int, required=True)
    delta.add_argument("--m", required=True)
    delta.add_argument("--alpha", default=DEFAULT_ALPHA_SPEC, help="alpha spec")

    simulate = sub.add_parser("simulate", parents=[common], help="run a bit-exact delivery")
    simulate.add_argument("--k", type=int, required=True)
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--m", required=True)
    simulate.add_argument("--alpha", required=True, help="exact rational in [0, breakpoint]")
    simulate.add_argument("--f", type=int, default=None, help="file size in bits")
    simulate.add_argument(
        "--seed",
        type=int,
        default=int(os.environ.get("MISOCACHE_SEED", "0")),
        help="library/request seed (env MISOCACHE_SEED, default 0)",
    )
    simulate.add_argument("--requests", default=None, help='comma list of file ids, e.g. "1,2,1,2"')
    simulate.add_argument("--trace", action="store_true", help="include the unit trace")
    simulate.add_argument(
        "--suggest-f", action="store_true", help="print the smallest valid file size and exit"
    )
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    fmt = args.format or os.environ.get("MISOCACHE_FORMAT")
    if fmt is None:
        fmt = "csv" if args.command == "sweep" else "text"
    if fmt not in ("text", "csv", "json"):
        print(f"error: unknown format {fmt!r}", file=sys.stderr)
        return 2
    if fmt == "csv" and args.command != "sweep":
        print("error: csv output is only available for sweep", file=sys.stderr)
        return 2
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("MISOCACHE_THREADS", "1"))
    if threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    client = make_client(args.server)
    try:
        return _COMMANDS[args.command](client, args, fmt, threads)
    finally:
        client.close()


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
