"""FastAPI application exposing analysis, sweeps, audits, and the simulator.

All parsing of numeric strings and grid specs happens here on the server,
so any client (the bundled CLI included) stays a thin transport. Invalid
parameters surface as HTTP 400 with a human-readable detail message.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import ParameterError, check_alpha, validate_params
from ..analysis import performance_point
from ..scheme import build_phase_schedule, build_placement, suggest_f
from ..simulator import simulate
from ..sweeps import (
    SWEEP_HEADER,
    delta_rows,
    gap_audit,
    large_k_audit,
    rows_to_csv,
    run_sweep,
)
from .models import (
    ComputeRequest,
    ComputeResponse,
    DeltaRequest,
    DeltaResponse,
    GapAuditRequest,
    GapAuditResponse,
    HealthResponse,
    ScheduleRequest,
    ScheduleResponse,
    SimulateRequest,
    SimulateResponse,
    SuggestFRequest,
    SuggestFResponse,
    SweepRequest,
    SweepResponse,
    UnitModel,
    wire,
    wire_row,
)


def create_app() -> FastAPI:
    app = FastAPI(title="misocache", version=__version__)

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError) -> JSONResponse:
        # ParameterError subclasses ValueError; both are caller mistakes.
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/compute", response_model=ComputeResponse)
    def compute(req: ComputeRequest) -> ComputeResponse:
        params = validate_params(req.k, req.n, req.m)
        point = performance_point(params, req.alpha)
        return ComputeResponse(
            k=params.k,
            n=params.n,
            m=wire(params.m),
            gamma=wire(params.gamma),
            cum_gamma=wire(params.cum_gamma),
            alpha=wire(point.alpha),
            regime=point.regime.kind,
            eta=point.regime.eta,
            time=wire(point.time),
            dof=wire(point.dof),
            lower_bound=wire(point.lower_bound),
            argmax_s=point.argmax_s,
            gap=wire(point.gap),
            delta=wire(point.savings),
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        rows = run_sweep(
            req.k_spec, req.n_spec, req.m_spec, req.alpha_spec, threads=req.threads
        )
        return SweepResponse(
            header=list(SWEEP_HEADER),
            count=len(rows),
            rows=[wire_row(row) for row in rows],
            csv=rows_to_csv(rows),
        )

    @app.post("/gap-audit", response_model=GapAuditResponse)
    def audit(req: GapAuditRequest) -> GapAuditResponse:
        result = gap_audit(
            req.k_spec, req.n_spec, req.m_spec, req.alpha_spec, threads=req.threads
        )
        return GapAuditResponse(
            points=result.points,
            max_gap=wire(result.max_gap),
            max_gap_decimal=float(result.max_gap),
            argmax=wire_row(result.argmax),
            passed=result.passed,
            large_k=large_k_audit() if req.large_k else None,
        )

    @app.post("/delta", response_model=DeltaResponse)
    def delta(req: DeltaRequest) -> DeltaResponse:
        params = validate_params(req.k, req.n, req.m)
        rows = delta_rows(params, req.alpha_spec, tol=req.tol)
        disagreements = sum(1 for row in rows if not row["agree"])
        return DeltaResponse(
            rows=[wire_row(row) for row in rows],
            disagreements=disagreements,
            note=(
                "closed form and bisection oracle; the oracle is authoritative "
                "where the middle (eta) branch disagrees"
            ),
        )

    @app.post("/suggest-f", response_model=SuggestFResponse)
    def suggest(req: SuggestFRequest) -> SuggestFResponse:
        params = validate_params(req.k, req.n, req.m)
        return SuggestFResponse(f=suggest_f(params, check_alpha(req.alpha)))

    @app.post("/simulate", response_model=SimulateResponse)
    def run_simulation(req: SimulateRequest) -> SimulateResponse:
        params = validate_params(req.k, req.n, req.m)
        report, log = simulate(
            params, req.alpha, f=req.f, seed=req.seed, requests=req.requests
        )
        return SimulateResponse(
            k=report.params.k,
            n=report.params.n,
            m=wire(report.params.m),
            f=report.params.f,
            alpha=wire(report.alpha),
            seed=report.seed,
            requests=list(report.requests),
            airtime=wire(report.airtime),
            expected_time=wire(report.expected_time),
            airtime_matches=report.airtime == report.expected_time,
            decoded_ok=report.decoded_ok,
            unit_counts=report.unit_counts,
            coverage=report.coverage,
            durations=[wire(d) for d in log.schedule.durations],
            trace=log.to_trace_lines() if req.trace else None,
        )

    @app.post("/schedule", response_model=ScheduleResponse)
    def schedule(req: ScheduleRequest) -> ScheduleResponse:
        alpha = check_alpha(req.alpha)
        params = validate_params(req.k, req.n, req.m)
        f = req.f if req.f is not None else suggest_f(params, alpha)
        params = validate_params(params.k, params.n, params.m, f)
        plan = build_phase_schedule(params, alpha)
        placement = build_placement(params)
        return ScheduleResponse(
            k=params.k,
            n=params.n,
            m=wire(params.m),
            f=f,
            alpha=wire(plan.alpha),
            subfile_bits=placement.subfile_bits,
            cached_bits_per_user=placement.cached_bits_per_user,
            zf_bits_per_user=plan.zf_bits_per_user,
            common_bits_per_user=plan.common_bits_per_user,
            durations=[wire(d) for d in plan.durations],
            total=wire(plan.total),
            units=[
                UnitModel(
                    phase=u.phase,
                    kind=u.kind,
                    users=list(u.users),
                    bits=u.bits,
                    offset=u.offset,
                )
                for u in plan.units
            ],
        )

    return app
