"""REST service exposing the pipeline to the UI.

One session is one resource; requests mutating the same session are
serialized per session id. Elicitation runs are synchronous: desk-scale LLM
batches return full results within generous timeouts. Errors are
problem-details JSON: {"code", "message", "detail"}.
"""

from __future__ import annotations

import base64
import contextlib
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import assessment as assessment_ops
from . import dfd as dfd_ops
from . import elicitation as elicit_ops
from . import report as report_ops
from .errors import (
    AssessmentError,
    AuthenticationError,
    CardCountError,
    CsvFormatError,
    DebateAbortedError,
    DfdValidationError,
    GatewayError,
    KnowledgeBaseError,
    NotFoundError,
    NoVisionProviderError,
    PayloadTooLargeError,
    PillarError,
    ProviderSelectionError,
    SchemaViolationError,
    StorageError,
    UnsupportedMediaTypeError,
    VersionMismatchError,
)
from .gateway import (
    DEFAULT_MAX_IN_FLIGHT,
    LlmGateway,
    ProviderSelector,
    default_provider_configs,
    make_provider,
)
from .kb import KnowledgeBase, bundled_asset_dir, load_knowledge_base
from .model import (
    ApplicationProfile,
    LinddunCategory,
    Methodology,
    ReportMeta,
    Session,
    validate_profile,
)
from .store import SessionStore

DEFAULT_MAX_UPLOAD_BYTES = 8 * 1024 * 1024

_STATUS_BY_ERROR = [
    (NotFoundError, 404),
    (VersionMismatchError, 409),
    (CsvFormatError, 400),
    (DfdValidationError, 400),
    (UnsupportedMediaTypeError, 415),
    (PayloadTooLargeError, 413),
    (CardCountError, 400),
    (AssessmentError, 400),
    (NoVisionProviderError, 409),
    (ProviderSelectionError, 409),
    (SchemaViolationError, 502),
    (AuthenticationError, 502),
    (DebateAbortedError, 502),
    (GatewayError, 502),
    (KnowledgeBaseError, 500),
    (StorageError, 500),
    (PillarError, 400),
]


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8977
    kb_dir: Path = field(default_factory=bundled_asset_dir)
    sessions_dir: Path = Path("./sessions")
    provider_configs: list = field(default_factory=default_provider_configs)
    personas_path: Path | None = None
    default_rounds: int = elicit_ops.DEFAULT_ROUNDS
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> ServiceConfig:
        env = os.environ if env is None else env
        config = cls()
        if env.get("PILLAR_KB_DIR"):
            config.kb_dir = Path(env["PILLAR_KB_DIR"])
        if env.get("PILLAR_SESSIONS_DIR"):
            config.sessions_dir = Path(env["PILLAR_SESSIONS_DIR"])
        return config


# ---------------------------------------------------------------------------
# Request bodies
# ---------------------------------------------------------------------------

class CreateSessionBody(BaseModel):
    app_name: str = ""


class ProfileBody(BaseModel):
    app_type: str = "web"
    app_type_label: str = ""
    description: str = ""
    data_policy: str = ""
    authentication_methods: list[str] = []
    data_types: list[dict[str, Any]] = []


class DfdBody(BaseModel):
    edges: list[dict[str, Any]]


class ImportCsvBody(BaseModel):
    csv: str


class GenerateDfdBody(BaseModel):
    source: str = "description"  # description | image
    image_base64: str | None = None
    media_type: str | None = None
    seed: int | None = None
    provider: str | None = None


class ZeroShotBody(BaseModel):
    seed: int | None = None
    provider: str | None = None


class GoBody(BaseModel):
    n_cards: int
    multi_agent: bool = False
    rounds: int | None = None
    seed: int | None = None
    provider: str | None = None


class ProBody(BaseModel):
    edge_id: str
    flow_description: str
    categories: list[str]
    seed: int | None = None
    provider: str | None = None


class AssessImportBody(BaseModel):
    methodology: str


class GenerateBody(BaseModel):
    seed: int | None = None
    provider: str | None = None


class PatchThreatBody(BaseModel):
    included: bool | None = None
    impact: str | None = None


class ReportMetaBody(BaseModel):
    app_name: str = ""
    author: str = ""
    organization: str = ""
    date: str = ""
    scope_notes: str = ""
    include_dfd: bool = True


class BuildReportBody(BaseModel):
    now: str | None = None


def _selector(provider: str | None) -> ProviderSelector:
    return (ProviderSelector.fixed(provider) if provider
            else ProviderSelector.random_enabled())


_METHODOLOGY_ALIASES = {
    "zero_shot": Methodology.ZERO_SHOT, "zeroshot": Methodology.ZERO_SHOT,
    "linddun_go": Methodology.LINDDUN_GO, "go": Methodology.LINDDUN_GO,
    "linddun_pro": Methodology.LINDDUN_PRO, "pro": Methodology.LINDDUN_PRO,
}


def parse_methodology(value: str) -> Methodology:
    try:
        return _METHODOLOGY_ALIASES[value.strip().lower()]
    except KeyError:
        raise PillarError(f"unknown methodology {value!r}; expected one of "
                          f"{sorted(set(_METHODOLOGY_ALIASES))}") from None


def parse_categories(values: list[str]) -> set[LinddunCategory]:
    categories: set[LinddunCategory] = set()
    for value in values:
        try:
            categories.add(LinddunCategory(value.strip().lower()))
        except ValueError:
            raise PillarError(f"unknown category {value!r}") from None
    return categories


# ---------------------------------------------------------------------------
# App factory
# ---------------------------------------------------------------------------

class _SessionLocks:
    def __init__(self):
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    @contextlib.contextmanager
    def held(self, session_id: str):
        with self._guard:
            lock = self._locks.setdefault(session_id, threading.Lock())
        with lock:
            yield


def create_app(config: ServiceConfig | None = None,
               gateway: LlmGateway | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    store = SessionStore(config.sessions_dir)
    kb: KnowledgeBase = load_knowledge_base(config.kb_dir)
    if gateway is None:
        gateway = LlmGateway([make_provider(c) for c in config.provider_configs],
                             max_in_flight=config.max_in_flight)
    personas = elicit_ops.load_personas(config.personas_path)
    locks = _SessionLocks()

    app = FastAPI(title="PILLAR service", version="0.1.0")
    app.state.store = store
    app.state.kb = kb
    app.state.gateway = gateway
    app.state.config = config

    # single-analyst desk tool behind a trusted proxy; browser UI may be
    # served from a different origin (vite dev server)
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(PillarError)
    async def pillar_error_handler(_request: Request, exc: PillarError):
        status = next(s for cls, s in _STATUS_BY_ERROR if isinstance(exc, cls))
        return JSONResponse(status_code=status, content=exc.to_problem())

    # -- sessions ---------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        session = Session()
        session.report_meta.app_name = body.app_name
        store.save(session)
        return session.to_dict()

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        return [s.to_dict() for s in store.list()]

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return store.load(session_id).to_dict()

    # -- profile ----------------------------------------------------------

    @app.get("/sessions/{session_id}/profile")
    def get_profile(session_id: str) -> dict:
        session = store.load(session_id)
        return {"profile": session.profile.to_dict(),
                "issues": [i.to_dict() for i in validate_profile(session.profile)]}

    @app.put("/sessions/{session_id}/profile")
    def put_profile(session_id: str, body: ProfileBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            session.profile = ApplicationProfile.from_dict(body.model_dump())
            session.touch()
            store.save(session)
            return {"profile": session.profile.to_dict(),
                    "issues": [i.to_dict() for i in validate_profile(session.profile)]}

    # -- dfd ----------------------------------------------------------------

    @app.get("/sessions/{session_id}/dfd")
    def get_dfd(session_id: str) -> dict:
        session = store.load(session_id)
        dfd_doc = session.dfd.to_dict() if session.dfd else None
        issues = dfd_ops.validate_dfd(session.dfd) if session.dfd else []
        return {"dfd": dfd_doc, "issues": [i.to_dict() for i in issues]}

    @app.put("/sessions/{session_id}/dfd")
    def put_dfd(session_id: str, body: DfdBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            session.dfd = dfd_ops.Dfd.from_dict(body.model_dump())
            session.touch()
            store.save(session)
            return {"dfd": session.dfd.to_dict(),
                    "issues": [i.to_dict() for i in dfd_ops.validate_dfd(session.dfd)]}

    @app.post("/sessions/{session_id}/dfd/import-csv")
    def import_csv(session_id: str, body: ImportCsvBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            session.dfd = dfd_ops.parse_edges_csv(body.csv)
            session.touch()
            store.save(session)
            return {"dfd": session.dfd.to_dict(),
                    "issues": [i.to_dict() for i in dfd_ops.validate_dfd(session.dfd)]}

    @app.get("/sessions/{session_id}/dfd/export-csv")
    def export_csv(session_id: str) -> Response:
        session = store.load(session_id)
        dfd = session.dfd or dfd_ops.Dfd()
        return PlainTextResponse(dfd_ops.encode_edges_csv(dfd), media_type="text/csv")

    @app.get("/sessions/{session_id}/dfd/dot")
    def get_dot(session_id: str, rankdir: str = "LR",
                highlight_edge: str | None = None) -> Response:
        session = store.load(session_id)
        if session.dfd is None:
            raise NotFoundError("session has no DFD")
        dot = dfd_ops.render_dot(session.dfd, rankdir=rankdir,
                                 highlight_edge=highlight_edge)
        return PlainTextResponse(dot, media_type="text/vnd.graphviz")

    @app.post("/sessions/{session_id}/dfd/generate")
    def generate_dfd(session_id: str, body: GenerateDfdBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            if body.source == "image":
                if not body.image_base64 or not body.media_type:
                    raise PillarError("image source requires image_base64 and media_type")
                payload = base64.b64decode(body.image_base64)
                if len(payload) > config.max_upload_bytes:
                    raise PayloadTooLargeError(
                        f"image exceeds the {config.max_upload_bytes} byte upload limit")
                dfd, issues = dfd_ops.generate_dfd_from_image(
                    payload, body.media_type, gateway,
                    selector=_selector(body.provider), seed=body.seed,
                    max_bytes=config.max_upload_bytes)
            else:
                dfd, issues = dfd_ops.generate_dfd_from_description(
                    session.profile, gateway,
                    selector=_selector(body.provider), seed=body.seed)
            session.dfd = dfd
            session.touch()
            store.save(session)
            return {"dfd": dfd.to_dict(), "issues": [i.to_dict() for i in issues]}

    # -- elicitation --------------------------------------------------------

    @app.post("/sessions/{session_id}/elicit/zero-shot")
    def elicit_zero_shot(session_id: str, body: ZeroShotBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            threats = elicit_ops.zero_shot_threat_model(
                session.profile, session.dfd, gateway,
                selector=_selector(body.provider), seed=body.seed)
            session.elicitation_results[Methodology.ZERO_SHOT] = threats
            session.touch()
            store.save(session)
            return {"threats": [t.to_dict() for t in threats]}

    @app.post("/sessions/{session_id}/elicit/go")
    def elicit_go(session_id: str, body: GoBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            result = elicit_ops.run_linddun_go(
                session, kb, gateway,
                n_cards=body.n_cards,
                multi_agent=body.multi_agent,
                personas=personas,
                rounds=body.rounds or config.default_rounds,
                seed=body.seed,
                selector=_selector(body.provider))
            session.touch()
            store.save(session)
            return {
                "threats": [t.to_dict() for t in result.threats],
                "outcomes": [
                    {"card": card.to_dict(),
                     "verdict": outcome.to_dict() if isinstance(outcome, elicit_ops.GoVerdict)
                                else None,
                     "transcript": outcome.to_dict()
                                   if isinstance(outcome, elicit_ops.DebateTranscript)
                                   else None}
                    for card, outcome in result.outcomes
                ],
                "failures": result.failures,
            }

    @app.post("/sessions/{session_id}/elicit/pro")
    def elicit_pro(session_id: str, body: ProBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            if session.dfd is None:
                raise PillarError("LINDDUN PRO requires a DFD")
            edge = session.dfd.edge_by_id(body.edge_id)
            if edge is None:
                raise NotFoundError(f"edge {body.edge_id!r} is not in the session DFD")
            result = elicit_ops.pro_analyze_edge(
                edge, body.flow_description, parse_categories(body.categories),
                kb, session.profile, gateway,
                selector=_selector(body.provider), seed=body.seed)
            threats = elicit_ops.pro_findings_to_threats(result.findings)
            session.results_for(Methodology.LINDDUN_PRO).extend(threats)
            session.touch()
            store.save(session)
            return {"threats": [t.to_dict() for t in threats],
                    "failures": result.failures}

    # -- assessment ----------------------------------------------------------

    @app.post("/sessions/{session_id}/assessment/import")
    def assessment_import(session_id: str, body: AssessImportBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            threats = assessment_ops.import_threats(session, parse_methodology(body.methodology))
            session.touch()
            store.save(session)
            return {"assessment_source": session.assessment_source.value,
                    "threats": [t.to_dict() for t in threats]}

    @app.post("/sessions/{session_id}/assessment/{threat_id}/impact")
    def assessment_impact(session_id: str, threat_id: str, body: GenerateBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            threat = assessment_ops.working_threat(session, threat_id)
            assessment_ops.generate_impact(
                threat, session.profile, gateway,
                selector=_selector(body.provider), seed=body.seed)
            session.touch()
            store.save(session)
            return {"threat": threat.to_dict()}

    @app.post("/sessions/{session_id}/assessment/{threat_id}/controls")
    def assessment_controls(session_id: str, threat_id: str, body: GenerateBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            threat = assessment_ops.working_threat(session, threat_id)
            shortlist = assessment_ops.shortlist_patterns(
                threat, session.profile, kb, gateway,
                selector=_selector(body.provider), seed=body.seed)
            controls = []
            if shortlist:
                controls = assessment_ops.select_controls(
                    threat, shortlist, kb, gateway,
                    selector=_selector(body.provider), seed=body.seed)
            session.touch()
            store.save(session)
            return {"shortlist": shortlist, "threat": threat.to_dict(),
                    "controls": [c.to_dict() for c in controls]}

    @app.patch("/sessions/{session_id}/assessment/{threat_id}")
    def assessment_patch(session_id: str, threat_id: str, body: PatchThreatBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            if body.included is not None:
                assessment_ops.set_inclusion(session, threat_id, body.included)
            if body.impact is not None:
                assessment_ops.set_impact(session, threat_id, body.impact)
            session.touch()
            store.save(session)
            threat = session.find_threat(threat_id)
            return {"threat": threat.to_dict() if threat else None}

    # -- report --------------------------------------------------------------

    @app.put("/sessions/{session_id}/report/meta")
    def put_report_meta(session_id: str, body: ReportMetaBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            session.report_meta = ReportMeta.from_dict(body.model_dump())
            session.touch()
            store.save(session)
            return {"report_meta": session.report_meta.to_dict()}

    @app.post("/sessions/{session_id}/report")
    def build_report(session_id: str, body: BuildReportBody) -> dict:
        with locks.held(session_id):
            session = store.load(session_id)
            model = report_ops.build_report_model(session, now=body.now)
            markdown = report_ops.render_markdown(model)
            return {
                "markdown": markdown,
                "dfd_dot": model.dfd_dot,
                "generated_at": model.generated_at,
                "empty": model.empty_notice,
            }

    return app


def main() -> None:  # pragma: no cover - thin uvicorn launcher
    import uvicorn

    config = ServiceConfig.from_env()
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":  # pragma: no cover
    main()
