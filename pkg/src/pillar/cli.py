"""Command-line interface mirroring the HTTP API for headless and CI use.

`--provider mock` gives a fully offline, deterministic run; all randomized
operations accept `--seed`.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import assessment as assessment_ops
from . import dfd as dfd_ops
from . import elicitation as elicit_ops
from . import report as report_ops
from .errors import NotFoundError, PillarError
from .gateway import (
    LlmGateway,
    ProviderSelector,
    default_provider_configs,
    make_provider,
)
from .kb import bundled_asset_dir, load_knowledge_base
from .model import (
    ApplicationProfile,
    AppType,
    DataTypeRow,
    Methodology,
    ReportMeta,
    Session,
    validate_profile,
)
from .service import parse_categories, parse_methodology
from .store import SessionStore


class Workbench:
    """Lazily constructed shared state for all subcommands."""

    def __init__(self, sessions_dir: str, kb_dir: str | None, provider: str | None,
                 personas_path: str | None = None):
        self.store = SessionStore(sessions_dir)
        self.kb_dir = Path(kb_dir) if kb_dir else bundled_asset_dir()
        self.provider = provider
        self.personas_path = personas_path
        self._kb = None
        self._gateway = None
        self._personas = None

    @property
    def personas(self):
        if self._personas is None:
            self._personas = elicit_ops.load_personas(self.personas_path)
        return self._personas

    @property
    def kb(self):
        if self._kb is None:
            self._kb = load_knowledge_base(self.kb_dir)
        return self._kb

    @property
    def gateway(self) -> LlmGateway:
        if self._gateway is None:
            configs = default_provider_configs()
            self._gateway = LlmGateway([make_provider(c) for c in configs])
        return self._gateway

    @property
    def selector(self) -> ProviderSelector:
        if self.provider:
            return ProviderSelector.fixed(self.provider)
        return ProviderSelector.random_enabled()

    def load(self, session_id: str) -> Session:
        return self.store.load(session_id)

    def save(self, session: Session) -> None:
        session.touch()
        self.store.save(session)

    def resolve_threat_id(self, session: Session, ref: str) -> str:
        """Accept a threat id or a 1-based index into the working set."""
        working = session.working_set()
        if ref.isdigit():
            index = int(ref)
            if not 1 <= index <= len(working):
                raise NotFoundError(
                    f"threat index {index} out of range 1..{len(working)}")
            return working[index - 1].id
        return ref


pass_workbench = click.make_pass_decorator(Workbench)


@click.group()
@click.option("--sessions-dir", envvar="PILLAR_SESSIONS_DIR", default="./sessions",
              show_default=True, help="Directory of session documents.")
@click.option("--kb-dir", envvar="PILLAR_KB_DIR", default=None,
              help="Knowledge-base directory (defaults to the bundled assets).")
@click.option("--provider", default=None,
              help="Pin all LLM calls to one provider id (e.g. mock).")
@click.option("--personas", "personas_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="personas.json with the multi-agent roster (bundled default).")
@click.pass_context
def main(ctx: click.Context, sessions_dir: str, kb_dir: str | None,
         provider: str | None, personas_path: str | None):
    """PILLAR: LLM-assisted LINDDUN privacy threat modeling."""
    ctx.obj = Workbench(sessions_dir, kb_dir, provider, personas_path)


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2, ensure_ascii=False))


def _fail(exc: PillarError) -> None:
    raise click.ClickException(f"{exc.code}: {exc}")


# -- session ----------------------------------------------------------------

@main.group()
def session():
    """Create and inspect sessions."""


@session.command("new")
@click.option("--app-name", default="", help="Application name for the report header.")
@pass_workbench
def session_new(wb: Workbench, app_name: str):
    new = Session()
    new.report_meta.app_name = app_name
    wb.store.save(new)
    click.echo(new.id)


@session.command("show")
@click.argument("session_id")
@pass_workbench
def session_show(wb: Workbench, session_id: str):
    try:
        _echo_json(wb.load(session_id).to_dict())
    except PillarError as exc:
        _fail(exc)


@session.command("list")
@pass_workbench
def session_list(wb: Workbench):
    for summary in wb.store.list():
        click.echo(f"{summary.id}  {summary.updated_at}  {summary.app_name}")


# -- profile ------------------------------------------------------------------

@main.group()
def profile():
    """Edit the application profile."""


@profile.command("set")
@click.argument("session_id")
@click.option("--app-type", type=click.Choice([t.value for t in AppType]), default=None)
@click.option("--app-type-label", default=None)
@click.option("--description", default=None)
@click.option("--data-policy", default=None)
@click.option("--auth", "auth_methods", multiple=True,
              help="Authentication method label (repeatable).")
@click.option("--data-types-json", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with a list of data-type rows.")
@pass_workbench
def profile_set(wb: Workbench, session_id: str, app_type, app_type_label,
                description, data_policy, auth_methods, data_types_json):
    try:
        current = wb.load(session_id)
        prof = current.profile
        updated = ApplicationProfile(
            app_type=AppType(app_type) if app_type else prof.app_type,
            app_type_label=app_type_label if app_type_label is not None
                           else prof.app_type_label,
            description=description if description is not None else prof.description,
            data_policy=data_policy if data_policy is not None else prof.data_policy,
            authentication_methods=list(auth_methods) or prof.authentication_methods,
            data_types=prof.data_types,
        )
        if data_types_json:
            rows = json.loads(Path(data_types_json).read_text(encoding="utf-8"))
            updated.data_types = [DataTypeRow.from_dict(r) for r in rows]
        current.profile = updated
        wb.save(current)
        issues = validate_profile(updated)
        for issue in issues:
            click.echo(f"{issue.severity.value}: {issue.message}", err=True)
        click.echo("profile updated")
    except PillarError as exc:
        _fail(exc)


# -- dfd ------------------------------------------------------------------------

@main.group()
def dfd():
    """Import, export, render, and generate the data flow diagram."""


@dfd.command("import")
@click.argument("session_id")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@pass_workbench
def dfd_import(wb: Workbench, session_id: str, csv_file: str):
    try:
        current = wb.load(session_id)
        current.dfd = dfd_ops.parse_edges_csv(Path(csv_file).read_text(encoding="utf-8"))
        wb.save(current)
        for issue in dfd_ops.validate_dfd(current.dfd):
            click.echo(f"{issue.severity.value}: {issue.message}", err=True)
        click.echo(f"imported {len(current.dfd.edges)} edges")
    except PillarError as exc:
        _fail(exc)


@dfd.command("export")
@click.argument("session_id")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@pass_workbench
def dfd_export(wb: Workbench, session_id: str, output: str | None):
    try:
        current = wb.load(session_id)
        text = dfd_ops.encode_edges_csv(current.dfd or dfd_ops.Dfd())
        if output:
            Path(output).write_text(text, encoding="utf-8")
            click.echo(f"wrote {output}")
        else:
            click.echo(text, nl=False)
    except PillarError as exc:
        _fail(exc)


@dfd.command("render")
@click.argument("session_id")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--rankdir", default="LR", show_default=True)
@click.option("--highlight", default=None, help="Edge id to highlight.")
@pass_workbench
def dfd_render(wb: Workbench, session_id: str, output, rankdir, highlight):
    try:
        current = wb.load(session_id)
        if current.dfd is None:
            raise NotFoundError("session has no DFD")
        dot = dfd_ops.render_dot(current.dfd, rankdir=rankdir, highlight_edge=highlight)
        if output:
            Path(output).write_text(dot, encoding="utf-8")
            click.echo(f"wrote {output}")
        else:
            click.echo(dot, nl=False)
    except PillarError as exc:
        _fail(exc)


@dfd.command("generate")
@click.argument("session_id")
@click.option("--from-image", "image_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Generate from a DFD image instead of the description.")
@click.option("--media-type", default="png", show_default=True)
@click.option("--seed", type=int, default=None)
@pass_workbench
def dfd_generate(wb: Workbench, session_id: str, image_file, media_type, seed):
    try:
        current = wb.load(session_id)
        if image_file:
            generated, issues = dfd_ops.generate_dfd_from_image(
                Path(image_file).read_bytes(), media_type, wb.gateway,
                selector=wb.selector, seed=seed)
        else:
            generated, issues = dfd_ops.generate_dfd_from_description(
                current.profile, wb.gateway, selector=wb.selector, seed=seed)
        current.dfd = generated
        wb.save(current)
        for issue in issues:
            click.echo(f"{issue.severity.value}: {issue.message}", err=True)
        click.echo(f"generated {len(generated.edges)} edges")
    except PillarError as exc:
        _fail(exc)


# -- elicit ----------------------------------------------------------------------

@main.group()
def elicit():
    """Run threat elicitation."""


@elicit.command("zeroshot")
@click.argument("session_id")
@click.option("--seed", type=int, default=None)
@pass_workbench
def elicit_zeroshot(wb: Workbench, session_id: str, seed):
    try:
        current = wb.load(session_id)
        threats = elicit_ops.zero_shot_threat_model(
            current.profile, current.dfd, wb.gateway, selector=wb.selector, seed=seed)
        current.elicitation_results[Methodology.ZERO_SHOT] = threats
        wb.save(current)
        click.echo(f"elicited {len(threats)} threats")
        for threat in threats:
            click.echo(f"  [{threat.category.value}] {threat.title}")
    except PillarError as exc:
        _fail(exc)


@elicit.command("go")
@click.argument("session_id")
@click.option("--cards", "n_cards", type=int, required=True,
              help="Number of cards to draw from the deck.")
@click.option("--multi-agent/--single-agent", default=False)
@click.option("--rounds", type=int, default=elicit_ops.DEFAULT_ROUNDS, show_default=True)
@click.option("--seed", type=int, default=None)
@pass_workbench
def elicit_go(wb: Workbench, session_id: str, n_cards, multi_agent, rounds, seed):
    try:
        current = wb.load(session_id)
        result = elicit_ops.run_linddun_go(
            current, wb.kb, wb.gateway, n_cards=n_cards, multi_agent=multi_agent,
            personas=wb.personas, rounds=rounds, seed=seed, selector=wb.selector)
        wb.save(current)
        click.echo(f"{len(result.threats)} of {n_cards} cards produced threats"
                   + (f", {len(result.failures)} failed" if result.failures else ""))
        for threat in result.threats:
            click.echo(f"  [{threat.card_ref}] {threat.title}")
    except PillarError as exc:
        _fail(exc)


@elicit.command("pro")
@click.argument("session_id")
@click.option("--edge", "edge_id", required=True, help="Edge id from the DFD.")
@click.option("--flow-description", required=True)
@click.option("--category", "categories", multiple=True, required=True,
              help="LINDDUN category (repeatable).")
@click.option("--seed", type=int, default=None)
@pass_workbench
def elicit_pro(wb: Workbench, session_id: str, edge_id, flow_description,
               categories, seed):
    try:
        current = wb.load(session_id)
        if current.dfd is None:
            raise PillarError("LINDDUN PRO requires a DFD")
        edge = current.dfd.edge_by_id(edge_id)
        if edge is None:
            raise NotFoundError(f"edge {edge_id!r} is not in the session DFD")
        result = elicit_ops.pro_analyze_edge(
            edge, flow_description, parse_categories(list(categories)),
            wb.kb, current.profile, wb.gateway, selector=wb.selector, seed=seed)
        threats = elicit_ops.pro_findings_to_threats(result.findings)
        current.results_for(Methodology.LINDDUN_PRO).extend(threats)
        wb.save(current)
        click.echo(f"{len(threats)} findings"
                   + (f", {len(result.failures)} pairs failed" if result.failures else ""))
        for threat in threats:
            click.echo(f"  [{threat.location.value} @ {threat.tree_node}] {threat.title}")
    except PillarError as exc:
        _fail(exc)


# -- assess -----------------------------------------------------------------------

@main.group()
def assess():
    """Impact assessment and control selection."""


@assess.command("import")
@click.argument("session_id")
@click.option("--methodology", required=True,
              help="zeroshot, go, or pro (long names accepted).")
@pass_workbench
def assess_import(wb: Workbench, session_id: str, methodology: str):
    try:
        current = wb.load(session_id)
        threats = assessment_ops.import_threats(current, parse_methodology(methodology))
        wb.save(current)
        click.echo(f"imported {len(threats)} threats from "
                   f"{current.assessment_source.value}")
        for index, threat in enumerate(threats, start=1):
            mark = "x" if threat.included else " "
            click.echo(f"  {index}. [{mark}] {threat.title} ({threat.id})")
    except PillarError as exc:
        _fail(exc)


@assess.command("include")
@click.argument("session_id")
@click.argument("threat_ref")
@click.option("--off", is_flag=True, default=False, help="Exclude instead of include.")
@pass_workbench
def assess_include(wb: Workbench, session_id: str, threat_ref: str, off: bool):
    try:
        current = wb.load(session_id)
        threat_id = wb.resolve_threat_id(current, threat_ref)
        threat = assessment_ops.set_inclusion(current, threat_id, not off)
        wb.save(current)
        click.echo(f"{'included' if threat.included else 'excluded'}: {threat.title}")
    except PillarError as exc:
        _fail(exc)


@assess.command("impact")
@click.argument("session_id")
@click.argument("threat_ref")
@click.option("--text", default=None,
              help="Set the impact text manually instead of generating it.")
@click.option("--seed", type=int, default=None)
@pass_workbench
def assess_impact(wb: Workbench, session_id: str, threat_ref: str, text, seed):
    try:
        current = wb.load(session_id)
        threat_id = wb.resolve_threat_id(current, threat_ref)
        if text is not None:
            threat = assessment_ops.set_impact(current, threat_id, text)
        else:
            threat = assessment_ops.working_threat(current, threat_id)
            assessment_ops.generate_impact(threat, current.profile, wb.gateway,
                                           selector=wb.selector, seed=seed)
        wb.save(current)
        click.echo(threat.impact or "")
    except PillarError as exc:
        _fail(exc)


@assess.command("controls")
@click.argument("session_id")
@click.argument("threat_ref")
@click.option("--seed", type=int, default=None)
@pass_workbench
def assess_controls(wb: Workbench, session_id: str, threat_ref: str, seed):
    try:
        current = wb.load(session_id)
        threat_id = wb.resolve_threat_id(current, threat_ref)
        threat = assessment_ops.working_threat(current, threat_id)
        shortlist = assessment_ops.shortlist_patterns(
            threat, current.profile, wb.kb, wb.gateway, selector=wb.selector, seed=seed)
        if not shortlist:
            click.echo("no relevant patterns shortlisted")
            wb.save(current)
            return
        controls = assessment_ops.select_controls(
            threat, shortlist, wb.kb, wb.gateway, selector=wb.selector, seed=seed)
        wb.save(current)
        click.echo(f"shortlist: {', '.join(shortlist)}")
        for control in controls:
            click.echo(f"  - {control.pattern_name}: {control.relevance}")
    except PillarError as exc:
        _fail(exc)


# -- report -------------------------------------------------------------------------

@main.group()
def report():
    """Report metadata and final build."""


@report.command("meta")
@click.argument("session_id")
@click.option("--app-name", default=None)
@click.option("--author", default=None)
@click.option("--organization", default=None)
@click.option("--date", default=None)
@click.option("--scope-notes", default=None)
@click.option("--include-dfd/--no-include-dfd", default=None)
@pass_workbench
def report_meta(wb: Workbench, session_id: str, app_name, author, organization,
                date, scope_notes, include_dfd):
    try:
        current = wb.load(session_id)
        meta = current.report_meta
        current.report_meta = ReportMeta(
            app_name=app_name if app_name is not None else meta.app_name,
            author=author if author is not None else meta.author,
            organization=organization if organization is not None else meta.organization,
            date=date if date is not None else meta.date,
            scope_notes=scope_notes if scope_notes is not None else meta.scope_notes,
            include_dfd=include_dfd if include_dfd is not None else meta.include_dfd,
        )
        wb.save(current)
        click.echo("report meta updated")
    except PillarError as exc:
        _fail(exc)


@report.command("build")
@click.argument("session_id")
@click.option("-o", "--out-dir", type=click.Path(file_okay=False), default="./report",
              show_default=True)
@click.option("--now", default=None,
              help="Freeze the generated-at timestamp (for reproducible builds).")
@pass_workbench
def report_build(wb: Workbench, session_id: str, out_dir: str, now: str | None):
    try:
        current = wb.load(session_id)
        model = report_ops.build_report_model(current, now=now)
        artifacts = report_ops.write_report(model, out_dir)
        click.echo(f"wrote {artifacts.markdown_path}")
        for path in (artifacts.dot_path, artifacts.png_path, artifacts.pdf_path):
            if path:
                click.echo(f"wrote {path}")
        for notice in artifacts.notices:
            click.echo(f"notice: {notice}", err=True)
    except PillarError as exc:
        _fail(exc)


# -- serve ----------------------------------------------------------------------------

@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8977, show_default=True)
@pass_workbench
def serve(wb: Workbench, host: str, port: int):
    """Run the HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.from_env()
    config.host, config.port = host, port
    config.sessions_dir = wb.store.root
    config.kb_dir = wb.kb_dir
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
