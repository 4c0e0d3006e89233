"""Final report assembly: filter included threats, render Markdown, write
artifacts (and delegate PDF/PNG conversion to external tools when present).

Rendering is a pure function of the report model; all timestamps are frozen
into the model, so re-rendering the same model is byte-identical.
"""

from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .dfd import Dfd, render_dot
from .errors import ReportError
from .model import Methodology, ReportMeta, Session, Threat, now_iso


@dataclass
class ReportModel:
    """Everything the renderer needs, frozen at build time."""

    meta: ReportMeta
    methodology: Methodology
    generated_at: str
    threats: list[Threat]
    dfd_dot: str | None = None
    dfd: Dfd | None = None
    empty_notice: bool = False


def build_report_model(session: Session, *, now: str | None = None) -> ReportModel:
    """Collect included threats (working-set order) and optional DFD.

    Zero included threats is not an error; it sets a notice the renderer
    surfaces. The DOT text is attached iff the report meta asks for the DFD
    and the session has one.
    """
    if session.assessment_source is None:
        raise ReportError("no assessment source selected; import threats first")
    included = [t for t in session.working_set() if t.included]
    include_dfd = session.report_meta.include_dfd and session.dfd is not None
    return ReportModel(
        meta=session.report_meta,
        methodology=session.assessment_source,
        generated_at=now if now is not None else now_iso(),
        threats=included,
        dfd_dot=render_dot(session.dfd) if include_dfd else None,
        dfd=session.dfd if include_dfd else None,
        empty_notice=not included,
    )


_METHODOLOGY_NAMES = {
    Methodology.ZERO_SHOT: "Zero-shot threat model",
    Methodology.LINDDUN_GO: "LINDDUN GO simulation",
    Methodology.LINDDUN_PRO: "LINDDUN PRO analysis",
}


def render_markdown(model: ReportModel) -> str:
    """Render the report; deterministic for a given model.

    Section order: title and general information, methodology, DFD (image
    reference plus edge table, when present), then one section per included
    threat with Category, Description, Location/Tree node, Impact, and
    Control Measures subsections. Each included threat's title appears
    exactly once, as its section heading.
    """
    lines: list[str] = ["# Privacy Threat Model Report", ""]
    meta = model.meta
    if meta.app_name:
        lines += [f"**Application:** {meta.app_name}", ""]
    info = [("Author", meta.author), ("Organization", meta.organization),
            ("Date", meta.date), ("Scope", meta.scope_notes)]
    for label, value in info:
        if value:
            lines.append(f"- {label}: {value}")
    lines += [f"- Generated: {model.generated_at}", ""]

    lines += ["## Methodology", "", _METHODOLOGY_NAMES[model.methodology], ""]

    if model.dfd_dot is not None:
        lines += ["## Data Flow Diagram", "", "![Data flow diagram](dfd.png)", ""]
        if model.dfd is not None and model.dfd.edges:
            lines += ["| From | Kind | To | Kind | Data | Trust boundary |",
                      "| --- | --- | --- | --- | --- | --- |"]
            for edge in model.dfd.edges:
                boundary = "yes" if edge.crosses_trust_boundary else "no"
                lines.append(
                    f"| {_cell(edge.from_name)} | {edge.from_kind.value} "
                    f"| {_cell(edge.to_name)} | {edge.to_kind.value} "
                    f"| {_cell(edge.data_label)} | {boundary} |")
            lines.append("")

    lines += ["## Threats", ""]
    if model.empty_notice:
        lines += ["_No threats were marked for inclusion in this report._", ""]
    for index, threat in enumerate(model.threats, start=1):
        lines += [f"### {index}. {threat.title}", ""]
        lines += ["#### Category", "", threat.category.display_name, ""]
        lines += ["#### Description", "", threat.description, ""]
        if threat.location is not None or threat.tree_node:
            lines += ["#### Location", ""]
            if threat.location is not None:
                lines.append(f"- Location: {threat.location.value}"
                             + (f" (edge {threat.edge_ref})" if threat.edge_ref else ""))
            if threat.tree_node:
                lines.append(f"- Threat tree node: {threat.tree_node}")
            lines.append("")
        lines += ["#### Impact", "", threat.impact or "_Not assessed._", ""]
        lines += ["#### Control Measures", ""]
        if threat.controls:
            for control in threat.controls:
                lines += [f"##### {control.pattern_name}", ""]
                if control.relevance:
                    lines.append(f"- Relevance: {control.relevance}")
                if control.implementation_guidance:
                    lines.append(f"- Implementation: {control.implementation_guidance}")
                lines.append("")
        else:
            lines += ["_No control measures selected._", ""]
    return "\n".join(lines).rstrip() + "\n"


def _cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


@dataclass
class ReportArtifacts:
    markdown_path: Path
    dot_path: Path | None = None
    png_path: Path | None = None
    pdf_path: Path | None = None
    notices: list[str] = field(default_factory=list)


def write_report(model: ReportModel, out_dir: str | Path) -> ReportArtifacts:
    """Write report.md plus dfd.dot, and invoke external converters when
    available (graphviz ``dot`` for PNG, ``pandoc`` for PDF); otherwise the
    Markdown stands alone with a notice."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = ReportArtifacts(markdown_path=out_dir / "report.md")
    artifacts.markdown_path.write_text(render_markdown(model), encoding="utf-8")

    if model.dfd_dot is not None:
        artifacts.dot_path = out_dir / "dfd.dot"
        artifacts.dot_path.write_text(model.dfd_dot, encoding="utf-8")
        dot = shutil.which("dot")
        if dot:
            png = out_dir / "dfd.png"
            result = subprocess.run([dot, "-Tpng", str(artifacts.dot_path), "-o", str(png)],
                                    capture_output=True, text=True)
            if result.returncode == 0:
                artifacts.png_path = png
            else:
                artifacts.notices.append(f"graphviz failed: {result.stderr.strip()}")
        else:
            artifacts.notices.append(
                "graphviz 'dot' not found; DFD left as dfd.dot without rasterization")

    pandoc = shutil.which("pandoc")
    if pandoc:
        pdf = out_dir / "report.pdf"
        result = subprocess.run([pandoc, str(artifacts.markdown_path), "-o", str(pdf)],
                                capture_output=True, text=True)
        if result.returncode == 0:
            artifacts.pdf_path = pdf
        else:
            artifacts.notices.append(f"pandoc failed: {result.stderr.strip()}")
    else:
        artifacts.notices.append(
            "no Markdown-to-PDF converter found; report delivered as Markdown")
    return artifacts
