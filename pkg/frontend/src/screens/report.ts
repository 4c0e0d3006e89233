// Report: general information form, build, preview, and artifact downloads.

import type { AppContext } from '../app';
import type { ReportMeta } from '../types';

export function renderReportScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  const meta = session.report_meta;

  container.innerHTML = `
    <h2>Report</h2>
    <form id="report-meta-form" class="stack">
      <label>Application name <input id="meta-app-name" value="${escapeAttr(meta.app_name)}"></label>
      <label>Author <input id="meta-author" value="${escapeAttr(meta.author)}"></label>
      <label>Organization <input id="meta-organization" value="${escapeAttr(meta.organization)}"></label>
      <label>Date <input id="meta-date" value="${escapeAttr(meta.date)}"></label>
      <label>Scope notes <textarea id="meta-scope" rows="2">${escapeHtml(meta.scope_notes)}</textarea></label>
      <label><input id="meta-include-dfd" type="checkbox" ${meta.include_dfd ? 'checked' : ''}>
        Include the DFD graph</label>
      <div class="row">
        <button type="submit" id="meta-save">Save report info</button>
        <button type="button" id="report-build">Build report</button>
      </div>
    </form>
    <div id="report-preview-wrap" hidden>
      <div class="row">
        <button id="report-download-md">Download report.md</button>
        <button id="report-download-dot" hidden>Download dfd.dot</button>
      </div>
      <pre id="report-preview"></pre>
    </div>
  `;

  const sessionId = app.store.get().sessionId!;

  function collect(): ReportMeta {
    return {
      app_name: value('#meta-app-name'),
      author: value('#meta-author'),
      organization: value('#meta-organization'),
      date: value('#meta-date'),
      scope_notes: container.querySelector<HTMLTextAreaElement>('#meta-scope')!.value,
      include_dfd: container.querySelector<HTMLInputElement>('#meta-include-dfd')!.checked,
    };
  }

  function value(selector: string): string {
    return container.querySelector<HTMLInputElement>(selector)!.value;
  }

  container.querySelector('#report-meta-form')!.addEventListener('submit', async (event) => {
    event.preventDefault();
    await app.run('save report info', () => app.api.putReportMeta(sessionId, collect()));
  });

  container.querySelector('#report-build')!.addEventListener('click', async () => {
    await app.run('save report info', () => app.api.putReportMeta(sessionId, collect()));
    const result = await app.run('build report', (signal) =>
      app.api.buildReport(sessionId, undefined, { signal }));
    if (!result) return;
    const wrap = container.querySelector<HTMLDivElement>('#report-preview-wrap')!;
    wrap.hidden = false;
    container.querySelector<HTMLPreElement>('#report-preview')!.textContent =
      result.markdown;
    const mdButton = container.querySelector<HTMLButtonElement>('#report-download-md')!;
    mdButton.onclick = () => downloadText('report.md', result.markdown, 'text/markdown');
    const dotButton = container.querySelector<HTMLButtonElement>('#report-download-dot')!;
    if (result.dfd_dot) {
      dotButton.hidden = false;
      dotButton.onclick = () =>
        downloadText('dfd.dot', result.dfd_dot!, 'text/vnd.graphviz');
    }
  });
}

function escapeAttr(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/"/g, '&quot;').replace(/</g, '&lt;');
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function downloadText(filename: string, text: string, type: string): void {
  const blob = new Blob([text], { type });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement('a');
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}
