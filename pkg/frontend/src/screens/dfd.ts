// DFD editor: editable edge table, rendered graph from the DOT endpoint,
// CSV import/export, and generate-from-description/image.

import type { AppContext } from '../app';
import { renderDotInto } from '../dot';
import type { Dfd, DfdEdge, NodeKind } from '../types';
import { NODE_KINDS } from '../types';

export function renderDfdScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  const edges: DfdEdge[] = structuredClone(session.dfd?.edges ?? []);

  container.innerHTML = `
    <h2>Data Flow Diagram</h2>
    <div class="row">
      <button id="dfd-add-edge">Add edge</button>
      <button id="dfd-save">Save DFD</button>
      <button id="dfd-export">Download CSV</button>
      <label class="file-button">Upload CSV
        <input id="dfd-import-file" type="file" accept=".csv,text/csv" hidden>
      </label>
      <button id="dfd-generate-description">Generate from description</button>
      <label class="file-button">Generate from image
        <input id="dfd-image-file" type="file" accept="image/png,image/jpeg" hidden>
      </label>
    </div>
    <textarea id="dfd-csv-paste" rows="3"
      placeholder="...or paste CSV here and press Import"></textarea>
    <button id="dfd-import-paste">Import pasted CSV</button>
    <table id="edge-table">
      <thead><tr>
        <th>From</th><th>Kind</th><th>To</th><th>Kind</th>
        <th>Data</th><th>Trust boundary</th><th></th>
      </tr></thead>
      <tbody></tbody>
    </table>
    <ul id="dfd-issues" class="issues"></ul>
    <div id="dfd-graph" class="graph"></div>
  `;

  const tbody = container.querySelector<HTMLTableSectionElement>('#edge-table tbody')!;
  const graph = container.querySelector<HTMLDivElement>('#dfd-graph')!;
  const issuesList = container.querySelector<HTMLUListElement>('#dfd-issues')!;

  function kindOptions(selected: NodeKind): string {
    return NODE_KINDS
      .map((kind) =>
        `<option value="${kind}" ${kind === selected ? 'selected' : ''}>${kind}</option>`)
      .join('');
  }

  function addRow(edge: DfdEdge): void {
    const tr = document.createElement('tr');
    tr.dataset.edgeId = edge.id;
    tr.innerHTML = `
      <td><input class="edge-from" value="${escapeAttr(edge.from_name)}"></td>
      <td><select class="edge-from-kind">${kindOptions(edge.from_kind)}</select></td>
      <td><input class="edge-to" value="${escapeAttr(edge.to_name)}"></td>
      <td><select class="edge-to-kind">${kindOptions(edge.to_kind)}</select></td>
      <td><input class="edge-data" value="${escapeAttr(edge.data_label)}"></td>
      <td><input class="edge-boundary" type="checkbox"
          ${edge.crosses_trust_boundary ? 'checked' : ''}></td>
      <td><button type="button" class="edge-remove">x</button></td>
    `;
    tr.querySelector('.edge-remove')!.addEventListener('click', () => {
      tr.remove();
      app.store.set({ unsaved: true });
    });
    tr.addEventListener('input', () => app.store.set({ unsaved: true }));
    tbody.appendChild(tr);
  }

  edges.forEach(addRow);

  function collect(): Dfd {
    const collected: DfdEdge[] = [];
    tbody.querySelectorAll('tr').forEach((tr, index) => {
      collected.push({
        id: tr.dataset.edgeId || `e${index + 1}`,
        from_name: tr.querySelector<HTMLInputElement>('.edge-from')!.value,
        from_kind: tr.querySelector<HTMLSelectElement>('.edge-from-kind')!.value as NodeKind,
        to_name: tr.querySelector<HTMLInputElement>('.edge-to')!.value,
        to_kind: tr.querySelector<HTMLSelectElement>('.edge-to-kind')!.value as NodeKind,
        data_label: tr.querySelector<HTMLInputElement>('.edge-data')!.value,
        crosses_trust_boundary:
          tr.querySelector<HTMLInputElement>('.edge-boundary')!.checked,
      });
    });
    // whole-list replacement; re-number ids sequentially for new rows
    return { edges: collected.map((edge, i) => ({ ...edge, id: `e${i + 1}` })) };
  }

  function showIssues(issues: { severity: string; message: string }[]): void {
    issuesList.innerHTML = issues
      .map((issue) => `<li class="${issue.severity}">${issue.message}</li>`)
      .join('');
  }

  async function refreshGraph(): Promise<void> {
    const state = app.store.get();
    if (!state.session?.dfd || state.session.dfd.edges.length === 0) {
      graph.innerHTML = '<p class="hint">No DFD yet.</p>';
      return;
    }
    try {
      const dot = await app.api.getDot(state.sessionId!);
      await renderDotInto(graph, dot);
    } catch {
      graph.innerHTML = '<p class="hint">Graph unavailable.</p>';
    }
  }

  const sessionId = app.store.get().sessionId!;

  container.querySelector('#dfd-add-edge')!.addEventListener('click', () => {
    addRow({
      id: `e${tbody.children.length + 1}`,
      from_name: '', from_kind: 'entity', to_name: '', to_kind: 'process',
      data_label: '', crosses_trust_boundary: false,
    });
    app.store.set({ unsaved: true });
  });

  container.querySelector('#dfd-save')!.addEventListener('click', async () => {
    const result = await app.run('save DFD', () => app.api.putDfd(sessionId, collect()));
    if (result) {
      showIssues(result.issues);
      app.store.set({ unsaved: false });
      await refreshGraph();
    }
  });

  container.querySelector('#dfd-export')!.addEventListener('click', async () => {
    const csv = await app.api.exportCsv(sessionId);
    downloadText('dfd.csv', csv, 'text/csv');
  });

  async function importCsvText(text: string): Promise<void> {
    const result = await app.run('import CSV', () => app.api.importCsv(sessionId, text));
    if (result) {
      showIssues(result.issues);
      tbody.innerHTML = '';
      (result.dfd?.edges ?? []).forEach(addRow);
      await refreshGraph();
    }
  }

  container.querySelector('#dfd-import-paste')!.addEventListener('click', () => {
    const text = container.querySelector<HTMLTextAreaElement>('#dfd-csv-paste')!.value;
    if (text.trim()) void importCsvText(text);
  });

  container.querySelector<HTMLInputElement>('#dfd-import-file')!
    .addEventListener('change', async (event) => {
      const file = (event.target as HTMLInputElement).files?.[0];
      if (file) void importCsvText(await file.text());
    });

  container.querySelector('#dfd-generate-description')!.addEventListener('click', async () => {
    const result = await app.run('generate DFD', (signal) =>
      app.api.generateDfd(sessionId, { source: 'description' }, { signal }));
    if (result) {
      showIssues(result.issues);
      tbody.innerHTML = '';
      (result.dfd?.edges ?? []).forEach(addRow);
      await refreshGraph();
    }
  });

  container.querySelector<HTMLInputElement>('#dfd-image-file')!
    .addEventListener('change', async (event) => {
      const file = (event.target as HTMLInputElement).files?.[0];
      if (!file) return;
      const bytes = new Uint8Array(await file.arrayBuffer());
      let binary = '';
      bytes.forEach((b) => { binary += String.fromCharCode(b); });
      const mediaType = file.type === 'image/jpeg' ? 'jpeg' : 'png';
      const result = await app.run('generate DFD from image', (signal) =>
        app.api.generateDfd(sessionId, {
          source: 'image', image_base64: btoa(binary), media_type: mediaType,
        }, { signal }));
      if (result) {
        showIssues(result.issues);
        tbody.innerHTML = '';
        (result.dfd?.edges ?? []).forEach(addRow);
        await refreshGraph();
      }
    });

  void refreshGraph();
}

function escapeAttr(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/"/g, '&quot;').replace(/</g, '&lt;');
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
