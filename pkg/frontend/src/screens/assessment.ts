// Impact Assessment: import one methodology's threats, toggle inclusion,
// edit/regenerate impact, and select control measures.

import type { AppContext } from '../app';
import type { Threat } from '../types';
import { CATEGORY_LABELS } from '../types';

const SOURCES: { value: string; label: string }[] = [
  { value: 'zero_shot', label: 'Threat Model (zero-shot)' },
  { value: 'linddun_go', label: 'LINDDUN Go' },
  { value: 'linddun_pro', label: 'LINDDUN Pro' },
];

export function renderAssessmentScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  const source = session.assessment_source;
  const working: Threat[] = source ? session.elicitation_results[source] : [];

  container.innerHTML = `
    <h2>Impact Assessment</h2>
    <div class="row">
      <label>Source
        <select id="assess-source">
          ${SOURCES.map((option) => `
            <option value="${option.value}"
              ${option.value === source ? 'selected' : ''}
              ${session.elicitation_results[option.value as keyof typeof session.elicitation_results].length === 0 ? 'disabled' : ''}>
              ${option.label}
              (${session.elicitation_results[option.value as keyof typeof session.elicitation_results].length})
            </option>`).join('')}
        </select>
      </label>
      <button id="assess-import">Import threats</button>
    </div>
    <div id="assess-list">
      ${working.length === 0
        ? '<p class="hint">Import threats from an elicitation to begin.</p>' : ''}
    </div>
  `;

  const list = container.querySelector<HTMLDivElement>('#assess-list')!;
  working.forEach((threat) => list.appendChild(threatCard(threat, app)));

  container.querySelector('#assess-import')!.addEventListener('click', async () => {
    const sessionId = app.store.get().sessionId!;
    const methodology = container.querySelector<HTMLSelectElement>('#assess-source')!.value;
    const result = await app.run('import threats', () =>
      app.api.importThreats(sessionId, methodology));
    if (result) {
      list.innerHTML = '';
      result.threats.forEach((threat) => list.appendChild(threatCard(threat, app)));
    }
  });
}

function threatCard(threat: Threat, app: AppContext): HTMLElement {
  const card = document.createElement('article');
  card.className = 'threat-card';
  card.dataset.threatId = threat.id;
  card.innerHTML = `
    <header>
      <label class="include-toggle">
        <input type="checkbox" class="threat-include" ${threat.included ? 'checked' : ''}>
        include
      </label>
      <strong>${escapeHtml(threat.title)}</strong>
      <span class="badge">${CATEGORY_LABELS[threat.category]}</span>
      ${threat.tree_node ? `<span class="badge">node ${threat.tree_node}</span>` : ''}
    </header>
    <p>${escapeHtml(threat.description)}</p>
    <label>Impact
      <textarea class="threat-impact" rows="3">${escapeHtml(threat.impact ?? '')}</textarea>
    </label>
    <div class="row">
      <button class="impact-save">Save impact</button>
      <button class="impact-generate">Generate impact</button>
      <button class="controls-generate">Suggest control measures</button>
    </div>
    <div class="controls">${controlsHtml(threat)}</div>
  `;

  const sessionId = () => app.store.get().sessionId!;

  card.querySelector<HTMLInputElement>('.threat-include')!
    .addEventListener('change', async (event) => {
      const included = (event.target as HTMLInputElement).checked;
      await app.run('update inclusion', () =>
        app.api.patchThreat(sessionId(), threat.id, { included }));
    });

  card.querySelector('.impact-save')!.addEventListener('click', async () => {
    const impact = card.querySelector<HTMLTextAreaElement>('.threat-impact')!.value;
    await app.run('save impact', () =>
      app.api.patchThreat(sessionId(), threat.id, { impact }));
  });

  card.querySelector('.impact-generate')!.addEventListener('click', async () => {
    const result = await app.run('generate impact', (signal) =>
      app.api.generateImpact(sessionId(), threat.id, { signal }));
    if (result) {
      card.querySelector<HTMLTextAreaElement>('.threat-impact')!.value =
        result.threat.impact ?? '';
    }
  });

  card.querySelector('.controls-generate')!.addEventListener('click', async () => {
    const result = await app.run('select controls', (signal) =>
      app.api.generateControls(sessionId(), threat.id, { signal }));
    if (result) {
      card.querySelector<HTMLDivElement>('.controls')!.innerHTML =
        controlsHtml(result.threat);
    }
  });

  return card;
}

function controlsHtml(threat: Threat): string {
  if (threat.controls.length === 0) return '';
  return `<h4>Control measures</h4><ul>${threat.controls.map((control) => `
    <li><strong>${escapeHtml(control.pattern_name)}</strong>:
      ${escapeHtml(control.relevance)}
      <br><em>${escapeHtml(control.implementation_guidance)}</em></li>`).join('')}
  </ul>`;
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}
