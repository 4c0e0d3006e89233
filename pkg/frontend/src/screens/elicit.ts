// The three elicitation screens: zero-shot threat model, LINDDUN GO
// (card count, multi-agent toggle, rounds, seed, per-card verdicts and
// debate transcripts), and LINDDUN PRO (edge pick, flow description,
// category ticks, findings with tree nodes).

import type { AppContext } from '../app';
import type { GoOutcome, Threat } from '../types';
import { ALL_CATEGORIES, CATEGORY_LABELS } from '../types';

function threatList(threats: Threat[]): string {
  if (threats.length === 0) return '<p class="hint">No threats elicited yet.</p>';
  return `<ul class="threats">${threats.map((threat) => `
    <li>
      <strong>${escapeHtml(threat.title)}</strong>
      <span class="badge">${CATEGORY_LABELS[threat.category]}</span>
      ${threat.location ? `<span class="badge">${threat.location}${threat.edge_ref ? ` @ ${threat.edge_ref}` : ''}</span>` : ''}
      ${threat.tree_node ? `<span class="badge">node ${threat.tree_node}</span>` : ''}
      <p>${escapeHtml(threat.description)}</p>
    </li>`).join('')}</ul>`;
}

function parseSeed(value: string): number | undefined {
  return value.trim() === '' ? undefined : Number(value);
}

export function renderThreatModelScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  container.innerHTML = `
    <h2>Threat Model</h2>
    <p class="hint">One-shot elicitation across all seven privacy threat categories.</p>
    <div class="row">
      <label>Seed <input id="zs-seed" type="number"></label>
      <button id="zs-run">Run threat model</button>
    </div>
    <div id="zs-results">${threatList(session.elicitation_results.zero_shot)}</div>
  `;
  container.querySelector('#zs-run')!.addEventListener('click', async () => {
    const sessionId = app.store.get().sessionId!;
    const seed = parseSeed(container.querySelector<HTMLInputElement>('#zs-seed')!.value);
    const result = await app.run('zero-shot elicitation', (signal) =>
      app.api.elicitZeroShot(sessionId, { seed }, { signal }));
    if (result) {
      container.querySelector('#zs-results')!.innerHTML = threatList(result.threats);
    }
  });
}

function transcriptHtml(outcome: GoOutcome): string {
  const transcript = outcome.transcript;
  if (!transcript) {
    const verdict = outcome.verdict!;
    return `<p class="verdict ${verdict.threat_present ? 'present' : 'absent'}">
      ${verdict.threat_present ? 'Present' : 'Not present'}: ${escapeHtml(verdict.reason)}
    </p>`;
  }
  const rounds = transcript.rounds.map((round, index) => `
    <details class="round">
      <summary>Round ${index + 1}</summary>
      <ul>${round.map((verdict) => `
        <li><strong>${escapeHtml(verdict.persona_id ?? 'agent')}</strong>
          (${escapeHtml(verdict.provider_id)}):
          ${verdict.threat_present ? 'present' : 'absent'},
          ${escapeHtml(verdict.reason)}</li>`).join('')}
      </ul>
    </details>`).join('');
  const judge = transcript.judge
    ? `<p class="verdict judge ${transcript.judge.threat_present ? 'present' : 'absent'}">
        Judge: ${transcript.judge.threat_present ? 'present' : 'absent'},
        ${escapeHtml(transcript.judge.reason)}</p>`
    : '';
  return judge + rounds;
}

export function renderGoScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  container.innerHTML = `
    <h2>LINDDUN Go</h2>
    <div class="row">
      <label>Cards <input id="go-cards" type="number" min="0" value="3"></label>
      <label><input id="go-multi" type="checkbox"> Multi-agent</label>
      <label>Rounds <input id="go-rounds" type="number" min="1" value="2"></label>
      <label>Seed <input id="go-seed" type="number"></label>
      <button id="go-run">Run simulation</button>
    </div>
    <div id="go-outcomes"></div>
    <h3>Threats found</h3>
    <div id="go-results">${threatList(session.elicitation_results.linddun_go)}</div>
  `;
  container.querySelector('#go-run')!.addEventListener('click', async () => {
    const sessionId = app.store.get().sessionId!;
    const nCards = Number(container.querySelector<HTMLInputElement>('#go-cards')!.value);
    const multi = container.querySelector<HTMLInputElement>('#go-multi')!.checked;
    const rounds = Number(container.querySelector<HTMLInputElement>('#go-rounds')!.value);
    const seed = parseSeed(container.querySelector<HTMLInputElement>('#go-seed')!.value);
    const result = await app.run('LINDDUN GO run', (signal) =>
      app.api.elicitGo(sessionId,
        { n_cards: nCards, multi_agent: multi, rounds, seed }, { signal }));
    if (result) {
      container.querySelector('#go-outcomes')!.innerHTML = result.outcomes.map(
        (outcome) => `
          <article class="card-outcome">
            <h4>${escapeHtml(outcome.card.title)}
              <span class="badge">${CATEGORY_LABELS[outcome.card.category]}</span></h4>
            ${transcriptHtml(outcome)}
          </article>`).join('')
        + (result.failures.length
           ? `<p class="error">${result.failures.length} card(s) failed.</p>` : '');
      container.querySelector('#go-results')!.innerHTML = threatList(result.threats);
    }
  });
}

export function renderProScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  const edges = session.dfd?.edges ?? [];
  container.innerHTML = `
    <h2>LINDDUN Pro</h2>
    ${edges.length === 0 ? '<p class="hint">Define a DFD first; PRO analyzes its edges.</p>' : ''}
    <div class="stack">
      <label>Edge
        <select id="pro-edge">
          ${edges.map((edge) => `<option value="${edge.id}">
            ${edge.id}: ${escapeHtml(edge.from_name)} → ${escapeHtml(edge.to_name)}
            (${escapeHtml(edge.data_label)})</option>`).join('')}
        </select>
      </label>
      <label>Flow description
        <textarea id="pro-flow" rows="2"
          placeholder="How data is handled along this edge."></textarea>
      </label>
      <fieldset id="pro-categories">
        <legend>Categories</legend>
        ${ALL_CATEGORIES.map((category) => `
          <label><input type="checkbox" value="${category}"> ${CATEGORY_LABELS[category]}</label>
        `).join('')}
      </fieldset>
      <div class="row">
        <label>Seed <input id="pro-seed" type="number"></label>
        <button id="pro-run" ${edges.length === 0 ? 'disabled' : ''}>Analyze edge</button>
      </div>
    </div>
    <div id="pro-results">${threatList(session.elicitation_results.linddun_pro)}</div>
  `;
  container.querySelector('#pro-run')!.addEventListener('click', async () => {
    const sessionId = app.store.get().sessionId!;
    const edgeId = container.querySelector<HTMLSelectElement>('#pro-edge')!.value;
    const flow = container.querySelector<HTMLTextAreaElement>('#pro-flow')!.value;
    const categories = Array.from(container.querySelectorAll<HTMLInputElement>(
      '#pro-categories input:checked')).map((input) => input.value);
    const seed = parseSeed(container.querySelector<HTMLInputElement>('#pro-seed')!.value);
    const result = await app.run('LINDDUN PRO analysis', (signal) =>
      app.api.elicitPro(sessionId,
        { edge_id: edgeId, flow_description: flow, categories, seed }, { signal }));
    if (result) {
      const fullList = app.store.get().session?.elicitation_results.linddun_pro ?? [];
      container.querySelector('#pro-results')!.innerHTML =
        threatList(fullList)
        + (result.failures.length
           ? `<p class="error">${result.failures.length} pair(s) failed.</p>` : '');
    }
  });
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}
