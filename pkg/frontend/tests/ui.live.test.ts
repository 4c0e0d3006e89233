// @vitest-environment happy-dom
//
// Live integration: the offline demo session driven through the UI against
// the real service running with the mock provider. Skipped when the service
// CLI is not installed.

import { execSync, spawn, ChildProcess } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import type { AppContext } from '../src/app';
import { bootstrap } from '../src/main';
import { setChecked, setValue, waitFor } from './helpers';

function cliAvailable(): boolean {
  try {
    execSync('pillar --help', { stdio: 'ignore' });
    return true;
  } catch {
    return false;
  }
}

const HAVE_CLI = cliAvailable();
const PORT = 18900 + (process.pid % 100);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess | null = null;

async function serviceReady(): Promise<boolean> {
  try {
    const response = await fetch(`${BASE}/sessions`);
    return response.ok;
  } catch {
    return false;
  }
}

beforeAll(async () => {
  if (!HAVE_CLI) return;
  const workDir = mkdtempSync(join(tmpdir(), 'pillar-ui-live-'));
  service = spawn('pillar', ['serve', '--port', String(PORT)], {
    env: { ...process.env, PILLAR_SESSIONS_DIR: join(workDir, 'sessions') },
    stdio: 'ignore',
  });
  const deadline = Date.now() + 20000;
  while (!(await serviceReady())) {
    if (Date.now() > deadline) throw new Error('service did not start');
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}, 30000);

afterAll(() => {
  service?.kill();
});

function q<T extends Element>(root: ParentNode, selector: string): T {
  const element = root.querySelector(selector);
  if (!element) throw new Error(`missing element ${selector}`);
  return element as T;
}

async function openTab(root: HTMLElement, app: AppContext, tab: string): Promise<void> {
  q<HTMLButtonElement>(root, `#tabs button[data-tab="${tab}"]`).click();
  await waitFor(() => app.store.get().screen === tab, `tab ${tab}`);
}

const CSV = 'from,from_kind,to,to_kind,data,trust_boundary\n'
  + 'Patient,entity,Tracker App,process,vitals and symptoms,true\n'
  + 'Tracker App,process,Records DB,data_store,visit records,false\n';

describe.skipIf(!HAVE_CLI)('offline demo through the UI (real service, mock provider)', () => {
  it('runs description -> DFD -> GO -> PRO -> assessment -> report', async () => {
    location.hash = '';
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById('app')!;
    const app = bootstrap(root, BASE);
    await waitFor(() => app.store.get().session !== null, 'session loaded', 15000);

    setValue(q(root, '#profile-description'),
      'A mobile health tracker that syncs patient vitals to a clinic portal.');
    q<HTMLFormElement>(root, '#profile-form')
      .dispatchEvent(new Event('submit', { cancelable: true }));
    await waitFor(() => app.store.get().session!.profile.description !== '',
      'profile saved', 15000);

    await openTab(root, app, 'dfd');
    setValue(q(root, '#dfd-csv-paste'), CSV);
    q<HTMLButtonElement>(root, '#dfd-import-paste').click();
    await waitFor(() => (app.store.get().session!.dfd?.edges.length ?? 0) === 2,
      'dfd imported', 15000);

    await openTab(root, app, 'linddun-go');
    setValue(q(root, '#go-cards'), '2');
    setChecked(q(root, '#go-multi'), true);
    setValue(q(root, '#go-rounds'), '2');
    setValue(q(root, '#go-seed'), '7');
    q<HTMLButtonElement>(root, '#go-run').click();
    await waitFor(() => root.querySelectorAll('.card-outcome').length === 2,
      'go outcomes', 20000);
    expect(root.querySelectorAll('.card-outcome details.round').length).toBe(4);

    await openTab(root, app, 'linddun-pro');
    setValue(q(root, '#pro-flow'), 'Vitals upload from the patient device over TLS.');
    const boxes = root.querySelectorAll<HTMLInputElement>('#pro-categories input');
    setChecked(boxes[0], true);
    q<HTMLButtonElement>(root, '#pro-run').click();
    await waitFor(() => (app.store.get().session!
      .elicitation_results.linddun_pro.length) > 0, 'pro findings', 20000);

    await openTab(root, app, 'assessment');
    q<HTMLSelectElement>(root, '#assess-source').value = 'linddun_go';
    q<HTMLButtonElement>(root, '#assess-import').click();
    await waitFor(() => root.querySelectorAll('.threat-card').length === 2,
      'imported', 15000);
    const card = root.querySelector<HTMLElement>('.threat-card')!;
    setChecked(q(card, '.threat-include'), true);
    await waitFor(() => app.store.get().session!
      .elicitation_results.linddun_go[0].included, 'included', 15000);
    q<HTMLButtonElement>(card, '.impact-generate').click();
    await waitFor(() => q<HTMLTextAreaElement>(card, '.threat-impact').value !== '',
      'impact generated', 20000);
    q<HTMLButtonElement>(card, '.controls-generate').click();
    await waitFor(() => card.querySelector('.controls')!.textContent!.length > 0,
      'controls', 20000);

    await openTab(root, app, 'report');
    setValue(q(root, '#meta-author'), 'Dana Analyst');
    q<HTMLButtonElement>(root, '#report-build').click();
    await waitFor(() => !q<HTMLElement>(root, '#report-preview-wrap').hidden,
      'report built', 20000);
    const preview = q<HTMLElement>(root, '#report-preview').textContent!;
    expect(preview).toContain('# Privacy Threat Model Report');
    const includedTitle = app.store.get().session!
      .elicitation_results.linddun_go[0].title;
    expect(preview).toContain(includedTitle);
  }, 120000);
});
