// Application Info: the profile form bound to the profile resource.

import type { AppContext } from '../app';
import type { DataTypeRow, Profile } from '../types';
import { emptyDataTypeRow } from '../types';

const APP_TYPES = ['web', 'mobile', 'desktop', 'iot', 'other'] as const;

export function renderProfileScreen(container: HTMLElement, app: AppContext): void {
  const session = app.store.get().session;
  if (!session) return;
  const profile = structuredClone(session.profile) as Profile;

  container.innerHTML = `
    <h2>Application Info</h2>
    <form id="profile-form" class="stack">
      <label>Application type
        <select id="profile-app-type">
          ${APP_TYPES.map((t) => `<option value="${t}">${t}</option>`).join('')}
        </select>
      </label>
      <label>Type label <input id="profile-app-type-label" type="text"></label>
      <label>Description
        <textarea id="profile-description" rows="6"
          placeholder="What the system does, who uses it, how data moves."></textarea>
      </label>
      <label>Data policy
        <textarea id="profile-data-policy" rows="3"></textarea>
      </label>
      <label>Authentication methods (comma separated)
        <input id="profile-auth" type="text">
      </label>
      <fieldset>
        <legend>Collected data types</legend>
        <table id="data-types-table">
          <thead><tr>
            <th>Name</th><th>Category</th><th>Collected from</th><th>Stored</th>
            <th>Encrypted</th><th>Shared</th><th>Notes</th><th></th>
          </tr></thead>
          <tbody></tbody>
        </table>
        <button type="button" id="add-data-type">Add row</button>
      </fieldset>
      <div class="row">
        <button type="submit" id="profile-save">Save profile</button>
      </div>
      <ul id="profile-issues" class="issues"></ul>
    </form>
  `;

  const appType = container.querySelector<HTMLSelectElement>('#profile-app-type')!;
  const appTypeLabel = container.querySelector<HTMLInputElement>('#profile-app-type-label')!;
  const description = container.querySelector<HTMLTextAreaElement>('#profile-description')!;
  const dataPolicy = container.querySelector<HTMLTextAreaElement>('#profile-data-policy')!;
  const auth = container.querySelector<HTMLInputElement>('#profile-auth')!;
  const tbody = container.querySelector<HTMLTableSectionElement>('#data-types-table tbody')!;

  appType.value = profile.app_type;
  appTypeLabel.value = profile.app_type_label;
  description.value = profile.description;
  dataPolicy.value = profile.data_policy;
  auth.value = profile.authentication_methods.join(', ');

  function rowHtml(row: DataTypeRow): string {
    const check = (field: keyof DataTypeRow) => (row[field] ? 'checked' : '');
    return `
      <td><input class="dt-name" value="${escapeAttr(row.name)}"></td>
      <td><input class="dt-category" value="${escapeAttr(row.category)}"></td>
      <td><input class="dt-from" value="${escapeAttr(row.collected_from)}"></td>
      <td><input class="dt-stored" type="checkbox" ${check('stored')}></td>
      <td><input class="dt-encrypted" type="checkbox" ${check('encrypted_at_rest')}></td>
      <td><input class="dt-shared" type="checkbox" ${check('shared_with_third_parties')}></td>
      <td><input class="dt-notes" value="${escapeAttr(row.notes)}"></td>
      <td><button type="button" class="dt-remove">x</button></td>
    `;
  }

  function addRow(row: DataTypeRow): void {
    const tr = document.createElement('tr');
    tr.innerHTML = rowHtml(row);
    tr.querySelector('.dt-remove')!.addEventListener('click', () => {
      tr.remove();
      app.store.set({ unsaved: true });
    });
    tr.addEventListener('input', () => app.store.set({ unsaved: true }));
    tbody.appendChild(tr);
  }

  profile.data_types.forEach(addRow);
  container.querySelector('#add-data-type')!.addEventListener('click', () => {
    addRow(emptyDataTypeRow());
  });
  container.querySelector('#profile-form')!.addEventListener('input', () => {
    app.store.set({ unsaved: true });
  });

  function collect(): Profile {
    const rows: DataTypeRow[] = [];
    tbody.querySelectorAll('tr').forEach((tr) => {
      rows.push({
        name: tr.querySelector<HTMLInputElement>('.dt-name')!.value,
        category: tr.querySelector<HTMLInputElement>('.dt-category')!.value,
        collected_from: tr.querySelector<HTMLInputElement>('.dt-from')!.value,
        stored: tr.querySelector<HTMLInputElement>('.dt-stored')!.checked,
        encrypted_at_rest: tr.querySelector<HTMLInputElement>('.dt-encrypted')!.checked,
        shared_with_third_parties:
          tr.querySelector<HTMLInputElement>('.dt-shared')!.checked,
        notes: tr.querySelector<HTMLInputElement>('.dt-notes')!.value,
      });
    });
    return {
      app_type: appType.value as Profile['app_type'],
      app_type_label: appTypeLabel.value,
      description: description.value,
      data_policy: dataPolicy.value,
      authentication_methods: auth.value
        .split(',').map((s) => s.trim()).filter(Boolean),
      data_types: rows,
    };
  }

  container.querySelector('#profile-form')!.addEventListener('submit', async (event) => {
    event.preventDefault();
    const sessionId = app.store.get().sessionId!;
    const result = await app.run('save profile', () =>
      app.api.putProfile(sessionId, collect()));
    if (result) {
      app.store.set({ unsaved: false });
      const list = container.querySelector('#profile-issues');
      if (list) {
        list.innerHTML = result.issues
          .map((issue) => `<li class="${issue.severity}">${issue.message}</li>`)
          .join('');
      }
    }
  });
}

function escapeAttr(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/"/g, '&quot;').replace(/</g, '&lt;');
}
