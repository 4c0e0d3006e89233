// Phase tabs; the analyst traverses them mostly left to right.

import type { AppContext, ScreenId } from './app';
import { renderAssessmentScreen } from './screens/assessment';
import { renderDfdScreen } from './screens/dfd';
import { renderGoScreen, renderProScreen, renderThreatModelScreen } from './screens/elicit';
import { renderProfileScreen } from './screens/profile';
import { renderReportScreen } from './screens/report';

interface Tab {
  id: ScreenId;
  title: string;
  render(container: HTMLElement, app: AppContext): void;
}

const TABS: Tab[] = [
  { id: 'profile', title: 'Application Info', render: renderProfileScreen },
  { id: 'dfd', title: 'DFD', render: renderDfdScreen },
  { id: 'threat-model', title: 'Threat Model', render: renderThreatModelScreen },
  { id: 'linddun-go', title: 'LINDDUN Go', render: renderGoScreen },
  { id: 'linddun-pro', title: 'LINDDUN Pro', render: renderProScreen },
  { id: 'assessment', title: 'Impact Assessment', render: renderAssessmentScreen },
  { id: 'report', title: 'Report', render: renderReportScreen },
];

export function renderWizard(root: HTMLElement, app: AppContext): void {
  root.innerHTML = `
    <header class="topbar">
      <h1>PILLAR</h1>
      <span id="session-label"></span>
      <span id="busy-indicator" hidden>
        <span id="busy-label"></span>
        <button id="busy-cancel">Cancel</button>
      </span>
    </header>
    <div id="error-banner" class="error-banner" hidden>
      <span id="error-text"></span>
      <button id="error-retry">Dismiss</button>
    </div>
    <nav id="tabs" class="tabs"></nav>
    <main id="screen"></main>
  `;

  const tabsNav = root.querySelector<HTMLElement>('#tabs')!;
  const screen = root.querySelector<HTMLElement>('#screen')!;
  const busyIndicator = root.querySelector<HTMLElement>('#busy-indicator')!;
  const busyLabel = root.querySelector<HTMLElement>('#busy-label')!;
  const errorBanner = root.querySelector<HTMLElement>('#error-banner')!;
  const errorText = root.querySelector<HTMLElement>('#error-text')!;
  const sessionLabel = root.querySelector<HTMLElement>('#session-label')!;

  root.querySelector('#busy-cancel')!.addEventListener('click', () => app.cancel());
  root.querySelector('#error-retry')!.addEventListener('click', () => {
    app.store.set({ error: null });
  });

  let renderedScreen: ScreenId | null = null;
  let renderedSession: string | null = null;

  function sync(): void {
    const state = app.store.get();

    sessionLabel.textContent = state.session
      ? `session ${state.session.id.slice(0, 8)}`
      : 'connecting…';
    busyIndicator.hidden = state.busy === null;
    busyLabel.textContent = state.busy ? `${state.busy}…` : '';
    root.toggleAttribute('data-busy', state.busy !== null);

    errorBanner.hidden = state.error === null;
    if (state.error) {
      errorText.textContent = `${state.error.code}: ${state.error.message}`;
    }

    tabsNav.innerHTML = '';
    TABS.forEach((tab) => {
      const button = document.createElement('button');
      button.textContent = tab.title;
      button.dataset.tab = tab.id;
      if (tab.id === state.screen) button.classList.add('active');
      button.addEventListener('click', () => app.store.set({ screen: tab.id }));
      tabsNav.appendChild(button);
    });

    // re-render only on tab or session switch: screens own their DOM while
    // active (handlers update it from server responses), so busy/error and
    // reload ticks must not wipe in-progress forms or fresh results
    if (state.session
        && (renderedScreen !== state.screen || renderedSession !== state.session.id)) {
      renderedScreen = state.screen;
      renderedSession = state.session.id;
      const tab = TABS.find((t) => t.id === state.screen)!;
      screen.innerHTML = '';
      tab.render(screen, app);
    }
  }

  app.store.subscribe(sync);
  sync();
}
