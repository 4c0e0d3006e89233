// Client-side rasterization of the server's DOT output. The graph data never
// originates in the browser; we only draw what the service rendered.

let vizInstance: Promise<{ renderSVGElement(dot: string): SVGSVGElement }> | null = null;

async function loadViz() {
  if (!vizInstance) {
    vizInstance = import('@viz-js/viz').then((mod) => mod.instance());
  }
  return vizInstance;
}

export async function renderDotInto(container: HTMLElement, dot: string): Promise<void> {
  container.innerHTML = '';
  try {
    const viz = await loadViz();
    container.appendChild(viz.renderSVGElement(dot));
  } catch {
    // no wasm in this environment: show the DOT text so nothing is hidden
    const pre = document.createElement('pre');
    pre.className = 'dot-fallback';
    pre.textContent = dot;
    container.appendChild(pre);
  }
}
