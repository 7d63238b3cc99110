// Node-link SVG rendering of the current graph: entities as labeled
// nodes, triplets as directed labeled edges. Layout is a fixed circle;
// boxes are edited through numeric fields, not by dragging.

import { Graph } from "./types.js";

const W = 420;
const H = 320;

function nodePositions(n: number): Array<{ x: number; y: number }> {
  const cx = W / 2;
  const cy = H / 2;
  const r = Math.min(W, H) / 2 - 50;
  return Array.from({ length: n }, (_, i) => {
    const angle = (2 * Math.PI * i) / Math.max(n, 1) - Math.PI / 2;
    return { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) };
  });
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderGraphSvg(graph: Graph, selectedId: number | null): string {
  const pos = nodePositions(graph.entities.length);
  const index = new Map(graph.entities.map((e, i) => [e.id, i]));
  const parts: string[] = [
    `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg">`,
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5"
      markerWidth="7" markerHeight="7" orient="auto-start-reverse">
      <path d="M 0 0 L 10 5 L 0 10 z" fill="#666"/></marker></defs>`,
  ];
  for (const t of graph.triplets) {
    const a = pos[index.get(t.subject_id) ?? 0];
    const b = pos[index.get(t.object_id) ?? 0];
    if (!a || !b) continue;
    const mx = (a.x + b.x) / 2;
    const my = (a.y + b.y) / 2;
    parts.push(
      `<line x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}"
        stroke="#666" stroke-width="1.4" marker-end="url(#arrow)"/>`,
      `<text x="${mx}" y="${my - 4}" class="edge-label">${esc(t.relation)}</text>`,
    );
  }
  graph.entities.forEach((e, i) => {
    const p = pos[i];
    const selected = e.id === selectedId;
    parts.push(
      `<g class="node${selected ? " selected" : ""}" data-entity-id="${e.id}">`,
      `<circle cx="${p.x}" cy="${p.y}" r="26"/>`,
      `<text x="${p.x}" y="${p.y - 2}" class="node-id">#${e.id}</text>`,
      `<text x="${p.x}" y="${p.y + 12}" class="node-label">${esc(e.category)}</text>`,
      `</g>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
