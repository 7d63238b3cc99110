// Caption, image, and readout panels; pure render-to-HTML helpers.

import { EditorState, undoDepth } from "./state.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function captionPanelHtml(state: EditorState): string {
  if (!state.caption) return "<p class=\"muted\">no caption yet</p>";
  const rows = state.caption.phrases
    .map(
      (p) => `<li class="${p.kept ? "kept" : "dropped"}">
        <span class="badge">${p.kept ? "kept" : "dropped"}</span>
        <span class="phrase">${esc(p.text)}</span>
        <span class="salience">α=${p.salience}</span></li>`,
    )
    .join("\n");
  return `<p class="caption-text">“${esc(state.caption.caption)}”
    <span class="muted">(${state.caption.token_count} tokens)</span></p>
    <ol class="phrases">${rows}</ol>`;
}

function fidelity(value: number | null): string {
  return value === null ? "n/a" : value.toFixed(3);
}

export function imagePanelHtml(state: EditorState): string {
  const panel = (
    title: string,
    result: EditorState["lastResult"],
  ): string => {
    if (!result) return `<div class="shot"><h3>${title}</h3><p class="muted">empty</p></div>`;
    return `<div class="shot"><h3>${title}</h3>
      <img alt="${title}" src="data:image/png;base64,${result.image_png_base64}"/>
      <p>relation accuracy: <b>${fidelity(result.relation_accuracy)}</b><br/>
      object count fidelity: <b>${fidelity(result.object_count_fidelity)}</b></p>
    </div>`;
  };
  return panel("before", state.prevResult) + panel("after", state.lastResult);
}

export function statusHtml(state: EditorState): string {
  const parts: string[] = [];
  if (state.banner) parts.push(`<div class="banner error">${esc(state.banner)}</div>`);
  if (state.violations.length > 0) {
    const items = state.violations.map((v) => `<li>${esc(v)}</li>`).join("");
    parts.push(`<div class="banner violations"><b>rejected by validator:</b><ul>${items}</ul></div>`);
  }
  parts.push(`<span class="muted">undo depth: ${undoDepth(state)}</span>`);
  return parts.join("\n");
}
