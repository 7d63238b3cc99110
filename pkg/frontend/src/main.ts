// DOM wiring: controls post edits to the service, regenerate drives the
// before/after panels, undo pops local history.

import { ServiceClient } from "./client.js";
import { renderGraphSvg } from "./graphview.js";
import { captionPanelHtml, imagePanelHtml, statusHtml } from "./panels.js";
import { EditorController, entityBox, initialState, nextEntityId } from "./state.js";
import { EditOp, Graph } from "./types.js";

const client = new ServiceClient("");

const DEFAULT_GRAPH: Graph = {
  canvas: { width: 32, height: 32 },
  entities: [
    { id: 0, category: "red circle" },
    { id: 1, category: "blue square" },
  ],
  triplets: [
    {
      subject_id: 0,
      relation: "above",
      object_id: 1,
      subject_box: { x: 4, y: 4, w: 8, h: 8 },
      object_box: { x: 16, y: 20, w: 8, h: 8 },
    },
  ],
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let selectedId: number | null = null;

function render(): void {
  const state = controller.state;
  el("graph-view").innerHTML = renderGraphSvg(state.graph, selectedId);
  el("caption-panel").innerHTML = captionPanelHtml(state);
  el("image-panels").innerHTML = imagePanelHtml(state);
  el("status").innerHTML = statusHtml(state);
  (el("regenerate") as HTMLButtonElement).disabled = state.pendingGenerate;
  const select = el<HTMLSelectElement>("entity-select");
  const current = select.value;
  select.innerHTML = state.graph.entities
    .map((e) => `<option value="${e.id}">#${e.id} ${e.category}</option>`)
    .join("");
  if (current) select.value = current;
  const relSubject = el<HTMLSelectElement>("rel-subject");
  const relObject = el<HTMLSelectElement>("rel-object");
  for (const sel of [relSubject, relObject]) {
    const keep = sel.value;
    sel.innerHTML = select.innerHTML;
    if (keep) sel.value = keep;
  }
}

const controller = new EditorController(client, initialState(DEFAULT_GRAPH), render);

function num(id: string): number {
  return Number(el<HTMLInputElement>(id).value);
}

function readControls(): void {
  controller.state.seed = num("seed");
  controller.state.temperature = num("temperature");
  controller.state.topK = num("top-k");
}

async function setupVocab(): Promise<void> {
  try {
    const vocab = await client.vocab();
    el<HTMLSelectElement>("rel-name").innerHTML = vocab.relations
      .map((r) => `<option>${r}</option>`)
      .join("");
    el<HTMLInputElement>("category-input").setAttribute(
      "list",
      "category-options",
    );
    el("category-options").innerHTML = vocab.categories
      .map((c) => `<option value="${c}">`)
      .join("");
  } catch {
    // vocab endpoint unavailable: free-text categories still work
  }
}

function wire(): void {
  el("add-object").addEventListener("click", () => {
    const ops: EditOp[] = [
      {
        kind: "AddObject",
        entity: {
          id: nextEntityId(controller.state.graph),
          category: el<HTMLInputElement>("category-input").value || "red circle",
        },
        box: {
          x: num("box-x"),
          y: num("box-y"),
          w: num("box-w"),
          h: num("box-h"),
        },
      },
    ];
    void controller.applyOps(ops);
  });

  el("replace-object").addEventListener("click", () => {
    const id = Number(el<HTMLSelectElement>("entity-select").value);
    void controller.applyOps([
      {
        kind: "ReplaceObject",
        target_id: id,
        category: el<HTMLInputElement>("category-input").value,
      },
    ]);
  });

  el("delete-object").addEventListener("click", () => {
    const id = Number(el<HTMLSelectElement>("entity-select").value);
    void controller.applyOps([{ kind: "DeleteObject", target_id: id }]);
  });

  el("add-relation").addEventListener("click", () => {
    const graph = controller.state.graph;
    const subjectId = Number(el<HTMLSelectElement>("rel-subject").value);
    const objectId = Number(el<HTMLSelectElement>("rel-object").value);
    const fallback = { x: num("box-x"), y: num("box-y"), w: num("box-w"), h: num("box-h") };
    void controller.applyOps([
      {
        kind: "AddRelation",
        triplet: {
          subject_id: subjectId,
          relation: el<HTMLSelectElement>("rel-name").value,
          object_id: objectId,
          subject_box: entityBox(graph, subjectId) ?? fallback,
          object_box: entityBox(graph, objectId) ?? fallback,
        },
      },
    ]);
  });

  el("undo").addEventListener("click", () => controller.undo());

  el("regenerate").addEventListener("click", () => {
    readControls();
    void controller.regenerate();
  });

  el("graph-view").addEventListener("click", (event) => {
    const group = (event.target as Element).closest("[data-entity-id]");
    if (group) {
      selectedId = Number(group.getAttribute("data-entity-id"));
      el<HTMLSelectElement>("entity-select").value = String(selectedId);
      render();
    }
  });
}

void (async () => {
  wire();
  await setupVocab();
  await controller.refreshCaption();
  render();
})();
