// End-to-end editing scenario against the real service:
// load graph -> replace "water" -> "sky" -> regenerate -> delete one
// object -> regenerate; asserts server round-trips, before/after panel
// updates, undo restoration, and that displayed fidelity readouts match a
// direct service call with the same seed.
//
// The suite spawns `scenegen serve` on a bundle built by
// scripts/build-test-bundle.sh (run automatically via npm pretest).

import { spawn, ChildProcess } from "node:child_process";
import { existsSync } from "node:fs";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/client.js";
import { EditorController, initialState, undoDepth } from "../src/state.js";
import { Graph } from "../src/types.js";

const PORT = 8795;
const BASE = `http://127.0.0.1:${PORT}`;
const TESTDATA = path.resolve(__dirname, "..", ".testdata");

let server: ChildProcess | null = null;

async function waitForHealth(client: ServiceClient, timeoutMs = 60_000): Promise<void> {
  const start = Date.now();
  for (;;) {
    try {
      const res = await client.health();
      if (res.status === "ok") return;
    } catch {
      // not up yet
    }
    if (Date.now() - start > timeoutMs) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 500));
  }
}

const initialGraph: Graph = {
  canvas: { width: 32, height: 32 },
  entities: [
    { id: 0, category: "water" },
    { id: 1, category: "red circle" },
    { id: 2, category: "blue square" },
  ],
  triplets: [
    {
      subject_id: 1,
      relation: "above",
      object_id: 2,
      subject_box: { x: 4, y: 4, w: 8, h: 8 },
      object_box: { x: 4, y: 20, w: 8, h: 8 },
    },
    {
      subject_id: 0,
      relation: "right of",
      object_id: 1,
      subject_box: { x: 20, y: 4, w: 8, h: 8 },
      object_box: { x: 4, y: 4, w: 8, h: 8 },
    },
  ],
};

describe("editor scenario", () => {
  const client = new ServiceClient(BASE);

  beforeAll(async () => {
    if (!existsSync(path.join(TESTDATA, "model.ckpt"))) {
      throw new Error(".testdata missing; run scripts/build-test-bundle.sh first");
    }
    server = spawn(
      "python3",
      [
        "-m", "scenegen.cli", "serve",
        "--ckpt", path.join(TESTDATA, "model.ckpt"),
        "--codebook", path.join(TESTDATA, "codebook.bin"),
        "--vocab", path.join(TESTDATA, "vocab.txt"),
        "--host", "127.0.0.1",
        "--port", String(PORT),
      ],
      { stdio: "ignore" },
    );
    await waitForHealth(client);
  }, 90_000);

  afterAll(() => {
    server?.kill("SIGTERM");
  });

  it("runs the edit/regenerate/undo loop against the live service", async () => {
    const controller = new EditorController(client, initialState(initialGraph));
    controller.state.seed = 7;
    controller.state.temperature = 1.0;
    controller.state.topK = 8;
    await controller.refreshCaption();
    expect(controller.state.caption?.phrases.length).toBe(2);

    // replace "water" -> "sky" (server round-trip)
    const replaced = await controller.applyOps([
      { kind: "ReplaceObject", target_id: 0, category: "sky" },
    ]);
    expect(replaced).toBe(true);
    expect(controller.state.graph.entities[0].category).toBe("sky");
    expect(undoDepth(controller.state)).toBe(1);
    const graphAfterReplace = controller.state.graph;

    // first regeneration fills the "after" panel, "before" stays empty
    expect(await controller.regenerate()).toBe(true);
    const first = controller.state.lastResult;
    expect(first).not.toBeNull();
    expect(first!.image_png_base64.length).toBeGreaterThan(100);
    expect(controller.state.prevResult).toBeNull();

    // fidelity readouts equal a direct service call with the same seed
    const direct = await client.generate(graphAfterReplace, 7, 1.0, 8);
    expect(first!.image_png_base64).toBe(direct.image_png_base64);
    expect(first!.relation_accuracy).toBe(direct.relation_accuracy);
    expect(first!.object_count_fidelity).toBe(direct.object_count_fidelity);

    // delete one object; its relations cascade away on the server
    const deleted = await controller.applyOps([
      { kind: "DeleteObject", target_id: 1 },
    ]);
    expect(deleted).toBe(true);
    expect(controller.state.graph.entities.map((e) => e.id)).toEqual([0, 2]);
    expect(controller.state.graph.triplets.length).toBe(0);
    expect(undoDepth(controller.state)).toBe(2);

    // second regeneration: side-by-side panels update
    expect(await controller.regenerate()).toBe(true);
    expect(controller.state.prevResult).toEqual(first);
    expect(controller.state.lastResult).not.toBeNull();
    expect(controller.state.lastResult!.image_png_base64).not.toBe(
      first!.image_png_base64,
    );

    // undo restores the exact prior graph, one mutation at a time
    expect(controller.undo()).toBe(true);
    expect(controller.state.graph).toEqual(graphAfterReplace);
    expect(controller.undo()).toBe(true);
    expect(controller.state.graph).toEqual(initialGraph);
    expect(undoDepth(controller.state)).toBe(0);
    expect(controller.undo()).toBe(false); // initial graph stays at the bottom
  }, 120_000);

  it("surfaces validator violations inline without changing the graph", async () => {
    const controller = new EditorController(client, initialState(initialGraph));
    const before = controller.state.graph;
    const ok = await controller.applyOps([
      { kind: "DeleteObject", target_id: 999 },
    ]);
    expect(ok).toBe(false);
    expect(controller.state.violations.length).toBeGreaterThan(0);
    expect(controller.state.violations.join(" ")).toContain("999");
    expect(controller.state.graph).toEqual(before);
    expect(undoDepth(controller.state)).toBe(0);

    // add-relation referencing a deleted node -> inline 422
    const afterDelete = await controller.applyOps([
      { kind: "DeleteObject", target_id: 0 },
    ]);
    expect(afterDelete).toBe(true);
    const bad = await controller.applyOps([
      {
        kind: "AddRelation",
        triplet: {
          subject_id: 0,
          relation: "above",
          object_id: 2,
          subject_box: { x: 4, y: 4, w: 8, h: 8 },
          object_box: { x: 4, y: 20, w: 8, h: 8 },
        },
      },
    ]);
    expect(bad).toBe(false);
    expect(controller.state.violations.join(" ")).toContain("subject_id 0");
  }, 60_000);
});
