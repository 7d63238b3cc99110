// Editor state and the service-backed controller.
//
// The UI never mutates graph semantics locally: every mutation round-trips
// through POST /edit, so `graph` always equals a server-validated graph.
// Undo pops the local history (one entry per successful mutation; the
// initial graph stays at the bottom).

import { ServiceClient, ServiceError } from "./client.js";
import {
  Box,
  CompileResponse,
  EditOp,
  GenerateResponse,
  Graph,
} from "./types.js";

export interface EditorState {
  graph: Graph;
  history: Graph[]; // never empty; history[0] is the initial graph
  caption: CompileResponse | null;
  lastResult: GenerateResponse | null;
  prevResult: GenerateResponse | null;
  violations: string[];
  banner: string | null;
  pendingGenerate: boolean;
  seed: number;
  temperature: number;
  topK: number;
}

export function initialState(graph: Graph): EditorState {
  return {
    graph,
    history: [graph],
    caption: null,
    lastResult: null,
    prevResult: null,
    violations: [],
    banner: null,
    pendingGenerate: false,
    seed: 0,
    temperature: 1.0,
    topK: 8,
  };
}

export function undoDepth(state: EditorState): number {
  return state.history.length - 1;
}

/** Box of an entity's first triplet occurrence, if any. */
export function entityBox(graph: Graph, id: number): Box | null {
  for (const t of graph.triplets) {
    if (t.subject_id === id) return t.subject_box;
    if (t.object_id === id) return t.object_box;
  }
  return null;
}

export function nextEntityId(graph: Graph): number {
  return graph.entities.reduce((m, e) => Math.max(m, e.id + 1), 0);
}

export class EditorController {
  constructor(
    private client: ServiceClient,
    public state: EditorState,
    private onChange: (s: EditorState) => void = () => {},
  ) {}

  private emit() {
    this.onChange(this.state);
  }

  /** POST /edit; on success push history and refresh the caption panel.
   *  Validation failures surface inline and leave the graph unchanged. */
  async applyOps(ops: EditOp[]): Promise<boolean> {
    try {
      const { graph } = await this.client.edit(this.state.graph, ops);
      this.state.history = [...this.state.history, graph];
      this.state.graph = graph;
      this.state.violations = [];
      this.state.banner = null;
      await this.refreshCaption();
      this.emit();
      return true;
    } catch (err) {
      if (err instanceof ServiceError && err.violations.length > 0) {
        this.state.violations = err.violations;
      } else {
        this.state.banner = err instanceof Error ? err.message : String(err);
      }
      this.emit();
      return false;
    }
  }

  /** Pop the history locally; no server round-trip. */
  undo(): boolean {
    if (this.state.history.length <= 1) return false;
    this.state.history = this.state.history.slice(0, -1);
    this.state.graph = this.state.history[this.state.history.length - 1];
    this.state.violations = [];
    this.emit();
    return true;
  }

  async refreshCaption(): Promise<void> {
    try {
      this.state.caption = await this.client.compile(this.state.graph);
    } catch (err) {
      this.state.banner = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  /** POST /generate; the previous image moves to the before panel. */
  async regenerate(): Promise<boolean> {
    if (this.state.pendingGenerate) return false;
    this.state.pendingGenerate = true;
    this.emit();
    try {
      const result = await this.client.generate(
        this.state.graph,
        this.state.seed,
        this.state.temperature,
        this.state.topK,
      );
      this.state.prevResult = this.state.lastResult;
      this.state.lastResult = result;
      this.state.banner = null;
      return true;
    } catch (err) {
      // keep the previous image on failure
      this.state.banner = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.state.pendingGenerate = false;
      this.emit();
    }
  }
}
