// Wire types mirroring the service schemas (docs/api.md).

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Entity {
  id: number;
  category: string;
}

export interface Triplet {
  subject_id: number;
  relation: string;
  object_id: number;
  subject_box: Box;
  object_box: Box;
}

export interface Graph {
  canvas: { width: number; height: number };
  entities: Entity[];
  triplets: Triplet[];
}

export type EditOp =
  | { kind: "AddObject"; entity: Entity; box: Box }
  | { kind: "AddRelation"; triplet: Triplet }
  | { kind: "ReplaceObject"; target_id: number; category: string }
  | { kind: "DeleteObject"; target_id: number };

export interface PhraseInfo {
  text: string;
  salience: number;
  kept: boolean;
}

export interface CompileResponse {
  caption: string;
  token_count: number;
  phrases: PhraseInfo[];
}

export interface GenerateResponse {
  image_png_base64: string;
  caption: string;
  relation_accuracy: number | null;
  object_count_fidelity: number | null;
}

export interface VocabResponse {
  categories: string[];
  relations: string[];
}

export interface Violations {
  violations: string[];
}
