// Payload shapes of the engine's HTTP API. The UI never mutates these; all
// authoritative state lives on the server.

export interface DistrictInfo {
  name: string;
  description: string;
}

export interface TileInfo {
  status: string;
  image: string | null;
  below_threshold: boolean;
}

export interface ProjectView {
  id: string;
  prompt: string;
  rows: number;
  cols: number;
  districts: Record<string, DistrictInfo>;
  cells: [number, number, string][];
  tiles: Record<string, TileInfo>;
  history_length: number;
}

export interface SceneGraphView {
  block_name: string;
  block_description: string;
  spatial_relations: Record<string, string>;
}

export interface Breakdown {
  candidate: [number, number];
  l_dist: number;
  l_sem: number;
  total: number;
}

export interface ExpansionRecord {
  request: string;
  scene_graph: SceneGraphView;
  candidates: Breakdown[];
  chosen: [number, number];
  translation: [number, number];
  district_id: string;
}

export interface JobView {
  id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  error: string | null;
  result: {
    record?: ExpansionRecord;
    chosen?: [number, number];
    rows?: number;
    cols?: number;
  } | null;
}

export interface HistoryView {
  records: ExpansionRecord[];
}

// Relation kinds and their signed weights, mirrored from the engine for the
// legend only; every objective number shown in the UI comes from the API.
export const RELATION_WEIGHTS: Record<string, number> = {
  near: 1,
  relatively_near: 0.5,
  slightly_near: 0.1,
  no_special_constraint: 0,
  far: -1,
};
