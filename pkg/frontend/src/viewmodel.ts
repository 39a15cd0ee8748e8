// Pure derivation of the board view from server payloads. The history
// scrubber rolls the current layout back step by step by inverting each
// expansion record (remove the added cell, undo the re-origin translation);
// nothing here recomputes objectives or mutates server state.

import type { ExpansionRecord, ProjectView } from "./types.js";

export interface BoardCell {
  row: number;
  col: number;
  districtId: string;
  districtName: string;
  color: string;
  thumbnail: string | null;
  status: string;
  isNew: boolean;
}

export interface BoardViewModel {
  rows: number;
  cols: number;
  minRow: number;
  minCol: number;
  cells: BoardCell[];
  step: number;
  steps: number;
}

/** Stable district color from a hash of its id. */
export function districtColor(districtId: string): string {
  let hash = 0;
  for (let i = 0; i < districtId.length; i++) {
    hash = (hash * 31 + districtId.charCodeAt(i)) >>> 0;
  }
  const hue = hash % 360;
  return `hsl(${hue}, 55%, 72%)`;
}

type RawCell = [number, number, string];

/** Layout cells as they were after `step` expansions (0 = initial plan). */
export function cellsAtStep(
  current: RawCell[],
  history: ExpansionRecord[],
  step: number,
): RawCell[] {
  if (step < 0 || step > history.length) {
    throw new Error(`step ${step} outside [0, ${history.length}]`);
  }
  let cells = current.map((c) => [...c] as RawCell);
  for (let k = history.length - 1; k >= step; k--) {
    const record = history[k]!;
    const [dr, dc] = record.translation;
    const addedRow = record.chosen[0] + dr;
    const addedCol = record.chosen[1] + dc;
    cells = cells
      .filter(([r, c]) => !(r === addedRow && c === addedCol))
      .map(([r, c, d]) => [r - dr, c - dc, d] as RawCell);
  }
  return cells.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}

export function buildBoard(
  project: ProjectView,
  history: ExpansionRecord[],
  step?: number,
): BoardViewModel {
  const steps = history.length;
  const atStep = step ?? steps;
  const raw = cellsAtStep(project.cells, history, atStep);
  const atLatest = atStep === steps;

  let newCell: [number, number] | null = null;
  if (atStep >= 1) {
    const record = history[atStep - 1]!;
    newCell = [
      record.chosen[0] + record.translation[0],
      record.chosen[1] + record.translation[1],
    ];
  }

  const names: Record<string, string> = {};
  for (const [id, info] of Object.entries(project.districts)) {
    names[id] = info.name;
  }
  for (const record of history) {
    names[record.district_id] ??= record.scene_graph.block_name;
  }

  const cells: BoardCell[] = raw.map(([row, col, districtId]) => {
    // thumbnails are keyed by the CURRENT extent's row-major index, so they
    // only apply when the scrubber sits at the latest step
    let thumbnail: string | null = null;
    let status = "done";
    if (atLatest) {
      const index = row * project.cols + col + 1;
      const tile = project.tiles[String(index)];
      thumbnail = tile?.image ?? null;
      status = tile?.status ?? "pending";
    }
    return {
      row,
      col,
      districtId,
      districtName: names[districtId] ?? districtId,
      color: districtColor(districtId),
      thumbnail,
      status,
      isNew: newCell !== null && row === newCell[0] && col === newCell[1],
    };
  });

  const rows = Math.max(...cells.map((c) => c.row)) + 1;
  const cols = Math.max(...cells.map((c) => c.col)) + 1;
  return {
    rows,
    cols,
    minRow: Math.min(...cells.map((c) => c.row)),
    minCol: Math.min(...cells.map((c) => c.col)),
    cells,
    step: atStep,
    steps,
  };
}
