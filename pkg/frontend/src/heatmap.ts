// Candidate heatmap over the expansion record's objective breakdowns. All
// numbers come from the server; this module only maps them to positions and
// colors (diverging scale centered at 0) and locates the served minimum.

import type { Breakdown, ExpansionRecord } from "./types.js";

export interface HeatmapCell {
  row: number;
  col: number;
  lDist: number;
  lSem: number;
  total: number;
  color: string;
  isMin: boolean;
}

/** Blue (negative) to white (zero) to red (positive). */
export function divergingColor(value: number, maxAbs: number): string {
  if (maxAbs <= 0) {
    return "rgb(245, 245, 245)";
  }
  const t = Math.max(-1, Math.min(1, value / maxAbs));
  const intensity = Math.round(200 * Math.abs(t));
  if (t < 0) {
    return `rgb(${245 - intensity}, ${245 - Math.round(intensity * 0.55)}, 245)`;
  }
  return `rgb(245, ${245 - Math.round(intensity * 0.55)}, ${245 - intensity})`;
}

/** The candidate with the smallest served total, ties toward (row, col). */
export function argminCandidate(record: ExpansionRecord): [number, number] {
  let best: Breakdown | null = null;
  for (const entry of record.candidates) {
    if (
      best === null ||
      entry.total < best.total ||
      (entry.total === best.total &&
        (entry.candidate[0] < best.candidate[0] ||
          (entry.candidate[0] === best.candidate[0] &&
            entry.candidate[1] < best.candidate[1])))
    ) {
      best = entry;
    }
  }
  if (best === null) {
    throw new Error("record has no candidates");
  }
  return best.candidate;
}

/**
 * Heatmap cells in post-expansion board coordinates (candidates are served in
 * pre-translation coordinates; the record's translation maps them over).
 */
export function heatmapCells(record: ExpansionRecord): HeatmapCell[] {
  const [dr, dc] = record.translation;
  const min = argminCandidate(record);
  const maxAbs = Math.max(...record.candidates.map((c) => Math.abs(c.total)), 0);
  return record.candidates.map((entry) => ({
    row: entry.candidate[0] + dr,
    col: entry.candidate[1] + dc,
    lDist: entry.l_dist,
    lSem: entry.l_sem,
    total: entry.total,
    color: divergingColor(entry.total, maxAbs),
    isMin: entry.candidate[0] === min[0] && entry.candidate[1] === min[1],
  }));
}
