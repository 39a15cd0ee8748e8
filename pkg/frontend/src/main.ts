import { ApiClient, submitExpansion } from "./api.js";
import { heatmapCells } from "./heatmap.js";
import type { ExpansionRecord, ProjectView } from "./types.js";
import { RELATION_WEIGHTS } from "./types.js";
import { buildBoard } from "./viewmodel.js";

const client = new ApiClient("");

interface UiState {
  project: ProjectView | null;
  history: ExpansionRecord[];
  step: number | null; // null = follow latest
  lastRecord: ExpansionRecord | null;
  showHeatmap: boolean;
  busy: boolean;
}

const state: UiState = {
  project: null,
  history: [],
  step: null,
  lastRecord: null,
  showHeatmap: false,
  busy: false,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function refresh(): Promise<void> {
  try {
    state.project = await client.getProject();
    state.history = (await client.getHistory()).records;
    el("offline-banner").hidden = true;
  } catch (error) {
    if ((error as { status?: number }).status === 404) {
      state.project = null;
      el("offline-banner").hidden = true;
    } else {
      el("offline-banner").hidden = false;
      setTimeout(refresh, 2000);
    }
  }
  render();
}

function render(): void {
  renderBoard();
  renderDistricts();
  renderHistoryScrubber();
  renderSceneGraph();
  renderBreakdownTable();
}

function renderBoard(): void {
  const boardEl = el<HTMLDivElement>("board");
  boardEl.innerHTML = "";
  if (!state.project) {
    el("prompt-line").textContent = "No city yet — plan one from the CLI or POST /api/plan.";
    return;
  }
  el("prompt-line").textContent = `“${state.project.prompt}”`;
  const step = state.step ?? state.history.length;
  const board = buildBoard(state.project, state.history, step);

  const heat = state.showHeatmap && state.lastRecord ? heatmapCells(state.lastRecord) : [];
  const minRow = Math.min(board.minRow, ...heat.map((h) => h.row));
  const minCol = Math.min(board.minCol, ...heat.map((h) => h.col));
  const maxRow = Math.max(board.rows - 1, ...heat.map((h) => h.row));
  const maxCol = Math.max(board.cols - 1, ...heat.map((h) => h.col));

  boardEl.style.gridTemplateColumns = `repeat(${maxCol - minCol + 1}, var(--tile))`;
  for (let r = minRow; r <= maxRow; r++) {
    for (let c = minCol; c <= maxCol; c++) {
      const cellEl = document.createElement("div");
      cellEl.className = "cell";
      const cell = board.cells.find((x) => x.row === r && x.col === c);
      const heatCell = heat.find((x) => x.row === r && x.col === c);
      if (cell) {
        cellEl.classList.add("occupied");
        cellEl.style.backgroundColor = cell.color;
        cellEl.title = `(${cell.row}, ${cell.col}) ${cell.districtName}`;
        if (cell.thumbnail) {
          const img = document.createElement("img");
          img.src = cell.thumbnail;
          img.alt = cell.districtName;
          cellEl.appendChild(img);
        }
        const badge = document.createElement("span");
        badge.className = `badge ${cell.status}`;
        badge.textContent = cell.status === "done" ? "✓" : "…";
        cellEl.appendChild(badge);
        if (cell.isNew) {
          cellEl.classList.add("new-cell");
        }
      }
      if (heatCell) {
        const overlay = document.createElement("div");
        overlay.className = "heat";
        overlay.style.backgroundColor = heatCell.color;
        overlay.textContent = heatCell.total.toFixed(2);
        overlay.title = `L_dist ${heatCell.lDist.toFixed(3)}  L_sem ${heatCell.lSem.toFixed(3)}`;
        if (heatCell.isMin) {
          overlay.classList.add("heat-min");
        }
        cellEl.appendChild(overlay);
      }
      boardEl.appendChild(cellEl);
    }
  }
}

function renderDistricts(): void {
  const listEl = el<HTMLUListElement>("district-list");
  listEl.innerHTML = "";
  if (!state.project) return;
  const board = buildBoard(state.project, state.history, state.step ?? state.history.length);
  const seen = new Map<string, { name: string; color: string }>();
  for (const cell of board.cells) {
    seen.set(cell.districtId, { name: cell.districtName, color: cell.color });
  }
  for (const [id, info] of seen) {
    const item = document.createElement("li");
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.style.backgroundColor = info.color;
    item.appendChild(chip);
    item.appendChild(document.createTextNode(`${info.name} (${id})`));
    listEl.appendChild(item);
  }
}

function renderHistoryScrubber(): void {
  const scrubber = el<HTMLInputElement>("history-scrubber");
  const label = el("history-label");
  scrubber.max = String(state.history.length);
  const step = state.step ?? state.history.length;
  scrubber.value = String(step);
  label.textContent =
    state.history.length === 0
      ? "no expansions yet"
      : step === 0
        ? "initial plan"
        : `step ${step} of ${state.history.length}: ${state.history[step - 1]?.request ?? ""}`;
}

function renderSceneGraph(): void {
  const container = el("scene-graph");
  container.innerHTML = "";
  const record = state.lastRecord;
  if (!record) {
    container.textContent = "Submit an expansion to see its scene graph.";
    return;
  }
  const title = document.createElement("p");
  title.innerHTML = `<strong>${record.scene_graph.block_name}</strong> — relations to existing districts:`;
  container.appendChild(title);
  const list = document.createElement("ul");
  const relations = Object.entries(record.scene_graph.spatial_relations);
  if (relations.length === 0) {
    const item = document.createElement("li");
    item.textContent = "no special constraints (all weights 0)";
    list.appendChild(item);
  }
  for (const [district, kind] of relations) {
    const item = document.createElement("li");
    const weight = RELATION_WEIGHTS[kind] ?? 0;
    item.textContent = `${district} — ${kind.replaceAll("_", " ")} (γ = ${weight})`;
    list.appendChild(item);
  }
  container.appendChild(list);
}

function renderBreakdownTable(): void {
  const table = el<HTMLTableElement>("breakdown-table");
  const body = table.tBodies[0] ?? table.createTBody();
  body.innerHTML = "";
  const record = state.lastRecord;
  table.hidden = !record;
  if (!record) return;
  const sorted = [...record.candidates].sort((a, b) => a.total - b.total);
  for (const entry of sorted) {
    const row = body.insertRow();
    const isChosen =
      entry.candidate[0] === record.chosen[0] && entry.candidate[1] === record.chosen[1];
    if (isChosen) row.classList.add("chosen-row");
    row.insertCell().textContent = `(${entry.candidate[0]}, ${entry.candidate[1]})`;
    row.insertCell().textContent = entry.l_dist.toFixed(4);
    row.insertCell().textContent = entry.l_sem.toFixed(4);
    row.insertCell().textContent = entry.total.toFixed(4);
  }
}

function renderRelationLegend(): void {
  const legend = el<HTMLUListElement>("relation-legend");
  legend.innerHTML = "";
  for (const [kind, weight] of Object.entries(RELATION_WEIGHTS)) {
    const item = document.createElement("li");
    item.textContent = `${kind.replaceAll("_", " ")}: γ = ${weight}`;
    legend.appendChild(item);
  }
}

async function onExpandSubmit(event: Event): Promise<void> {
  event.preventDefault();
  if (state.busy) return;
  const input = el<HTMLInputElement>("expand-input");
  const status = el("job-status");
  const validationEl = el("validation-error");
  validationEl.textContent = "";

  const outcome = await submitExpansion(client, input.value);
  if ("error" in outcome) {
    validationEl.textContent = outcome.error;
    return;
  }
  state.busy = true;
  status.textContent = `job ${outcome.job} queued…`;
  try {
    const job = await client.pollJob(outcome.job, {
      intervalMs: 1000,
      onUpdate: (j) => {
        status.textContent = `job ${j.id}: ${j.state} (${Math.round(j.progress * 100)}%)`;
      },
    });
    if (job.state === "failed") {
      status.textContent = `job failed: ${job.error ?? "unknown error"}`;
    } else {
      state.lastRecord = await client.getCandidates(outcome.job);
      state.showHeatmap = true;
      state.step = null;
      input.value = "";
      status.textContent = `expanded: ${state.lastRecord.scene_graph.block_name}`;
      await refresh();
    }
  } catch (error) {
    status.textContent = String(error);
  } finally {
    state.busy = false;
    render();
  }
}

export function boot(): void {
  renderRelationLegend();
  el<HTMLFormElement>("expand-form").addEventListener("submit", (e) => {
    void onExpandSubmit(e);
  });
  el<HTMLInputElement>("history-scrubber").addEventListener("input", (event) => {
    const value = Number((event.target as HTMLInputElement).value);
    state.step = value === state.history.length ? null : value;
    render();
  });
  el<HTMLInputElement>("heatmap-toggle").addEventListener("change", (event) => {
    state.showHeatmap = (event.target as HTMLInputElement).checked;
    render();
  });
  void refresh();
}

if (typeof document !== "undefined" && document.getElementById("board")) {
  boot();
}
