// DOM wiring: render the loader, console, badges, grid and chart from
// store snapshots; forward control events to the controller; mirror
// (dataset id, parameters) into the URL so any view can be shared.

import { ApiClient } from "./api.js";
import { buildFrontierSvg } from "./chart.js";
import { DEBOUNCE_MS, ExplorerController } from "./controller.js";
import { buildBadges, buildGrid } from "./gridmodel.js";
import { Store, decodeParams, encodeParams, type ExplorerState } from "./state.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? "http://127.0.0.1:8080";
}

const api = new ApiClient(apiBase());
const store = new Store();
const controller = new ExplorerController(api, store, DEBOUNCE_MS);

const el = (id: string) => document.getElementById(id) as HTMLElement;

function syncUrl(state: ExplorerState): void {
  const query = encodeParams(state.datasetId, state.params);
  const suffix = apiBase() === "http://127.0.0.1:8080" ? "" : `&api=${encodeURIComponent(apiBase())}`;
  history.replaceState(null, "", `?${query}${suffix}`);
}

function renderError(state: ExplorerState): void {
  const banner = el("error-banner");
  banner.textContent = state.error ?? "";
  banner.style.display = state.error ? "block" : "none";
}

function renderHeader(state: ExplorerState): void {
  const header = el("dataset-info");
  if (!state.datasetId) {
    header.textContent = "No dataset loaded.";
    return;
  }
  const rates = state.report
    ? state.groups
        .map((g) => {
          const q = state.report!.groups[g];
          return q
            ? `${g}: fail ${String(q.base_rate_fail)} / succeed ${String(q.base_rate_success)}`
            : g;
        })
        .join("   ")
    : "";
  header.textContent = `dataset ${state.datasetId.slice(0, 12)}…  base rates ${rates}`;
}

function renderControls(state: ExplorerState): void {
  (el("mode-thresholds") as HTMLInputElement).checked = state.params.mode === "thresholds";
  (el("mode-cost") as HTMLInputElement).checked = state.params.mode === "cost_ratio";
  (el("mode-mixing") as HTMLInputElement).checked = state.params.mode === "mixing";
  el("threshold-controls").style.display = state.params.mode === "thresholds" ? "block" : "none";
  el("cost-controls").style.display = state.params.mode === "cost_ratio" ? "block" : "none";
  el("mixing-controls").style.display = state.params.mode === "mixing" ? "block" : "none";

  const sliders = el("threshold-controls");
  const existing = new Set(
    Array.from(sliders.querySelectorAll("input[data-group]")).map(
      (node) => (node as HTMLInputElement).dataset.group,
    ),
  );
  if (
    state.groups.length !== existing.size ||
    state.groups.some((g) => !existing.has(g))
  ) {
    sliders.innerHTML = "";
    for (const group of state.groups) {
      const row = document.createElement("label");
      row.className = "slider-row";
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "0";
      slider.max = "1";
      slider.step = "0.01";
      slider.dataset.group = group;
      slider.addEventListener("input", () =>
        controller.setThreshold(group, Number(slider.value)),
      );
      const caption = document.createElement("span");
      caption.dataset.caption = group;
      row.append(caption, slider);
      sliders.append(row);
    }
  }
  for (const group of state.groups) {
    const slider = sliders.querySelector(
      `input[data-group="${group}"]`,
    ) as HTMLInputElement | null;
    const caption = sliders.querySelector(
      `span[data-caption="${group}"]`,
    ) as HTMLElement | null;
    const value = state.params.thresholds[group] ?? 0.5;
    if (slider && document.activeElement !== slider) slider.value = String(value);
    if (caption) caption.textContent = `${group} threshold: ${value.toFixed(2)}`;
  }
  (el("cost-ratio") as HTMLInputElement).value = String(state.params.costRatio);
  (el("mixing-tol") as HTMLInputElement).value = String(state.params.mixingTol);
  (el("check-tol") as HTMLInputElement).value = String(state.params.tol);
}

function renderBadges(state: ExplorerState): void {
  const host = el("badges");
  host.innerHTML = "";
  if (!state.report) return;
  for (const badge of buildBadges(state.report)) {
    const node = document.createElement("span");
    node.className = `badge badge-${badge.status}`;
    node.title = `max disparity ${badge.disparity}`;
    node.textContent = badge.label;
    host.append(node);
  }
}

function renderGrid(state: ExplorerState): void {
  const host = el("grid");
  if (!state.report) {
    host.innerHTML = "";
    return;
  }
  const rows = buildGrid(state.report, state.baseline);
  const head = ["Group", "N", "Base rate (fail)", "Cond. use acc. (fail)",
    "Cond. use acc. (succ.)", "FNR", "FPR"]
    .map((h) => `<th>${h}</th>`)
    .join("");
  const body = rows
    .map((row) => {
      const cells = row.cells
        .map(
          (cell) =>
            `<td><span class="value">${cell.value}</span>` +
            (cell.delta ? ` <span class="delta">${cell.delta}</span>` : "") +
            `</td>`,
        )
        .join("");
      return `<tr><td>${row.group}</td>${cells}</tr>`;
    })
    .join("");
  host.innerHTML = `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

function renderChart(state: ExplorerState): void {
  const host = el("chart");
  const picker = el("frontier-group") as HTMLSelectElement;
  const options = ["", ...state.groups];
  if (picker.options.length !== options.length) {
    picker.innerHTML = options
      .map((g) => `<option value="${g}">${g || "choose group"}</option>`)
      .join("");
  }
  if (!state.frontierRows || !state.frontierGroup) {
    host.innerHTML = "";
    return;
  }
  const current =
    state.params.mode === "thresholds"
      ? state.params.thresholds[state.frontierGroup] ?? null
      : null;
  host.innerHTML = buildFrontierSvg(state.frontierRows, current);
}

function render(state: ExplorerState): void {
  renderError(state);
  renderHeader(state);
  renderControls(state);
  renderBadges(state);
  renderGrid(state);
  renderChart(state);
  el("busy").style.display = state.busy ? "inline" : "none";
  syncUrl(state);
}

async function boot(): Promise<void> {
  store.subscribe(render);

  const scenarioPicker = el("scenario-picker") as HTMLSelectElement;
  try {
    const { scenarios } = await api.scenarios();
    scenarioPicker.innerHTML =
      `<option value="">pick a scenario…</option>` +
      scenarios.map((name) => `<option value="${name}">${name}</option>`).join("");
  } catch (err) {
    store.update({ error: `service unreachable at ${apiBase()}: ${String(err)}` });
  }
  scenarioPicker.addEventListener("change", () => {
    if (scenarioPicker.value) void controller.loadScenario(scenarioPicker.value);
  });

  const fileInput = el("csv-file") as HTMLInputElement;
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (file) void controller.uploadCsv(await file.text());
  });

  el("mode-thresholds").addEventListener("change", () => controller.setMode("thresholds"));
  el("mode-cost").addEventListener("change", () => controller.setMode("cost_ratio"));
  el("mode-mixing").addEventListener("change", () => controller.setMode("mixing"));
  (el("cost-ratio") as HTMLInputElement).addEventListener("change", (event) =>
    controller.setCostRatio(Number((event.target as HTMLInputElement).value)),
  );
  (el("mixing-tol") as HTMLInputElement).addEventListener("change", (event) =>
    controller.setMixingTol(Number((event.target as HTMLInputElement).value)),
  );
  (el("check-tol") as HTMLInputElement).addEventListener("change", (event) =>
    controller.setTolerance(Number((event.target as HTMLInputElement).value)),
  );
  el("pin-baseline").addEventListener("click", () => controller.pinBaseline());
  (el("frontier-group") as HTMLSelectElement).addEventListener("change", (event) => {
    const group = (event.target as HTMLSelectElement).value;
    if (group) void controller.showFrontier(group);
  });

  const fromUrl = decodeParams(window.location.search);
  store.update({ params: fromUrl.params });
  if (fromUrl.datasetId) await controller.loadDataset(fromUrl.datasetId);
}

void boot();
