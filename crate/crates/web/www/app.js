// Demo driver: calls the wasm bindings and renders the three panels with
// plain canvas drawing. No frameworks.

import init, { scenario_view, run_round, sweep_curves } from "./pkg/lgcp_web.js";

const $ = (id) => document.getElementById(id);
const CAV_COLORS = [
  "#64b5f6", "#81c784", "#ffb74d", "#e57373", "#ba68c8", "#4dd0e1",
  "#fff176", "#a1887f", "#90a4ae", "#f06292", "#aed581", "#7986cb",
];
const PARADIGM_COLORS = { lgcp: "#64b5f6", vehicle: "#e57373", edge: "#ffb74d" };

const cavColor = (id) => CAV_COLORS[id % CAV_COLORS.length];
const areaColor = (area) => `hsl(${(area * 47) % 360} 60% 55%)`;

function controls() {
  return {
    seed: Number($("seed").value) >>> 0,
    nCavs: Number($("nCavs").value),
    nBg: Number($("nBg").value),
    delta: Number($("delta").value),
  };
}

function parse(text) {
  const v = JSON.parse(text);
  if (v.error) throw new Error(v.error);
  return v;
}

function clear(ctx) {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

// --- map panel ---------------------------------------------------------------

function drawMap(view) {
  const canvas = $("map");
  const ctx = canvas.getContext("2d");
  clear(ctx);
  const pad = 10;
  const sx = (canvas.width - 2 * pad) / view.grid.width_m;
  const sy = (canvas.height - 2 * pad) / view.grid.height_m;
  const X = (x) => pad + x * sx;
  const Y = (y) => pad + y * sy;

  // Occupied cells.
  const cellW = view.grid.cell_w, cellH = view.grid.cell_h, nCols = view.grid.n_cols;
  ctx.fillStyle = "rgba(138, 147, 163, 0.18)";
  for (const cell of view.occupied) {
    const cx = (cell % nCols) * cellW;
    const cy = Math.floor(cell / nCols) * cellH;
    ctx.fillRect(X(cx), Y(cy), cellW * sx, cellH * sy);
  }
  // Assigned areas, tinted by group confidence.
  for (const g of view.groups) {
    const cx = (g.area % nCols) * cellW;
    const cy = Math.floor(g.area / nCols) * cellH;
    ctx.fillStyle = `rgba(100, 181, 246, ${0.12 + 0.5 * g.confidence})`;
    ctx.fillRect(X(cx), Y(cy), cellW * sx, cellH * sy);
  }
  // Grid lines.
  ctx.strokeStyle = "rgba(138, 147, 163, 0.15)";
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (let c = 0; c <= view.grid.n_cols; c++) {
    const x = X(Math.min(c * cellW, view.grid.width_m));
    ctx.moveTo(x, Y(0)); ctx.lineTo(x, Y(view.grid.height_m));
  }
  for (let r = 0; r <= view.grid.n_rows; r++) {
    const y = Y(Math.min(r * cellH, view.grid.height_m));
    ctx.moveTo(X(0), y); ctx.lineTo(X(view.grid.width_m), y);
  }
  ctx.stroke();

  const cavPos = new Map(view.cavs.map((c) => [c.id, c]));
  // Member -> leader arrows through the area's cell center.
  for (const g of view.groups) {
    const leader = cavPos.get(g.leader);
    for (const m of g.members) {
      if (m === g.leader) continue;
      const member = cavPos.get(m);
      ctx.strokeStyle = "rgba(216, 222, 233, 0.35)";
      ctx.beginPath();
      ctx.moveTo(X(member.x), Y(member.y));
      ctx.lineTo(X(leader.x), Y(leader.y));
      ctx.stroke();
    }
    // Mark the serviced area with its leader's color.
    ctx.strokeStyle = cavColor(g.leader);
    ctx.lineWidth = 1.5;
    const cx = (g.area % nCols) * cellW;
    const cy = Math.floor(g.area / nCols) * cellH;
    ctx.strokeRect(X(cx) + 1, Y(cy) + 1, cellW * sx - 2, cellH * sy - 2);
    ctx.lineWidth = 1;
  }
  // Background vehicles.
  ctx.fillStyle = "rgba(138, 147, 163, 0.7)";
  for (const b of view.background) {
    ctx.fillRect(X(b.x) - 2, Y(b.y) - 2, 4, 4);
  }
  // CAVs.
  const leaders = new Set(view.groups.map((g) => g.leader));
  for (const c of view.cavs) {
    ctx.beginPath();
    ctx.arc(X(c.x), Y(c.y), 6, 0, 2 * Math.PI);
    ctx.fillStyle = cavColor(c.id);
    ctx.fill();
    if (leaders.has(c.id)) {
      ctx.strokeStyle = "#fff";
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.lineWidth = 1;
    }
    ctx.fillStyle = "#0d1117";
    ctx.font = "bold 8px system-ui";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(String(c.id), X(c.x), Y(c.y));
  }
}

// --- schedule panel -----------------------------------------------------------

function drawGantt(schedule) {
  const canvas = $("gantt");
  const ctx = canvas.getContext("2d");
  clear(ctx);
  const left = 38, top = 8, bottom = 24;
  const rows = schedule.n_subchannels;
  const slots = Math.max(Number(schedule.makespan_slots), 1);
  const rowH = (canvas.height - top - bottom) / rows;
  const colW = (canvas.width - left - 8) / slots;

  ctx.font = "10px system-ui";
  ctx.fillStyle = "#8a93a3";
  ctx.textAlign = "right";
  ctx.textBaseline = "middle";
  for (let r = 0; r < rows; r++) {
    ctx.fillText(`z${r}`, left - 6, top + (r + 0.5) * rowH);
  }
  ctx.textAlign = "center";
  ctx.textBaseline = "top";
  const slotStep = Math.max(1, Math.ceil(slots / 20));
  for (let s = 0; s < slots; s += slotStep) {
    ctx.fillText(String(s), left + (s + 0.5) * colW, canvas.height - bottom + 6);
  }
  ctx.strokeStyle = "rgba(138, 147, 163, 0.15)";
  ctx.beginPath();
  for (let s = 0; s <= slots; s++) {
    ctx.moveTo(left + s * colW, top);
    ctx.lineTo(left + s * colW, top + rows * rowH);
  }
  ctx.stroke();

  ctx.textBaseline = "middle";
  for (const t of schedule.tuples) {
    const x = left + Number(t.slot) * colW;
    const y = top + t.subchannel * rowH;
    ctx.fillStyle = areaColor(t.area);
    ctx.fillRect(x + 1, y + 2, colW - 2, rowH - 4);
    if (colW > 34) {
      ctx.fillStyle = "#0d1117";
      ctx.fillText(`${t.src}→${t.dst}`, x + colW / 2, y + rowH / 2);
    }
  }
  if (schedule.tuples.length === 0) {
    ctx.fillStyle = "#8a93a3";
    ctx.textAlign = "center";
    ctx.fillText("no transmissions (empty assignment)", canvas.width / 2, top + rows * rowH / 2);
  }
}

// --- chart panel ---------------------------------------------------------------

function drawBars(round) {
  $("chartTitle").textContent = "Paradigm comparison";
  const canvas = $("chart");
  const ctx = canvas.getContext("2d");
  clear(ctx);
  const groups = round.paradigms;
  const metrics = [
    { key: "volume_mbit", label: "volume (Mbit)" },
    { key: "latency_ms", label: "latency (ms), deadline 100" },
    { key: "objective", label: "objective (1/s)" },
  ];
  const panelW = canvas.width / metrics.length;
  ctx.font = "11px system-ui";
  metrics.forEach((metric, mi) => {
    const x0 = mi * panelW + 34;
    const x1 = (mi + 1) * panelW - 14;
    const y0 = 26, y1 = canvas.height - 34;
    const max = Math.max(...groups.map((g) => g[metric.key]), 1e-9);
    ctx.fillStyle = "#8a93a3";
    ctx.textAlign = "left";
    ctx.textBaseline = "top";
    ctx.fillText(metric.label, x0, 6);
    const barW = (x1 - x0) / groups.length;
    groups.forEach((g, gi) => {
      const h = (y1 - y0) * (g[metric.key] / max);
      const x = x0 + gi * barW;
      ctx.fillStyle = PARADIGM_COLORS[g.name] ?? "#90a4ae";
      ctx.fillRect(x + 6, y1 - h, barW - 12, h);
      ctx.fillStyle = "#d8dee9";
      ctx.textAlign = "center";
      ctx.fillText(g.name, x + barW / 2, y1 + 6);
      ctx.fillText(format(g[metric.key]), x + barW / 2, Math.max(y1 - h - 14, y0));
    });
    if (metric.key === "latency_ms" && max > 100) {
      const y = y1 - (y1 - y0) * (100 / max);
      ctx.strokeStyle = "#e57373";
      ctx.setLineDash([4, 4]);
      ctx.beginPath();
      ctx.moveTo(x0, y);
      ctx.lineTo(x1, y);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  });
}

function drawSweep(view, metricKey, title, logScale) {
  $("chartTitle").textContent = title;
  const canvas = $("chart");
  const ctx = canvas.getContext("2d");
  clear(ctx);
  const left = 52, right = 14, top = 18, bottom = 30;
  const w = canvas.width - left - right;
  const h = canvas.height - top - bottom;
  const series = new Map();
  for (const p of view.points) {
    if (!series.has(p.paradigm)) series.set(p.paradigm, []);
    series.get(p.paradigm).push(p);
  }
  const xs = view.points.map((p) => p.x);
  const ys = view.points.map((p) => p[metricKey]).filter((v) => v > 0 || !logScale);
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  let yMin = Math.min(...ys), yMax = Math.max(...ys);
  if (logScale) { yMin = Math.log10(Math.max(yMin, 1e-9)); yMax = Math.log10(yMax); }
  if (yMax === yMin) yMax = yMin + 1;
  const X = (x) => left + ((x - xMin) / (xMax - xMin || 1)) * w;
  const Y = (v) => {
    const val = logScale ? Math.log10(Math.max(v, 1e-9)) : v;
    return top + h - ((val - yMin) / (yMax - yMin)) * h;
  };

  ctx.strokeStyle = "rgba(138, 147, 163, 0.25)";
  ctx.strokeRect(left, top, w, h);
  ctx.font = "10px system-ui";
  ctx.fillStyle = "#8a93a3";
  ctx.textAlign = "center";
  ctx.textBaseline = "top";
  for (let i = 0; i <= 4; i++) {
    const x = xMin + (i / 4) * (xMax - xMin);
    ctx.fillText(format(x), X(x), top + h + 6);
  }
  ctx.textAlign = "right";
  ctx.textBaseline = "middle";
  for (let i = 0; i <= 4; i++) {
    const v = yMin + (i / 4) * (yMax - yMin);
    const label = logScale ? format(Math.pow(10, v)) : format(v);
    ctx.fillText(label, left - 6, top + h - (i / 4) * h);
  }
  ctx.textAlign = "left";
  ctx.fillText(view.x_label, left + 4, canvas.height - 10);

  let li = 0;
  for (const [name, pts] of series) {
    const color = PARADIGM_COLORS[name] ?? "#90a4ae";
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    pts.forEach((p, i) => {
      const x = X(p.x), y = Y(p[metricKey]);
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.lineWidth = 1;
    ctx.fillStyle = color;
    ctx.fillText(name, left + 8 + li * 70, top + 8);
    li++;
  }
}

function format(v) {
  if (!isFinite(v)) return "-";
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000) return v.toExponential(1);
  if (a >= 10) return v.toFixed(1);
  if (a >= 0.01) return v.toFixed(3);
  return v.toExponential(1);
}

// --- wiring --------------------------------------------------------------------

function showError(e) {
  $("error").textContent = e ? `error: ${e.message ?? e}` : "";
}

function doRun() {
  setActive("runBtn");
  const c = controls();
  const round = parse(run_round(c.seed, c.nCavs, c.nBg, c.delta));
  drawMap(round.scenario);
  drawGantt(round.schedule);
  drawBars(round);
  const s = round.scenario;
  const lines = [
    `occupied areas ${s.occupied.length}, assigned groups ${s.groups.length}, ` +
      `global confidence ${s.global_confidence.toFixed(3)}` +
      (s.dropped_members ? `, dropped members ${s.dropped_members}` : ""),
    `schedule: ${round.schedule.tuples.length} packets, makespan ` +
      `${round.schedule.makespan_slots} slots x ${round.schedule.tau_ms.toFixed(3)} ms, ` +
      `joint transmit+fuse latency ${round.schedule.joint_latency_ms.toFixed(2)} ms`,
    `stages (ms): t1 ${round.breakdown.t1_ms.toFixed(3)}  t2 ${round.breakdown.t2_ms.toFixed(3)}  ` +
      `t3 ${round.breakdown.t3_ms.toFixed(2)}  t4 ${round.breakdown.t4_ms.toFixed(3)}  ` +
      `total ${round.breakdown.total_ms.toFixed(2)}`,
  ];
  $("stats").textContent = lines.join("\n");
}

function doSweepDelta() {
  setActive("sweepDeltaBtn");
  const c = controls();
  const view = parse(sweep_curves(c.seed, c.nBg, "delta_g"));
  const first = parse(scenario_view(c.seed, 5, c.nBg, c.delta));
  drawMap(first);
  drawSweep(view, "global_confidence", "Global confidence vs gain threshold (5 CAVs)", false);
  const vols = view.points.map((p) => p.volume_mbit);
  $("stats").textContent =
    `volume shrinks from ${format(Math.max(...vols))} to ${format(Math.min(...vols))} Mbit ` +
    `as the threshold tightens; confidence is non-increasing in the threshold.`;
}

function doSweepCavs() {
  setActive("sweepCavsBtn");
  const c = controls();
  const view = parse(sweep_curves(c.seed, c.nBg, "n_cavs"));
  drawSweep(view, "latency_ms", "End-to-end latency vs CAV count (log scale)", true);
  const lgcp = view.points.filter((p) => p.paradigm === "lgcp");
  const edge = view.points.filter((p) => p.paradigm === "edge");
  const last = lgcp.length - 1;
  $("stats").textContent =
    `at ${view.points[view.points.length - 1].x} CAVs: lgcp ${format(lgcp[last].latency_ms)} ms vs ` +
    `edge ${format(edge[last].latency_ms)} ms; ` +
    `volume ${format(lgcp[last].volume_mbit)} vs ${format(edge[last].volume_mbit)} Mbit.`;
}

function setActive(id) {
  for (const b of ["runBtn", "sweepDeltaBtn", "sweepCavsBtn"]) {
    $(b).classList.toggle("active", b === id);
  }
}

function refresh(action) {
  try {
    showError(null);
    action();
  } catch (e) {
    showError(e);
  }
}

async function main() {
  await init();
  let current = doRun;
  const rerun = () => refresh(current);
  $("runBtn").onclick = () => { current = doRun; rerun(); };
  $("sweepDeltaBtn").onclick = () => { current = doSweepDelta; rerun(); };
  $("sweepCavsBtn").onclick = () => { current = doSweepCavs; rerun(); };
  for (const id of ["seed", "nCavs", "nBg", "delta"]) {
    $(id).oninput = () => {
      $("nCavsValue").textContent = $("nCavs").value;
      $("nBgValue").textContent = $("nBg").value;
      $("deltaValue").textContent = Number($("delta").value).toFixed(3);
      rerun();
    };
  }
  rerun();
}

main().catch(showError);
