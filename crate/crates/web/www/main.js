import init, { run_double_well, run_kl_sweep } from "./pkg/sgmcmc_web.js";

const SWEEP_H = [0.001, 0.005, 0.05, 0.1, 0.2, 0.3];
const COLORS = { truth: "#222", "msgnht-euler": "#c0392b", "msgnht-split": "#2471a3" };
const $ = (id) => document.getElementById(id);

function params() {
  return {
    kind: $("kind").value,
    h: Number($("h").value),
    steps: Math.max(10, Math.floor(Number($("steps").value))),
    noise: Number($("noise").value),
    seed: Math.max(0, Math.floor(Number($("seed").value))),
  };
}

function setStatus(text) {
  $("status").textContent = text;
}

// Maps data coordinates onto a canvas with a small margin.
function frame(canvas, xlo, xhi, ylo, yhi) {
  const ctx = canvas.getContext("2d");
  const m = 30;
  const w = canvas.width - 2 * m;
  const h = canvas.height - 2 * m;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(m, m, w, h);
  return {
    ctx,
    x: (v) => m + ((v - xlo) / (xhi - xlo)) * w,
    y: (v) => m + h - ((Math.min(Math.max(v, ylo), yhi) - ylo) / (yhi - ylo)) * h,
    label(text, px, py) {
      ctx.fillStyle = "#555";
      ctx.font = "11px sans-serif";
      ctx.fillText(text, px, py);
    },
    m,
    w,
    h,
  };
}

function polyline(f, xs, ys, color) {
  f.ctx.strokeStyle = color;
  f.ctx.lineWidth = 1.5;
  f.ctx.beginPath();
  xs.forEach((x, i) => (i === 0 ? f.ctx.moveTo(f.x(x), f.y(ys[i])) : f.ctx.lineTo(f.x(x), f.y(ys[i]))));
  f.ctx.stroke();
}

function drawDensity(run, kind) {
  const centers = run.centers();
  const truth = run.truth();
  const est = run.estimate();
  const top = Math.max(...truth, ...est) * 1.1;
  const f = frame($("density"), centers[0], centers[centers.length - 1], 0, top);
  const width = centers[1] - centers[0];
  f.ctx.fillStyle = COLORS[kind] + "66";
  est.forEach((d, i) => {
    const x0 = f.x(centers[i] - width / 2);
    const x1 = f.x(centers[i] + width / 2);
    f.ctx.fillRect(x0, f.y(d), x1 - x0, f.y(0) - f.y(d));
  });
  polyline(f, centers, truth, COLORS.truth);
  f.label(`${centers[0].toFixed(1)}`, f.m, f.m + f.h + 14);
  f.label(`${centers[centers.length - 1].toFixed(1)}`, f.m + f.w - 20, f.m + f.h + 14);
  f.label("true density (line) and sample histogram", f.m + 4, f.m - 8);
}

function drawThermostat(run, kind) {
  const steps = run.trace_steps();
  const xi = run.trace_xi();
  if (steps.length === 0) {
    frame($("thermostat"), 0, 1, 0, 1).label("no thermostat samples", 40, 60);
    return;
  }
  const lo = Math.min(0, ...xi);
  const hi = Math.max(2, ...xi);
  const f = frame($("thermostat"), 0, steps[steps.length - 1], lo, hi);
  f.ctx.setLineDash([4, 4]);
  polyline(f, [0, steps[steps.length - 1]], [1, 1], "#888");
  f.ctx.setLineDash([]);
  polyline(f, steps, xi, COLORS[kind]);
  f.label(`xi in [${lo.toFixed(2)}, ${hi.toFixed(2)}], dashed line at 1`, f.m + 4, f.m - 8);
}

function drawSweep(kl) {
  const n = SWEEP_H.length;
  const finite = kl.filter(Number.isFinite);
  const lo = Math.log10(Math.max(1e-4, Math.min(...finite, 1)));
  const hi = Math.log10(Math.max(...finite, 1e-3)) + 0.3;
  const f = frame($("kl"), Math.log10(SWEEP_H[0]), Math.log10(SWEEP_H[n - 1]), lo, hi);
  const logh = SWEEP_H.map(Math.log10);
  [["msgnht-euler", kl.slice(0, n)], ["msgnht-split", kl.slice(n)]].forEach(([kind, values]) => {
    const ys = values.map((v) => (Number.isFinite(v) ? Math.log10(v) : hi));
    polyline(f, logh, ys, COLORS[kind]);
    f.ctx.fillStyle = COLORS[kind];
    logh.forEach((x, i) => f.ctx.fillRect(f.x(x) - 3, f.y(ys[i]) - 3, 6, 6));
  });
  SWEEP_H.forEach((h) => f.label(String(h), f.x(Math.log10(h)) - 10, f.m + f.h + 14));
  f.label(`log10 KL from ${lo.toFixed(1)} to ${hi.toFixed(1)}`, f.m + 4, f.m - 8);
}

// Let the status text paint before a long synchronous run.
const nextFrame = () => new Promise((resolve) => requestAnimationFrame(() => setTimeout(resolve, 0)));

async function sample() {
  const p = params();
  setStatus("sampling...");
  await nextFrame();
  try {
    const run = run_double_well(p.kind, p.h, p.steps, p.noise, p.seed);
    drawDensity(run, p.kind);
    drawThermostat(run, p.kind);
    const div = run.diverged_at();
    setStatus(Number.isNaN(div) ? `KL = ${run.kl().toPrecision(4)}` : `diverged at step ${div}`);
    run.free();
  } catch (e) {
    setStatus(`error: ${e.message ?? e}`);
  }
}

async function sweep() {
  const p = params();
  setStatus(`running ${2 * SWEEP_H.length} chains of ${p.steps} steps...`);
  await nextFrame();
  try {
    const kl = run_kl_sweep(new Float64Array(SWEEP_H), p.steps, p.noise, p.seed);
    drawSweep(Array.from(kl));
    setStatus("sweep done");
  } catch (e) {
    setStatus(`error: ${e.message ?? e}`);
  }
}

await init();
$("sample").addEventListener("click", sample);
$("sweep").addEventListener("click", sweep);
setStatus("ready");
