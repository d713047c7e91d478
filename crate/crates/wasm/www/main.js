import init, {
  sampleWeights, keepCounts, resizeWeights, spectrumLogMagnitude,
  penaltyMask, energyHistogram, compactionCurve,
} from "./pkg/front_wasm.js";

const ROWS = 48;
const COLS = 64;
const SCALE = 4;

const $ = (id) => document.getElementById(id);

function value(id) {
  const input = $(id);
  input.nextElementSibling.textContent = input.value;
  return Number(input.value);
}

// Diverging blue-white-red around zero.
function diverging(v) {
  const t = Math.max(-1, Math.min(1, v));
  const a = Math.round(255 * (1 - Math.abs(t)));
  return t < 0 ? [a, a, 255] : [255, a, a];
}

// Dark-to-yellow ramp on [0, 1].
function sequential(v) {
  const t = Math.max(0, Math.min(1, v));
  return [Math.round(255 * Math.min(1, 2 * t)), Math.round(220 * t), Math.round(120 * (1 - t))];
}

function drawMatrix(canvas, data, rows, cols, color) {
  canvas.width = cols * SCALE;
  canvas.height = rows * SCALE;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(cols, rows);
  for (let i = 0; i < rows * cols; i++) {
    const [r, g, b] = color(data[i]);
    img.data.set([r, g, b, 255], 4 * i);
  }
  const tmp = new OffscreenCanvas(cols, rows);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
  return ctx;
}

function maxAbs(data) {
  return data.reduce((m, v) => Math.max(m, Math.abs(v)), 0) || 1;
}

function drawBars(canvas, values, color) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const w = canvas.width / values.length;
  values.forEach((v, i) => {
    const h = v * (canvas.height - 10);
    ctx.fillStyle = color;
    ctx.fillRect(i * w + 2, canvas.height - h, w - 4, h);
  });
}

function drawCurve(canvas, values, marker) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(0, 0, width, height);
  ctx.strokeStyle = "#2a6";
  ctx.lineWidth = 2;
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = ((i + 1) / values.length) * width;
    const y = height - v * (height - 10);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(marker * width, 0);
  ctx.lineTo(marker * width, height);
  ctx.stroke();
}

let source = null;

function updateSource() {
  source = sampleWeights(ROWS, COLS, value("seed"), value("noise"));
  const scale = maxAbs(source);
  drawMatrix($("source"), source, ROWS, COLS, (v) => diverging(v / scale));
  drawBars($("histogram"), energyHistogram(source, ROWS, COLS, 12), "#36c");
  updateResize();
}

function updateResize() {
  const r = value("ratio");
  const rows = value("rows");
  const cols = value("cols");

  const logMag = spectrumLogMagnitude(source, ROWS, COLS);
  const top = Math.max(...logMag);
  const ctx = drawMatrix($("spectrum"), logMag, ROWS, COLS, (v) => sequential((v - top + 6) / 6));
  const [kr, kc] = keepCounts(ROWS, COLS, r);
  ctx.strokeStyle = "#0f0";
  ctx.lineWidth = 2;
  ctx.strokeRect(1, 1, kc * SCALE - 2, kr * SCALE - 2);

  const out = resizeWeights(source, ROWS, COLS, r, rows, cols);
  const scale = maxAbs(out);
  drawMatrix($("target"), out, rows, cols, (v) => diverging(v / scale));
  $("target-caption").textContent =
    `reconstructed ${rows} × ${cols} from a ${kr} × ${kc} block (${kr * kc} coefficients)`;

  drawCurve($("compaction"), compactionCurve(source, ROWS, COLS, 50), r);
}

function updateMask() {
  const mask = penaltyMask(ROWS, COLS, value("gamma"));
  drawMatrix($("mask"), mask, ROWS, COLS, sequential);
}

function guarded(f) {
  return () => {
    try {
      f();
      $("error").textContent = "";
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

await init();
for (const id of ["seed", "noise"]) $(id).addEventListener("input", guarded(updateSource));
for (const id of ["ratio", "rows", "cols"]) $(id).addEventListener("input", guarded(updateResize));
$("gamma").addEventListener("input", guarded(updateMask));
guarded(updateSource)();
guarded(updateMask)();
