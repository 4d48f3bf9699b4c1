"use strict";

const config = { brush: 18, margin: 0.15, api: "/api" };

const pad = document.getElementById("pad");
const ctx = pad.getContext("2d");
const results = document.getElementById("results");
const prompt = document.getElementById("prompt");
const banner = document.getElementById("banner");

let strokes = [];
let current = null;
let mode = "letters";
let catalog = {};
let inflight = null;

function redraw() {
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, pad.width, pad.height);
  ctx.strokeStyle = "#fff";
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  for (const s of strokes) {
    ctx.lineWidth = s.width;
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
    if (s.points.length === 1) ctx.lineTo(s.points[0][0] + 0.1, s.points[0][1]);
    ctx.stroke();
  }
}

/// Crops the ink around its centre of mass, box-averages down to side x side
/// and rescales so the darkest cell is 1. Returns null for an empty canvas.
function rasterize(side) {
  const { width, height } = pad;
  const ink = ctx.getImageData(0, 0, width, height).data;
  let mass = 0, cx = 0, cy = 0, x0 = width, y0 = height, x1 = -1, y1 = -1;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const v = ink[(y * width + x) * 4] / 255;
      if (v === 0) continue;
      mass += v; cx += v * x; cy += v * y;
      x0 = Math.min(x0, x); x1 = Math.max(x1, x);
      y0 = Math.min(y0, y); y1 = Math.max(y1, y);
    }
  }
  if (mass === 0) return null;
  cx /= mass; cy /= mass;
  const half = Math.max(cx - x0, x1 - cx, cy - y0, y1 - cy) * (1 + config.margin) + 1;
  const out = new Float32Array(side * side);
  const cell = (2 * half) / side;
  for (let i = 0; i < side; i++) {
    for (let j = 0; j < side; j++) {
      let sum = 0, n = 0;
      for (let y = Math.floor(cy - half + i * cell); y < cy - half + (i + 1) * cell; y++) {
        for (let x = Math.floor(cx - half + j * cell); x < cx - half + (j + 1) * cell; x++) {
          n++;
          if (x >= 0 && y >= 0 && x < width && y < height) sum += ink[(y * width + x) * 4] / 255;
        }
      }
      out[i * side + j] = n ? sum / n : 0;
    }
  }
  const peak = Math.max(...out);
  return peak > 0 ? Array.from(out, (v) => v / peak) : null;
}

function render(response) {
  const total = response.probabilities.reduce((a, b) => a + b, 0);
  if (Math.abs(total - 1) > 1e-3) throw new Error("probabilities sum to " + total);
  results.innerHTML = "";
  for (const r of response.topk.slice(0, 3)) {
    const label = document.createElement("div");
    label.textContent = `${r.name} ${(100 * r.probability).toFixed(1)}%`;
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.width = `${Math.round(240 * r.probability)}px`;
    results.append(label, bar);
  }
}

async function classify() {
  const entry = catalog[mode];
  if (!entry) return;
  const pixels = rasterize(entry.input_side);
  if (!pixels) {
    prompt.style.display = "";
    results.innerHTML = "";
    return;
  }
  prompt.style.display = "none";
  if (inflight) inflight.abort();
  inflight = new AbortController();
  try {
    const res = await fetch(`${config.api}/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model: mode, pixels, topk: 3 }),
      signal: inflight.signal,
    });
    const body = await res.json();
    if (!res.ok) {
      console.error("predict failed", res.status, body);
      results.textContent = "Could not classify this drawing.";
      return;
    }
    banner.style.display = "none";
    render(body);
  } catch (err) {
    if (err.name === "AbortError") return;
    console.error(err);
    banner.style.display = "block";
  }
}

async function loadCatalog() {
  try {
    const res = await fetch(`${config.api}/models`);
    const body = await res.json();
    catalog = Object.fromEntries(body.models.map((m) => [m.name, m]));
    banner.style.display = "none";
  } catch (err) {
    console.error(err);
    banner.style.display = "block";
  }
}

function point(e) {
  const r = pad.getBoundingClientRect();
  const x = Math.min(pad.width, Math.max(0, ((e.clientX - r.left) * pad.width) / r.width));
  const y = Math.min(pad.height, Math.max(0, ((e.clientY - r.top) * pad.height) / r.height));
  return [x, y];
}

pad.addEventListener("pointerdown", (e) => {
  current = { width: config.brush, points: [point(e)] };
  strokes.push(current);
  pad.setPointerCapture(e.pointerId);
  redraw();
});
pad.addEventListener("pointermove", (e) => {
  if (!current) return;
  current.points.push(point(e));
  redraw();
});
pad.addEventListener("pointerup", () => {
  current = null;
  classify();
});

document.getElementById("clear").addEventListener("click", () => {
  strokes = [];
  redraw();
  results.innerHTML = "";
  prompt.style.display = "";
});

for (const radio of document.querySelectorAll("input[name=mode]")) {
  radio.addEventListener("change", async (e) => {
    mode = e.target.value;
    await loadCatalog();
    classify();
  });
}

redraw();
loadCatalog();
