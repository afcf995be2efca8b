import init, { Demo } from "./pkg/tubeloc_demo.js";

const $ = (id) => document.getElementById(id);
const CLUSTER_COLORS = ["#d62828", "#457b9d", "#e9c46a", "#8338ec", "#2a9d8f", "#f77f00"];

let demo = null;
let iterations = [];

function status(text) {
  $("status").textContent = text;
}

function fillSelect(select, values, label = (v) => v) {
  const keep = select.value;
  select.innerHTML = "";
  for (const v of values) {
    const o = document.createElement("option");
    o.value = v;
    o.textContent = label(v);
    select.appendChild(o);
  }
  if (values.map(String).includes(keep)) select.value = keep;
}

function fillFrames(videoSelect, frameSelect) {
  fillSelect(frameSelect, Array.from(demo.keyFrames(Number(videoSelect.value))));
}

function generate() {
  const spec = {
    seed: Number($("seed").value),
    descriptor_noise: Number($("noise").value),
    distractors: Number($("distractors").value),
  };
  try {
    demo?.free();
    demo = new Demo(JSON.stringify(spec));
  } catch (e) {
    status(`generation failed: ${e}`);
    return;
  }
  iterations = [];
  $("iteration").disabled = true;
  $("iteration-label").textContent = "-";
  const videos = [...Array(demo.videoCount()).keys()];
  fillSelect($("video"), videos);
  fillSelect($("video-b"), videos);
  if (videos.length > 1) $("video-b").value = 1;
  fillFrames($("video"), $("frame"));
  fillFrames($("video-b"), $("frame-b"));
  status(`${videos.length} videos generated`);
  redraw();
}

function discover() {
  const config = {
    iterations: Number($("iterations").value),
    alpha: Number($("alpha").value),
    lambda: Number($("lambda").value),
  };
  status("running discovery...");
  setTimeout(() => {
    const t0 = performance.now();
    try {
      iterations = JSON.parse(demo.discover(JSON.stringify(config)));
    } catch (e) {
      status(`discovery failed: ${e}`);
      return;
    }
    const s = $("iteration");
    s.max = iterations.length;
    s.value = iterations.length;
    s.disabled = false;
    const last = iterations[iterations.length - 1];
    status(`done in ${((performance.now() - t0) / 1000).toFixed(2)} s, final mean IoU ${last.mean_iou.toFixed(3)}`);
    redraw();
  }, 10);
}

function selected() {
  return { v: Number($("video").value), t: Number($("frame").value) };
}

function strokeBox(ctx, b, k, color, width, dash = []) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.strokeRect(b[0] * k, b[1] * k, b[2] * k, b[3] * k);
  ctx.setLineDash([]);
}

function drawScene() {
  const { v, t } = selected();
  const scene = JSON.parse(demo.scene(v, t));
  const canvas = $("scene");
  const ctx = canvas.getContext("2d");
  const k = Math.min(canvas.width / scene.width, canvas.height / scene.height);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const p of scene.points) {
    ctx.fillStyle = CLUSTER_COLORS[p.cluster % CLUSTER_COLORS.length];
    ctx.globalAlpha = 0.6;
    ctx.fillRect(p.x * k - 1.5, p.y * k - 1.5, 3, 3);
  }
  ctx.globalAlpha = 1;
  for (const p of scene.proposals) if (!p.planted) strokeBox(ctx, p.box, k, "#bbb", 1);
  for (const p of scene.proposals) if (p.planted) strokeBox(ctx, p.box, k, "#2a9d4b", 2, [6, 4]);
  const it = iterations[Number($("iteration").value) - 1];
  let caption = `${scene.video_id} (${scene.class_label}), frame ${t}`;
  if (it) {
    const tube = it.tubes.find((x) => x.video_id === scene.video_id);
    const region = tube?.boxes.find(([f]) => f === t);
    if (region) strokeBox(ctx, region[1], k, "#d62828", 2.5);
    caption += `, tube IoU ${tube.iou.toFixed(3)}`;
    $("iteration-label").textContent = `${it.iteration} (mean IoU ${it.mean_iou.toFixed(3)})`;
  }
  ctx.fillStyle = "#222";
  ctx.font = "12px system-ui";
  ctx.fillText(caption, 6, canvas.height - 6);
}

function ramp(x) {
  const c = Math.max(0, Math.min(1, x));
  return `rgb(${Math.round(255 * c)}, ${Math.round(80 + 120 * c * (1 - c))}, ${Math.round(255 * (1 - c))})`;
}

function drawHeat() {
  const { v, t } = selected();
  const map = JSON.parse(demo.motionHeatMap(v, t, Number($("box-w").value), Number($("box-h").value), 40));
  const canvas = $("heat");
  const ctx = canvas.getContext("2d");
  const cw = canvas.width / map.cols;
  const ch = canvas.height / map.rows;
  let best = 0;
  let at = 0;
  map.values.forEach((val, i) => {
    if (val > best) [best, at] = [val, i];
    ctx.fillStyle = ramp(val / 4);
    ctx.fillRect((i % map.cols) * cw, Math.floor(i / map.cols) * ch, cw + 0.5, ch + 0.5);
  });
  $("heat-info").textContent =
    `box ${map.box_width.toFixed(0)} x ${map.box_height.toFixed(0)}; ` +
    `peak ${best.toFixed(2)} of 4 at column ${at % map.cols}, row ${Math.floor(at / map.cols)} (top-left corner position)`;
}

function drawHough() {
  const { v, t } = selected();
  const vb = Number($("video-b").value);
  const tb = Number($("frame-b").value);
  const h = JSON.parse(demo.houghMarginal(v, t, vb, tb));
  const canvas = $("hough");
  const ctx = canvas.getContext("2d");
  const n = h.bins;
  const cell = canvas.width / n;
  const max = Math.max(...h.marginal, 1e-300);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      ctx.fillStyle = ramp(Math.sqrt(h.marginal[i * n + j] / max));
      ctx.fillRect(i * cell, j * cell, cell + 0.5, cell + 0.5);
    }
  }
  ctx.strokeStyle = "#fff";
  ctx.beginPath();
  ctx.moveTo(canvas.width / 2, 0);
  ctx.lineTo(canvas.width / 2, canvas.height);
  ctx.moveTo(0, canvas.height / 2);
  ctx.lineTo(canvas.width, canvas.height / 2);
  ctx.stroke();
  const [du, dv, ds] = h.peak;
  $("hough-info").textContent =
    `x: horizontal offset, y: vertical offset, both in [-${h.range}, ${h.range}] frame units; ` +
    `strongest bin du ${du.toFixed(3)}, dv ${dv.toFixed(3)}, log-scale ${ds.toFixed(3)}`;
}

function drawCurve() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pad = 28;
  const w = canvas.width - 2 * pad;
  const hgt = canvas.height - 2 * pad;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, hgt);
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  ctx.fillText("1.0", 4, pad + 4);
  ctx.fillText("0.0", 4, pad + hgt + 4);
  if (iterations.length === 0) return;
  const x = (i) => pad + (iterations.length === 1 ? w / 2 : (i * w) / (iterations.length - 1));
  const y = (val) => pad + hgt * (1 - val);
  ctx.strokeStyle = "#d62828";
  ctx.lineWidth = 2;
  ctx.beginPath();
  iterations.forEach((it, i) => (i === 0 ? ctx.moveTo(x(i), y(it.mean_iou)) : ctx.lineTo(x(i), y(it.mean_iou))));
  ctx.stroke();
  ctx.fillStyle = "#d62828";
  iterations.forEach((it, i) => {
    ctx.beginPath();
    ctx.arc(x(i), y(it.mean_iou), 3, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#555";
    ctx.fillText(String(it.iteration), x(i) - 3, pad + hgt + 14);
    ctx.fillStyle = "#d62828";
  });
}

function redraw() {
  if (!demo) return;
  drawScene();
  drawHeat();
  drawHough();
  drawCurve();
}

await init();
$("generate").addEventListener("click", generate);
$("discover").addEventListener("click", discover);
$("iteration").addEventListener("input", drawScene);
$("video").addEventListener("change", () => {
  fillFrames($("video"), $("frame"));
  redraw();
});
$("video-b").addEventListener("change", () => {
  fillFrames($("video-b"), $("frame-b"));
  drawHough();
});
for (const id of ["frame", "frame-b"]) $(id).addEventListener("change", redraw);
for (const id of ["box-w", "box-h"]) $(id).addEventListener("input", drawHeat);
generate();
