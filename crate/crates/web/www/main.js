import init, { fbmPath, hurstFit, kellyCurve } from "./pkg/fractal_ls_web.js";

const $ = (id) => document.getElementById(id);

function setup(canvas) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr;
  canvas.height = h * dpr;
  const ctx = canvas.getContext("2d");
  ctx.setTransform(dpr, 0, 0, dpr, 0, 0);
  ctx.clearRect(0, 0, w, h);
  return { ctx, w, h };
}

function scales(xs, ys, w, h, pad = 36) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  return { sx, sy, x0, x1, y0, y1 };
}

function axes(ctx, s, w, h, xlabel, ylabel) {
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(36, 10);
  ctx.lineTo(36, h - 36);
  ctx.lineTo(w - 10, h - 36);
  ctx.stroke();
  ctx.fillText(s.y1.toPrecision(3), 2, 14);
  ctx.fillText(s.y0.toPrecision(3), 2, h - 38);
  ctx.fillText(s.x0.toPrecision(3), 36, h - 22);
  ctx.fillText(s.x1.toPrecision(3), w - 50, h - 22);
  ctx.fillText(xlabel, w / 2 - 20, h - 8);
  ctx.save();
  ctx.translate(12, h / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
}

function line(ctx, xs, ys, s, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(s.sx(x), s.sy(ys[i])) : ctx.moveTo(s.sx(x), s.sy(ys[i]))));
  ctx.stroke();
}

function report(id, err) {
  $(id).textContent = String(err.message || err);
  $(id).className = "out err";
}

function drawPath() {
  const h = parseFloat($("fbm-h").value);
  const n = parseInt($("fbm-n").value, 10);
  const seed = Math.max(0, parseInt($("fbm-seed").value, 10) || 0);
  $("fbm-h-v").textContent = h.toFixed(2);
  let path;
  try {
    path = fbmPath(h, n, seed);
  } catch (e) {
    return report("fbm-msg", e);
  }
  const { ctx, w, h: ch } = setup($("fbm-canvas"));
  const xs = Array.from(path, (_, i) => i);
  const s = scales(xs, Array.from(path), w, ch);
  axes(ctx, s, w, ch, "t", "B_H(t)");
  line(ctx, xs, Array.from(path), s, "#2563eb");
  $("fbm-msg").className = "out";
  $("fbm-msg").textContent = `${n} points, true H ${h.toFixed(2)}`;
  drawCover(path, h);
}

function drawCover(path, trueH) {
  let fit;
  try {
    fit = hurstFit(path);
  } catch (e) {
    return report("cover-msg", e);
  }
  const xs = Array.from(fit.logWindows);
  const ys = Array.from(fit.logAmplitudes);
  const { ctx, w, h } = setup($("cover-canvas"));
  const s = scales(xs, ys, w, h);
  axes(ctx, s, w, h, "ln window", "ln amplitude");
  ctx.fillStyle = "#dc2626";
  xs.forEach((x, i) => {
    ctx.beginPath();
    ctx.arc(s.sx(x), s.sy(ys[i]), 3.5, 0, 2 * Math.PI);
    ctx.fill();
  });
  const lx = [s.x0, s.x1];
  line(ctx, lx, lx.map((x) => fit.intercept + fit.slope * x), s, "#111");
  $("cover-msg").className = "out";
  $("cover-msg").textContent =
    `estimated H ${fit.h.toFixed(3)} ± ${fit.hErr.toFixed(3)} (true ${trueH.toFixed(2)})` +
    (fit.degraded ? ", clamped" : "");
  fit.free();
}

function drawKelly() {
  const mu = parseFloat($("k-mu").value);
  const theta = parseFloat($("k-theta").value);
  const h = parseFloat($("k-h").value);
  $("k-mu-v").textContent = mu.toFixed(4);
  $("k-theta-v").textContent = theta.toFixed(3);
  $("k-h-v").textContent = h.toFixed(2);
  let ws;
  try {
    ws = Array.from(kellyCurve(mu, theta, h, 252));
  } catch (e) {
    return report("kelly-msg", e);
  }
  const xs = ws.map((_, i) => i + 1);
  const { ctx, w, h: ch } = setup($("kelly-canvas"));
  const s = scales(xs, ws, w, ch);
  axes(ctx, s, w, ch, "horizon N (days)", "weight");
  line(ctx, xs, ws, s, "#059669");
  $("kelly-msg").className = "out";
  $("kelly-msg").textContent =
    `weight at N=1: ${ws[0].toFixed(2)}, N=126: ${ws[125].toFixed(2)}, N=252: ${ws[251].toFixed(2)}`;
}

await init();
for (const id of ["fbm-h", "fbm-n", "fbm-seed"]) $(id).addEventListener("input", drawPath);
for (const id of ["k-mu", "k-theta", "k-h"]) $(id).addEventListener("input", drawKelly);
window.addEventListener("resize", () => { drawPath(); drawKelly(); });
drawPath();
drawKelly();
