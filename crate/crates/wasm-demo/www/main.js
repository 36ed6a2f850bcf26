import init, { ids_curve, lyapunov_curve, event_series } from "./pkg/kifer_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// series: [{ xs, ys, color, dash }]
function plot(canvas, series, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 44;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.xs), ys = series.flatMap((s) => s.ys);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  let y0 = Math.min(0, ...ys), y1 = Math.max(...ys);
  if (y1 === y0) y1 = y0 + 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  for (let k = 0; k <= 4; k++) {
    const x = x0 + ((x1 - x0) * k) / 4, y = y0 + ((y1 - y0) * k) / 4;
    ctx.fillText(x.toPrecision(3), px(x) - 10, h - pad + 14);
    ctx.fillText(y.toPrecision(3), 4, py(y) + 4);
  }
  ctx.fillText(xLabel, w / 2, h - 8);
  ctx.fillText(yLabel, 4, pad - 10);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ? [5, 4] : []);
    ctx.beginPath();
    s.xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function grid(a, b, n) {
  return Array.from({ length: n }, (_, k) => a + ((b - a) * k) / (n - 1));
}

function timed(statusId, f) {
  const status = $(statusId);
  status.textContent = "computing…";
  // let the status repaint before the synchronous call
  setTimeout(() => {
    const t = performance.now();
    try {
      f();
      status.textContent = `done in ${((performance.now() - t) / 1000).toFixed(2)} s`;
    } catch (e) {
      status.textContent = `error: ${e.message ?? e}`;
    }
  }, 10);
}

function runIds() {
  timed("ids-status", () => {
    const free = $("ids-free").checked;
    const [a, b] = free ? [-2.5, 2.5] : [-6, 3];
    const points = 181;
    const ys = ids_curve(num("ids-dim"), num("ids-rep"), num("ids-seed"), a, b, points, free);
    plot($("ids-plot"), [{ xs: grid(a, b, points), ys: Array.from(ys), color: "#1f5fbf" }], "E", "N(E)");
  });
}

function runLe() {
  timed("le-status", () => {
    const free = $("le-free").checked;
    const points = num("le-points");
    const [a, b] = [-6, 4];
    const ys = lyapunov_curve(a, b, points, num("le-steps"), num("le-seed"), free);
    plot($("le-plot"), [{ xs: grid(a, b, points), ys: Array.from(ys), color: "#b0302a" }], "E", "L(E)");
  });
}

function runEvents() {
  timed("ev-status", () => {
    const v = Array.from(event_series(num("ev-n")));
    const [full, half] = v.splice(-2);
    const xs = v.map((_, i) => i + 1);
    plot(
      $("ev-plot"),
      [
        { xs, ys: v, color: "#2a7a3a" },
        { xs, ys: xs.map(() => full), color: "#888", dash: true },
        { xs, ys: xs.map(() => half), color: "#555", dash: true },
      ],
      "n",
      "P(E_n)",
    );
  });
}

await init();
$("ids-run").onclick = runIds;
$("le-run").onclick = runLe;
$("ev-run").onclick = runEvents;
runEvents();
