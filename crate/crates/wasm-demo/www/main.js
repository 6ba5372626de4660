import init, { growth_demo, tracking_demo, adp_schedule } from "../pkg/igsf_wasm_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const $ = (id) => document.getElementById(id);

function checked(name) {
  return [...document.querySelectorAll(`input[name=${name}]:checked`)].map((e) => e.value).join(",");
}

// lines: [{ xs, ys, color, dots }]
function plot(canvas, lines) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const xs = lines.flatMap((l) => l.xs).filter(Number.isFinite);
  const ys = lines.flatMap((l) => l.ys).filter(Number.isFinite);
  if (!xs.length) return;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const pad = 30;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.fillStyle = "#666";
  ctx.fillText(y1.toPrecision(3), 2, pad - 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad + 12);
  for (const l of lines) {
    ctx.strokeStyle = ctx.fillStyle = l.color;
    if (l.dots) {
      l.xs.forEach((x, i) => ctx.fillRect(sx(x) - 1, sy(l.ys[i]) - 1, 3, 3));
      continue;
    }
    ctx.beginPath();
    l.xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(l.ys[i])) : ctx.moveTo(sx(x), sy(l.ys[i]))));
    ctx.stroke();
  }
}

function legend(el, entries) {
  el.innerHTML = entries.map(([name, color]) => `<span style="color:${color}">■ ${name}</span>`).join("");
}

function failures(run) {
  return run.filters.filter((f) => f.error).map((f) => `${f.label}: ${f.error}`).join("\n");
}

function runGrowth() {
  $("g-err").textContent = "";
  try {
    const run = JSON.parse(
      growth_demo(+$("g-seed").value, +$("g-steps").value, +$("g-var").value, +$("g-n").value, checked("g-f")),
    );
    const lines = [{ xs: run.times, ys: run.truth.map((r) => r[0]), color: "#000" }];
    const names = [["truth", "#000"]];
    run.filters.filter((f) => !f.error).forEach((f, k) => {
      const rms = Math.sqrt(f.estimate.reduce((s, e, i) => s + (e[0] - run.truth[i][0]) ** 2, 0) / f.estimate.length);
      lines.push({ xs: run.times, ys: f.estimate.map((r) => r[0]), color: COLORS[k] });
      names.push([`${f.label} (RMSE ${rms.toFixed(2)})`, COLORS[k]]);
    });
    plot($("g-plot"), lines);
    legend($("g-legend"), names);
    $("g-err").textContent = failures(run);
  } catch (e) {
    $("g-err").textContent = String(e);
  }
}

function runTracking() {
  $("t-err").textContent = "";
  try {
    const run = JSON.parse(tracking_demo(+$("t-seed").value, +$("t-n").value, checked("t-f")));
    const lines = [{ xs: run.truth.map((r) => r[0]), ys: run.truth.map((r) => r[1]), color: "#000" }];
    const names = [["truth", "#000"]];
    run.filters.filter((f) => !f.error).forEach((f, k) => {
      lines.push({ xs: f.estimate.map((r) => r[0]), ys: f.estimate.map((r) => r[1]), color: COLORS[k] });
      names.push([f.label, COLORS[k]]);
    });
    plot($("t-plot"), lines);
    legend($("t-legend"), names);
    $("t-err").textContent = failures(run);
  } catch (e) {
    $("t-err").textContent = String(e);
  }
}

function showSchedule() {
  $("s-err").textContent = "";
  try {
    const v = Array.from(adp_schedule(+$("s-a").value, $("s-kind").value, +$("s-g").value));
    const xs = v.map((_, i) => i + 1);
    plot($("s-plot"), [{ xs, ys: v, color: COLORS[0] }, { xs, ys: v, color: COLORS[0], dots: true }]);
    $("s-values").textContent = v.map((a, i) => `α${i + 1} = ${a.toPrecision(6)}`).join(", ");
  } catch (e) {
    $("s-err").textContent = String(e);
  }
}

await init();
$("g-run").onclick = runGrowth;
$("t-run").onclick = runTracking;
$("s-run").onclick = showSchedule;
runGrowth();
showSchedule();
