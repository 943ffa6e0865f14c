import init, { describe, run_check, tail_path, series } from "./pkg/tailproc_wasm.js";

const $ = (id) => document.getElementById(id);
const model = () => $("model").value.trim();
const seed = () => BigInt($("seed").value || 0);

function about() {
  try {
    $("about").textContent = describe(model());
  } catch (e) {
    $("about").textContent = "error: " + e.message;
  }
}

function table(csv) {
  const lines = csv.trim().split("\n");
  const notes = lines.filter((l) => l.startsWith("#"));
  const rows = lines.filter((l) => !l.startsWith("#")).map((l) => l.split(","));
  const t = document.createElement("table");
  rows.forEach((cells, i) => {
    const tr = t.insertRow();
    // Check names may contain commas; keep the numeric tail aligned.
    const fixed = cells.length > 8 ? [cells[0], cells.slice(1, cells.length - 6).join(","), ...cells.slice(-6)] : cells;
    fixed.forEach((c) => {
      const td = document.createElement(i ? "td" : "th");
      td.textContent = i && /^-?[0-9.]+(e-?\d+)?$/.test(c) ? Number(c).toPrecision(5) : c.replace(/^"|"$/g, "");
      tr.appendChild(td);
    });
    if (i && fixed[7] === "false") tr.className = "fail";
  });
  const box = $("rows");
  box.replaceChildren(t);
  if (notes.length) {
    const pre = document.createElement("pre");
    pre.textContent = notes.join("\n");
    box.appendChild(pre);
  }
  const failed = rows.slice(1).filter((r) => r[r.length - 1] === "false").length;
  return `${rows.length - 1} checks, ${failed} failed`;
}

function plot(canvas, xs, values, stems) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const top = Math.max(1e-9, ...values.map(Math.abs));
  const y = (v) => h / 2 - (v / top) * (h / 2 - 10);
  const x = (i) => 10 + (i / Math.max(1, values.length - 1)) * (w - 20);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(0, h / 2);
  ctx.lineTo(w, h / 2);
  ctx.stroke();
  ctx.strokeStyle = ctx.fillStyle = "#246";
  ctx.beginPath();
  values.forEach((v, i) => {
    if (stems) {
      ctx.moveTo(x(i), h / 2);
      ctx.lineTo(x(i), y(v));
      ctx.fillRect(x(i) - 2, y(v) - 2, 4, 4);
    } else if (i) ctx.lineTo(x(i), y(v));
    else ctx.moveTo(x(i), y(v));
  });
  ctx.stroke();
  if (xs) {
    ctx.fillStyle = "#555";
    xs.forEach((j, i) => ctx.fillText(String(j), x(i) - 3, h - 2));
  }
  ctx.fillText(`max |value| ${top.toPrecision(4)}`, 12, 12);
}

await init();

$("preset").onchange = (e) => {
  if (e.target.value) $("model").value = e.target.value;
  about();
};
$("model").onchange = about;
$("run").onclick = () => {
  $("status").textContent = "running...";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const summary = table(run_check($("suite").value, model(), Number($("n").value), seed()));
      $("status").textContent = `${summary} in ${((performance.now() - t0) / 1000).toFixed(1)} s`;
    } catch (e) {
      $("status").textContent = "error: " + e.message;
    }
  }, 10);
};
$("draw").onclick = () => {
  try {
    const lo = -10, hi = 10;
    const ys = Array.from(tail_path(model(), seed(), lo, hi));
    plot($("path"), ys.map((_, i) => lo + i), ys, true);
    $("seed").value = Number($("seed").value) + 1;
  } catch (e) {
    $("about").textContent = "error: " + e.message;
  }
};
$("simulate").onclick = () => {
  try {
    plot($("series"), null, Array.from(series(model(), Number($("len").value), seed())), false);
  } catch (e) {
    $("about").textContent = "error: " + e.message;
  }
};
about();
