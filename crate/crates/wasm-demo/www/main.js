import init, { analyze_function, inject_preview, explore_type, catalog } from "./pkg/injdetect_wasm_demo.js";

const $ = (id) => document.getElementById(id);
let points = [];
let toScreen = null;

function showError(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function call(f, ...args) {
  try {
    const out = JSON.parse(f(...args));
    showError(null);
    return out;
  } catch (e) {
    showError(e);
    return null;
  }
}

function fillSelect(el, values) {
  el.innerHTML = values.map((v) => `<option>${v}</option>`).join("");
}

function stats(el, pairs) {
  el.innerHTML = pairs.map(([k, v]) => `<span><b>${k}</b> ${v}</span>`).join("");
}

function analyze() {
  const r = call(analyze_function, $("src").value, Number($("len").value), Number($("width").value));
  if (!r) return;
  stats($("analyze-stats"), [
    ["leaves", r.leaves],
    ["paths", r.path_count],
    ["non-zero dims", `${r.active_dims}/${r.dim}`],
    ["degenerate", r.degenerate],
  ]);
  const more = r.path_count > r.paths.length ? `\n... ${r.path_count - r.paths.length} more` : "";
  $("paths").textContent = r.paths.join("\n") + more;
}

function inject() {
  const r = call(inject_preview, $("src").value, $("attack-preview").value);
  if (!r) return;
  stats($("inject-stats"), [
    ["cosine to original", r.cosine === null ? "n/a" : r.cosine.toFixed(4)],
    ["distance", r.distance.toFixed(4)],
    ["prologue fallback", r.fallback_prologue],
  ]);
  $("injected").textContent = r.injected;
}

function colorOf(p) {
  const noise = p.role === "noise";
  if (p.injected) return noise ? "#d0342c" : "#7a1fa2";
  return noise ? "#f2b134" : "#4a7bd0";
}

function draw() {
  const c = $("plot");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  if (points.length === 0) return;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const pad = 24;
  const sx = (c.width - 2 * pad) / (x1 - x0 || 1);
  const sy = (c.height - 2 * pad) / (y1 - y0 || 1);
  toScreen = (p) => [pad + (p.x - x0) * sx, c.height - pad - (p.y - y0) * sy];
  // injected points last so they stay visible on top of duplicates
  const order = [...points].sort((a, b) => Number(a.injected) - Number(b.injected));
  for (const p of order) {
    const [x, y] = toScreen(p);
    ctx.beginPath();
    ctx.arc(x, y, p.injected ? 6 : 4, 0, 2 * Math.PI);
    ctx.fillStyle = colorOf(p);
    ctx.globalAlpha = 0.8;
    ctx.fill();
    if (p.rank !== null && p.rank <= 10) {
      ctx.globalAlpha = 1;
      ctx.fillStyle = "#000";
      ctx.fillText(String(p.rank), x + 7, y - 5);
    }
  }
  ctx.globalAlpha = 1;
}

function explore() {
  $("eps-val").textContent = Number($("eps").value).toFixed(2);
  $("ms-val").textContent = $("min-samples").value;
  const r = call(
    explore_type,
    $("type").value,
    $("attack-explore").value,
    Number($("eps").value),
    Number($("min-samples").value),
    Number($("seed").value) >>> 0,
  );
  if (!r) return;
  points = r.points;
  const fmt = (v) => (v === null ? "undefined" : v.toFixed(3));
  stats($("explore-stats"), [
    ["clusters", r.clusters],
    ["noise", r.noise],
    ["injected", r.injected],
    ["precision@10", fmt(r.precision_at_10)],
    ["AP", fmt(r.average_precision)],
    ...(r.all_noise ? [["flag", "all noise"]] : []),
    ...(r.fallback_to_core ? [["flag", "no border points"]] : []),
  ]);
  draw();
}

function pick(ev) {
  if (!toScreen) return;
  const rect = $("plot").getBoundingClientRect();
  const scale = $("plot").width / rect.width;
  const mx = (ev.clientX - rect.left) * scale;
  const my = (ev.clientY - rect.top) * scale;
  let best = null;
  let bestD = 100;
  for (const p of points) {
    const [x, y] = toScreen(p);
    const d = (x - mx) ** 2 + (y - my) ** 2;
    if (d < bestD || (d === bestD && p.injected)) {
      best = p;
      bestD = d;
    }
  }
  if (!best) return;
  const rank = best.rank === null ? "not ranked" : `rank ${best.rank}`;
  $("selected").textContent = `${best.id} (${best.role}, ${rank})\n\n${best.source}`;
}

async function main() {
  await init();
  const cat = JSON.parse(catalog());
  fillSelect($("type"), cat.function_types);
  fillSelect($("attack-preview"), cat.attacks);
  fillSelect($("attack-explore"), cat.attacks);
  $("analyze").onclick = analyze;
  $("inject").onclick = inject;
  for (const id of ["type", "attack-explore", "seed", "eps", "min-samples"]) {
    $(id).addEventListener("input", explore);
  }
  $("plot").addEventListener("click", pick);
  analyze();
  explore();
}

main().catch(showError);
