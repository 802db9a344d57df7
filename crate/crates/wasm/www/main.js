import init, { ensemble_spectrum, two_line_spectrum, pl_decay } from "./pkg/defect_spectra_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, x, y, { logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, m = 40;
  ctx.clearRect(0, 0, w, h);
  const ys = logY ? y.map((v) => (v > 0 ? Math.log10(v) : NaN)) : y;
  const finite = ys.filter(Number.isFinite);
  if (!finite.length) return;
  const x0 = x[0], x1 = x[x.length - 1];
  let y0 = Math.min(...finite), y1 = Math.max(...finite);
  if (y1 === y0) { y0 -= 0.5; y1 += 0.5; }
  const px = (v) => m + ((v - x0) / (x1 - x0 || 1)) * (w - 1.5 * m);
  const py = (v) => h - m - ((v - y0) / (y1 - y0)) * (h - 1.5 * m);
  ctx.strokeStyle = "#000";
  ctx.beginPath(); ctx.moveTo(m, m / 2); ctx.lineTo(m, h - m); ctx.lineTo(w - m / 2, h - m); ctx.stroke();
  ctx.fillStyle = "#000";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toFixed(3), m, h - m + 14);
  ctx.fillText(x1.toFixed(3), w - m * 1.5, h - m + 14);
  ctx.strokeStyle = "#1f77b4";
  ctx.beginPath();
  let started = false;
  ys.forEach((v, i) => {
    if (!Number.isFinite(v)) return;
    if (started) ctx.lineTo(px(x[i]), py(v)); else { ctx.moveTo(px(x[i]), py(v)); started = true; }
  });
  ctx.stroke();
}

function guard(out, f) {
  try { f(); } catch (e) { $(out).textContent = `error: ${e.message ?? e}`; }
}

function runEnsemble() {
  guard("ens-out", () => {
    const t = performance.now();
    const c = ensemble_spectrum($("ens-mode").value, num("ens-n"), num("ens-range"), num("ens-fwhm"), BigInt(num("ens-seed")));
    plot($("ens-plot"), c.x, c.y);
    const fwhm = Number.isNaN(c.fwhm_nm) ? "unbounded" : `${c.fwhm_nm.toFixed(4)} nm`;
    $("ens-out").textContent = `FWHM ${fwhm}, retention ${c.retention.toFixed(4)}, ${(performance.now() - t).toFixed(0)} ms`;
    c.free();
  });
}

function runTwo() {
  guard("two-out", () => {
    const c = two_line_spectrum(num("two-split"), num("two-fwhm"));
    plot($("two-plot"), c.x, c.y);
    $("two-out").textContent = `±${num("two-split").toFixed(3)} nm: composite FWHM ${c.fwhm_nm.toFixed(4)} nm`;
    c.free();
  });
}

function runDecay() {
  guard("dec-out", () => {
    const d = pl_decay(num("dec-traps"), num("dec-pump"), num("dec-taur"));
    plot($("dec-plot"), d.time_ns, d.counts, { logY: true });
    $("dec-out").textContent =
      `τ_eff ${d.tau_eff_ns.toFixed(3)} ns, τ_nr ${d.tau_nr_ns.toFixed(3)} ns, QE ${(100 * d.qe).toFixed(2)} %`;
    d.free();
  });
}

await init();
$("ens-run").addEventListener("click", runEnsemble);
$("two-split").addEventListener("input", runTwo);
$("two-fwhm").addEventListener("change", runTwo);
$("dec-run").addEventListener("click", runDecay);
runEnsemble();
runTwo();
runDecay();
