import init, {
  qubit_retrieved, qubit_phase_map, cv_landscape, cv_point, cv_samples, cv_estimate,
} from "./pkg/jointstat_web.js";

const $ = (id) => document.getElementById(id);
const fmt = (x) => (Math.abs(x) < 5e-13 ? "0" : x.toPrecision(6));
const OUTCOMES = [[-1, -1], [-1, 1], [1, -1], [1, 1]];
const PHASE_N = 200;
const LAND_N = 120;

function report(err) {
  $("error").textContent = err ? String(err.message ?? err) : "";
}

// signed value to color: red below zero, blue above
function shade(v, scale) {
  const a = Math.min(1, Math.abs(v) / scale);
  return v < 0
    ? [255, Math.round(255 * (1 - a)), Math.round(255 * (1 - a))]
    : [Math.round(255 * (1 - a)), Math.round(255 * (1 - 0.6 * a)), 255];
}

function paint(canvas, n, values, scale) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const [r, g, b] = shade(values[i * n + j], scale);
      const k = 4 * ((n - 1 - i) * n + j);
      img.data.set([r, g, b, 255], k);
    }
  }
  return img;
}

function table(el, caption, p) {
  const at = (x, y) => p[OUTCOMES.findIndex(([a, b]) => a === x && b === y)];
  const cell = (v) => `<td class="${v < -1e-12 ? "neg" : ""}">${fmt(v)}</td>`;
  el.innerHTML =
    `<caption>${caption}</caption><tr><th>x \\ y</th><th>−1</th><th>+1</th></tr>` +
    [-1, 1].map((x) => `<tr><th>${x > 0 ? "+1" : "−1"}</th>${cell(at(x, -1))}${cell(at(x, 1))}</tr>`).join("");
}

let phaseImg;

function drawQubit() {
  const eta = +$("eta").value, s = +$("s").value, pol = +$("pol").value, az = +$("az").value;
  $("eta-v").textContent = eta.toFixed(2);
  $("s-v").textContent = s.toFixed(2);
  $("pol-v").textContent = pol.toFixed(2);
  $("az-v").textContent = az.toFixed(2);
  try {
    const sv = [s * Math.sin(pol) * Math.cos(az), s * Math.sin(pol) * Math.sin(az), s * Math.cos(pol)];
    const r = JSON.parse(qubit_retrieved(eta, ...sv));
    table($("observed"), "observed p̃(x, y)", r.observed);
    table($("retrieved"), "retrieved p(x, y)", r.retrieved);
    $("qubit-verdict").textContent =
      `${r.nonclassical ? "nonclassical" : "classical"}: after rotating s onto z the smallest entry is ` +
      `${fmt(r.min_entry_rotated)}; negativity sets in for η < √3|s| = ${fmt(r.eta_threshold)}.`;
    report();
  } catch (e) {
    report(e);
  }
  const c = $("phase"), ctx = c.getContext("2d");
  ctx.putImageData(phaseImg, 0, 0);
  ctx.strokeStyle = "#000";
  ctx.beginPath();
  ctx.arc(s * (PHASE_N - 1), PHASE_N - eta * PHASE_N, 3, 0, 2 * Math.PI);
  ctx.stroke();
}

let landImg;

function drawLandscape() {
  const nbar = +$("nbar").value;
  $("nbar-v").textContent = nbar.toFixed(2);
  landImg = paint($("landscape"), LAND_N, cv_landscape(nbar, LAND_N), 0.25);
  drawCv();
}

function drawCv() {
  const t2 = +$("t2").value, theta = +$("theta").value, nbar = +$("nbar").value;
  $("t2-v").textContent = t2.toFixed(2);
  $("theta-v").textContent = theta.toFixed(3);
  try {
    const p = JSON.parse(cv_point(t2, theta, nbar));
    $("cv-info").textContent =
      `γ = ${fmt(p.gamma)}, threshold ${fmt(p.threshold)}, ` +
      `min eigenvalue ${fmt(p.min_eigenvalue)}: ${p.verdict}`;
    report();
  } catch (e) {
    report(e);
  }
  const c = $("landscape"), ctx = c.getContext("2d");
  ctx.putImageData(landImg, 0, 0);
  ctx.strokeStyle = "#000";
  ctx.beginPath();
  ctx.arc((theta / Math.PI) * (LAND_N - 1), LAND_N - t2 * LAND_N, 2.5, 0, 2 * Math.PI);
  ctx.stroke();
}

function runEstimate() {
  const t2 = +$("t2").value, theta = +$("theta").value, nbar = +$("nbar").value;
  const n = Math.round(+$("n").value), seed = BigInt(Math.max(0, Math.round(+$("seed").value)));
  try {
    const xy = cv_samples(t2, theta, nbar, Math.min(n, 5000), seed);
    const c = $("scatter"), ctx = c.getContext("2d");
    ctx.clearRect(0, 0, c.width, c.height);
    ctx.fillStyle = "rgba(30, 60, 160, 0.35)";
    const scale = c.width / 8;
    for (let k = 0; k < xy.length; k += 2) {
      ctx.fillRect(c.width / 2 + xy[k] * scale, c.height / 2 - xy[k + 1] * scale, 1.5, 1.5);
    }
    const e = JSON.parse(cv_estimate(t2, theta, nbar, n, seed));
    $("cv-estimate").textContent =
      `γ̂ = ${fmt(e.gamma_hat)} (true ${fmt(e.gamma_true)}); estimated verdict ${e.verdict_hat}, true ${e.verdict_true}.`;
    report();
  } catch (err) {
    report(err);
  }
}

await init();
phaseImg = paint($("phase"), PHASE_N, qubit_phase_map(PHASE_N), 0.25);
for (const id of ["eta", "s", "pol", "az"]) $(id).addEventListener("input", drawQubit);
for (const id of ["t2", "theta"]) $(id).addEventListener("input", drawCv);
$("nbar").addEventListener("input", drawLandscape);
$("landscape").addEventListener("click", (ev) => {
  const rect = ev.target.getBoundingClientRect();
  const fx = (ev.clientX - rect.left) / rect.width, fy = (ev.clientY - rect.top) / rect.height;
  $("theta").value = (fx * Math.PI).toFixed(3);
  $("t2").value = Math.min(0.98, Math.max(0.02, 1 - fy)).toFixed(2);
  drawCv();
});
$("run").addEventListener("click", runEstimate);
drawQubit();
drawLandscape();
