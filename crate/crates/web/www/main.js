import init, { beam_cut, range_cut, vitals } from "./pkg/vgradar_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// series: [{x, y, color}], y clipped to [yMin, yMax]
function plot(canvas, series, { xLabel, yLabel, yMin, yMax, marks = [] }) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr;
  canvas.height = h * dpr;
  const ctx = canvas.getContext("2d");
  ctx.setTransform(dpr, 0, 0, dpr, 0, 0);
  ctx.clearRect(0, 0, w, h);
  const pad = { l: 48, r: 12, t: 10, b: 34 };
  const xs = series[0].x;
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => pad.l + ((x - x0) / (x1 - x0)) * (w - pad.l - pad.r);
  const py = (y) => pad.t + (1 - (Math.max(yMin, Math.min(yMax, y)) - yMin) / (yMax - yMin)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#ddd";
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  ctx.lineWidth = 1;
  for (let i = 0; i <= 5; i++) {
    const y = yMin + (i * (yMax - yMin)) / 5;
    ctx.beginPath(); ctx.moveTo(pad.l, py(y)); ctx.lineTo(w - pad.r, py(y)); ctx.stroke();
    ctx.fillText(y.toFixed(0), 8, py(y) + 4);
  }
  for (let i = 0; i <= 6; i++) {
    const x = x0 + (i * (x1 - x0)) / 6;
    ctx.beginPath(); ctx.moveTo(px(x), pad.t); ctx.lineTo(px(x), h - pad.b); ctx.stroke();
    ctx.fillText(Math.abs(x1 - x0) < 10 ? x.toFixed(2) : x.toFixed(0), px(x) - 12, h - pad.b + 14);
  }
  ctx.fillText(xLabel, w / 2 - 20, h - 4);
  ctx.save(); ctx.translate(10, h / 2 + 20); ctx.rotate(-Math.PI / 2); ctx.fillText(yLabel, 0, 0); ctx.restore();

  for (const m of marks) {
    ctx.strokeStyle = m.color; ctx.setLineDash([4, 3]);
    ctx.beginPath(); ctx.moveTo(px(m.x), pad.t); ctx.lineTo(px(m.x), h - pad.b); ctx.stroke();
  }
  ctx.setLineDash([]);
  for (const s of series) {
    ctx.strokeStyle = s.color; ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
  }
}

function guard(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message || e);
  }
}

const deg = (v) => (Number.isFinite(v) ? v.toFixed(2) + "°" : "unbounded");

function drawBeam() {
  $("b-az-v").textContent = $("b-az").value;
  guard($("b-out"), () => {
    const c = beam_cut(num("b-ntx"), num("b-nrx"), num("b-d"), num("b-az"));
    plot($("b-plot"), [{ x: c.angles_deg, y: c.gain_db, color: "#1f5fa8" }], {
      xLabel: "azimuth (deg)", yLabel: "gain (dB)", yMin: -40, yMax: 0,
      marks: [{ x: num("b-az"), color: "#c33" }],
    });
    $("b-out").textContent = `3 dB width ${deg(c.width_deg)}   first null ${deg(c.null_deg)}   lambda/(N d cos) ${deg(c.predicted_deg)}`;
    c.free();
  });
}

function drawRange() {
  $("r-ph-v").textContent = $("r-ph").value;
  guard($("r-out"), () => {
    const r = range_cut(num("r-r1"), num("r-r2"), num("r-ph"), $("r-hann").checked);
    const x = r.ranges_m;
    const lo = Math.min(num("r-r1"), num("r-r2")) - 0.3, hi = Math.max(num("r-r1"), num("r-r2")) + 0.3;
    const keep = x.map((v, i) => (v >= lo && v <= hi ? i : -1)).filter((i) => i >= 0);
    const pick = (a) => keep.map((i) => a[i]);
    plot($("r-plot"), [
      { x: pick(x), y: pick(r.averaged_db), color: "#999" },
      { x: pick(x), y: pick(r.coherent_db), color: "#1f5fa8" },
    ], {
      xLabel: "range (m)", yLabel: "power (dB)", yMin: -40, yMax: 0,
      marks: [{ x: num("r-r1"), color: "#c33" }, { x: num("r-r2"), color: "#c33" }],
    });
    $("r-out").textContent = `separation ${(100 * Math.abs(num("r-r2") - num("r-r1"))).toFixed(2)} cm   peaks: this phase ${r.coherent_peaks}, phase-averaged (grey) ${r.averaged_peaks}`;
    r.free();
  });
}

function runVitals() {
  $("v-out").textContent = "simulating 15 s ...";
  // let the status paint before the synchronous run
  setTimeout(() => guard($("v-out"), () => {
    const t0 = performance.now();
    const v = vitals(num("v-rr"), num("v-hr"), num("v-r"), num("v-az"), num("v-cl"), num("v-snr"), $("v-mode").value, num("v-seed") >>> 0);
    const f = v.freqs_hz;
    const keep = f.map((x, i) => (x <= 3.2 ? i : -1)).filter((i) => i >= 0);
    const pick = (a) => keep.map((i) => a[i]);
    plot($("v-plot"), [
      { x: pick(f), y: pick(v.psi_db), color: "#1f5fa8" },
      { x: pick(f), y: pick(v.dpsi_db), color: "#d07a12" },
    ], {
      xLabel: "frequency (Hz)", yLabel: "power (dB)", yMin: -60, yMax: 0,
      marks: [{ x: num("v-rr") / 60, color: "#1f5fa8" }, { x: num("v-hr") / 60, color: "#d07a12" }],
    });
    $("v-out").textContent = `RR ${v.rr_bpm.toFixed(1)} BPM (blue: phase)   HR ${v.hr_bpm.toFixed(1)} BPM (orange: phase differential)   bin ${v.range_bin}   ${((performance.now() - t0) / 1000).toFixed(1)} s`;
    v.free();
  }), 20);
}

await init();
for (const id of ["b-ntx", "b-nrx", "b-d", "b-az"]) $(id).addEventListener("input", drawBeam);
for (const id of ["r-r1", "r-r2", "r-ph", "r-hann"]) $(id).addEventListener("input", drawRange);
$("v-run").addEventListener("click", runVitals);
window.addEventListener("resize", () => { drawBeam(); drawRange(); });
drawBeam();
drawRange();
runVitals();
