import init, { teleport_qubit, teleport_and_reconstruct, rates_from_counts } from "./pkg/railbridge_wasm.js";

const num = (id) => Number(document.getElementById(id).value);
const checked = (id) => document.getElementById(id).checked;

function show(id, fn) {
  const el = document.getElementById(id);
  el.classList.remove("error");
  try {
    return fn(el);
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e);
  }
}

// Diverging palette: red for negative values, blue for positive.
function draw(canvas, grid, scale) {
  const ctx = canvas.getContext("2d");
  const n = grid.length;
  const img = ctx.createImageData(n, n);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const v = Math.max(-1, Math.min(1, grid[i][j] / scale));
      const k = 4 * ((n - 1 - j) * n + i);
      img.data[k] = v < 0 ? 255 : Math.round(255 * (1 - v));
      img.data[k + 1] = Math.round(255 * (1 - Math.abs(v)));
      img.data[k + 2] = v > 0 ? 255 : Math.round(255 * (1 + v));
      img.data[k + 3] = 255;
    }
  }
  const off = new OffscreenCanvas(n, n);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

await init();

document.getElementById("t-run").onclick = () =>
  show("t-out", (el) => {
    const r = JSON.parse(teleport_qubit(num("t-theta"), num("t-phi"), num("t-g1"), num("t-g23"),
      num("t-alpha"), num("t-etad"), checked("t-exact")));
    el.textContent = [
      `fidelity        ${r.fidelity.toFixed(4)}`,
      `probability     ${r.probability.toExponential(3)} per pulse`,
      `false triples   ${(100 * r.bad_fraction).toFixed(2)} %`,
      `Bloch vector    (${r.bloch.map((x) => x.toFixed(3)).join(", ")})`,
    ].join("\n");
  });

document.getElementById("w-run").onclick = () =>
  show("w-info", (el) => {
    el.textContent = "working...";
    setTimeout(() => show("w-info", (el) => {
      const r = JSON.parse(teleport_and_reconstruct(num("w-theta"), num("w-phi"), num("w-n"), num("w-eta"),
        checked("w-correct"), BigInt(num("w-seed")), 81, 3.5));
      draw(document.getElementById("w-sim"), r.simulated, 1 / Math.PI);
      draw(document.getElementById("w-rec"), r.reconstructed, 1 / Math.PI);
      el.textContent = `left: simulated, right: reconstructed; fidelity ${r.fidelity.toFixed(4)} after ${r.iterations} iterations`;
    }), 0);
  });

document.getElementById("r-run").onclick = () =>
  show("r-out", (el) => {
    const r = JSON.parse(rates_from_counts(num("r-laser"), num("r-alpha"), num("r-g1"), num("r-g23"),
      num("r-cc"), num("r-k")));
    el.textContent = [
      `eta_d           ${r.eta_d.toFixed(4)}`,
      `gamma1          ${r.gamma1.toFixed(4)}`,
      `gamma23         ${r.gamma23.toFixed(4)}`,
      `alpha           ${r.alpha.toFixed(4)}`,
      `triple rate     ${r.predicted_triple_rate.toFixed(4)} Hz`,
    ].join("\n");
  });
