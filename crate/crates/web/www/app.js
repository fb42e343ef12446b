import init, { teamShape, shapeColumns, pitchControl, alphaBars, noised } from "./pkg/gentac_web.js";

const LENGTH = 105, WIDTH = 68, SCALE = 7;
const canvas = document.getElementById("pitch");
const ctx = canvas.getContext("2d");

const attack = [[-5, 0], [10, 15], [10, -15], [25, 5], [25, -20], [35, 25]];
const defense = [[20, 0], [30, 10], [30, -10], [40, 0], [40, 20], [48, 0]];
let previous = attack.map(p => p.slice());
let dragging = null;
let bars = [];

const toCanvas = ([x, y]) => [(x + LENGTH / 2) * SCALE, (WIDTH / 2 - y) * SCALE];
const toPitch = (cx, cy) => [cx / SCALE - LENGTH / 2, WIDTH / 2 - cy / SCALE];
const flat = ps => new Float64Array(ps.flat());
const pairs = a => Array.from({ length: a.length / 2 }, (_, i) => [a[2 * i], a[2 * i + 1]]);
const $ = id => document.getElementById(id);

function drawControl(c) {
  const owners = c.owners, cw = canvas.width / c.nx, ch = canvas.height / c.ny;
  for (let j = 0; j < c.ny; j++) {
    for (let i = 0; i < c.nx; i++) {
      const o = owners[j * c.nx + i];
      if (o === 2) continue;
      ctx.fillStyle = o === 0 ? "rgba(220,60,60,0.25)" : "rgba(60,90,220,0.25)";
      ctx.fillRect(i * cw, canvas.height - (j + 1) * ch, cw + 0.5, ch + 0.5);
    }
  }
}

function drawLines() {
  ctx.strokeStyle = "rgba(255,255,255,0.8)";
  ctx.lineWidth = 2;
  ctx.strokeRect(1, 1, canvas.width - 2, canvas.height - 2);
  ctx.beginPath();
  ctx.moveTo(canvas.width / 2, 0);
  ctx.lineTo(canvas.width / 2, canvas.height);
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(canvas.width / 2, canvas.height / 2, 9.15 * SCALE, 0, 2 * Math.PI);
  ctx.stroke();
}

function drawHull(hull) {
  const pts = pairs(hull).map(toCanvas);
  if (pts.length < 2) return;
  ctx.strokeStyle = "#ffd23f";
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.closePath();
  ctx.stroke();
}

function drawPlayers(ps, color, ghost) {
  ps.forEach((p, i) => {
    const [x, y] = toCanvas(p);
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 2 * Math.PI);
    ctx.fill();
    if (ghost) {
      const [gx, gy] = toCanvas(ghost[i]);
      ctx.strokeStyle = color;
      ctx.setLineDash([3, 3]);
      ctx.beginPath();
      ctx.moveTo(x, y);
      ctx.lineTo(gx, gy);
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.beginPath();
      ctx.arc(gx, gy, 4, 0, 2 * Math.PI);
      ctx.stroke();
    }
  });
}

function render() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const arrival = document.querySelector("input[name=rule]:checked").value === "arrival";
  try {
    const c = pitchControl(flat(attack), flat(defense), new Float64Array(), new Float64Array(), arrival, 1.0);
    if ($("show-control").checked) drawControl(c);
    $("obet").textContent = c.obet.toFixed(3);
    $("attack-area").textContent = c.attackArea.toFixed(0);
    $("defense-area").textContent = c.defenseArea.toFixed(0);
    c.free();
  } catch (e) {
    $("obet").textContent = String(e);
  }
  drawLines();

  const shape = teamShape(flat(attack), flat(previous), 25);
  const values = shape.values;
  $("shape").innerHTML = shapeColumns()
    .map((name, i) => `<tr><th>${name}</th><td>${Number.isNaN(values[i]) ? "-" : values[i].toFixed(3)}</td></tr>`)
    .join("");
  if ($("show-hull").checked) drawHull(shape.hull);
  shape.free();

  const step = Number($("step").value);
  $("step-value").textContent = step;
  $("alpha-bar").textContent = step === 0 ? "1" : bars[step - 1].toFixed(4);
  const ghost = step === 0 ? null : pairs(noised(flat(attack), step, BigInt($("seed").value || 0)));
  drawPlayers(attack, "#d33", ghost);
  drawPlayers(defense, "#36c", null);
  drawCurve(step);
}

function drawCurve(step) {
  const c = $("curve"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#333";
  g.beginPath();
  bars.forEach((b, i) => {
    const x = ((i + 1) / bars.length) * c.width, y = (1 - b) * (c.height - 4) + 2;
    i ? g.lineTo(x, y) : g.moveTo(x, y);
  });
  g.stroke();
  if (step > 0) {
    g.fillStyle = "#d33";
    g.beginPath();
    g.arc((step / bars.length) * c.width, (1 - bars[step - 1]) * (c.height - 4) + 2, 4, 0, 2 * Math.PI);
    g.fill();
  }
}

function pick(ev) {
  const r = canvas.getBoundingClientRect();
  const [x, y] = toPitch(ev.clientX - r.left, ev.clientY - r.top);
  for (const team of [attack, defense]) {
    for (const p of team) {
      if (Math.hypot(p[0] - x, p[1] - y) < 1.5) return { team, p };
    }
  }
  return null;
}

canvas.addEventListener("mousedown", ev => {
  dragging = pick(ev);
  if (dragging && dragging.team === attack) previous = attack.map(p => p.slice());
});
canvas.addEventListener("mousemove", ev => {
  if (!dragging) return;
  const r = canvas.getBoundingClientRect();
  const [x, y] = toPitch(ev.clientX - r.left, ev.clientY - r.top);
  dragging.p[0] = Math.max(-LENGTH / 2, Math.min(LENGTH / 2, x));
  dragging.p[1] = Math.max(-WIDTH / 2, Math.min(WIDTH / 2, y));
  render();
});
window.addEventListener("mouseup", () => (dragging = null));
for (const id of ["show-control", "show-hull", "step", "seed"]) $(id).addEventListener("input", render);
document.querySelectorAll("input[name=rule]").forEach(el => el.addEventListener("change", render));

await init();
bars = Array.from(alphaBars());
render();
