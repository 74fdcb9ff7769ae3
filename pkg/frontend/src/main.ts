import { Editor } from "./editor.js";
import { SnapshotMailbox } from "./mailbox.js";
import { render } from "./render.js";
import {
  ClientMessage,
  ConstraintInfo,
  GraphDoc,
  isGridMode,
  LayoutMode,
  MODES,
  ServerEvent,
} from "./protocol.js";

const canvas = document.getElementById("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const tauSlider = document.getElementById("tau") as HTMLInputElement;
const tauLabel = document.getElementById("tau-label") as HTMLSpanElement;
const sampleButton = document.getElementById("sample") as HTMLButtonElement;
const fileInput = document.getElementById("file") as HTMLInputElement;
const saveButton = document.getElementById("save") as HTMLButtonElement;
const statusEl = document.getElementById("status") as HTMLSpanElement;
const constraintsEl = document.getElementById(
  "constraints"
) as HTMLUListElement;

const mailbox = new SnapshotMailbox();
let socket: WebSocket | null = null;
let constraints: ConstraintInfo[] = [];
let fitted = false;

function sendMessage(msg: ClientMessage): void {
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(msg));
  }
}

const editor = new Editor(sendMessage, () => mailbox.current());

function setStatus(text: string): void {
  statusEl.textContent = text;
}

function renderConstraints(): void {
  constraintsEl.replaceChildren(
    ...constraints.map((c) => {
      const item = document.createElement("li");
      const kind = c.is_eq ? "=" : `+${c.gap.toFixed(1)} ≤`;
      item.textContent = `${c.dim}: ${c.left} ${kind} ${c.right}`;
      if (c.unsatisfiable) {
        item.classList.add("unsat");
      }
      return item;
    })
  );
}

function handleEvent(event: ServerEvent): void {
  if (event.t === "snapshot") {
    mailbox.offer(event);
    setStatus(
      event.converged ? `rev ${event.rev} (converged)` : `rev ${event.rev}`
    );
  } else if (event.t === "constraints") {
    constraints = event.constraints;
    renderConstraints();
  } else if (event.t === "save") {
    const payload = JSON.stringify(
      { graph: event.graph, positions: event.positions },
      null,
      2
    );
    const url = URL.createObjectURL(
      new Blob([payload], { type: "application/json" })
    );
    const a = document.createElement("a");
    a.href = url;
    a.download = "layout.json";
    a.click();
    URL.revokeObjectURL(url);
  } else if (event.t === "error") {
    setStatus(`error: ${event.msg}`);
  }
}

function connect(): void {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  socket = new WebSocket(`${proto}://${location.host}/ws`);
  socket.onopen = () => {
    setStatus("connected");
    // reload the session after a reconnect
    if (editor.graph !== null) {
      mailbox.clear();
      sendMessage({ t: "mode", mode: editor.mode, tau: editor.tau });
      sendMessage({ t: "load", graph: editor.graph });
    }
  };
  socket.onmessage = (e) => handleEvent(JSON.parse(e.data) as ServerEvent);
  socket.onclose = () => {
    setStatus("disconnected, retrying");
    setTimeout(connect, 1000);
  };
}

function sampleGraph(): GraphDoc {
  const nodes = [];
  const edges: [string, string][] = [];
  for (let i = 0; i < 12; i++) {
    nodes.push({ id: `n${i}`, w: 40, h: 30 });
  }
  for (let i = 1; i < 12; i++) {
    edges.push([`n${Math.floor((i - 1) / 2)}`, `n${i}`]);
  }
  edges.push(["n3", "n8"], ["n5", "n10"]);
  return { nodes, edges };
}

function resize(): void {
  canvas.width = canvas.clientWidth * devicePixelRatio;
  canvas.height = canvas.clientHeight * devicePixelRatio;
}

function frame(): void {
  const snap = mailbox.take() ?? mailbox.current();
  if (snap !== null && !fitted && editor.graph !== null) {
    const xs = Object.values(snap.positions);
    if (xs.length > 0) {
      editor.camera.fit(
        {
          xlo: Math.min(...xs.map((p) => p[0])),
          ylo: Math.min(...xs.map((p) => p[1])),
          xhi: Math.max(...xs.map((p) => p[0])),
          yhi: Math.max(...xs.map((p) => p[1])),
        },
        canvas.clientWidth,
        canvas.clientHeight
      );
      fitted = true;
    }
  }
  editor.flushMoves();
  ctx.setTransform(devicePixelRatio, 0, 0, devicePixelRatio, 0, 0);
  render(ctx, editor.camera, editor.graph, snap, {
    width: canvas.clientWidth,
    height: canvas.clientHeight,
    showGrid: isGridMode(editor.mode),
    tau: editor.tau,
    dragId: editor.dragId,
    dragPos: editor.dragPos,
    selectedId: editor.selectedId,
  });
  requestAnimationFrame(frame);
}

for (const mode of MODES) {
  const opt = document.createElement("option");
  opt.value = mode;
  opt.textContent = mode;
  modeSelect.append(opt);
}
modeSelect.value = editor.mode;
tauSlider.value = String(editor.tau);
tauLabel.textContent = `τ = ${editor.tau}`;

modeSelect.addEventListener("change", () => {
  fitted = false;
  editor.setMode(modeSelect.value as LayoutMode);
});
tauSlider.addEventListener("change", () => {
  const tau = Number(tauSlider.value);
  tauLabel.textContent = `τ = ${tau}`;
  editor.setTau(tau);
});
sampleButton.addEventListener("click", () => {
  fitted = false;
  mailbox.clear();
  editor.loadGraph(sampleGraph());
});
fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  const doc = JSON.parse(await file.text()) as GraphDoc;
  fitted = false;
  mailbox.clear();
  editor.loadGraph(doc);
});
saveButton.addEventListener("click", () => sendMessage({ t: "save" }));

canvas.addEventListener("pointerdown", (e) => {
  canvas.setPointerCapture(e.pointerId);
  editor.pointerDown(e.offsetX, e.offsetY);
});
canvas.addEventListener("pointermove", (e) => {
  editor.pointerMove(e.offsetX, e.offsetY);
});
canvas.addEventListener("pointerup", () => editor.pointerUp());
canvas.addEventListener("pointercancel", () => editor.pointerUp());
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  editor.wheel(e.offsetX, e.offsetY, e.deltaY);
});

window.addEventListener("resize", resize);
resize();
connect();
requestAnimationFrame(frame);
