/** Studio wiring: upload an image, paint foreground/background strokes,
 * tune parameters, render on the server, judge with the comparison slider.
 */

import { ApiError, RenderResult, SessionInfo, StudioApi } from "./api.js";
import { BACKGROUND, FOREGROUND } from "./rle.js";
import { BrushLabel, PanelParams, RenderMode, RenderQueue, StrokeBuffer, SyncScheduler, ViewState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const fileInput = el<HTMLInputElement>("file-input");
const sessionMeta = el<HTMLSpanElement>("session-meta");
const emptyHint = el<HTMLDivElement>("empty-hint");
const stack = el<HTMLDivElement>("stack");
const imgBase = el<HTMLImageElement>("img-base");
const resultLayer = el<HTMLDivElement>("result-layer");
const imgResult = el<HTMLImageElement>("img-result");
const overlay = el<HTMLCanvasElement>("canvas-overlay");
const divider = el<HTMLDivElement>("divider");
const compareRow = el<HTMLDivElement>("compare-row");
const compareSlider = el<HTMLInputElement>("compare");
const showStrokes = el<HTMLInputElement>("show-strokes");
const brushRadius = el<HTMLInputElement>("brush-radius");
const radiusReadout = el<HTMLSpanElement>("radius-readout");
const undoBtn = el<HTMLButtonElement>("undo-btn");
const clearBtn = el<HTMLButtonElement>("clear-btn");
const strokeCounts = el<HTMLSpanElement>("stroke-counts");
const modeSelect = el<HTMLSelectElement>("mode-select");
const renderBtn = el<HTMLButtonElement>("render-btn");
const statusLine = el<HTMLSpanElement>("status-line");
const staleBadge = el<HTMLSpanElement>("stale-badge");
const hintLine = el<HTMLDivElement>("hint");
const syncBanner = el<HTMLDivElement>("sync-banner");
const retryBtn = el<HTMLButtonElement>("retry-btn");

// the API may live on another port when the studio is served statically;
// default matches `cofkit serve`
const apiBase =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8765";
const api = new StudioApi(apiBase);

const view = new ViewState();
const renders = new RenderQueue();

let session: SessionInfo | null = null;
let buffer: StrokeBuffer | null = null;
let scribbleSync: SyncScheduler | null = null;
let lastResultUrl: string | null = null;

const STROKE_STYLE: Record<number, string> = {
  [FOREGROUND]: "rgba(255, 64, 64, 0.72)",
  [BACKGROUND]: "rgba(64, 128, 255, 0.72)",
};

function overlayCtx(): CanvasRenderingContext2D {
  const ctx = overlay.getContext("2d");
  if (ctx === null) throw new Error("2d canvas unsupported");
  return ctx;
}

function redrawOverlay(): void {
  if (buffer === null) return;
  const { width, height, data } = buffer.raster;
  const ctx = overlayCtx();
  const pixels = ctx.createImageData(width, height);
  for (let i = 0; i < data.length; i++) {
    const v = data[i] as number;
    if (v === 0) continue;
    const at = i * 4;
    pixels.data[at] = v === FOREGROUND ? 255 : 64;
    pixels.data[at + 1] = v === FOREGROUND ? 64 : 128;
    pixels.data[at + 2] = v === FOREGROUND ? 64 : 255;
    pixels.data[at + 3] = 184;
  }
  ctx.clearRect(0, 0, width, height);
  ctx.putImageData(pixels, 0, 0);
}

function drawDisc(x: number, y: number, label: BrushLabel, radius: number): void {
  const ctx = overlayCtx();
  ctx.save();
  if (label === "erase") {
    ctx.globalCompositeOperation = "destination-out";
    ctx.fillStyle = "rgba(0,0,0,1)";
  } else {
    ctx.fillStyle = STROKE_STYLE[label === "foreground" ? FOREGROUND : BACKGROUND] as string;
  }
  ctx.beginPath();
  ctx.arc(x, y, radius, 0, Math.PI * 2);
  ctx.fill();
  ctx.restore();
}

function canvasPoint(event: PointerEvent): { x: number; y: number } {
  const rect = overlay.getBoundingClientRect();
  return {
    x: (event.clientX - rect.left) * (overlay.width / rect.width),
    y: (event.clientY - rect.top) * (overlay.height / rect.height),
  };
}

function updateCounts(): void {
  if (buffer === null) return;
  const { foreground, background } = buffer.counts();
  strokeCounts.textContent = `${foreground} fg / ${background} bg px`;
}

function updateStatus(): void {
  staleBadge.hidden = !view.resultStale;
  const info = view.lastRender;
  if (info === null) {
    statusLine.textContent = "";
    return;
  }
  statusLine.textContent =
    `${info.mode} in ${info.seconds.toFixed(2)}s${info.cached ? " (cached)" : ""}`;
}

function showHint(text: string): void {
  hintLine.textContent = text;
  hintLine.hidden = false;
}

function hideHint(): void {
  hintLine.hidden = true;
}

function applyCompare(): void {
  const p = view.comparePosition;
  resultLayer.style.clipPath = `inset(0 ${100 - p}% 0 0)`;
  divider.style.left = `${p}%`;
}

function noteScribbleEdit(): void {
  if (scribbleSync !== null) scribbleSync.request();
  view.noteScribbleEdit();
  updateCounts();
  updateStatus();
}

// --- upload ---------------------------------------------------------------

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file === undefined) return;
  void openImage(file);
});

async function openImage(file: File): Promise<void> {
  sessionMeta.textContent = "uploading…";
  const old = session;
  try {
    session = await api.createSession(file, file.name);
  } catch (err) {
    session = old;
    sessionMeta.textContent = "";
    showHint(err instanceof ApiError ? err.message : "upload failed; is the service running?");
    return;
  }
  if (old !== null) void api.close(old.sessionId).catch(() => undefined);
  hideHint();
  syncBanner.hidden = true;

  const { width, height } = session;
  sessionMeta.textContent = `${width}×${height}`;
  imgBase.src = session.previewUrl;
  overlay.width = width;
  overlay.height = height;
  buffer = new StrokeBuffer(width, height);
  buffer.brushRadius = Number(brushRadius.value);
  buffer.activeLabel = activeLabel();
  scribbleSync = new SyncScheduler(sendScribbles, 250, () => {
    syncBanner.hidden = false;
  });

  if (lastResultUrl !== null) URL.revokeObjectURL(lastResultUrl);
  lastResultUrl = null;
  resultLayer.hidden = true;
  divider.hidden = true;
  compareRow.hidden = true;
  view.lastRender = null;
  view.resultStale = false;

  // panel values may have been edited before this upload; push them once
  void pushParams();

  emptyHint.hidden = true;
  stack.hidden = false;
  redrawOverlay();
  updateCounts();
  updateStatus();
}

async function sendScribbles(): Promise<void> {
  if (session === null || buffer === null) return;
  await api.syncScribbles(session.sessionId, buffer.toRle());
  syncBanner.hidden = true;
}

retryBtn.addEventListener("click", () => {
  if (scribbleSync !== null) void scribbleSync.flush();
});

// --- stroke drawing -------------------------------------------------------

function activeLabel(): BrushLabel {
  const checked = document.querySelector<HTMLInputElement>("input[name=label]:checked");
  return (checked?.value ?? "foreground") as BrushLabel;
}

for (const radio of document.querySelectorAll<HTMLInputElement>("input[name=label]")) {
  radio.addEventListener("change", () => {
    if (buffer !== null) buffer.activeLabel = activeLabel();
  });
}

brushRadius.addEventListener("input", () => {
  radiusReadout.textContent = brushRadius.value;
  if (buffer !== null) buffer.brushRadius = Number(brushRadius.value);
});

let drawing = false;
let lastPoint: { x: number; y: number } | null = null;

overlay.addEventListener("pointerdown", (event) => {
  if (buffer === null) return;
  overlay.setPointerCapture(event.pointerId);
  drawing = true;
  buffer.beginStroke();
  const p = canvasPoint(event);
  buffer.stamp(p.x, p.y);
  drawDisc(p.x, p.y, buffer.activeLabel, buffer.brushRadius);
  lastPoint = p;
});

overlay.addEventListener("pointermove", (event) => {
  if (!drawing || buffer === null || lastPoint === null) return;
  const p = canvasPoint(event);
  buffer.stampLine(lastPoint.x, lastPoint.y, p.x, p.y);
  const steps = Math.max(1, Math.ceil(Math.hypot(p.x - lastPoint.x, p.y - lastPoint.y) / 2));
  for (let i = 0; i <= steps; i++) {
    const t = i / steps;
    drawDisc(
      lastPoint.x + t * (p.x - lastPoint.x),
      lastPoint.y + t * (p.y - lastPoint.y),
      buffer.activeLabel,
      buffer.brushRadius,
    );
  }
  lastPoint = p;
});

function endStroke(): void {
  if (!drawing) return;
  drawing = false;
  lastPoint = null;
  noteScribbleEdit();
}

overlay.addEventListener("pointerup", endStroke);
overlay.addEventListener("pointercancel", endStroke);

undoBtn.addEventListener("click", () => {
  if (buffer === null || !buffer.undoLastStroke()) return;
  redrawOverlay();
  noteScribbleEdit();
});

clearBtn.addEventListener("click", () => {
  if (buffer === null) return;
  buffer.clear();
  redrawOverlay();
  noteScribbleEdit();
});

showStrokes.addEventListener("change", () => {
  overlay.style.opacity = showStrokes.checked ? "1" : "0";
});

// --- parameters -----------------------------------------------------------

const paramInputs: Record<keyof PanelParams, HTMLInputElement> = {
  k: el<HTMLInputElement>("param-k"),
  window: el<HTMLInputElement>("param-window"),
  iterations: el<HTMLInputElement>("param-iterations"),
  threshold: el<HTMLInputElement>("param-threshold"),
};

const paramSync = new SyncScheduler(pushParams, 300, () => {
  showHint("parameter update failed; will retry on the next edit");
});

async function pushParams(): Promise<void> {
  if (session === null) return;
  await api.updateParams(session.sessionId, { ...view.params });
}

for (const key of Object.keys(paramInputs) as Array<keyof PanelParams>) {
  const input = paramInputs[key];
  input.addEventListener("change", () => {
    const clamped = view.setParam(key, Number(input.value));
    input.value = String(clamped);
    paramSync.request();
    updateStatus();
  });
}

// --- rendering ------------------------------------------------------------

modeSelect.addEventListener("change", () => {
  view.mode = modeSelect.value as RenderMode;
});

renderBtn.addEventListener("click", () => {
  if (session === null) return;
  void renders.submit(doRender);
});

async function doRender(): Promise<void> {
  if (session === null) return;
  hideHint();
  renderBtn.disabled = true;
  statusLine.textContent = "rendering…";
  try {
    if (scribbleSync !== null) await scribbleSync.settle();
    await paramSync.settle();
    const result: RenderResult = await api.render(session.sessionId, view.mode);
    if (lastResultUrl !== null) URL.revokeObjectURL(lastResultUrl);
    lastResultUrl = result.url;
    imgResult.src = result.url;
    resultLayer.hidden = false;
    divider.hidden = false;
    compareRow.hidden = false;
    applyCompare();
    view.markRendered({ mode: view.mode, seconds: result.seconds, cached: result.cached });
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      showHint(`${err.message} — pick a brush and paint on the image`);
    } else {
      showHint(err instanceof Error ? err.message : "render failed");
    }
    view.lastRender = null;
  }
  renderBtn.disabled = false;
  updateStatus();
}

compareSlider.addEventListener("input", () => {
  view.comparePosition = Number(compareSlider.value);
  applyCompare();
});

applyCompare();
updateStatus();
