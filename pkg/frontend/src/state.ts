/** Client-side state: the stroke buffer, the view/parameter panel, and the
 * two schedulers that keep network traffic sane (debounced stroke sync with
 * at most one request in flight, and a latest-wins render queue). All filter
 * math happens on the server; nothing here touches pixels beyond strokes.
 */

import { BACKGROUND, FOREGROUND, NONE, RleDoc, ScribbleRaster, encodeRle, makeRaster } from "./rle.js";

export type BrushLabel = "foreground" | "background" | "erase";
export type RenderMode = "filter" | "fb" | "recolor" | "mask";

const LABEL_CODE: Record<BrushLabel, number> = {
  foreground: FOREGROUND,
  background: BACKGROUND,
  erase: NONE,
};

export class StrokeBuffer {
  readonly raster: ScribbleRaster;
  brushRadius = 6;
  activeLabel: BrushLabel = "foreground";
  private undoSnapshot: Uint8Array | null = null;

  constructor(width: number, height: number) {
    this.raster = makeRaster(width, height);
  }

  /** Snapshot for single-stroke undo; call on pointer down. */
  beginStroke(): void {
    this.undoSnapshot = this.raster.data.slice();
  }

  undoLastStroke(): boolean {
    if (this.undoSnapshot === null) return false;
    this.raster.data.set(this.undoSnapshot);
    this.undoSnapshot = null;
    return true;
  }

  clear(): void {
    this.undoSnapshot = this.raster.data.slice();
    this.raster.data.fill(NONE);
  }

  /** Stamp a filled disc of the active label at raster coordinates. */
  stamp(cx: number, cy: number): void {
    const { width, height, data } = this.raster;
    const r = this.brushRadius;
    const code = LABEL_CODE[this.activeLabel];
    const x0 = Math.max(0, Math.floor(cx - r));
    const x1 = Math.min(width - 1, Math.ceil(cx + r));
    const y0 = Math.max(0, Math.floor(cy - r));
    const y1 = Math.min(height - 1, Math.ceil(cy + r));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r * r) data[y * width + x] = code;
      }
    }
  }

  /** Stamp along the segment from (x0,y0) to (x1,y1) without gaps. */
  stampLine(x0: number, y0: number, x1: number, y1: number): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0) / Math.max(1, this.brushRadius / 2)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stamp(x0 + t * (x1 - x0), y0 + t * (y1 - y0));
    }
  }

  counts(): { foreground: number; background: number } {
    let fg = 0;
    let bg = 0;
    for (const v of this.raster.data) {
      if (v === FOREGROUND) fg++;
      else if (v === BACKGROUND) bg++;
    }
    return { foreground: fg, background: bg };
  }

  toRle(): RleDoc {
    return encodeRle(this.raster);
  }
}

/** Panel values; keys match the server's parameter names one to one. */
export interface PanelParams {
  k: number;
  window: number;
  iterations: number;
  threshold: number;
}

export const PARAM_LIMITS: Record<keyof PanelParams, { min: number; max: number; integer: boolean }> = {
  k: { min: 1, max: 256, integer: true },
  window: { min: 1, max: 64, integer: true },
  iterations: { min: 0, max: 32, integer: true },
  threshold: { min: 0.01, max: 1.0, integer: false },
};

export const DEFAULT_PARAMS: PanelParams = { k: 32, window: 7, iterations: 1, threshold: 0.5 };

/** Clamp a raw input into the server's accepted range. */
export function clampParam(key: keyof PanelParams, raw: number): number {
  const { min, max, integer } = PARAM_LIMITS[key];
  let v = Number.isFinite(raw) ? raw : DEFAULT_PARAMS[key];
  if (integer) v = Math.round(v);
  return Math.min(max, Math.max(min, v));
}

export interface RenderInfo {
  mode: RenderMode;
  seconds: number;
  cached: boolean;
}

/** What the result panel is showing and whether it is stale. */
export class ViewState {
  mode: RenderMode = "filter";
  params: PanelParams = { ...DEFAULT_PARAMS };
  /** comparison slider position, percent of width showing the result */
  comparePosition = 50;
  resultStale = false;
  lastRender: RenderInfo | null = null;

  setParam(key: keyof PanelParams, raw: number): number {
    const value = clampParam(key, raw);
    if (value !== this.params[key]) {
      this.params[key] = value;
      // any parameter edit drops every server-side cache
      if (this.lastRender !== null) this.resultStale = true;
    }
    return value;
  }

  /** Scribble edits leave plain-filter renders valid on the server. */
  noteScribbleEdit(): void {
    if (this.lastRender !== null && this.lastRender.mode !== "filter") {
      this.resultStale = true;
    }
  }

  markRendered(info: RenderInfo): void {
    this.lastRender = info;
    this.resultStale = false;
  }
}

/** Debounced sync with at most one request in flight.
 *
 * Bursts of request() collapse into one send after the quiet delay. If a
 * send is already running, the next one starts only after it finishes
 * (trailing run), so the server never sees concurrent stroke updates.
 * Failures go to onError; state stays local and flush() retries.
 */
export class SyncScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: Promise<void> | null = null;
  private trailing = false;
  sendCount = 0;

  constructor(
    private readonly send: () => Promise<void>,
    private readonly delayMs = 250,
    private readonly onError: (err: unknown) => void = () => undefined,
  ) {}

  request(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.delayMs);
  }

  /** Send now (retry button); cancels any pending quiet-period timer. */
  flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.fire();
  }

  /** Resolve once every requested sync has been sent. */
  settle(): Promise<void> {
    if (this.timer !== null) return this.flush();
    return this.inFlight ?? Promise.resolve();
  }

  get busy(): boolean {
    return this.inFlight !== null;
  }

  private fire(): Promise<void> {
    if (this.inFlight !== null) {
      this.trailing = true;
      return this.inFlight;
    }
    const run = this.runOnce().finally(() => {
      this.inFlight = null;
    });
    this.inFlight = run;
    return run;
  }

  private async runOnce(): Promise<void> {
    do {
      this.trailing = false;
      this.sendCount++;
      try {
        await this.send();
      } catch (err) {
        this.onError(err);
      }
    } while (this.trailing);
  }
}

/** One render at a time; a click during a render queues it, latest wins. */
export class RenderQueue {
  private inFlight = false;
  private queued: (() => Promise<void>) | null = null;

  async submit(task: () => Promise<void>): Promise<void> {
    if (this.inFlight) {
      this.queued = task;
      return;
    }
    this.inFlight = true;
    try {
      await task();
    } finally {
      this.inFlight = false;
      const next = this.queued;
      this.queued = null;
      if (next !== null) await this.submit(next);
    }
  }

  get busy(): boolean {
    return this.inFlight;
  }
}
