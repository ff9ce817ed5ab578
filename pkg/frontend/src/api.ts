/** Thin fetch wrapper over the filtering service. Every pixel shown in the
 * studio comes from these endpoints; the client never filters locally.
 */

import { RleDoc } from "./rle.js";
import { RenderMode } from "./state.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface SessionInfo {
  sessionId: string;
  width: number;
  height: number;
  /** data: URL of the server's decoded view of the upload */
  previewUrl: string;
}

export interface RenderResult {
  url: string;
  seconds: number;
  cached: boolean;
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    /* non-JSON error body */
  }
  return `request failed with status ${response.status}`;
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) throw new ApiError(response.status, await errorDetail(response));
  return response;
}

export class StudioApi {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async createSession(file: Blob, name = "upload.png"): Promise<SessionInfo> {
    const form = new FormData();
    form.append("image", file, name);
    const response = await expectOk(await fetch(this.url("/session"), { method: "POST", body: form }));
    const body = (await response.json()) as {
      session_id: string;
      width: number;
      height: number;
      preview: string;
    };
    return {
      sessionId: body.session_id,
      width: body.width,
      height: body.height,
      previewUrl: `data:image/png;base64,${body.preview}`,
    };
  }

  async updateParams(sessionId: string, values: Record<string, number | string>): Promise<void> {
    await expectOk(
      await fetch(this.url(`/session/${sessionId}/params`), {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(values),
      }),
    );
  }

  async syncScribbles(
    sessionId: string,
    doc: RleDoc,
  ): Promise<{ foreground: number; background: number }> {
    const response = await expectOk(
      await fetch(this.url(`/session/${sessionId}/scribbles`), {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(doc),
      }),
    );
    const body = (await response.json()) as {
      foreground_pixels: number;
      background_pixels: number;
    };
    return { foreground: body.foreground_pixels, background: body.background_pixels };
  }

  async render(sessionId: string, mode: RenderMode): Promise<RenderResult> {
    const response = await expectOk(
      await fetch(this.url(`/session/${sessionId}/render`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ mode }),
      }),
    );
    const blob = await response.blob();
    return {
      url: URL.createObjectURL(blob),
      seconds: Number(response.headers.get("x-render-seconds") ?? "0"),
      cached: response.headers.get("x-render-cached") === "1",
    };
  }

  async close(sessionId: string): Promise<void> {
    await expectOk(await fetch(this.url(`/session/${sessionId}`), { method: "DELETE" }));
  }
}
