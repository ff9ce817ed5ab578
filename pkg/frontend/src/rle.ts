/** Stroke raster wire format shared with the server.
 *
 * A raster is row-major tri-state: 0 none, 1 foreground, 2 background.
 * The wire document is {width, height, runs: [[value, count], ...]} with
 * runs covering the raster exactly. Encode/decode must be mutually inverse;
 * the server holds the same codec on its side.
 */

export const NONE = 0;
export const FOREGROUND = 1;
export const BACKGROUND = 2;

export interface ScribbleRaster {
  width: number;
  height: number;
  /** length === width * height, values in {0, 1, 2} */
  data: Uint8Array;
}

export interface RleDoc {
  width: number;
  height: number;
  runs: Array<[number, number]>;
}

function checkDims(width: number, height: number): void {
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`bad raster dimensions ${width}x${height}`);
  }
}

export function makeRaster(width: number, height: number): ScribbleRaster {
  checkDims(width, height);
  return { width, height, data: new Uint8Array(width * height) };
}

export function encodeRle(raster: ScribbleRaster): RleDoc {
  const { width, height, data } = raster;
  checkDims(width, height);
  if (data.length !== width * height) {
    throw new Error(`raster data length ${data.length} != ${width * height}`);
  }
  const runs: Array<[number, number]> = [];
  let value = data[0] as number;
  let count = 0;
  for (let i = 0; i < data.length; i++) {
    const v = data[i] as number;
    if (v === value) {
      count++;
    } else {
      runs.push([value, count]);
      value = v;
      count = 1;
    }
  }
  runs.push([value, count]);
  return { width, height, runs };
}

export function decodeRle(doc: RleDoc): ScribbleRaster {
  checkDims(doc.width, doc.height);
  if (!Array.isArray(doc.runs)) throw new Error("runs must be an array");
  const total = doc.width * doc.height;
  const data = new Uint8Array(total);
  let at = 0;
  for (const run of doc.runs) {
    if (!Array.isArray(run) || run.length !== 2) {
      throw new Error("each run must be a [value, count] pair");
    }
    const [value, count] = run;
    if (value !== NONE && value !== FOREGROUND && value !== BACKGROUND) {
      throw new Error(`run value must be 0, 1 or 2, got ${value}`);
    }
    if (!Number.isInteger(count) || count < 1) {
      throw new Error(`run count must be a positive integer, got ${count}`);
    }
    if (at + count > total) throw new Error("runs overflow the raster");
    data.fill(value, at, at + count);
    at += count;
  }
  if (at !== total) throw new Error(`runs cover ${at} of ${total} pixels`);
  return { width: doc.width, height: doc.height, data };
}
