/**
 * PNG frames in, planar float arrays out. Frames are 8-bit RGB(A); alpha
 * is ignored.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

export interface Frame {
  id: string;
  height: number;
  width: number;
  /** interleaved rgb in [0, 1], length = 3 * height * width */
  rgb: Float64Array;
}

export function loadFrame(filePath: string): Frame {
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const { height, width } = png;
  const rgb = new Float64Array(3 * height * width);
  for (let i = 0; i < height * width; i++) {
    rgb[3 * i] = png.data[4 * i] / 255;
    rgb[3 * i + 1] = png.data[4 * i + 1] / 255;
    rgb[3 * i + 2] = png.data[4 * i + 2] / 255;
  }
  return {
    id: path.basename(filePath, path.extname(filePath)),
    height,
    width,
    rgb,
  };
}

/** Rec. 601 luma in [0, 1]; a plain scalar proxy for frame brightness. */
export function luminance(frame: Frame): Float64Array {
  const n = frame.height * frame.width;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] =
      0.299 * frame.rgb[3 * i] +
      0.587 * frame.rgb[3 * i + 1] +
      0.114 * frame.rgb[3 * i + 2];
  }
  return out;
}

export function listFrames(framesDir: string): string[] {
  const names = fs
    .readdirSync(framesDir)
    .filter((n) => n.toLowerCase().endsWith(".png"))
    .sort();
  if (names.length === 0) {
    throw new Error(`no PNG frames in ${framesDir}`);
  }
  return names.map((n) => path.join(framesDir, n));
}

export function writeFramePng(filePath: string, height: number, width: number,
                              rgb: Float64Array): void {
  const png = new PNG({ height, width });
  for (let i = 0; i < height * width; i++) {
    png.data[4 * i] = Math.round(Math.min(1, Math.max(0, rgb[3 * i])) * 255);
    png.data[4 * i + 1] = Math.round(Math.min(1, Math.max(0, rgb[3 * i + 1])) * 255);
    png.data[4 * i + 2] = Math.round(Math.min(1, Math.max(0, rgb[3 * i + 2])) * 255);
    png.data[4 * i + 3] = 255;
  }
  fs.writeFileSync(filePath, PNG.sync.write(png));
}
