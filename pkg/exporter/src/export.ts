/**
 * The export run: every PNG under --frames gets its selected sidecars
 * written to --out, named the way the colorization pipeline discovers
 * them: {id}_L4.btsr / {id}_L8.btsr (features), {id}_seg.btsr,
 * {id}_edge.btsr.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { encodeBtsr } from "./btsr.js";
import { extractFeatures, initStages, STAGE_CHANNELS } from "./features.js";
import { initPrototypes, softSegmentation, sobelEdge } from "./masks.js";
import {
  ExportManifest,
  FileRecord,
  fileRecord,
  writeManifest,
  verifyManifest,
} from "./manifest.js";
import { listFrames, loadFrame } from "./png.js";

export type What = "features" | "seg" | "edge" | "all";

export interface ExportOptions {
  framesDir: string;
  outDir: string;
  what: What;
  classes: number;
  seed: number;
}

export function runExport(opts: ExportOptions): ExportManifest {
  const paths = listFrames(opts.framesDir);
  fs.mkdirSync(opts.outDir, { recursive: true });

  const wantFeatures = opts.what === "features" || opts.what === "all";
  const wantSeg = opts.what === "seg" || opts.what === "all";
  const wantEdge = opts.what === "edge" || opts.what === "all";

  const stages = wantFeatures ? initStages(opts.seed) : null;
  const protos = wantSeg ? initPrototypes(opts.classes, opts.seed) : null;

  const models: Record<string, string> = {};
  if (wantFeatures) {
    models.features =
      `conv-pyramid/1 seed=${opts.seed} channels=${STAGE_CHANNELS.join(",")}`;
  }
  if (wantSeg) {
    models.seg = `proto-softmax/1 classes=${opts.classes} seed=${opts.seed}`;
  }
  if (wantEdge) {
    models.edge = "sobel/1";
  }

  const manifest: ExportManifest = {
    tool: "feature-exporter",
    version: 1,
    models,
    frames: [],
  };

  for (const framePath of paths) {
    const frame = loadFrame(framePath);
    const files: FileRecord[] = [];

    const emit = (name: string, shape: number[], data: Float32Array) => {
      const encoded = encodeBtsr({ dtype: "f32", shape, data });
      fs.writeFileSync(path.join(opts.outDir, name), encoded);
      files.push(fileRecord(name, encoded, shape, "f32"));
    };

    if (stages) {
      const levels = extractFeatures(frame, stages);
      for (const div of [4, 8]) {
        const fm = levels.get(div)!;
        emit(`${frame.id}_L${div}.btsr`,
             [fm.height, fm.width, fm.channels], fm.data);
      }
    }
    if (protos) {
      const seg = softSegmentation(frame, protos);
      emit(`${frame.id}_seg.btsr`,
           [frame.height, frame.width, opts.classes], seg);
    }
    if (wantEdge) {
      emit(`${frame.id}_edge.btsr`, [frame.height, frame.width],
           sobelEdge(frame));
    }
    manifest.frames.push({ id: frame.id, files });
  }

  writeManifest(opts.outDir, manifest);
  verifyManifest(opts.outDir); // the manifest invariant holds on every export
  return manifest;
}
