/**
 * Export manifest: which files were written for which frame, with shapes,
 * the identifiers of the models that produced them, and content checksums.
 * verifyManifest re-reads everything and is run at the end of every export,
 * so a manifest on disk always describes files that exist and parse.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";
import { decodeBtsr, Dtype } from "./btsr.js";

export const MANIFEST_NAME = "manifest.json";

export interface FileRecord {
  name: string;
  shape: number[];
  dtype: Dtype;
  sha256: string;
}

export interface FrameRecord {
  id: string;
  files: FileRecord[];
}

export interface ExportManifest {
  tool: string;
  version: number;
  models: Record<string, string>;
  frames: FrameRecord[];
}

export function sha256Of(buf: Buffer): string {
  return crypto.createHash("sha256").update(buf).digest("hex");
}

export function fileRecord(name: string, encoded: Buffer,
                           shape: number[], dtype: Dtype): FileRecord {
  return { name, shape, dtype, sha256: sha256Of(encoded) };
}

export function writeManifest(outDir: string, manifest: ExportManifest): string {
  const p = path.join(outDir, MANIFEST_NAME);
  fs.writeFileSync(p, JSON.stringify(manifest, null, 2) + "\n");
  return p;
}

export function readManifest(outDir: string): ExportManifest {
  const p = path.join(outDir, MANIFEST_NAME);
  return JSON.parse(fs.readFileSync(p, "utf-8")) as ExportManifest;
}

/** Re-read every listed file; throws on the first broken entry. */
export function verifyManifest(outDir: string): number {
  const manifest = readManifest(outDir);
  let checked = 0;
  for (const frame of manifest.frames) {
    for (const rec of frame.files) {
      const p = path.join(outDir, rec.name);
      if (!fs.existsSync(p)) {
        throw new Error(`${rec.name}: listed in manifest but missing`);
      }
      const buf = fs.readFileSync(p);
      const got = sha256Of(buf);
      if (got !== rec.sha256) {
        throw new Error(`${rec.name}: checksum mismatch (file changed?)`);
      }
      const arr = decodeBtsr(buf);
      if (
        arr.dtype !== rec.dtype ||
        arr.shape.length !== rec.shape.length ||
        arr.shape.some((d, i) => d !== rec.shape[i])
      ) {
        throw new Error(
          `${rec.name}: file is ${arr.dtype} [${arr.shape}], manifest says ` +
            `${rec.dtype} [${rec.shape}]`
        );
      }
      checked++;
    }
  }
  return checked;
}
