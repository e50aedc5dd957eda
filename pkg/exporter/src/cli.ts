#!/usr/bin/env node
/**
 * feature-exporter export --frames DIR --out DIR
 *                         [--what features|seg|edge|all]
 *                         [--classes N] [--seed N]
 *
 * Exit codes: 0 success, 2 usage error, 1 runtime failure.
 */

import { runExport, What } from "./export.js";

const USAGE =
  "usage: feature-exporter export --frames DIR --out DIR " +
  "[--what features|seg|edge|all] [--classes N] [--seed N]";

interface Args {
  framesDir: string;
  outDir: string;
  what: What;
  classes: number;
  seed: number;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "export") {
    throw new UsageError(
      argv.length === 0 ? USAGE : `unknown command '${argv[0]}'\n${USAGE}`
    );
  }
  let framesDir = "";
  let outDir = "";
  let what: What = "all";
  let classes = 19;
  let seed = 0;
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new UsageError(`${flag} needs a value\n${USAGE}`);
    }
    switch (flag) {
      case "--frames":
        framesDir = value;
        break;
      case "--out":
        outDir = value;
        break;
      case "--what":
        if (!["features", "seg", "edge", "all"].includes(value)) {
          throw new UsageError(`--what must be features|seg|edge|all, got '${value}'`);
        }
        what = value as What;
        break;
      case "--classes":
        classes = Number(value);
        if (!Number.isInteger(classes) || classes < 2) {
          throw new UsageError(`--classes must be an integer >= 2, got '${value}'`);
        }
        break;
      case "--seed":
        seed = Number(value);
        if (!Number.isInteger(seed) || seed < 0) {
          throw new UsageError(`--seed must be a non-negative integer, got '${value}'`);
        }
        break;
      default:
        throw new UsageError(`unknown flag '${flag}'\n${USAGE}`);
    }
  }
  if (!framesDir || !outDir) {
    throw new UsageError(`--frames and --out are required\n${USAGE}`);
  }
  return { framesDir, outDir, what, classes, seed };
}

class UsageError extends Error {}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
  try {
    const manifest = runExport(args);
    const fileCount = manifest.frames.reduce((n, f) => n + f.files.length, 0);
    console.log(
      `exported ${manifest.frames.length} frames, ${fileCount} files -> ${args.outDir}`
    );
    console.log(`models: ${Object.values(manifest.models).join("; ")}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
