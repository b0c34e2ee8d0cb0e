#!/usr/bin/env node
/**
 * plot branches --in <branch.csv...> --out <image.(svg|png)>
 * plot profiles --in <u.csv...> --out <image.(svg|png)>
 *               [--rescale 2mq|pmq] [--lambdas v1,v2,...]
 *               [--p 4.0] [--q 1.5] [--cstar <val>]
 *
 * Branch sidecar JSON (same basename, .json) is picked up automatically and
 * supplies the epsilon legend labels and lam_eps axis markers.
 */

import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { parseBranchCsv, parseSidecar, SchemaError } from "./branchcsv.js";
import { BranchInput, buildDiagram } from "./diagram.js";
import { buildProfiles, parseFieldCsv, Profile, RescaleLaw } from "./profiles.js";
import { Canvas, toPng, toSvg } from "./render.js";

interface Args {
  command: string;
  inputs: string[];
  out: string;
  rescale?: RescaleLaw;
  lambdas?: number[];
  p: number;
  q: number;
  cstar?: number;
}

function usageError(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.stderr.write(
    "usage: plot branches|profiles --in <files...> --out <image> " +
    "[--rescale 2mq|pmq] [--lambdas v1,v2,...] [--p P] [--q Q] [--cstar VAL]\n",
  );
  process.exit(1);
}

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0) usageError("missing command");
  const [command, ...rest] = argv;
  if (command !== "branches" && command !== "profiles") {
    usageError(`unknown command '${command}'`);
  }
  const args: Args = { command, inputs: [], out: "", p: 4.0, q: 1.5 };
  let i = 0;
  while (i < rest.length) {
    const flag = rest[i];
    switch (flag) {
      case "--in":
        i++;
        while (i < rest.length && !rest[i].startsWith("--")) {
          args.inputs.push(rest[i]);
          i++;
        }
        break;
      case "--out":
        args.out = rest[++i];
        i++;
        break;
      case "--rescale": {
        const law = rest[++i];
        if (law !== "2mq" && law !== "pmq") usageError(`bad --rescale '${law}'`);
        args.rescale = law;
        i++;
        break;
      }
      case "--lambdas":
        args.lambdas = rest[++i].split(",").map(Number);
        if (args.lambdas.some((v) => !Number.isFinite(v))) {
          usageError("bad --lambdas list");
        }
        i++;
        break;
      case "--p":
        args.p = Number(rest[++i]);
        i++;
        break;
      case "--q":
        args.q = Number(rest[++i]);
        i++;
        break;
      case "--cstar":
        args.cstar = Number(rest[++i]);
        i++;
        break;
      default:
        usageError(`unknown flag '${flag}'`);
    }
  }
  if (args.inputs.length === 0) usageError("need at least one --in file");
  if (!args.out) usageError("missing --out");
  if (!args.out.endsWith(".svg") && !args.out.endsWith(".png")) {
    usageError("--out must end in .svg or .png");
  }
  return args;
}

function writeImage(canvas: Canvas, out: string): void {
  if (out.endsWith(".png")) {
    writeFileSync(out, toPng(canvas));
  } else {
    writeFileSync(out, toSvg(canvas));
  }
}

function runBranches(args: Args): void {
  const branches: BranchInput[] = args.inputs.map((path) => {
    const rows = parseBranchCsv(readFileSync(path, "utf8"));
    const sidecarPath = path.replace(/\.csv$/, ".json");
    let sidecar = null;
    if (sidecarPath !== path && existsSync(sidecarPath)) {
      sidecar = parseSidecar(readFileSync(sidecarPath, "utf8"));
    }
    const label = sidecar?.epsilon !== undefined
      ? `eps = ${sidecar.epsilon}` : basename(path);
    return { rows, sidecar, label };
  });
  writeImage(buildDiagram(branches), args.out);
}

function runProfiles(args: Args): void {
  const profiles: Profile[] = args.inputs.map((path, i) => {
    const prof = parseFieldCsv(readFileSync(path, "utf8"), basename(path));
    if (args.lambdas !== undefined) {
      if (args.lambdas.length !== args.inputs.length) {
        usageError("--lambdas must list one value per input file");
      }
      prof.lambda = args.lambdas[i];
    }
    return prof;
  });
  writeImage(buildProfiles(profiles, {
    rescale: args.rescale, p: args.p, q: args.q, cstar: args.cstar,
  }), args.out);
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
    if (args.command === "branches") {
      runBranches(args);
    } else {
      runProfiles(args);
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 1;
    }
    if (err instanceof Error && "code" in err && err.code === "ENOENT") {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
