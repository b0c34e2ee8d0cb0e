/**
 * Solution-profile plots from field CSVs (columns x,u).  Profiles may be
 * rescaled by lambda^(-1/(2-q)) or lambda^(-1/(p-q)); a horizontal reference
 * line marks c* when provided.  All inputs must share one grid.
 */

import { SchemaError } from "./branchcsv.js";
import { Canvas, Cmd } from "./render.js";
import { fmtTick, linearScale } from "./scales.js";
import { PALETTE } from "./diagram.js";

export interface Profile {
  x: number[];
  u: number[];
  label: string;
  lambda: number | null;
}

export type RescaleLaw = "2mq" | "pmq";

export function parseFieldCsv(text: string, label: string): Profile {
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length < 2) throw new SchemaError(`${label}: empty field CSV`);
  if (lines[0] !== "x,u") {
    throw new SchemaError(`${label}: expected header 'x,u', got '${lines[0]}'`);
  }
  const x: number[] = [];
  const u: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 2) {
      throw new SchemaError(`${label} line ${i + 1}: expected 2 cells`);
    }
    const xv = Number(cells[0]);
    const uv = Number(cells[1]);
    if (!Number.isFinite(xv) || !Number.isFinite(uv)) {
      throw new SchemaError(`${label} line ${i + 1}: non-finite value`);
    }
    x.push(xv);
    u.push(uv);
  }
  return { x, u, label, lambda: null };
}

export function checkSameGrid(profiles: Profile[]): void {
  const ref = profiles[0];
  for (const prof of profiles.slice(1)) {
    if (prof.x.length !== ref.x.length
        || prof.x.some((v, i) => v !== ref.x[i])) {
      throw new SchemaError(
        `grid mismatch: '${prof.label}' does not share the grid of '${ref.label}'`,
      );
    }
  }
}

export function rescaleExponent(law: RescaleLaw, p: number, q: number): number {
  return law === "2mq" ? 1.0 / (2.0 - q) : 1.0 / (p - q);
}

const MARGIN = { left: 64, right: 16, top: 20, bottom: 40 };

export function buildProfiles(profiles: Profile[],
                              opts: { rescale?: RescaleLaw; p?: number;
                                      q?: number; cstar?: number } = {},
                              width = 860, height = 560): Canvas {
  checkSameGrid(profiles);
  let drawn = profiles.map((prof) => ({ ...prof, y: prof.u.slice() }));
  if (opts.rescale) {
    const expo = rescaleExponent(opts.rescale, opts.p ?? 4.0, opts.q ?? 1.5);
    drawn = profiles.map((prof) => {
      if (prof.lambda === null || !(prof.lambda > 0)) {
        throw new SchemaError(
          `'${prof.label}': rescaling needs a positive lambda for every profile`,
        );
      }
      const factor = prof.lambda ** -expo;
      return { ...prof, y: prof.u.map((v) => v * factor) };
    });
  } else {
    // raw profiles are drawn in decreasing-lambda order when lambdas exist
    drawn = drawn.slice().sort((a, b) =>
      (b.lambda ?? -Infinity) - (a.lambda ?? -Infinity));
  }

  const cmds: Cmd[] = [];
  const ys = drawn.flatMap((d) => d.y);
  if (opts.cstar !== undefined) ys.push(opts.cstar);
  ys.push(0);
  const sx = linearScale(drawn[0].x, MARGIN.left, width - MARGIN.right, 0.0);
  const sy = linearScale(ys, height - MARGIN.bottom, MARGIN.top);

  for (const t of sy.ticks) {
    const y = sy.toPixel(t);
    cmds.push({ kind: "line", x1: MARGIN.left, y1: y,
                x2: width - MARGIN.right, y2: y,
                stroke: { color: "#dddddd", width: 1, dash: null } });
    cmds.push({ kind: "text", x: MARGIN.left - 6, y: y + 4, text: fmtTick(t),
                size: 11, color: "#333333", anchor: "end" });
  }
  for (const t of sx.ticks) {
    const x = sx.toPixel(t);
    cmds.push({ kind: "text", x, y: height - MARGIN.bottom + 16,
                text: fmtTick(t), size: 11, color: "#333333",
                anchor: "middle" });
  }
  cmds.push({ kind: "line", x1: MARGIN.left, y1: height - MARGIN.bottom,
              x2: width - MARGIN.right, y2: height - MARGIN.bottom,
              stroke: { color: "#444444", width: 1, dash: null } });
  cmds.push({ kind: "line", x1: MARGIN.left, y1: MARGIN.top, x2: MARGIN.left,
              y2: height - MARGIN.bottom,
              stroke: { color: "#444444", width: 1, dash: null } });

  if (opts.cstar !== undefined) {
    const y = sy.toPixel(opts.cstar);
    cmds.push({ kind: "line", x1: MARGIN.left, y1: y,
                x2: width - MARGIN.right, y2: y,
                stroke: { color: "#111111", width: 1, dash: [3, 3] },
                data: { kind: "cstar-reference" } });
    cmds.push({ kind: "text", x: width - MARGIN.right - 4, y: y - 4,
                text: `c* = ${fmtTick(opts.cstar)}`, size: 10,
                color: "#111111", anchor: "end" });
  }

  drawn.forEach((prof, i) => {
    const color = PALETTE[i % PALETTE.length];
    const points: [number, number][] = prof.x.map((xv, j) =>
      [sx.toPixel(xv), sy.toPixel(prof.y[j])]);
    cmds.push({ kind: "polyline", points,
                stroke: { color, width: 1.6, dash: null },
                data: { kind: "profile", label: prof.label } });
    const ly = MARGIN.top + 16 * i + 8;
    cmds.push({ kind: "line", x1: width - 200, y1: ly, x2: width - 176, y2: ly,
                stroke: { color, width: 2, dash: null } });
    const tag = prof.lambda !== null
      ? `${prof.label} (lambda=${fmtTick(prof.lambda)})` : prof.label;
    cmds.push({ kind: "text", x: width - 170, y: ly + 4, text: tag, size: 11,
                color: "#111111" });
  });
  cmds.push({ kind: "text", x: (MARGIN.left + width - MARGIN.right) / 2,
              y: height - 8, text: "x", size: 12, color: "#111111",
              anchor: "middle" });
  return { width, height, commands: cmds };
}
