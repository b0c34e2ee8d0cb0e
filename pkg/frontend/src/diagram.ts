/**
 * Bifurcation diagram: branches in the (lambda, sup-norm) plane, one color
 * per epsilon, solid segments where gamma1 > 0, dashed where gamma1 < 0,
 * dotted where gamma1 is unrecorded; fold and lambda = 0 crossing markers;
 * legend with epsilon values and lam_eps axis markers from sidecar JSON.
 */

import { BranchRow, BranchSidecar } from "./branchcsv.js";
import { Canvas, Cmd, Stroke } from "./render.js";
import { fmtTick, linearScale } from "./scales.js";

export interface BranchInput {
  rows: BranchRow[];
  sidecar: BranchSidecar | null;
  label: string;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                        "#ff7f0e", "#17becf"];

const MARGIN = { left: 64, right: 16, top: 20, bottom: 46 };

export function segmentStyle(gamma1: number | null): { dash: number[] | null;
                                                       sign: string } {
  if (gamma1 === null) return { dash: [1, 3], sign: "none" };
  if (gamma1 > 0) return { dash: null, sign: "+" };
  if (gamma1 < 0) return { dash: [6, 4], sign: "-" };
  return { dash: [2, 2], sign: "0" };
}

export function buildDiagram(branches: BranchInput[],
                             width = 860, height = 560): Canvas {
  const cmds: Cmd[] = [];
  const lams = branches.flatMap((b) => b.rows.map((r) => r.lambda));
  const sups = branches.flatMap((b) => b.rows.map((r) => r.supNorm));
  for (const b of branches) {
    if (b.sidecar?.lambda_eps !== undefined) lams.push(b.sidecar.lambda_eps);
  }
  lams.push(0);
  sups.push(0);
  const sx = linearScale(lams, MARGIN.left, width - MARGIN.right);
  const sy = linearScale(sups, height - MARGIN.bottom, MARGIN.top);

  const axisStroke: Stroke = { color: "#444444", width: 1, dash: null };
  const gridStroke: Stroke = { color: "#dddddd", width: 1, dash: null };
  for (const t of sx.ticks) {
    const x = sx.toPixel(t);
    cmds.push({ kind: "line", x1: x, y1: MARGIN.top, x2: x,
                y2: height - MARGIN.bottom, stroke: gridStroke });
    cmds.push({ kind: "text", x, y: height - MARGIN.bottom + 16,
                text: fmtTick(t), size: 11, color: "#333333",
                anchor: "middle" });
  }
  for (const t of sy.ticks) {
    const y = sy.toPixel(t);
    cmds.push({ kind: "line", x1: MARGIN.left, y1: y,
                x2: width - MARGIN.right, y2: y, stroke: gridStroke });
    cmds.push({ kind: "text", x: MARGIN.left - 6, y: y + 4, text: fmtTick(t),
                size: 11, color: "#333333", anchor: "end" });
  }
  cmds.push({ kind: "line", x1: MARGIN.left, y1: height - MARGIN.bottom,
              x2: width - MARGIN.right, y2: height - MARGIN.bottom,
              stroke: axisStroke });
  cmds.push({ kind: "line", x1: MARGIN.left, y1: MARGIN.top, x2: MARGIN.left,
              y2: height - MARGIN.bottom, stroke: axisStroke });
  cmds.push({ kind: "text", x: (MARGIN.left + width - MARGIN.right) / 2,
              y: height - 8, text: "lambda", size: 12, color: "#111111",
              anchor: "middle" });
  cmds.push({ kind: "text", x: 14, y: MARGIN.top - 4, text: "sup |u|",
              size: 12, color: "#111111" });

  branches.forEach((branch, bi) => {
    const color = PALETTE[bi % PALETTE.length];
    const pixel = (row: BranchRow): [number, number] =>
      [sx.toPixel(row.lambda), sy.toPixel(row.supNorm)];
    // each segment is styled by the gamma1 sign at its starting row;
    // consecutive segments with one style merge into a single polyline
    let run: [number, number][] = [];
    let runSign: string | null = null;
    let runDash: number[] | null = null;
    const flush = () => {
      if (run.length >= 2 && runSign !== null) {
        cmds.push({ kind: "polyline", points: run,
                    stroke: { color, width: 1.6, dash: runDash },
                    data: { kind: "segment", branch: String(bi),
                            "gamma-sign": runSign } });
      }
    };
    for (let i = 0; i + 1 < branch.rows.length; i++) {
      const style = segmentStyle(branch.rows[i].gamma1);
      if (runSign === style.sign) {
        run.push(pixel(branch.rows[i + 1]));
      } else {
        flush();
        run = [pixel(branch.rows[i]), pixel(branch.rows[i + 1])];
        runSign = style.sign;
        runDash = style.dash;
      }
    }
    flush();

    for (const row of branch.rows) {
      if (row.event === "fold") {
        cmds.push({ kind: "circle", cx: sx.toPixel(row.lambda),
                    cy: sy.toPixel(row.supNorm), r: 4, fill: color,
                    data: { kind: "event", event: "fold",
                            branch: String(bi) } });
      } else if (row.event === "lambda_zero_crossing") {
        cmds.push({ kind: "rect", x: sx.toPixel(row.lambda) - 3.5,
                    y: sy.toPixel(row.supNorm) - 3.5, w: 7, h: 7, fill: color,
                    data: { kind: "event", event: "lambda_zero_crossing",
                            branch: String(bi) } });
      }
    }
    if (branch.sidecar?.lambda_eps !== undefined) {
      const x = sx.toPixel(branch.sidecar.lambda_eps);
      const y0 = sy.toPixel(0);
      cmds.push({ kind: "line", x1: x, y1: y0 - 7, x2: x, y2: y0 + 7,
                  stroke: { color, width: 2, dash: null },
                  data: { kind: "lambda-eps-marker", branch: String(bi) } });
    }

    const ly = MARGIN.top + 16 * bi + 8;
    cmds.push({ kind: "line", x1: width - 170, y1: ly, x2: width - 146, y2: ly,
                stroke: { color, width: 2, dash: null } });
    cmds.push({ kind: "text", x: width - 140, y: ly + 4, text: branch.label,
                size: 11, color: "#111111" });
  });

  // stability key
  const keyY = height - MARGIN.bottom + 32;
  cmds.push({ kind: "line", x1: MARGIN.left, y1: keyY, x2: MARGIN.left + 26,
              y2: keyY, stroke: { color: "#111111", width: 1.6, dash: null } });
  cmds.push({ kind: "text", x: MARGIN.left + 30, y: keyY + 4,
              text: "stable (gamma1 > 0)", size: 10, color: "#111111" });
  cmds.push({ kind: "line", x1: MARGIN.left + 170, y1: keyY,
              x2: MARGIN.left + 196, y2: keyY,
              stroke: { color: "#111111", width: 1.6, dash: [6, 4] } });
  cmds.push({ kind: "text", x: MARGIN.left + 200, y: keyY + 4,
              text: "unstable (gamma1 < 0)", size: 10, color: "#111111" });

  return { width, height, commands: cmds };
}
