/**
 * Device-independent draw commands rendered to SVG text or a PNG buffer.
 * SVG is the primary format (it carries text and data-* attributes used by
 * the tests); the PNG raster renders the same geometry without text labels.
 */

import { deflateSync } from "node:zlib";

export interface Stroke {
  color: string;
  width: number;
  dash: number[] | null;
}

export type Cmd =
  | { kind: "polyline"; points: [number, number][]; stroke: Stroke;
      data?: Record<string, string> }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number;
      stroke: Stroke; data?: Record<string, string> }
  | { kind: "circle"; cx: number; cy: number; r: number; fill: string;
      data?: Record<string, string> }
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: string;
      data?: Record<string, string> }
  | { kind: "text"; x: number; y: number; text: string; size: number;
      color: string; anchor?: "start" | "middle" | "end" };

export interface Canvas {
  width: number;
  height: number;
  commands: Cmd[];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function dataAttrs(data?: Record<string, string>): string {
  if (!data) return "";
  return Object.entries(data)
    .map(([k, v]) => ` data-${k}="${esc(v)}"`)
    .join("");
}

export function toSvg(canvas: Canvas): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${canvas.width}" ` +
    `height="${canvas.height}" viewBox="0 0 ${canvas.width} ${canvas.height}">`,
  );
  parts.push(`<rect width="${canvas.width}" height="${canvas.height}" fill="white"/>`);
  for (const cmd of canvas.commands) {
    switch (cmd.kind) {
      case "polyline": {
        const pts = cmd.points.map(([x, y]) => `${r2(x)},${r2(y)}`).join(" ");
        const dash = cmd.stroke.dash
          ? ` stroke-dasharray="${cmd.stroke.dash.join(",")}"` : "";
        parts.push(
          `<polyline points="${pts}" fill="none" stroke="${cmd.stroke.color}" ` +
          `stroke-width="${cmd.stroke.width}"${dash}${dataAttrs(cmd.data)}/>`,
        );
        break;
      }
      case "line": {
        const dash = cmd.stroke.dash
          ? ` stroke-dasharray="${cmd.stroke.dash.join(",")}"` : "";
        parts.push(
          `<line x1="${r2(cmd.x1)}" y1="${r2(cmd.y1)}" x2="${r2(cmd.x2)}" ` +
          `y2="${r2(cmd.y2)}" stroke="${cmd.stroke.color}" ` +
          `stroke-width="${cmd.stroke.width}"${dash}${dataAttrs(cmd.data)}/>`,
        );
        break;
      }
      case "circle":
        parts.push(
          `<circle cx="${r2(cmd.cx)}" cy="${r2(cmd.cy)}" r="${cmd.r}" ` +
          `fill="${cmd.fill}"${dataAttrs(cmd.data)}/>`,
        );
        break;
      case "rect":
        parts.push(
          `<rect x="${r2(cmd.x)}" y="${r2(cmd.y)}" width="${r2(cmd.w)}" ` +
          `height="${r2(cmd.h)}" fill="${cmd.fill}"${dataAttrs(cmd.data)}/>`,
        );
        break;
      case "text":
        parts.push(
          `<text x="${r2(cmd.x)}" y="${r2(cmd.y)}" font-size="${cmd.size}" ` +
          `font-family="sans-serif" fill="${cmd.color}" ` +
          `text-anchor="${cmd.anchor ?? "start"}">${esc(cmd.text)}</text>`,
        );
        break;
    }
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function r2(x: number): number {
  return Math.round(x * 100) / 100;
}

// --- minimal PNG rasterizer (RGB, 8-bit, no text) ---

const CSS_COLORS: Record<string, [number, number, number]> = {
  white: [255, 255, 255], black: [0, 0, 0], gray: [128, 128, 128],
  red: [214, 39, 40], blue: [31, 119, 180], green: [44, 160, 44],
  orange: [255, 127, 14], purple: [148, 103, 189], teal: [23, 190, 207],
};

function parseColor(color: string): [number, number, number] {
  if (color.startsWith("#")) {
    const hex = color.slice(1);
    return [
      parseInt(hex.slice(0, 2), 16),
      parseInt(hex.slice(2, 4), 16),
      parseInt(hex.slice(4, 6), 16),
    ];
  }
  return CSS_COLORS[color] ?? [0, 0, 0];
}

class Raster {
  data: Uint8Array;

  constructor(readonly width: number, readonly height: number) {
    this.data = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    const off = (yi * this.width + xi) * 3;
    this.data[off] = rgb[0];
    this.data[off + 1] = rgb[1];
    this.data[off + 2] = rgb[2];
  }

  disk(cx: number, cy: number, r: number, rgb: [number, number, number]): void {
    for (let y = Math.floor(cy - r); y <= Math.ceil(cy + r); y++) {
      for (let x = Math.floor(cx - r); x <= Math.ceil(cx + r); x++) {
        if ((x - cx) ** 2 + (y - cy) ** 2 <= r * r) this.set(x, y, rgb);
      }
    }
  }

  /** Width-aware line with an on/off dash pattern in pixel units. */
  line(x1: number, y1: number, x2: number, y2: number, rgb: [number, number, number],
       width: number, dash: number[] | null): void {
    const len = Math.hypot(x2 - x1, y2 - y1);
    const steps = Math.max(1, Math.ceil(len));
    const period = dash ? dash.reduce((a, b) => a + b, 0) : 0;
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      if (dash && period > 0) {
        const pos = (t * len) % period;
        let acc = 0;
        let on = true;
        for (const seg of dash) {
          acc += seg;
          if (pos < acc) break;
          on = !on;
        }
        if (!on) continue;
      }
      const x = x1 + t * (x2 - x1);
      const y = y1 + t * (y2 - y1);
      const rad = Math.max(0.5, width / 2);
      this.disk(x, y, rad, rgb);
    }
  }
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(payload.length, 0);
  head.write(type, 4, "ascii");
  const body = Buffer.concat([Buffer.from(type, "ascii"), Buffer.from(payload)]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head, Buffer.from(payload), crc]);
}

export function toPng(canvas: Canvas): Buffer {
  const raster = new Raster(canvas.width, canvas.height);
  for (const cmd of canvas.commands) {
    switch (cmd.kind) {
      case "polyline": {
        const rgb = parseColor(cmd.stroke.color);
        for (let i = 1; i < cmd.points.length; i++) {
          raster.line(cmd.points[i - 1][0], cmd.points[i - 1][1],
                      cmd.points[i][0], cmd.points[i][1], rgb,
                      cmd.stroke.width, cmd.stroke.dash);
        }
        break;
      }
      case "line":
        raster.line(cmd.x1, cmd.y1, cmd.x2, cmd.y2,
                    parseColor(cmd.stroke.color), cmd.stroke.width,
                    cmd.stroke.dash);
        break;
      case "circle":
        raster.disk(cmd.cx, cmd.cy, cmd.r, parseColor(cmd.fill));
        break;
      case "rect": {
        const rgb = parseColor(cmd.fill);
        for (let y = cmd.y; y < cmd.y + cmd.h; y++) {
          for (let x = cmd.x; x < cmd.x + cmd.w; x++) raster.set(x, y, rgb);
        }
        break;
      }
      case "text":
        break;            // raster output carries no text
    }
  }

  const { width, height } = canvas;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8;            // bit depth
  ihdr[9] = 2;            // color type: truecolor
  const scanlines = Buffer.alloc(height * (1 + width * 3));
  for (let y = 0; y < height; y++) {
    const row = y * (1 + width * 3);
    scanlines[row] = 0;   // filter: none
    raster.data.subarray(y * width * 3, (y + 1) * width * 3)
      .forEach((v, i) => { scanlines[row + 1 + i] = v; });
  }
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(scanlines)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
