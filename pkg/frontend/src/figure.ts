/**
 * Rate-vs-SNR figure assembly: one panel per sigma, one curve per bound,
 * shaded stderr bands where the producer reported Monte Carlo noise.
 *
 * Rendering is a pure function of the parsed rows: series extraction and
 * the emitted SVG are byte-deterministic for identical input, which is
 * what the regression tests compare (data series, not raster pixels).
 */

import { SweepRow } from "./csv.js";

export type RateUnit = "nats" | "bits";

export interface FigureSpec {
  sigmaPanels: number[];
  unit: RateUnit;
  /** Curve order and which bounds to draw; defaults to every bound found. */
  curveOrder?: string[];
  width?: number;
  height?: number;
}

export interface SeriesPoint {
  snrDb: number;
  rate: number;
  stderr: number;
}

export interface CurveSeries {
  boundName: string;
  points: SeriesPoint[];
}

export interface PanelSeries {
  sigma: number;
  curves: CurveSeries[];
}

export class FigureInputError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FigureInputError";
  }
}

const DEFAULT_ORDER = [
  "gaussian_optimal",
  "gaussian_linear",
  "sa_pilot",
  "sa_superposition",
  "ub_logdet",
  "ub_dof",
  "ub_general",
];

const CURVE_COLORS: Record<string, string> = {
  gaussian_optimal: "#1f77b4",
  gaussian_linear: "#d62728",
  sa_pilot: "#2ca02c",
  sa_superposition: "#17becf",
  ub_logdet: "#000000",
  ub_dof: "#7f7f7f",
  ub_general: "#9467bd",
};

const UPPER_BOUNDS = new Set(["ub_logdet", "ub_dof", "ub_general"]);

const LN2 = Math.log(2);

function rateInUnit(row: SweepRow, unit: RateUnit): number {
  return unit === "bits" ? row.rateBits : row.rateNats;
}

function stderrInUnit(row: SweepRow, unit: RateUnit): number {
  return unit === "bits" ? row.stderrNats / LN2 : row.stderrNats;
}

/** Pull the plotted series out of the rows, panel by panel. */
export function extractSeries(
  rows: SweepRow[],
  spec: FigureSpec,
): PanelSeries[] {
  if (rows.length === 0) {
    throw new FigureInputError("no data rows to plot");
  }
  const sigmasInData = new Set(rows.map((r) => r.sigma));
  const panels: PanelSeries[] = [];
  for (const sigma of spec.sigmaPanels) {
    if (!sigmasInData.has(sigma)) {
      throw new FigureInputError(
        `sigma panel ${sigma} has no rows in the CSV ` +
          `(present: ${[...sigmasInData].sort().join(", ")})`,
      );
    }
    const panelRows = rows.filter((r) => r.sigma === sigma);
    const boundsInPanel = [...new Set(panelRows.map((r) => r.boundName))];
    const order = spec.curveOrder ??
      DEFAULT_ORDER.filter((b) => boundsInPanel.includes(b)).concat(
        boundsInPanel.filter((b) => !DEFAULT_ORDER.includes(b)).sort(),
      );
    const curves: CurveSeries[] = [];
    for (const bound of order) {
      const points = panelRows
        .filter((r) => r.boundName === bound && Number.isFinite(r.rateNats))
        .map((r) => ({
          snrDb: r.snrDb,
          rate: rateInUnit(r, spec.unit),
          stderr: stderrInUnit(r, spec.unit),
        }))
        .sort((a, b) => a.snrDb - b.snrDb);
      if (points.length > 0) {
        curves.push({ boundName: bound, points });
      }
    }
    panels.push({ sigma, curves });
  }
  return panels;
}

const fmt = (value: number): string => {
  if (!Number.isFinite(value)) return "0";
  const text = value.toPrecision(8);
  return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
};

interface Scale {
  x(snr: number): number;
  y(rate: number): number;
}

function makeScale(
  panel: PanelSeries,
  box: { x0: number; y0: number; w: number; h: number },
): Scale {
  let snrMin = Infinity;
  let snrMax = -Infinity;
  let rateMin = Infinity;
  let rateMax = -Infinity;
  for (const curve of panel.curves) {
    for (const p of curve.points) {
      snrMin = Math.min(snrMin, p.snrDb);
      snrMax = Math.max(snrMax, p.snrDb);
      rateMin = Math.min(rateMin, p.rate - p.stderr);
      rateMax = Math.max(rateMax, p.rate + p.stderr);
    }
  }
  if (snrMax === snrMin) {
    snrMin -= 1;
    snrMax += 1;
  }
  if (rateMax === rateMin) {
    rateMin -= 1;
    rateMax += 1;
  }
  const pad = 0.05 * (rateMax - rateMin);
  rateMin -= pad;
  rateMax += pad;
  return {
    x: (snr) => box.x0 + ((snr - snrMin) / (snrMax - snrMin)) * box.w,
    y: (rate) =>
      box.y0 + box.h - ((rate - rateMin) / (rateMax - rateMin)) * box.h,
  };
}

function renderPanel(
  panel: PanelSeries,
  box: { x0: number; y0: number; w: number; h: number },
  unit: RateUnit,
): string {
  const scale = makeScale(panel, box);
  const parts: string[] = [];
  parts.push(
    `<rect x="${box.x0}" y="${box.y0}" width="${box.w}" height="${box.h}" ` +
      `fill="none" stroke="#333" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${box.x0 + box.w / 2}" y="${box.y0 - 8}" ` +
      `text-anchor="middle" font-size="13">sigma = ${panel.sigma}</text>`,
  );
  parts.push(
    `<text x="${box.x0 + box.w / 2}" y="${box.y0 + box.h + 30}" ` +
      `text-anchor="middle" font-size="11">SNR (dB)</text>`,
  );
  parts.push(
    `<text x="${box.x0 - 34}" y="${box.y0 + box.h / 2}" font-size="11" ` +
      `transform="rotate(-90 ${box.x0 - 34} ${box.y0 + box.h / 2})" ` +
      `text-anchor="middle">rate (${unit})</text>`,
  );
  const ticks = new Set<number>();
  for (const curve of panel.curves) {
    for (const p of curve.points) ticks.add(p.snrDb);
  }
  for (const snr of [...ticks].sort((a, b) => a - b)) {
    const x = scale.x(snr);
    parts.push(
      `<line x1="${fmt(x)}" y1="${box.y0 + box.h}" x2="${fmt(x)}" ` +
        `y2="${box.y0 + box.h + 4}" stroke="#333"/>`,
      `<text x="${fmt(x)}" y="${box.y0 + box.h + 16}" ` +
        `text-anchor="middle" font-size="10">${snr}</text>`,
    );
  }
  for (const curve of panel.curves) {
    const color = CURVE_COLORS[curve.boundName] ?? "#555555";
    const banded = curve.points.filter((p) => p.stderr > 0);
    if (banded.length === curve.points.length && banded.length > 1) {
      const upper = curve.points.map(
        (p) => `${fmt(scale.x(p.snrDb))},${fmt(scale.y(p.rate + p.stderr))}`,
      );
      const lower = [...curve.points].reverse().map(
        (p) => `${fmt(scale.x(p.snrDb))},${fmt(scale.y(p.rate - p.stderr))}`,
      );
      parts.push(
        `<polygon points="${upper.concat(lower).join(" ")}" ` +
          `fill="${color}" opacity="0.15" stroke="none"/>`,
      );
    }
    const line = curve.points
      .map((p) => `${fmt(scale.x(p.snrDb))},${fmt(scale.y(p.rate))}`)
      .join(" ");
    const dash = UPPER_BOUNDS.has(curve.boundName)
      ? ` stroke-dasharray="6 3"`
      : "";
    parts.push(
      `<polyline points="${line}" fill="none" stroke="${color}" ` +
        `stroke-width="1.6"${dash}/>`,
    );
    for (const p of curve.points) {
      parts.push(
        `<circle cx="${fmt(scale.x(p.snrDb))}" cy="${fmt(scale.y(p.rate))}" ` +
          `r="2.4" fill="${color}"/>`,
      );
    }
  }
  return parts.join("\n");
}

function renderLegend(
  panels: PanelSeries[],
  x0: number,
  y0: number,
): string {
  const bounds: string[] = [];
  for (const panel of panels) {
    for (const curve of panel.curves) {
      if (!bounds.includes(curve.boundName)) bounds.push(curve.boundName);
    }
  }
  const parts: string[] = [];
  bounds.forEach((bound, i) => {
    const color = CURVE_COLORS[bound] ?? "#555555";
    const y = y0 + 16 * i;
    const dash = UPPER_BOUNDS.has(bound) ? ` stroke-dasharray="6 3"` : "";
    parts.push(
      `<line x1="${x0}" y1="${y}" x2="${x0 + 22}" y2="${y}" ` +
        `stroke="${color}" stroke-width="1.6"${dash}/>`,
      `<text x="${x0 + 28}" y="${y + 4}" font-size="11">${bound}</text>`,
    );
  });
  return parts.join("\n");
}

/** Render panels to a standalone SVG document. */
export function renderSvg(panels: PanelSeries[], spec: FigureSpec): string {
  const width = spec.width ?? 460 * panels.length + 150;
  const height = spec.height ?? 360;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}" ` +
      `font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
  ];
  panels.forEach((panel, i) => {
    const box = { x0: 60 + 460 * i, y0: 40, w: 400, h: 260 };
    parts.push(renderPanel(panel, box, spec.unit));
  });
  parts.push(renderLegend(panels, 60 + 460 * panels.length, 60));
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Parse + extract + render in one step. */
export function renderFigure(
  rows: SweepRow[],
  spec: FigureSpec,
): { svg: string; panels: PanelSeries[] } {
  const panels = extractSeries(rows, spec);
  return { svg: renderSvg(panels, spec), panels };
}
