/**
 * Strict reader for the dopplercap sweep CSV.
 *
 * The producer pins the column layout exactly; anything off-schema fails
 * with an error naming the offending column (and row), never a silent
 * best-effort parse.
 */

export const EXPECTED_COLUMNS = [
  "snr_db",
  "sigma",
  "n",
  "bound_name",
  "rate_nats",
  "rate_bits",
  "stderr_nats",
  "n_samples",
  "tap_seed",
  "mc_seed",
  "q_policy",
  "wall_ms",
  "certified",
] as const;

export interface SweepRow {
  snrDb: number;
  sigma: number;
  n: number;
  boundName: string;
  rateNats: number;
  rateBits: number;
  stderrNats: number;
  nSamples: number;
  tapSeed: number;
  mcSeed: number;
  qPolicy: string;
  wallMs: number;
  certified: boolean;
}

export class CsvSchemaError extends Error {
  readonly column: string;
  readonly row: number | null;

  constructor(message: string, column: string, row: number | null = null) {
    super(message);
    this.name = "CsvSchemaError";
    this.column = column;
    this.row = row;
  }
}

export class EmptyCsvError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EmptyCsvError";
  }
}

function parseNumber(
  raw: string,
  column: string,
  row: number,
): number {
  if (raw === "nan") return NaN;
  if (raw === "inf") return Infinity;
  if (raw === "-inf") return -Infinity;
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    throw new CsvSchemaError(
      `row ${row}: column '${column}' is not numeric (got '${raw}')`,
      column,
      row,
    );
  }
  return value;
}

function checkHeader(headerLine: string): void {
  const fields = headerLine.split(",");
  const count = Math.max(fields.length, EXPECTED_COLUMNS.length);
  for (let i = 0; i < count; i++) {
    const expected = EXPECTED_COLUMNS[i];
    const found = fields[i];
    if (expected === undefined) {
      throw new CsvSchemaError(
        `unexpected extra column '${found}' at position ${i}`,
        found ?? "",
      );
    }
    if (found === undefined) {
      throw new CsvSchemaError(
        `missing column '${expected}' at position ${i}`,
        expected,
      );
    }
    if (found !== expected) {
      throw new CsvSchemaError(
        `column ${i}: expected '${expected}', found '${found}'`,
        expected,
      );
    }
  }
}

/** Parse sweep CSV text into typed rows, validating the schema. */
export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new EmptyCsvError("CSV input is empty (no header line)");
  }
  checkHeader(lines[0]);
  if (lines.length === 1) {
    throw new EmptyCsvError("CSV has a header but no data rows");
  }
  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== EXPECTED_COLUMNS.length) {
      throw new CsvSchemaError(
        `row ${i}: expected ${EXPECTED_COLUMNS.length} fields, ` +
          `found ${parts.length}`,
        "",
        i,
      );
    }
    const certifiedRaw = parts[12];
    if (certifiedRaw !== "true" && certifiedRaw !== "false") {
      throw new CsvSchemaError(
        `row ${i}: column 'certified' must be true/false ` +
          `(got '${certifiedRaw}')`,
        "certified",
        i,
      );
    }
    rows.push({
      snrDb: parseNumber(parts[0], "snr_db", i),
      sigma: parseNumber(parts[1], "sigma", i),
      n: parseNumber(parts[2], "n", i),
      boundName: parts[3],
      rateNats: parseNumber(parts[4], "rate_nats", i),
      rateBits: parseNumber(parts[5], "rate_bits", i),
      stderrNats: parseNumber(parts[6], "stderr_nats", i),
      nSamples: parseNumber(parts[7], "n_samples", i),
      tapSeed: parseNumber(parts[8], "tap_seed", i),
      mcSeed: parseNumber(parts[9], "mc_seed", i),
      qPolicy: parts[10],
      wallMs: parseNumber(parts[11], "wall_ms", i),
      certified: certifiedRaw === "true",
    });
  }
  return rows;
}
