// Parser for the tab-separated Table 1 text that the copy action puts on
// the clipboard. Exists so tests can hold the copied text against the
// JSON payload cell by cell; the dashboard itself copies the server's
// string verbatim.

export interface ParsedStatCell {
    mean: number;
    sd: number;
}

export interface ParsedCountCell {
    count: number;
    pct: number;
}

export interface ParsedTable1Row {
    label: string;
    indent: boolean;
    cells: [string, string];
    p: number | null;
    pText: string;
    smd: number | "Inf" | null;
}

export interface ParsedTable1 {
    header: string[];
    rows: ParsedTable1Row[];
}

// "0.36 (0.48)" -> {mean: 0.36, sd: 0.48}
export function parseStatCell(cell: string): ParsedStatCell | null {
    const m = /^(-?\d+(?:\.\d+)?) \((-?\d+(?:\.\d+)?)\)$/.exec(cell.trim());
    if (!m) return null;
    return { mean: Number(m[1]), sd: Number(m[2]) };
}

// "7 (29.2%)" -> {count: 7, pct: 29.2}
export function parseCountCell(cell: string): ParsedCountCell | null {
    const m = /^(\d+) \((\d+(?:\.\d+)?)%\)$/.exec(cell.trim());
    if (!m) return null;
    return { count: Number(m[1]), pct: Number(m[2]) };
}

// p column: "" (none), "<0.001", or a 3-decimal number. "<0.001" maps to
// the conservative bound 0.001 for numeric comparisons; callers needing
// the raw text use pText.
export function parsePValue(cell: string): number | null {
    if (cell === "") return null;
    if (cell === "<0.001") return 0.001;
    return Number(cell);
}

export function parseSmd(cell: string): number | "Inf" | null {
    if (cell === "") return null;
    if (cell === "Inf") return "Inf";
    return Number(cell);
}

export function parseTable1Tsv(text: string): ParsedTable1 {
    const lines = text.split("\n").filter((line) => line.length > 0);
    if (lines.length === 0) throw new Error("empty table");
    const header = lines[0].split("\t");
    const rows: ParsedTable1Row[] = [];
    for (const line of lines.slice(1)) {
        const cells = line.split("\t");
        if (cells.length !== 5) {
            throw new Error(`expected 5 columns, got ${cells.length}`);
        }
        rows.push({
            label: cells[0].trim(),
            indent: cells[0].startsWith("  "),
            cells: [cells[1], cells[2]],
            p: parsePValue(cells[3]),
            pText: cells[3],
            smd: parseSmd(cells[4]),
        });
    }
    return { header, rows };
}
