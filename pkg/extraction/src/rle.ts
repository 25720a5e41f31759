import { FormatError } from './errors.js';

// Run-length text records as the ranking engine reads them. One record is
// two lines: "H W" then the run lengths. Runs alternate starting with
// background, so a mask whose first pixel is foreground gets a leading 0.
// Run sums must cover the mask exactly and only the first run may be zero.

export interface BinaryMask {
    h: number;
    w: number;
    /** h*w entries, row-major, each 0 or 1. */
    data: Uint8Array;
}

export function encodeRle(mask: BinaryMask): string {
    const { h, w, data } = mask;
    if (h < 1 || w < 1) {
        throw new FormatError(`mask extent ${h} x ${w} is not positive`);
    }
    if (data.length !== h * w) {
        throw new FormatError(`mask data has ${data.length} pixels, extent wants ${h * w}`);
    }
    const runs: number[] = [];
    let current = 0;
    let length = 0;
    for (let i = 0; i < data.length; i++) {
        const v = data[i]!;
        if (v !== 0 && v !== 1) {
            throw new FormatError(`mask pixel ${i} is ${v}, expected 0 or 1`);
        }
        if (v === current) {
            length += 1;
        } else {
            runs.push(length);
            current = v;
            length = 1;
        }
    }
    runs.push(length);
    return `${h} ${w}\n${runs.join(' ')}\n`;
}

function decodeRecord(header: string, runsLine: string): BinaryMask {
    const parts = header.split(/\s+/).filter((p) => p.length > 0);
    if (parts.length !== 2) {
        throw new FormatError(`rle: header ${JSON.stringify(header)} is not 'H W'`);
    }
    const h = Number(parts[0]);
    const w = Number(parts[1]);
    if (!Number.isInteger(h) || !Number.isInteger(w)) {
        throw new FormatError(`rle: header ${JSON.stringify(header)} is not 'H W'`);
    }
    if (h < 1 || w < 1) {
        throw new FormatError(`rle: mask extent ${h} x ${w} is not positive`);
    }
    const tokens = runsLine.split(/\s+/).filter((t) => t.length > 0);
    if (tokens.length === 0) {
        throw new FormatError('rle: runs line is empty');
    }
    const runs = tokens.map((tok) => {
        const r = Number(tok);
        if (!Number.isInteger(r)) {
            throw new FormatError('rle: runs line contains a non-integer token');
        }
        return r;
    });
    if (runs.some((r) => r < 0)) {
        throw new FormatError('rle: negative run length');
    }
    if (runs.slice(1).some((r) => r === 0)) {
        throw new FormatError('rle: zero-length run after the first');
    }
    const total = runs.reduce((a, b) => a + b, 0);
    if (total !== h * w) {
        throw new FormatError(`rle: runs sum to ${total} for a ${h} x ${w} mask (${h * w} pixels)`);
    }
    const data = new Uint8Array(h * w);
    let at = 0;
    runs.forEach((r, i) => {
        data.fill(i % 2, at, at + r);
        at += r;
    });
    return { h, w, data };
}

export function decodeRle(text: string): BinaryMask {
    const lines = text.split('\n').filter((line) => line.trim().length > 0);
    if (lines.length !== 2) {
        throw new FormatError(`rle: expected 2 lines (header, runs), got ${lines.length}`);
    }
    return decodeRecord(lines[0]!, lines[1]!);
}

/** Parse a concatenation of records, e.g. a proposals file. */
export function decodeRleRecords(text: string): BinaryMask[] {
    const lines = text.split('\n').filter((line) => line.trim().length > 0);
    if (lines.length % 2 !== 0) {
        throw new FormatError(`rle: odd line count ${lines.length}, records are header + runs pairs`);
    }
    const masks: BinaryMask[] = [];
    for (let i = 0; i < lines.length; i += 2) {
        masks.push(decodeRecord(lines[i]!, lines[i + 1]!));
    }
    return masks;
}

export function encodeRleRecords(masks: BinaryMask[]): string {
    return masks.map(encodeRle).join('');
}
