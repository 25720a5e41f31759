import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, describe, expect, it } from 'vitest';
import { FormatError, IoFailure } from '../src/errors.js';
import { decodeTensor, encodeTensor, f32, readTensor, u8, writeTensor } from '../src/tensor.js';

const tmp = mkdtempSync(join(tmpdir(), 'mten-'));
afterAll(() => rmSync(tmp, { recursive: true, force: true }));

describe('container bytes', () => {
    it('freezes the exact wire layout for a small float tensor', () => {
        // magic, dtype 0, rank 1, extent 2 LE, then 1.0f and -2.5f LE
        const bytes = encodeTensor(f32([2], [1.0, -2.5]));
        const expected = new Uint8Array([
            0x4d, 0x41, 0x52, 0x53, 0x54, 0x45, 0x4e, 0x31,
            0, 1,
            2, 0, 0, 0,
            0x00, 0x00, 0x80, 0x3f,
            0x00, 0x00, 0x20, 0xc0,
        ]);
        expect(Array.from(bytes)).toEqual(Array.from(expected));
    });

    it('freezes the layout for a byte tensor', () => {
        const bytes = encodeTensor(u8([2, 2], [1, 0, 0, 1]));
        const expected = new Uint8Array([
            0x4d, 0x41, 0x52, 0x53, 0x54, 0x45, 0x4e, 0x31,
            1, 2,
            2, 0, 0, 0, 2, 0, 0, 0,
            1, 0, 0, 1,
        ]);
        expect(Array.from(bytes)).toEqual(Array.from(expected));
    });
});

describe('roundtrips', () => {
    it('keeps float values and shape', () => {
        const t = f32([2, 3], [0, 0.5, -1, 3.25, 2, -0.125]);
        const back = decodeTensor(encodeTensor(t));
        expect(back.dtype).toBe('f32');
        expect(back.shape).toEqual([2, 3]);
        expect(Array.from(back.data)).toEqual([0, 0.5, -1, 3.25, 2, -0.125]);
    });

    it('keeps byte values', () => {
        const t = u8([4], [0, 1, 1, 0]);
        const back = decodeTensor(encodeTensor(t));
        expect(back.dtype).toBe('u8');
        expect(Array.from(back.data)).toEqual([0, 1, 1, 0]);
    });

    it('roundtrips through a file', () => {
        const path = join(tmp, 'roundtrip.mten');
        writeTensor(path, f32([3], [1, 2, 3]));
        const back = readTensor(path);
        expect(back.shape).toEqual([3]);
        expect(Array.from(back.data)).toEqual([1, 2, 3]);
    });
});

describe('encode validation', () => {
    it('rejects a shape/data mismatch', () => {
        expect(() => encodeTensor(f32([3], [1, 2]))).toThrow(FormatError);
    });

    it('rejects non-finite floats', () => {
        expect(() => encodeTensor(f32([1], [NaN]))).toThrow(/non-finite/);
        expect(() => encodeTensor(f32([1], [Infinity]))).toThrow(FormatError);
    });

    it('rejects zero extents and rank 0', () => {
        expect(() => encodeTensor(f32([0], []))).toThrow(FormatError);
        expect(() => encodeTensor({ dtype: 'f32', shape: [], data: new Float32Array(0) })).toThrow(
            /rank 0/);
    });
});

describe('decode validation', () => {
    const good = encodeTensor(f32([2], [1, 2]));

    it('rejects a wrong magic', () => {
        const bad = good.slice();
        bad[0] = 0x58;
        expect(() => decodeTensor(bad)).toThrow(/magic/);
    });

    it('rejects an unknown dtype code', () => {
        const bad = good.slice();
        bad[8] = 9;
        expect(() => decodeTensor(bad)).toThrow(/dtype code 9/);
    });

    it('rejects a truncated payload', () => {
        expect(() => decodeTensor(good.slice(0, good.length - 1))).toThrow(FormatError);
    });

    it('rejects trailing bytes', () => {
        const grown = new Uint8Array(good.length + 1);
        grown.set(good);
        expect(() => decodeTensor(grown)).toThrow(FormatError);
    });

    it('rejects a zero extent in the header', () => {
        const bad = good.slice();
        bad[10] = 0;
        expect(() => decodeTensor(bad.slice(0, 10 + 4))).toThrow(/zero extent/);
    });

    it('rejects a non-finite payload', () => {
        const bad = good.slice();
        // 0x7fc00000 is a quiet NaN
        bad[14] = 0x00;
        bad[15] = 0x00;
        bad[16] = 0xc0;
        bad[17] = 0x7f;
        expect(() => decodeTensor(bad)).toThrow(/non-finite/);
    });

    it('decodes regardless of buffer offset', () => {
        const padded = new Uint8Array(good.length + 8);
        padded.set(good, 8);
        const view = padded.subarray(8);
        expect(Array.from(decodeTensor(view).data)).toEqual([1, 2]);
    });
});

describe('file errors', () => {
    it('maps a missing file to IoFailure', () => {
        expect(() => readTensor(join(tmp, 'absent.mten'))).toThrow(IoFailure);
    });

    it('maps garbage bytes to FormatError', () => {
        const path = join(tmp, 'garbage.mten');
        writeFileSync(path, 'not a tensor');
        expect(() => readTensor(path)).toThrow(FormatError);
    });
});
