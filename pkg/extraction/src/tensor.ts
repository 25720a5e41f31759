import { readFileSync, writeFileSync } from 'node:fs';
import { FormatError, IoFailure } from './errors.js';

// Binary tensor container understood by the ranking engine. Layout:
//   8 bytes  magic "MARSTEN1"
//   1 byte   dtype code (0 = float32, 1 = uint8)
//   1 byte   rank
//   rank x 4 bytes  extents, little-endian uint32
//   payload  row-major values, little-endian
// Every multi-byte value is written explicitly through a DataView so the
// bytes are identical on big-endian hosts.

export const MAGIC = 'MARSTEN1';

export type TensorDtype = 'f32' | 'u8';

export interface Tensor {
    dtype: TensorDtype;
    shape: number[];
    data: Float32Array | Uint8Array;
}

const DTYPE_CODE: Record<TensorDtype, number> = { f32: 0, u8: 1 };

function shapeCells(shape: number[]): number {
    return shape.reduce((a, b) => a * b, 1);
}

export function encodeTensor(t: Tensor): Uint8Array {
    if (t.shape.length === 0 || t.shape.length > 255) {
        throw new FormatError(`rank ${t.shape.length} out of range`);
    }
    for (const dim of t.shape) {
        if (!Number.isInteger(dim) || dim <= 0 || dim > 0xffffffff) {
            throw new FormatError(`bad extent ${dim}`);
        }
    }
    const cells = shapeCells(t.shape);
    if (t.data.length !== cells) {
        throw new FormatError(`shape wants ${cells} values, data has ${t.data.length}`);
    }
    const itemSize = t.dtype === 'f32' ? 4 : 1;
    if (t.dtype === 'f32') {
        for (let i = 0; i < t.data.length; i++) {
            if (!Number.isFinite(t.data[i]!)) {
                throw new FormatError(`non-finite value at index ${i}`);
            }
        }
    }
    const headerLen = 8 + 1 + 1 + 4 * t.shape.length;
    const out = new Uint8Array(headerLen + itemSize * cells);
    const view = new DataView(out.buffer);
    for (let i = 0; i < 8; i++) {
        out[i] = MAGIC.charCodeAt(i);
    }
    out[8] = DTYPE_CODE[t.dtype];
    out[9] = t.shape.length;
    t.shape.forEach((dim, i) => view.setUint32(10 + 4 * i, dim, true));
    if (t.dtype === 'f32') {
        for (let i = 0; i < cells; i++) {
            view.setFloat32(headerLen + 4 * i, t.data[i]!, true);
        }
    } else {
        out.set(t.data as Uint8Array, headerLen);
    }
    return out;
}

export function decodeTensor(bytes: Uint8Array): Tensor {
    if (bytes.length < 10) {
        throw new FormatError(`container too short: ${bytes.length} bytes`);
    }
    let magic = '';
    for (let i = 0; i < 8; i++) {
        magic += String.fromCharCode(bytes[i]!);
    }
    if (magic !== MAGIC) {
        throw new FormatError(`magic mismatch: got ${JSON.stringify(magic)}`);
    }
    const code = bytes[8]!;
    if (code !== 0 && code !== 1) {
        throw new FormatError(`dtype code ${code} unknown`);
    }
    const dtype: TensorDtype = code === 0 ? 'f32' : 'u8';
    const rank = bytes[9]!;
    if (rank === 0) {
        throw new FormatError('rank 0 container');
    }
    const headerLen = 10 + 4 * rank;
    if (bytes.length < headerLen) {
        throw new FormatError('header truncated');
    }
    const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
    const shape: number[] = [];
    for (let i = 0; i < rank; i++) {
        const dim = view.getUint32(10 + 4 * i, true);
        if (dim === 0) {
            throw new FormatError(`zero extent at axis ${i}`);
        }
        shape.push(dim);
    }
    const cells = shapeCells(shape);
    const itemSize = dtype === 'f32' ? 4 : 1;
    if (bytes.length !== headerLen + itemSize * cells) {
        throw new FormatError(
            `payload is ${bytes.length - headerLen} bytes, shape wants ${itemSize * cells}`);
    }
    if (dtype === 'f32') {
        const data = new Float32Array(cells);
        for (let i = 0; i < cells; i++) {
            data[i] = view.getFloat32(headerLen + 4 * i, true);
            if (!Number.isFinite(data[i]!)) {
                throw new FormatError(`non-finite value at index ${i}`);
            }
        }
        return { dtype, shape, data };
    }
    return { dtype, shape, data: bytes.slice(headerLen) };
}

export function writeTensor(path: string, t: Tensor): void {
    const bytes = encodeTensor(t);
    try {
        writeFileSync(path, bytes);
    } catch (err) {
        throw new IoFailure(`cannot write ${path}: ${(err as Error).message}`);
    }
}

export function readTensor(path: string): Tensor {
    let bytes: Buffer;
    try {
        bytes = readFileSync(path);
    } catch (err) {
        throw new IoFailure(`cannot read ${path}: ${(err as Error).message}`);
    }
    return decodeTensor(new Uint8Array(bytes));
}

/** Convenience constructor for float tensors from plain nested arrays. */
export function f32(shape: number[], values: ArrayLike<number>): Tensor {
    return { dtype: 'f32', shape, data: Float32Array.from(values as ArrayLike<number>) };
}

export function u8(shape: number[], values: ArrayLike<number>): Tensor {
    return { dtype: 'u8', shape, data: Uint8Array.from(values as ArrayLike<number>) };
}
