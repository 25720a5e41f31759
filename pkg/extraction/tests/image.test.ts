import { describe, expect, it } from 'vitest';
import { FormatError } from '../src/errors.js';
import {
    CONTOUR_RED,
    cropHalfZoom,
    drawRedContour,
    getPixel,
    makeImage,
    maskBoundary,
    maskBox,
    visualPrompt,
} from '../src/image.js';
import type { BinaryMask } from '../src/rle.js';

function rectMask(h: number, w: number, top: number, left: number, mh: number, mw: number): BinaryMask {
    const data = new Uint8Array(h * w);
    for (let y = top; y < top + mh; y++) {
        data.fill(1, y * w + left, y * w + left + mw);
    }
    return { h, w, data };
}

describe('mask geometry', () => {
    it('finds the boundary ring of a filled rectangle', () => {
        const m = rectMask(8, 8, 2, 2, 4, 4);
        const b = maskBoundary(m);
        let ring = 0;
        for (let y = 0; y < 8; y++) {
            for (let x = 0; x < 8; x++) {
                const inside = y >= 3 && y <= 4 && x >= 3 && x <= 4;
                const onMask = m.data[y * 8 + x] === 1;
                expect(b.data[y * 8 + x]).toBe(onMask && !inside ? 1 : 0);
                ring += b.data[y * 8 + x]!;
            }
        }
        expect(ring).toBe(12);
    });

    it('treats the image border as outside', () => {
        const m = rectMask(4, 4, 0, 0, 4, 4);
        const b = maskBoundary(m);
        expect(b.data[0]).toBe(1);
        expect(b.data[1 * 4 + 1]).toBe(0);
    });

    it('computes tight bounding boxes', () => {
        expect(maskBox(rectMask(10, 12, 3, 4, 2, 5))).toEqual({ top: 3, left: 4, bottom: 4, right: 8 });
    });

    it('rejects an all-background mask', () => {
        expect(() => maskBox({ h: 2, w: 2, data: new Uint8Array(4) })).toThrow(FormatError);
    });
});

describe('contour rendering', () => {
    it('paints exactly the boundary red and leaves the rest alone', () => {
        const img = makeImage(8, 8, [10, 20, 30]);
        const m = rectMask(8, 8, 2, 2, 4, 4);
        const out = drawRedContour(img, m);
        const b = maskBoundary(m);
        for (let y = 0; y < 8; y++) {
            for (let x = 0; x < 8; x++) {
                const expected = b.data[y * 8 + x] === 1 ? CONTOUR_RED : [10, 20, 30];
                expect(getPixel(out, y, x)).toEqual(expected);
            }
        }
    });

    it('does not mutate its input', () => {
        const img = makeImage(4, 4, [5, 5, 5]);
        drawRedContour(img, rectMask(4, 4, 1, 1, 2, 2));
        expect(getPixel(img, 1, 1)).toEqual([5, 5, 5]);
    });

    it('rejects a mask extent that differs from the image', () => {
        expect(() => drawRedContour(makeImage(4, 4), rectMask(5, 4, 0, 0, 1, 1))).toThrow(FormatError);
    });
});

describe('half-zoom crop', () => {
    it('grows the box by half the object extent per side', () => {
        // object rows 20..29 (10 tall) in a 60px image: crop rows 15..34
        const img = makeImage(60, 60);
        const m = rectMask(60, 60, 20, 20, 10, 10);
        const out = cropHalfZoom(img, m);
        expect(out.h).toBe(20);
        expect(out.w).toBe(20);
    });

    it('clamps at the image border', () => {
        const img = makeImage(20, 20);
        const m = rectMask(20, 20, 0, 0, 8, 8);
        const out = cropHalfZoom(img, m);
        expect(out.h).toBe(12);
        expect(out.w).toBe(12);
    });

    it('keeps the object centered when nothing clamps', () => {
        const img = makeImage(40, 40, [1, 2, 3]);
        const m = rectMask(40, 40, 16, 16, 8, 8);
        const out = cropHalfZoom(img, m);
        expect(out.h).toBe(16);
        expect(out.w).toBe(16);
    });
});

describe('visual prompt', () => {
    it('contains the red contour inside the crop', () => {
        const img = makeImage(32, 32, [40, 40, 40]);
        const m = rectMask(32, 32, 8, 8, 8, 8);
        const out = visualPrompt(img, m);
        let reds = 0;
        for (let y = 0; y < out.h; y++) {
            for (let x = 0; x < out.w; x++) {
                const [r, g, b] = getPixel(out, y, x);
                if (r === 255 && g === 0 && b === 0) {
                    reds += 1;
                }
            }
        }
        // 8x8 rectangle boundary is 28 pixels, all inside the crop
        expect(reds).toBe(28);
    });
});
