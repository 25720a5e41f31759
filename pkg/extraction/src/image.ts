import { FormatError } from './errors.js';
import type { BinaryMask } from './rle.js';

// Minimal in-memory RGB raster plus the mask-to-visual-prompt rendering the
// name retrieval step feeds to the vision-language model.

export interface RgbImage {
    h: number;
    w: number;
    /** h*w*3 bytes, row-major, interleaved r,g,b. */
    data: Uint8Array;
}

export const CONTOUR_RED: [number, number, number] = [255, 0, 0];

export function makeImage(h: number, w: number, fill: [number, number, number] = [0, 0, 0]): RgbImage {
    if (h < 1 || w < 1) {
        throw new FormatError(`image extent ${h} x ${w} is not positive`);
    }
    const data = new Uint8Array(h * w * 3);
    for (let i = 0; i < h * w; i++) {
        data[3 * i] = fill[0];
        data[3 * i + 1] = fill[1];
        data[3 * i + 2] = fill[2];
    }
    return { h, w, data };
}

export function setPixel(img: RgbImage, y: number, x: number, rgb: [number, number, number]): void {
    const at = 3 * (y * img.w + x);
    img.data[at] = rgb[0];
    img.data[at + 1] = rgb[1];
    img.data[at + 2] = rgb[2];
}

export function getPixel(img: RgbImage, y: number, x: number): [number, number, number] {
    const at = 3 * (y * img.w + x);
    return [img.data[at]!, img.data[at + 1]!, img.data[at + 2]!];
}

function requireSameExtent(img: RgbImage, mask: BinaryMask): void {
    if (img.h !== mask.h || img.w !== mask.w) {
        throw new FormatError(
            `mask is ${mask.h} x ${mask.w}, image is ${img.h} x ${img.w}`);
    }
}

/** Foreground pixels with a 4-neighbor outside the mask (image border counts). */
export function maskBoundary(mask: BinaryMask): BinaryMask {
    const { h, w, data } = mask;
    const out = new Uint8Array(h * w);
    const fg = (y: number, x: number) =>
        y >= 0 && y < h && x >= 0 && x < w && data[y * w + x] === 1;
    for (let y = 0; y < h; y++) {
        for (let x = 0; x < w; x++) {
            if (data[y * w + x] !== 1) {
                continue;
            }
            if (!fg(y - 1, x) || !fg(y + 1, x) || !fg(y, x - 1) || !fg(y, x + 1)) {
                out[y * w + x] = 1;
            }
        }
    }
    return { h, w, data: out };
}

/** Copy the image and trace the mask boundary in pure red, one pixel wide. */
export function drawRedContour(img: RgbImage, mask: BinaryMask): RgbImage {
    requireSameExtent(img, mask);
    const out: RgbImage = { h: img.h, w: img.w, data: img.data.slice() };
    const boundary = maskBoundary(mask);
    for (let y = 0; y < img.h; y++) {
        for (let x = 0; x < img.w; x++) {
            if (boundary.data[y * img.w + x] === 1) {
                setPixel(out, y, x, CONTOUR_RED);
            }
        }
    }
    return out;
}

export interface Box {
    top: number;
    left: number;
    bottom: number;
    right: number;
}

export function maskBox(mask: BinaryMask): Box {
    let top = mask.h;
    let left = mask.w;
    let bottom = -1;
    let right = -1;
    for (let y = 0; y < mask.h; y++) {
        for (let x = 0; x < mask.w; x++) {
            if (mask.data[y * mask.w + x] === 1) {
                top = Math.min(top, y);
                left = Math.min(left, x);
                bottom = Math.max(bottom, y);
                right = Math.max(right, x);
            }
        }
    }
    if (bottom < 0) {
        throw new FormatError('mask has no foreground pixel');
    }
    return { top, left, bottom, right };
}

export function crop(img: RgbImage, box: Box): RgbImage {
    const h = box.bottom - box.top + 1;
    const w = box.right - box.left + 1;
    if (h < 1 || w < 1 || box.top < 0 || box.left < 0 || box.bottom >= img.h || box.right >= img.w) {
        throw new FormatError(`crop box ${JSON.stringify(box)} leaves a ${img.h} x ${img.w} image`);
    }
    const out = makeImage(h, w);
    for (let y = 0; y < h; y++) {
        const src = 3 * ((box.top + y) * img.w + box.left);
        out.data.set(img.data.subarray(src, src + 3 * w), 3 * y * w);
    }
    return out;
}

/**
 * Crop around the mask so the object sits at roughly half the frame: grow
 * the tight bounding box by 50% of its extent on every side, clamped to the
 * image. Contour thickness and this cropping rule are rendering defaults,
 * not model-dictated values.
 */
export function cropHalfZoom(img: RgbImage, mask: BinaryMask): RgbImage {
    requireSameExtent(img, mask);
    const box = maskBox(mask);
    const growY = Math.round((box.bottom - box.top + 1) * 0.5);
    const growX = Math.round((box.right - box.left + 1) * 0.5);
    return crop(img, {
        top: Math.max(0, box.top - growY),
        left: Math.max(0, box.left - growX),
        bottom: Math.min(img.h - 1, box.bottom + growY),
        right: Math.min(img.w - 1, box.right + growX),
    });
}

/** Red contour plus half-zoom crop: the prompt image for name retrieval. */
export function visualPrompt(img: RgbImage, mask: BinaryMask): RgbImage {
    return cropHalfZoom(drawRedContour(img, mask), mask);
}
