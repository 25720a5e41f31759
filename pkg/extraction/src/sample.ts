import { makeImage, setPixel, type RgbImage } from './image.js';
import { DEMO_PALETTE, type PaletteEntry } from './models.js';
import { mulberry32, randInt, type Rng } from './prng.js';
import type { BinaryMask } from './rle.js';
import type { Episode } from './export.js';

// Synthetic episodes for exercising the export path without a dataset:
// one solid-color object per image on a dark background, masks drawn from
// the same geometry. The stub models key on the fill color, so retrieval,
// alignment, and ranking all behave sensibly on these.

const BACKGROUND: [number, number, number] = [24, 24, 24];

export interface SampleOptions {
    size?: number;
    shots?: number;
    distractors?: number;
    palette?: PaletteEntry[];
}

interface Rect {
    top: number;
    left: number;
    h: number;
    w: number;
}

function paintRect(img: RgbImage, rect: Rect, rgb: [number, number, number]): void {
    for (let y = rect.top; y < rect.top + rect.h; y++) {
        for (let x = rect.left; x < rect.left + rect.w; x++) {
            setPixel(img, y, x, rgb);
        }
    }
}

function rectMask(size: number, rect: Rect): BinaryMask {
    const data = new Uint8Array(size * size);
    for (let y = rect.top; y < rect.top + rect.h; y++) {
        data.fill(1, y * size + rect.left, y * size + rect.left + rect.w);
    }
    return { h: size, w: size, data };
}

function randomRect(rng: Rng, size: number): Rect {
    const h = randInt(rng, Math.floor(size / 4), Math.floor(size / 2));
    const w = randInt(rng, Math.floor(size / 4), Math.floor(size / 2));
    return { top: randInt(rng, 0, size - h), left: randInt(rng, 0, size - w), h, w };
}

function overlaps(a: Rect, b: Rect): boolean {
    return a.top < b.top + b.h && b.top < a.top + a.h && a.left < b.left + b.w && b.left < a.left + a.w;
}

/**
 * Build one episode: `shots` support image/mask pairs and a query showing
 * the same class, plus proposals where proposal 0 is the true object mask
 * and the rest are off-object rectangles. Deterministic in the seed.
 */
export function buildSampleEpisode(seed: number, opts: SampleOptions = {}): Episode {
    const size = opts.size ?? 48;
    const shots = opts.shots ?? 2;
    const distractors = opts.distractors ?? 3;
    const palette = opts.palette ?? DEMO_PALETTE;
    const rng = mulberry32(seed);
    const entry = palette[randInt(rng, 0, palette.length - 1)]!;

    const supports = [];
    for (let s = 0; s < shots; s++) {
        const rect = randomRect(rng, size);
        const image = makeImage(size, size, BACKGROUND);
        paintRect(image, rect, entry.rgb);
        supports.push({ image, mask: rectMask(size, rect) });
    }

    const queryRect = randomRect(rng, size);
    const query = makeImage(size, size, BACKGROUND);
    paintRect(query, queryRect, entry.rgb);

    const proposals: BinaryMask[] = [rectMask(size, queryRect)];
    while (proposals.length < 1 + distractors) {
        const rect = randomRect(rng, size);
        // distractors avoid the object so exactly one proposal is right
        if (!overlaps(rect, queryRect)) {
            proposals.push(rectMask(size, rect));
        }
    }
    return { query, supports, proposals };
}
