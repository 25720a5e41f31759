import { ModelUnavailable } from './errors.js';
import { getPixel, visualPrompt, type RgbImage } from './image.js';
import type { BinaryMask } from './rle.js';
import { fnv1a } from './prng.js';
import type { Tensor } from './tensor.js';

// Model backends. A suite bundles every network the exporter consults:
// the patch-feature transformer with its self-attention, the image-text
// aligner, the masked-image embedder, and the vision-language model that
// names the object. The stub suite fakes all of them deterministically so
// the full export path runs with no weights on disk.

/** Wording the vision-language model is asked, fixed across backends. */
export const NAME_PROMPT = 'What is the name of the object inside the red mask contour';

/** Softmax temperature for the image-text alignment map. */
export const TAU = 0.01;

export interface ModelSuite {
    readonly name: string;
    /** Free-form VLM answer to a prompt about an image. */
    answer(image: RgbImage, prompt: string): string;
    /** Short VLM description of the image's main object. */
    describe(image: RgbImage): string;
    /** (h, w, d) per-patch features for one image. */
    patchFeatures(image: RgbImage): Tensor;
    /** (layers, h*w, h*w) non-negative self-attention over the patch tokens. */
    patchAttention(image: RgbImage): Tensor;
    /** (hc, wc) non-negative map of where the text matches the image. */
    textAlignment(image: RgbImage, text: string): Tensor;
    /** (layers, hc*wc, hc*wc) attention on the aligner's token grid. */
    textAttention(image: RgbImage): Tensor;
    /** (d,) embedding of the image restricted to a mask. */
    maskedImageEmbedding(image: RgbImage, mask: BinaryMask): Tensor;
    /** (d,) embedding of a text string in the same space. */
    textEmbedding(text: string): Tensor;
}

export interface PaletteEntry {
    rgb: [number, number, number];
    name: string;
    blurb: string;
}

// Object classes the stub can "recognize", keyed by exact fill color. The
// blurbs intentionally share words with one sense in the demo lexicon so
// the disambiguation step has something real to do.
export const DEMO_PALETTE: PaletteEntry[] = [
    { rgb: [80, 160, 240], name: 'cat', blurb: 'a small feline mammal with soft fur' },
    { rgb: [240, 200, 80], name: 'dog', blurb: 'a domesticated mammal that barks' },
    { rgb: [60, 200, 120], name: 'bass', blurb: 'a freshwater fish caught by anglers' },
    { rgb: [180, 120, 220], name: 'crane', blurb: 'a wading bird with long legs' },
    { rgb: [200, 120, 40], name: 'bus', blurb: 'a vehicle full of passengers' },
];

export interface StubOptions {
    dinoGrid?: [number, number];
    clipGrid?: [number, number];
    featDim?: number;
    embedDim?: number;
    layers?: number;
    palette?: PaletteEntry[];
}

function cellMeans(image: RgbImage, grid: [number, number]): Float32Array {
    const [gh, gw] = grid;
    const out = new Float32Array(gh * gw * 3);
    for (let i = 0; i < gh; i++) {
        const y0 = Math.floor((i * image.h) / gh);
        const y1 = Math.ceil(((i + 1) * image.h) / gh);
        for (let j = 0; j < gw; j++) {
            const x0 = Math.floor((j * image.w) / gw);
            const x1 = Math.ceil(((j + 1) * image.w) / gw);
            let r = 0;
            let g = 0;
            let b = 0;
            let n = 0;
            for (let y = y0; y < y1; y++) {
                for (let x = x0; x < x1; x++) {
                    const px = getPixel(image, y, x);
                    r += px[0];
                    g += px[1];
                    b += px[2];
                    n += 1;
                }
            }
            const at = 3 * (i * gw + j);
            out[at] = r / n;
            out[at + 1] = g / n;
            out[at + 2] = b / n;
        }
    }
    return out;
}

function gaussianAttention(layers: number, gh: number, gw: number): Tensor {
    const tokens = gh * gw;
    const data = new Float32Array(layers * tokens * tokens);
    for (let l = 0; l < layers; l++) {
        const sigma = 0.75 + 0.75 * l;
        for (let a = 0; a < tokens; a++) {
            const ay = Math.floor(a / gw);
            const ax = a % gw;
            for (let b = 0; b < tokens; b++) {
                const dy = ay - Math.floor(b / gw);
                const dx = ax - (b % gw);
                data[(l * tokens + a) * tokens + b] =
                    Math.exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
            }
        }
    }
    return { dtype: 'f32', shape: [layers, tokens, tokens], data };
}

/**
 * Deterministic fake model suite. Everything is a pure function of pixel
 * content, so one image always yields one answer, and re-running an export
 * is byte-identical. Objects are identified by their exact fill color.
 */
export class StubSuite implements ModelSuite {
    readonly name = 'stub';
    readonly dinoGrid: [number, number];
    readonly clipGrid: [number, number];
    readonly featDim: number;
    readonly embedDim: number;
    readonly layers: number;
    private palette: PaletteEntry[];

    constructor(opts: StubOptions = {}) {
        this.dinoGrid = opts.dinoGrid ?? [6, 6];
        this.clipGrid = opts.clipGrid ?? [6, 6];
        this.featDim = opts.featDim ?? 16;
        this.embedDim = opts.embedDim ?? 8;
        this.layers = opts.layers ?? 3;
        this.palette = opts.palette ?? DEMO_PALETTE;
    }

    private recognize(image: RgbImage): PaletteEntry | null {
        const counts = new Array(this.palette.length).fill(0) as number[];
        for (let y = 0; y < image.h; y++) {
            for (let x = 0; x < image.w; x++) {
                const [r, g, b] = getPixel(image, y, x);
                for (let k = 0; k < this.palette.length; k++) {
                    const c = this.palette[k]!.rgb;
                    if (r === c[0] && g === c[1] && b === c[2]) {
                        counts[k] = counts[k]! + 1;
                    }
                }
            }
        }
        let best = -1;
        for (let k = 0; k < counts.length; k++) {
            if (counts[k]! > 0 && (best < 0 || counts[k]! > counts[best]!)) {
                best = k;
            }
        }
        return best < 0 ? null : this.palette[best]!;
    }

    answer(image: RgbImage, prompt: string): string {
        if (prompt === NAME_PROMPT) {
            return this.recognize(image)?.name ?? 'unknown';
        }
        return this.describe(image);
    }

    describe(image: RgbImage): string {
        const entry = this.recognize(image);
        return entry ? `the picture shows ${entry.blurb}` : 'an empty scene';
    }

    patchFeatures(image: RgbImage): Tensor {
        const [gh, gw] = this.dinoGrid;
        const means = cellMeans(image, [gh, gw]);
        const data = new Float32Array(gh * gw * this.featDim);
        for (let cell = 0; cell < gh * gw; cell++) {
            const r = means[3 * cell]!;
            const g = means[3 * cell + 1]!;
            const b = means[3 * cell + 2]!;
            data[cell * this.featDim] = 1;
            for (let k = 1; k < this.featDim; k++) {
                // content-keyed direction; the constant first channel keeps
                // every patch vector away from zero norm
                data[cell * this.featDim + k] =
                    Math.cos(0.011 * r + 0.029 * g + 0.047 * b + 1.7 * k);
            }
        }
        return { dtype: 'f32', shape: [gh, gw, this.featDim], data };
    }

    patchAttention(_image: RgbImage): Tensor {
        return gaussianAttention(this.layers, this.dinoGrid[0], this.dinoGrid[1]);
    }

    textAlignment(image: RgbImage, text: string): Tensor {
        const [gh, gw] = this.clipGrid;
        const means = cellMeans(image, [gh, gw]);
        const want = new Set(text.toLowerCase().split(/[^a-z0-9]+/));
        let target: PaletteEntry | null = null;
        for (const entry of this.palette) {
            if (want.has(entry.name)) {
                target = entry;
                break;
            }
        }
        const raw = new Float32Array(gh * gw);
        for (let cell = 0; cell < gh * gw; cell++) {
            if (!target) {
                continue;
            }
            const dr = means[3 * cell]! - target.rgb[0];
            const dg = means[3 * cell + 1]! - target.rgb[1];
            const db = means[3 * cell + 2]! - target.rgb[2];
            raw[cell] = Math.exp(-Math.sqrt(dr * dr + dg * dg + db * db) / 64);
        }
        // temperature softmax, max-shifted so single-precision never overflows
        let hi = -Infinity;
        for (const v of raw) {
            hi = Math.max(hi, v);
        }
        const data = new Float32Array(gh * gw);
        let total = 0;
        for (let i = 0; i < raw.length; i++) {
            data[i] = Math.exp((raw[i]! - hi) / TAU);
            total += data[i]!;
        }
        for (let i = 0; i < data.length; i++) {
            data[i] = data[i]! / total;
        }
        return { dtype: 'f32', shape: [gh, gw], data };
    }

    textAttention(_image: RgbImage): Tensor {
        return gaussianAttention(this.layers, this.clipGrid[0], this.clipGrid[1]);
    }

    maskedImageEmbedding(image: RgbImage, mask: BinaryMask): Tensor {
        const prompt = visualPrompt(image, mask);
        const key = fnv1a(prompt.data) % 977;
        let area = 0;
        for (const v of mask.data) {
            area += v;
        }
        const frac = area / mask.data.length;
        const data = new Float32Array(this.embedDim);
        for (let k = 0; k < this.embedDim; k++) {
            data[k] = Math.cos(0.013 * key + 0.59 * k) + frac * Math.sin(1.3 * k + 0.2);
        }
        return { dtype: 'f32', shape: [this.embedDim], data };
    }

    textEmbedding(text: string): Tensor {
        const key = fnv1a(new TextEncoder().encode(text.toLowerCase())) % 977;
        const data = new Float32Array(this.embedDim);
        for (let k = 0; k < this.embedDim; k++) {
            data[k] = Math.cos(0.017 * key + 0.83 * k);
        }
        return { dtype: 'f32', shape: [this.embedDim], data };
    }
}

export interface CheckpointPaths {
    patchModel?: string;
    alignModel?: string;
    maskedEmbedder?: string;
    vlm?: string;
}

/**
 * Load real checkpoints. Not wired to an inference runtime here; callers
 * get a clear signal instead of silently wrong numbers.
 */
export function loadCheckpointSuite(paths: CheckpointPaths): ModelSuite {
    const listed = Object.entries(paths)
        .filter(([, v]) => typeof v === 'string')
        .map(([k, v]) => `${k}=${v}`)
        .join(', ');
    throw new ModelUnavailable(
        `checkpoint backend needs an inference runtime; none is installed (${listed || 'no paths given'})`);
}
