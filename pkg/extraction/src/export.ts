import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import { FormatError, IoFailure, LexiconUnavailable } from './errors.js';
import { visualPrompt, type RgbImage } from './image.js';
import { disambiguate, majorityVote, type Lexicon } from './lexicon.js';
import { NAME_PROMPT, type ModelSuite } from './models.js';
import { encodeRleRecords, type BinaryMask } from './rle.js';
import { writeTensor, u8, type Tensor } from './tensor.js';

// Episode -> bundle directory. The directory layout is the ranking engine's
// input contract: manifest.txt maps field names to tensor files, text fields
// first, then the single tensors, then the indexed ones counted from 0.

export interface SupportShot {
    image: RgbImage;
    mask: BinaryMask;
}

export interface Episode {
    query: RgbImage;
    supports: SupportShot[];
    proposals: BinaryMask[];
}

export interface ExportResult {
    className: string;
    description: string;
    bundleDir: string;
    proposalsPath: string;
}

const SCALAR_FIELDS = [
    'query_patch_features',
    'dino_attention',
    'clip_text_alignment',
    'clip_attention',
    'text_embedding',
] as const;

const INDEXED_FIELDS = ['support_patch_features', 'support_masks_patch', 'mask_image_embeddings'] as const;

/**
 * Max-pool a pixel mask onto a patch grid. Window edges follow the adaptive
 * rule [floor(i*H/h), ceil((i+1)*H/h)) so neighboring windows share rows
 * when extents do not divide and no window is ever empty. This is the same
 * rule the consumer applies to proposals, so grids line up.
 */
export function maxPoolMask(mask: BinaryMask, grid: [number, number]): BinaryMask {
    const [gh, gw] = grid;
    if (gh < 1 || gw < 1) {
        throw new FormatError(`patch grid ${gh} x ${gw} must be at least 1 x 1`);
    }
    const out = new Uint8Array(gh * gw);
    for (let i = 0; i < gh; i++) {
        const y0 = Math.floor((i * mask.h) / gh);
        const y1 = Math.ceil(((i + 1) * mask.h) / gh);
        for (let j = 0; j < gw; j++) {
            const x0 = Math.floor((j * mask.w) / gw);
            const x1 = Math.ceil(((j + 1) * mask.w) / gw);
            let hit = 0;
            for (let y = y0; y < y1 && !hit; y++) {
                for (let x = x0; x < x1; x++) {
                    if (mask.data[y * mask.w + x] === 1) {
                        hit = 1;
                        break;
                    }
                }
            }
            out[i * gw + j] = hit;
        }
    }
    return { h: gh, w: gw, data: out };
}

/** Ask the VLM to name each shot's contoured object; return the modal answer. */
export function retrieveClassName(suite: ModelSuite, supports: SupportShot[]): string {
    if (supports.length === 0) {
        throw new FormatError('need at least one support shot');
    }
    const answers = supports.map((shot) =>
        suite.answer(visualPrompt(shot.image, shot.mask), NAME_PROMPT));
    return majorityVote(answers);
}

/**
 * Run the full extraction pipeline on one episode and write the bundle
 * directory plus a proposals file next to it. A class name outside the
 * lexicon degrades to an empty description rather than failing the export.
 */
export function exportBundle(
    episode: Episode,
    outDir: string,
    suite: ModelSuite,
    lexicon: Lexicon,
): ExportResult {
    const className = retrieveClassName(suite, supports(episode));
    const vlmText = suite.describe(visualPrompt(episode.supports[0]!.image, episode.supports[0]!.mask));
    let description = '';
    try {
        description = disambiguate(lexicon, className, vlmText).description;
    } catch (err) {
        if (!(err instanceof LexiconUnavailable)) {
            throw err;
        }
    }
    const text = description ? `${className}. ${description}` : className;

    const queryFeatures = suite.patchFeatures(episode.query);
    const grid: [number, number] = [queryFeatures.shape[0]!, queryFeatures.shape[1]!];
    const tensors: Array<[string, Tensor]> = [
        ['query_patch_features', queryFeatures],
        ['dino_attention', suite.patchAttention(episode.query)],
        ['clip_text_alignment', suite.textAlignment(episode.query, text)],
        ['clip_attention', suite.textAttention(episode.query)],
        ['text_embedding', suite.textEmbedding(text)],
    ];
    episode.supports.forEach((shot, i) => {
        tensors.push([`support_patch_features_${i}`, suite.patchFeatures(shot.image)]);
    });
    episode.supports.forEach((shot, i) => {
        const pooled = maxPoolMask(shot.mask, grid);
        tensors.push([`support_masks_patch_${i}`, u8([pooled.h, pooled.w], pooled.data)]);
    });
    episode.proposals.forEach((mask, i) => {
        tensors.push([`mask_image_embeddings_${i}`, suite.maskedImageEmbedding(episode.query, mask)]);
    });

    try {
        mkdirSync(outDir, { recursive: true });
    } catch (err) {
        throw new IoFailure(`cannot create ${outDir}: ${(err as Error).message}`);
    }
    const lines = [`class_name=${className}`, `class_description=${description}`];
    const ordered = orderForManifest(tensors);
    for (const [field, tensor] of ordered) {
        const filename = `${field}.mten`;
        lines.push(`${field}=${filename}`);
        writeTensor(join(outDir, filename), tensor);
    }
    const proposalsPath = join(outDir, 'proposals.txt');
    try {
        writeFileSync(join(outDir, 'manifest.txt'), lines.join('\n') + '\n');
        writeFileSync(proposalsPath, encodeRleRecords(episode.proposals));
    } catch (err) {
        throw new IoFailure(`cannot write into ${outDir}: ${(err as Error).message}`);
    }
    return { className, description, bundleDir: outDir, proposalsPath };
}

function supports(episode: Episode): SupportShot[] {
    if (episode.supports.length === 0) {
        throw new FormatError('episode has no support shots');
    }
    for (const shot of episode.supports) {
        if (shot.image.h !== shot.mask.h || shot.image.w !== shot.mask.w) {
            throw new FormatError('support mask extent differs from its image');
        }
    }
    return episode.supports;
}

function orderForManifest(tensors: Array<[string, Tensor]>): Array<[string, Tensor]> {
    const byName = new Map(tensors);
    const out: Array<[string, Tensor]> = [];
    for (const field of SCALAR_FIELDS) {
        const t = byName.get(field);
        if (t === undefined) {
            throw new FormatError(`missing tensor ${field}`);
        }
        out.push([field, t]);
    }
    for (const prefix of INDEXED_FIELDS) {
        for (let i = 0; ; i++) {
            const t = byName.get(`${prefix}_${i}`);
            if (t === undefined) {
                break;
            }
            out.push([`${prefix}_${i}`, t]);
        }
    }
    return out;
}
