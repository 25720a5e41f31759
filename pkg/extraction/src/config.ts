import { readFileSync } from 'node:fs';
import { z } from 'zod';
import { FormatError, IoFailure } from './errors.js';
import { loadCheckpointSuite, StubSuite, type ModelSuite } from './models.js';

// Backend selection lives in a small JSON config so swapping the stub for
// real checkpoints is a file edit, not a code change.

const gridSchema = z.tuple([z.number().int().positive(), z.number().int().positive()]);

export const configSchema = z
    .object({
        backend: z.enum(['stub', 'checkpoint']).default('stub'),
        dinoGrid: gridSchema.default([6, 6]),
        clipGrid: gridSchema.default([6, 6]),
        featDim: z.number().int().positive().default(16),
        embedDim: z.number().int().positive().default(8),
        layers: z.number().int().positive().default(3),
        checkpoints: z
            .object({
                patchModel: z.string().optional(),
                alignModel: z.string().optional(),
                maskedEmbedder: z.string().optional(),
                vlm: z.string().optional(),
            })
            .default({}),
    })
    .strict();

export type ToolkitConfig = z.infer<typeof configSchema>;

export const DEFAULT_CONFIG: ToolkitConfig = configSchema.parse({});

export function loadConfig(path: string): ToolkitConfig {
    let text: string;
    try {
        text = readFileSync(path, 'utf-8');
    } catch (err) {
        throw new IoFailure(`cannot read config ${path}: ${(err as Error).message}`);
    }
    let parsed: unknown;
    try {
        parsed = JSON.parse(text);
    } catch (err) {
        throw new FormatError(`config ${path} is not JSON: ${(err as Error).message}`);
    }
    const result = configSchema.safeParse(parsed);
    if (!result.success) {
        const issue = result.error.issues[0]!;
        throw new FormatError(`config ${path}: ${issue.path.join('.') || '(root)'}: ${issue.message}`);
    }
    return result.data;
}

export function buildSuite(config: ToolkitConfig): ModelSuite {
    if (config.backend === 'checkpoint') {
        return loadCheckpointSuite(config.checkpoints);
    }
    return new StubSuite({
        dinoGrid: config.dinoGrid,
        clipGrid: config.clipGrid,
        featDim: config.featDim,
        embedDim: config.embedDim,
        layers: config.layers,
    });
}
