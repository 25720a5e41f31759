import { join } from 'node:path';
import { pathToFileURL } from 'node:url';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { buildSuite, DEFAULT_CONFIG, loadConfig } from './config.js';
import { ExtractionError } from './errors.js';
import { exportBundle } from './export.js';
import { DEMO_LEXICON } from './lexicon.js';
import { buildSampleEpisode } from './sample.js';

// CLI wrapper: generate synthetic episodes and export them as bundle
// directories the ranking engine can consume directly.

export interface CliIo {
    out(line: string): void;
    err(line: string): void;
}

const processIo: CliIo = {
    out: (line) => process.stdout.write(line + '\n'),
    err: (line) => process.stderr.write(line + '\n'),
};

interface SampleArgs {
    out: string;
    episodes: number;
    seed: number;
    shots: number;
    distractors: number;
    config?: string;
}

function runSample(args: SampleArgs, io: CliIo): void {
    const config = args.config ? loadConfig(args.config) : DEFAULT_CONFIG;
    const suite = buildSuite(config);
    for (let e = 0; e < args.episodes; e++) {
        const episode = buildSampleEpisode(args.seed + e, {
            shots: args.shots,
            distractors: args.distractors,
        });
        const dir = join(args.out, `episode_${e}`);
        const result = exportBundle(episode, dir, suite, DEMO_LEXICON);
        io.out(`episode_${e}: class=${result.className} bundle=${result.bundleDir}`);
    }
}

class UsageError extends Error {}

export function runCli(argv: string[], io: CliIo = processIo): number {
    const parser = yargs(argv)
        .scriptName('extraction')
        .command(
            'sample',
            'export synthetic episodes as ranking-engine bundles',
            (y) =>
                y
                    .option('out', { type: 'string', demandOption: true, describe: 'output directory' })
                    .option('episodes', { type: 'number', default: 1 })
                    .option('seed', { type: 'number', default: 0 })
                    .option('shots', { type: 'number', default: 2 })
                    .option('distractors', { type: 'number', default: 3 })
                    .option('config', { type: 'string', describe: 'JSON config for the model backend' }),
            (args) => {
                runSample(args as unknown as SampleArgs, io);
            },
        )
        .demandCommand(1, 'pick a command')
        .strict()
        .exitProcess(false)
        .fail((msg, err) => {
            // command handlers run even after failed validation; bail out
            if (err) {
                throw err;
            }
            throw new UsageError(msg);
        });
    try {
        parser.parseSync();
    } catch (err) {
        if (err instanceof UsageError) {
            io.err(err.message);
            return 1;
        }
        throw err;
    }
    return 0;
}

function main(): void {
    try {
        process.exitCode = runCli(hideBin(process.argv));
    } catch (err) {
        if (err instanceof ExtractionError) {
            processIo.err(`${err.name}: ${err.message}`);
            process.exitCode = 1;
        } else {
            processIo.err(`internal error: ${(err as Error).stack ?? err}`);
            process.exitCode = 2;
        }
    }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
    main();
}
