import { FormatError, LexiconUnavailable } from './errors.js';

// Class-name aggregation and gloss disambiguation. A lexicon maps a class
// name to candidate senses in a fixed order; the sense whose gloss shares
// the most words with the model's description wins.

export interface Synset {
    name: string;
    gloss: string;
}

export interface Lexicon {
    /** Candidate senses for a class name, in lexicon order; [] when unknown. */
    lookup(className: string): Synset[];
}

export class MiniLexicon implements Lexicon {
    private entries: Map<string, Synset[]>;

    constructor(entries: Record<string, Synset[]>) {
        this.entries = new Map(
            Object.entries(entries).map(([k, v]) => [k.toLowerCase(), v]));
    }

    lookup(className: string): Synset[] {
        return this.entries.get(className.toLowerCase()) ?? [];
    }
}

export const DEMO_LEXICON = new MiniLexicon({
    cat: [
        { name: 'cat.n.01', gloss: 'feline mammal usually having thick soft fur' },
        { name: 'cat.n.02', gloss: 'an informal term for a youth or man' },
    ],
    dog: [
        { name: 'dog.n.01', gloss: 'a domesticated carnivorous mammal that barks' },
    ],
    bass: [
        { name: 'bass.n.01', gloss: 'the lowest part of the musical range' },
        { name: 'bass.n.02', gloss: 'a spiny-finned freshwater fish prized by anglers' },
    ],
    crane: [
        { name: 'crane.n.01', gloss: 'a large wading bird with long legs and neck' },
        { name: 'crane.n.02', gloss: 'a lifting machine used on construction sites' },
    ],
    bus: [
        { name: 'bus.n.01', gloss: 'a vehicle carrying many passengers on a route' },
    ],
});

export interface TextRetrievalResult {
    className: string;
    /** Chosen gloss, one of candidateDefinitions, or '' when nothing overlaps. */
    description: string;
    candidateDefinitions: string[];
    overlapCounts: number[];
}

/** Most frequent answer; frequency ties go to the earliest first occurrence. */
export function majorityVote(answers: string[]): string {
    if (answers.length === 0) {
        throw new FormatError('majority vote over zero answers');
    }
    const counts = new Map<string, number>();
    for (const a of answers) {
        counts.set(a, (counts.get(a) ?? 0) + 1);
    }
    let best = answers[0]!;
    let bestCount = 0;
    for (const a of answers) {
        // first occurrence wins ties because later equal counts never replace
        const c = counts.get(a)!;
        if (c > bestCount) {
            best = a;
            bestCount = c;
        }
    }
    return best;
}

/** Case-folded word set; anything non-alphanumeric separates tokens. */
export function tokenSet(text: string): Set<string> {
    const out = new Set<string>();
    for (const tok of text.toLowerCase().split(/[^a-z0-9]+/)) {
        if (tok.length > 0) {
            out.add(tok);
        }
    }
    return out;
}

export function overlapCount(a: Set<string>, b: Set<string>): number {
    let n = 0;
    for (const tok of a) {
        if (b.has(tok)) {
            n += 1;
        }
    }
    return n;
}

/**
 * Pick the sense of className whose gloss best matches the model's
 * description. A single sense is returned verbatim; with several, the
 * largest token overlap wins, ties keep the earliest sense, and zero
 * overlap everywhere yields an empty description.
 */
export function disambiguate(
    lexicon: Lexicon,
    className: string,
    description: string,
): TextRetrievalResult {
    if (className.trim().length === 0) {
        throw new FormatError('class name is empty');
    }
    const senses = lexicon.lookup(className);
    if (senses.length === 0) {
        throw new LexiconUnavailable(`no senses for ${JSON.stringify(className)}`);
    }
    const described = tokenSet(description);
    const candidateDefinitions = senses.map((s) => s.gloss);
    const overlapCounts = candidateDefinitions.map(
        (gloss) => overlapCount(tokenSet(gloss), described));
    if (senses.length === 1) {
        return { className, description: candidateDefinitions[0]!, candidateDefinitions, overlapCounts };
    }
    let bestIdx = 0;
    for (let i = 1; i < overlapCounts.length; i++) {
        if (overlapCounts[i]! > overlapCounts[bestIdx]!) {
            bestIdx = i;
        }
    }
    const chosen = overlapCounts[bestIdx]! > 0 ? candidateDefinitions[bestIdx]! : '';
    return { className, description: chosen, candidateDefinitions, overlapCounts };
}
