export class ExtractionError extends Error {
    constructor(message: string) {
        super(message);
        this.name = new.target.name;
    }
}

/** A model backend was requested that is not installed or cannot be loaded. */
export class ModelUnavailable extends ExtractionError {}

/** No lexicon is loaded, or the requested entry is absent. */
export class LexiconUnavailable extends ExtractionError {}

/** A file could not be read or written. */
export class IoFailure extends ExtractionError {}

/** Bytes or text that do not follow the expected layout. */
export class FormatError extends ExtractionError {}
