export { ExtractionError, FormatError, IoFailure, LexiconUnavailable, ModelUnavailable } from './errors.js';
export { decodeTensor, encodeTensor, f32, readTensor, u8, writeTensor, MAGIC } from './tensor.js';
export type { Tensor, TensorDtype } from './tensor.js';
export { decodeRle, decodeRleRecords, encodeRle, encodeRleRecords } from './rle.js';
export type { BinaryMask } from './rle.js';
export { cropHalfZoom, drawRedContour, makeImage, maskBoundary, maskBox, visualPrompt } from './image.js';
export type { Box, RgbImage } from './image.js';
export { DEMO_LEXICON, disambiguate, majorityVote, MiniLexicon, overlapCount, tokenSet } from './lexicon.js';
export type { Lexicon, Synset, TextRetrievalResult } from './lexicon.js';
export { DEMO_PALETTE, loadCheckpointSuite, NAME_PROMPT, StubSuite, TAU } from './models.js';
export type { ModelSuite, PaletteEntry } from './models.js';
export { exportBundle, maxPoolMask, retrieveClassName } from './export.js';
export type { Episode, ExportResult, SupportShot } from './export.js';
export { buildSampleEpisode } from './sample.js';
export { buildSuite, configSchema, DEFAULT_CONFIG, loadConfig } from './config.js';
export type { ToolkitConfig } from './config.js';
export { runCli } from './cli.js';
