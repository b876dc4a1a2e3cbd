export { buildEmbedder, vitConfigFor } from "./backbone.js";
export type { Embedder } from "./backbone.js";
export {
  FEMB_HEADER_BYTES,
  FEMB_MAGIC,
  FEMB_VERSION,
  FembError,
  atomicWriteFile,
  decodeFemb,
  encodeFemb,
  loadFemb,
  saveFemb,
} from "./femb.js";
export type { EmbeddingSet } from "./femb.js";
export { embedCorpus, embedDirectory } from "./extract.js";
export type { EmbedOptions } from "./extract.js";
export { CorpusError, batchTensor, listPngStems, loadCorpus } from "./images.js";
export type { Corpus } from "./images.js";
export { LabelError, loadLabels, saveLabels, validateLabels } from "./labels.js";
export type { LabelRow } from "./labels.js";
export { trainMae, translateImage } from "./mae.js";
export type { MaeTrainOptions, MaeTrainResult } from "./mae.js";
export {
  MODEL_FAMILIES,
  ModelSpecError,
  ablationSpec,
  modelSlug,
  modelSpec,
  parseModelFamily,
} from "./models.js";
export type { AblationSpec, ModelFamily, ModelSpec } from "./models.js";
export { MASK_CLASSES, readMaskPng, readRgbPng, writeMaskPng, writeRgbPng } from "./pngio.js";
export type { RgbImage } from "./pngio.js";
export { Prng, deriveSeed } from "./prng.js";
export { SEG_CLASSES, buildUnet, segmentDirectory, segmentImage } from "./unet.js";
export type { SegmentResult, Unet } from "./unet.js";
export { CheckpointError, WeightStore } from "./weights.js";
