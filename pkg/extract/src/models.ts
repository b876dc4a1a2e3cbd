/** Vision-model families whose embeddings feed the evaluation pipeline. */
export type ModelFamily =
  | "ResNet18"
  | "ResNet50"
  | "CLIP-B/32"
  | "CLIP-L/14-336"
  | "DiT-Base"
  | "DiT-Large"
  | "MAE-448";

export const MODEL_FAMILIES: readonly ModelFamily[] = [
  "ResNet18",
  "ResNet50",
  "CLIP-B/32",
  "CLIP-L/14-336",
  "DiT-Base",
  "DiT-Large",
  "MAE-448",
];

export interface ModelSpec {
  family: ModelFamily;
  /** Square input side in pixels. */
  inputResolution: number;
  embeddingDim: number;
}

export class ModelSpecError extends Error {}

/** ResNet50 embeds at 2048, ResNet18 at 512, DiT and MAE at 768, CLIP at 512. */
const EMBEDDING_DIMS: Record<ModelFamily, number> = {
  ResNet18: 512,
  ResNet50: 2048,
  "CLIP-B/32": 512,
  "CLIP-L/14-336": 512,
  "DiT-Base": 768,
  "DiT-Large": 768,
  "MAE-448": 768,
};

const DEFAULT_RESOLUTIONS: Record<ModelFamily, number> = {
  ResNet18: 224,
  ResNet50: 224,
  "CLIP-B/32": 224,
  "CLIP-L/14-336": 336,
  "DiT-Base": 224,
  "DiT-Large": 224,
  "MAE-448": 448,
};

export function modelSpec(family: ModelFamily, inputResolution?: number): ModelSpec {
  const dim = EMBEDDING_DIMS[family];
  if (dim === undefined) {
    throw new ModelSpecError(`unknown model family ${JSON.stringify(family)}`);
  }
  const resolution = inputResolution ?? DEFAULT_RESOLUTIONS[family];
  if (!Number.isInteger(resolution) || resolution < 32) {
    throw new ModelSpecError(`input resolution must be an integer >= 32, got ${resolution}`);
  }
  if (family === "MAE-448" && resolution !== 448) {
    throw new ModelSpecError("MAE-448 is fixed at 448px input; the resolution cannot be overridden");
  }
  return { family, inputResolution: resolution, embeddingDim: dim };
}

export function parseModelFamily(text: string): ModelFamily {
  const match = MODEL_FAMILIES.find((f) => f === text);
  if (match === undefined) {
    throw new ModelSpecError(
      `unknown model ${JSON.stringify(text)}; expected one of ${MODEL_FAMILIES.join(", ")}`,
    );
  }
  return match;
}

/** Filesystem-safe tag for a family (CLIP-B/32 -> clip-b32). */
export function modelSlug(family: ModelFamily): string {
  return family.toLowerCase().replaceAll("/", "");
}

/** Self-supervised pretraining ablations: input translation and mask-applied inputs. */
export interface AblationSpec {
  /** Maximum random translation as a fraction of the input side, in [0, 0.10]. */
  translateFrac: number;
  useSegmentedInputs: boolean;
}

export function ablationSpec(translateFrac: number, useSegmentedInputs: boolean): AblationSpec {
  if (!(translateFrac >= 0 && translateFrac <= 0.1)) {
    throw new ModelSpecError(`translate fraction must be in [0, 0.10], got ${translateFrac}`);
  }
  return { translateFrac, useSegmentedInputs };
}
