const MASK64 = (1n << 64n) - 1n;

/** splitmix64 step; returns the next state and the mixed output. */
function splitmix64(state: bigint): { state: bigint; out: bigint } {
  const next = (state + 0x9e3779b97f4a7c15n) & MASK64;
  let z = next;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  z = z ^ (z >> 31n);
  return { state: next, out: z };
}

function fnv1a64(text: string): bigint {
  let hash = 0xcbf29ce484222325n;
  const bytes = Buffer.from(text, "utf8");
  for (const byte of bytes) {
    hash = ((hash ^ BigInt(byte)) * 0x100000001b3n) & MASK64;
  }
  return hash;
}

/** Derive an independent stream seed from a master seed and a stage label. */
export function deriveSeed(master: number | bigint, stage: string, index = 0): bigint {
  const mixed = splitmix64((BigInt(master) ^ fnv1a64(stage)) & MASK64).out;
  return splitmix64((mixed ^ BigInt(index)) & MASK64).out;
}

/** Deterministic scalar RNG; every source of randomness in this package runs on it. */
export class Prng {
  private state: bigint;
  private spareGaussian: number | null = null;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK64;
  }

  nextUint64(): bigint {
    const { state, out } = splitmix64(this.state);
    this.state = state;
    return out;
  }

  /** Uniform in [0, 1) with 53 bits of entropy. */
  nextFloat(): number {
    return Number(this.nextUint64() >> 11n) * 2 ** -53;
  }

  /** Uniform integer in [0, bound). */
  nextInt(bound: number): number {
    if (!Number.isInteger(bound) || bound <= 0) {
      throw new RangeError(`bound must be a positive integer, got ${bound}`);
    }
    return Math.floor(this.nextFloat() * bound);
  }

  /** Standard normal via Box-Muller; caches the spare deviate. */
  nextGaussian(): number {
    if (this.spareGaussian !== null) {
      const spare = this.spareGaussian;
      this.spareGaussian = null;
      return spare;
    }
    let u = 0;
    do {
      u = this.nextFloat();
    } while (u === 0);
    const v = this.nextFloat();
    const radius = Math.sqrt(-2 * Math.log(u));
    this.spareGaussian = radius * Math.sin(2 * Math.PI * v);
    return radius * Math.cos(2 * Math.PI * v);
  }

  /** Fisher-Yates permutation of 0..n-1. */
  permutation(n: number): Int32Array {
    const order = new Int32Array(n);
    for (let i = 0; i < n; i++) order[i] = i;
    for (let i = n - 1; i > 0; i--) {
      const j = this.nextInt(i + 1);
      const tmp = order[i]!;
      order[i] = order[j]!;
      order[j] = tmp;
    }
    return order;
  }

  /** Float32 buffer of iid gaussians scaled by `scale`. */
  gaussianArray(size: number, scale: number): Float32Array {
    const data = new Float32Array(size);
    for (let i = 0; i < size; i++) data[i] = this.nextGaussian() * scale;
    return data;
  }
}
