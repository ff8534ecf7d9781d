/**
 * Deterministic random numbers (splitmix64 core) for fixture-model weight
 * generation. Not cryptographic; stability across platforms is the point.
 */

export class Rng {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & 0xffffffffffffffffn;
  }

  /** Next uint64 via splitmix64. */
  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & 0xffffffffffffffffn;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & 0xffffffffffffffffn;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & 0xffffffffffffffffn;
    return z ^ (z >> 31n);
  }

  /** Uniform in [0, 1) with 53-bit resolution. */
  uniform(): number {
    return Number(this.nextU64() >> 11n) / 9007199254740992;
  }

  /** Standard normal via Box-Muller. */
  normal(): number {
    let u = this.uniform();
    if (u === 0) u = Number.MIN_VALUE;
    const v = this.uniform();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }
}
