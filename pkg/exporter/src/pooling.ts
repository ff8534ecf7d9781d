/**
 * Pooling: collapse per-token hidden states into one embedding vector.
 *
 * Auto-dispatch follows the architecture: CLS token for encoders, last
 * token for decoders, mean over tokens for encoder-decoders. Overrides are
 * allowed, recorded by the caller, and warned about when they are known to
 * hurt (a decoder's first token sees nothing; an encoder's last token
 * dilutes the trained CLS summary).
 */

import { Architecture } from './tokenizer.js';

export type Pooling = 'cls' | 'mean' | 'last_token';
export type PoolingChoice = Pooling | 'auto';

export const ARCHITECTURE_DEFAULT: Record<Architecture, Pooling> = {
  encoder: 'cls',
  decoder: 'last_token',
  encoder_decoder: 'mean',
};

export function resolvePooling(
  choice: PoolingChoice,
  architecture: Architecture,
  warn: (message: string) => void = console.warn,
): Pooling {
  const preferred = ARCHITECTURE_DEFAULT[architecture];
  if (choice === 'auto') return preferred;
  if (choice !== preferred) {
    if (architecture === 'encoder' && choice === 'last_token') {
      warn(`last_token pooling on an encoder model is suboptimal; `
        + `encoder models benefit from the CLS token`);
    } else if (architecture === 'decoder' && choice === 'cls') {
      warn(`cls pooling on a decoder model collapses inputs to near-duplicate `
        + `representations; last_token follows the autoregressive structure`);
    } else {
      warn(`pooling ${choice} overrides the ${architecture} default ${preferred}`);
    }
  }
  return choice;
}

/** Pool hidden states (seq x hidden, row-major) into a single vector. */
export function pool(
  hidden: Float64Array,
  seq: number,
  hiddenSize: number,
  rule: Pooling,
  architecture: Architecture,
): Float64Array {
  if (seq < 1) throw new Error('cannot pool an empty sequence');
  const out = new Float64Array(hiddenSize);
  if (rule === 'cls') {
    if (architecture !== 'encoder') {
      // No CLS token was prepended; fall back to the first position.
      for (let i = 0; i < hiddenSize; i++) out[i] = hidden[i];
      return out;
    }
    for (let i = 0; i < hiddenSize; i++) out[i] = hidden[i];
    return out;
  }
  if (rule === 'last_token') {
    const off = (seq - 1) * hiddenSize;
    for (let i = 0; i < hiddenSize; i++) out[i] = hidden[off + i];
    return out;
  }
  for (let t = 0; t < seq; t++) {
    for (let i = 0; i < hiddenSize; i++) out[i] += hidden[t * hiddenSize + i];
  }
  for (let i = 0; i < hiddenSize; i++) out[i] /= seq;
  return out;
}
