/**
 * The embedding pipeline: texts -> matrix + provenance metadata.
 *
 * Inference is deterministic (no dropout, fixed float64 accumulation);
 * duplicate texts produce identical rows. Batching only controls memory:
 * an allocation failure halves the batch and retries once.
 */

import { loadModel, forward, Model } from './model.js';
import { ARCHITECTURE_DEFAULT, Pooling, PoolingChoice, pool, resolvePooling } from './pooling.js';
import { resolveModelDir } from './registry.js';
import { encode } from './tokenizer.js';

export interface EmbedderSpec {
  modelId: string;
  pooling: PoolingChoice;
  maxTokens: number;
  batchSize: number;
}

export const DEFAULT_MAX_TOKENS = 512;

export interface EmbedResult {
  matrix: number[][];
  meta: Record<string, string>;
  pooling: Pooling;
  truncatedCount: number;
}

export function embedTexts(
  texts: string[],
  spec: EmbedderSpec,
  warn: (message: string) => void = console.warn,
): EmbedResult {
  if (texts.length === 0) throw new Error('no texts to embed');
  const model = loadModel(resolveModelDir(spec.modelId));
  const architecture = model.config.architecture;
  const pooling = resolvePooling(spec.pooling, architecture, warn);
  const maxTokens = Math.min(spec.maxTokens, model.config.max_positions);

  const matrix: number[][] = [];
  let truncatedCount = 0;
  let batchSize = Math.max(1, spec.batchSize);
  let start = 0;
  let retried = false;
  while (start < texts.length) {
    const batch = texts.slice(start, start + batchSize);
    try {
      for (const text of batch) {
        const { row, truncated } = embedOne(model, text, pooling, maxTokens);
        matrix.push(row);
        if (truncated) truncatedCount++;
      }
      start += batch.length;
    } catch (error) {
      if (!retried && error instanceof RangeError && batchSize > 1) {
        // Allocation failure: halve the batch and retry once.
        batchSize = Math.max(1, Math.floor(batchSize / 2));
        retried = true;
        warn(`embedding batch failed to allocate; retrying with batch size ${batchSize}`);
        continue;
      }
      throw error;
    }
  }

  const meta: Record<string, string> = {
    model_id: model.config.model_id,
    architecture,
    pooling,
    pooling_overridden: String(pooling !== ARCHITECTURE_DEFAULT[architecture]),
    hidden_size: String(model.config.hidden_size),
    max_tokens: String(maxTokens),
    truncated_count: String(truncatedCount),
    deterministic: 'true',
    precision: 'f32-weights/f64-accumulate',
  };
  return { matrix, meta, pooling, truncatedCount };
}

function embedOne(
  model: Model,
  text: string,
  pooling: Pooling,
  maxTokens: number,
): { row: number[]; truncated: boolean } {
  const { ids, truncated } = encode(text, model.config.architecture, maxTokens);
  const hidden = forward(model, ids);
  const pooled = pool(hidden, ids.length, model.config.hidden_size, pooling,
                      model.config.architecture);
  return { row: Array.from(pooled), truncated };
}
