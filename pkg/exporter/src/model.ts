/**
 * A small transformer encoder stack evaluated in pure TypeScript.
 *
 * Model directories hold config.json plus a flat little-endian float32
 * weights file in the order documented by `weightLayout`. Decoder-class
 * models run with a causal attention mask; encoder and encoder-decoder
 * classes attend bidirectionally. Inference is deterministic: no dropout,
 * float64 accumulation throughout.
 */

import fs from 'node:fs';
import path from 'node:path';
import { Architecture, VOCAB_SIZE } from './tokenizer.js';

export interface ModelConfig {
  model_id: string;
  architecture: Architecture;
  hidden_size: number;
  num_layers: number;
  num_heads: number;
  vocab_size: number;
  max_positions: number;
  weights_file: string;
  seed?: number;
}

interface LayerWeights {
  ln1Gain: Float64Array;
  ln1Bias: Float64Array;
  wq: Float64Array;
  bq: Float64Array;
  wk: Float64Array;
  bk: Float64Array;
  wv: Float64Array;
  bv: Float64Array;
  wo: Float64Array;
  bo: Float64Array;
  ln2Gain: Float64Array;
  ln2Bias: Float64Array;
  w1: Float64Array;
  b1: Float64Array;
  w2: Float64Array;
  b2: Float64Array;
}

export interface Model {
  config: ModelConfig;
  tokEmbed: Float64Array;
  posEmbed: Float64Array;
  layers: LayerWeights[];
  lnFinalGain: Float64Array;
  lnFinalBias: Float64Array;
}

/** Sizes (in floats) of every tensor, in file order. */
export function weightLayout(cfg: ModelConfig): [string, number][] {
  const h = cfg.hidden_size;
  const layout: [string, number][] = [
    ['tok_embed', cfg.vocab_size * h],
    ['pos_embed', cfg.max_positions * h],
  ];
  for (let layer = 0; layer < cfg.num_layers; layer++) {
    layout.push(
      [`layer${layer}.ln1_gain`, h], [`layer${layer}.ln1_bias`, h],
      [`layer${layer}.wq`, h * h], [`layer${layer}.bq`, h],
      [`layer${layer}.wk`, h * h], [`layer${layer}.bk`, h],
      [`layer${layer}.wv`, h * h], [`layer${layer}.bv`, h],
      [`layer${layer}.wo`, h * h], [`layer${layer}.bo`, h],
      [`layer${layer}.ln2_gain`, h], [`layer${layer}.ln2_bias`, h],
      [`layer${layer}.w1`, h * 4 * h], [`layer${layer}.b1`, 4 * h],
      [`layer${layer}.w2`, 4 * h * h], [`layer${layer}.b2`, h],
    );
  }
  layout.push(['ln_final_gain', h], ['ln_final_bias', h]);
  return layout;
}

export function loadModel(directory: string): Model {
  const configPath = path.join(directory, 'config.json');
  const cfg = JSON.parse(fs.readFileSync(configPath, 'utf-8')) as ModelConfig;
  for (const key of ['architecture', 'hidden_size', 'num_layers', 'num_heads',
                     'vocab_size', 'max_positions', 'weights_file'] as const) {
    if (cfg[key] === undefined) {
      throw new Error(`${configPath}: missing ${key}`);
    }
  }
  if (!['encoder', 'decoder', 'encoder_decoder'].includes(cfg.architecture)) {
    throw new Error(`${configPath}: unknown architecture ${cfg.architecture}`);
  }
  if (cfg.vocab_size < VOCAB_SIZE) {
    throw new Error(`${configPath}: vocab_size must cover the byte tokenizer `
      + `(${VOCAB_SIZE}), got ${cfg.vocab_size}`);
  }
  if (cfg.hidden_size % cfg.num_heads !== 0) {
    throw new Error(`${configPath}: hidden_size must divide by num_heads`);
  }

  const raw = fs.readFileSync(path.join(directory, cfg.weights_file));
  const total = weightLayout(cfg).reduce((acc, [, size]) => acc + size, 0);
  if (raw.byteLength !== total * 4) {
    throw new Error(`${directory}: weights file holds ${raw.byteLength / 4} `
      + `floats, layout needs ${total}`);
  }
  const f32 = new Float32Array(raw.buffer, raw.byteOffset, total);
  let offset = 0;
  const take = (size: number) => {
    const out = new Float64Array(size);
    for (let i = 0; i < size; i++) out[i] = f32[offset + i];
    offset += size;
    return out;
  };

  const h = cfg.hidden_size;
  const tokEmbed = take(cfg.vocab_size * h);
  const posEmbed = take(cfg.max_positions * h);
  const layers: LayerWeights[] = [];
  for (let layer = 0; layer < cfg.num_layers; layer++) {
    layers.push({
      ln1Gain: take(h), ln1Bias: take(h),
      wq: take(h * h), bq: take(h),
      wk: take(h * h), bk: take(h),
      wv: take(h * h), bv: take(h),
      wo: take(h * h), bo: take(h),
      ln2Gain: take(h), ln2Bias: take(h),
      w1: take(h * 4 * h), b1: take(4 * h),
      w2: take(4 * h * h), b2: take(h),
    });
  }
  return { config: cfg, tokEmbed, posEmbed, layers,
           lnFinalGain: take(h), lnFinalBias: take(h) };
}

function layerNorm(x: Float64Array, seq: number, h: number,
                   gain: Float64Array, bias: Float64Array): Float64Array {
  const out = new Float64Array(seq * h);
  for (let t = 0; t < seq; t++) {
    let mean = 0;
    for (let i = 0; i < h; i++) mean += x[t * h + i];
    mean /= h;
    let variance = 0;
    for (let i = 0; i < h; i++) {
      const c = x[t * h + i] - mean;
      variance += c * c;
    }
    variance /= h;
    const inv = 1 / Math.sqrt(variance + 1e-5);
    for (let i = 0; i < h; i++) {
      out[t * h + i] = (x[t * h + i] - mean) * inv * gain[i] + bias[i];
    }
  }
  return out;
}

/** y[t,:] += x[t,:] @ W (W stored row-major, in_dim x out_dim) + b */
function affine(x: Float64Array, seq: number, inDim: number, outDim: number,
                w: Float64Array, b: Float64Array): Float64Array {
  const out = new Float64Array(seq * outDim);
  for (let t = 0; t < seq; t++) {
    for (let j = 0; j < outDim; j++) out[t * outDim + j] = b[j];
    for (let i = 0; i < inDim; i++) {
      const v = x[t * inDim + i];
      if (v === 0) continue;
      const rowOff = i * outDim;
      for (let j = 0; j < outDim; j++) {
        out[t * outDim + j] += v * w[rowOff + j];
      }
    }
  }
  return out;
}

function gelu(v: number): number {
  // tanh approximation, the standard transformer activation
  return 0.5 * v * (1 + Math.tanh(0.7978845608028654 * (v + 0.044715 * v * v * v)));
}

/**
 * Full forward pass; returns the final hidden states (seq x hidden).
 */
export function forward(model: Model, tokenIds: number[]): Float64Array {
  const cfg = model.config;
  const h = cfg.hidden_size;
  const seq = tokenIds.length;
  if (seq > cfg.max_positions) {
    throw new Error(`sequence of ${seq} exceeds max_positions ${cfg.max_positions}`);
  }
  const causal = cfg.architecture === 'decoder';
  const heads = cfg.num_heads;
  const headDim = h / heads;
  const scale = 1 / Math.sqrt(headDim);

  let x = new Float64Array(seq * h);
  for (let t = 0; t < seq; t++) {
    const tok = tokenIds[t] * h;
    const pos = t * h;
    for (let i = 0; i < h; i++) {
      x[t * h + i] = model.tokEmbed[tok + i] + model.posEmbed[pos + i];
    }
  }

  for (const layer of model.layers) {
    const normed = layerNorm(x, seq, h, layer.ln1Gain, layer.ln1Bias);
    const q = affine(normed, seq, h, h, layer.wq, layer.bq);
    const k = affine(normed, seq, h, h, layer.wk, layer.bk);
    const v = affine(normed, seq, h, h, layer.wv, layer.bv);

    const attnOut = new Float64Array(seq * h);
    const scores = new Float64Array(seq);
    for (let head = 0; head < heads; head++) {
      const off = head * headDim;
      for (let t = 0; t < seq; t++) {
        const limit = causal ? t + 1 : seq;
        let maxScore = -Infinity;
        for (let s = 0; s < limit; s++) {
          let dot = 0;
          for (let i = 0; i < headDim; i++) {
            dot += q[t * h + off + i] * k[s * h + off + i];
          }
          scores[s] = dot * scale;
          if (scores[s] > maxScore) maxScore = scores[s];
        }
        let denom = 0;
        for (let s = 0; s < limit; s++) {
          scores[s] = Math.exp(scores[s] - maxScore);
          denom += scores[s];
        }
        for (let s = 0; s < limit; s++) {
          const weight = scores[s] / denom;
          if (weight === 0) continue;
          for (let i = 0; i < headDim; i++) {
            attnOut[t * h + off + i] += weight * v[s * h + off + i];
          }
        }
      }
    }
    const projected = affine(attnOut, seq, h, h, layer.wo, layer.bo);
    for (let i = 0; i < seq * h; i++) x[i] += projected[i];

    const normed2 = layerNorm(x, seq, h, layer.ln2Gain, layer.ln2Bias);
    const inner = affine(normed2, seq, h, 4 * h, layer.w1, layer.b1);
    for (let i = 0; i < inner.length; i++) inner[i] = gelu(inner[i]);
    const mlpOut = affine(inner, seq, 4 * h, h, layer.w2, layer.b2);
    for (let i = 0; i < seq * h; i++) x[i] += mlpOut[i];
  }

  return layerNorm(x, seq, h, model.lnFinalGain, model.lnFinalBias);
}
