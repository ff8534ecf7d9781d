/**
 * Generates the committed fixture models: one tiny model per architecture
 * class, with deterministic weights (seed recorded in config.json).
 * Rerunning reproduces the same bytes.
 */

import fs from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';
import { ModelConfig, weightLayout } from '../src/model.js';
import { Rng } from '../src/rng.js';
import { VOCAB_SIZE } from '../src/tokenizer.js';

const packageRoot = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '..', '..');

function makeModel(cfg: ModelConfig, directory: string): void {
  const rng = new Rng(cfg.seed ?? 0);
  const total = weightLayout(cfg).reduce((acc, [, size]) => acc + size, 0);
  const weights = Buffer.alloc(total * 4);
  let offset = 0;
  for (const [name, size] of weightLayout(cfg)) {
    const leaf = name.split('.').pop() ?? name;
    const isGain = leaf.endsWith('gain');
    const isBias = leaf.endsWith('bias') || leaf.startsWith('b');
    for (let i = 0; i < size; i++) {
      const value = isGain ? 1.0 : isBias ? 0.0 : 0.08 * rng.normal();
      weights.writeFloatLE(Math.fround(value), offset);
      offset += 4;
    }
  }
  fs.mkdirSync(directory, { recursive: true });
  fs.writeFileSync(path.join(directory, 'config.json'),
                   JSON.stringify(cfg, null, 2) + '\n');
  fs.writeFileSync(path.join(directory, cfg.weights_file), weights);
  console.log(`${cfg.model_id}: ${total} floats -> ${directory}`);
}

const common = {
  hidden_size: 32,
  num_layers: 2,
  num_heads: 4,
  vocab_size: VOCAB_SIZE,
  max_positions: 512,
  weights_file: 'weights.bin',
};

const modelsDir = path.join(packageRoot, 'models', 'fixtures');
makeModel({ model_id: 'fixtures/mini-encoder', architecture: 'encoder',
            seed: 101, ...common }, path.join(modelsDir, 'mini-encoder'));
makeModel({ model_id: 'fixtures/mini-decoder', architecture: 'decoder',
            seed: 202, ...common }, path.join(modelsDir, 'mini-decoder'));
makeModel({ model_id: 'fixtures/mini-encdec', architecture: 'encoder_decoder',
            seed: 303, ...common }, path.join(modelsDir, 'mini-encdec'));
