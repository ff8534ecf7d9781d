/**
 * Model resolution: a model id (hub-style, e.g. "fixtures/mini-encoder")
 * maps to a local directory holding config.json and the weights file.
 *
 * Search roots, in order: the POOL_EXPORTER_MODELS environment variable,
 * ./models under the working directory, and the models/ directory shipped
 * with this package. This sandbox-friendly layout keeps the embed pipeline
 * identical whether weights came from a hub download or were placed by
 * hand.
 */

import fs from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

export function modelRoots(): string[] {
  const roots: string[] = [];
  if (process.env.POOL_EXPORTER_MODELS) {
    roots.push(process.env.POOL_EXPORTER_MODELS);
  }
  roots.push(path.join(process.cwd(), 'models'));
  const packageRoot = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '..');
  roots.push(path.join(packageRoot, 'models'));
  // When running from dist/, models/ sits one level further up.
  roots.push(path.join(packageRoot, '..', 'models'));
  return roots;
}

export function resolveModelDir(modelId: string): string {
  if (modelId.includes('..')) {
    throw new Error(`model id ${modelId} must not contain ..`);
  }
  const tried: string[] = [];
  for (const root of modelRoots()) {
    const candidate = path.join(root, modelId);
    tried.push(candidate);
    if (fs.existsSync(path.join(candidate, 'config.json'))) {
      return candidate;
    }
  }
  throw new Error(
    `model ${modelId} not found; looked in:\n  ${tried.join('\n  ')}`,
  );
}
