#!/usr/bin/env node
/**
 * pool-export: turn a parameter table into an embedding pool file.
 *
 *   pool-export export --table data.csv --template t.txt \
 *       --model fixtures/mini-encoder --pooling auto --out pool.bin
 *
 * The table is CSV with a header; an `id` column names candidates and a
 * `y` column is copied through as objective labels. The template is a text
 * file with {column} placeholders. Output is the optimizer's binary pool
 * format, written atomically.
 */

import fs from 'node:fs';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { DEFAULT_MAX_TOKENS, embedTexts } from './embed.js';
import { PoolingChoice } from './pooling.js';
import { writePool } from './poolfile.js';
import { readTable } from './table.js';
import { renderAll } from './template.js';

export async function main(argv: string[]): Promise<number> {
  let failed = false;
  const parser = yargs(argv)
    .command(
      'export',
      'render a table through a template, embed it, write a pool file',
      (cmd) =>
        cmd
          .option('table', { type: 'string', demandOption: true,
                             describe: 'input CSV with a header row' })
          .option('template', { type: 'string', demandOption: true,
                                describe: 'template file with {column} placeholders' })
          .option('model', { type: 'string', demandOption: true,
                             describe: 'model id resolved against the model roots' })
          .option('pooling', { type: 'string', default: 'auto',
                               choices: ['auto', 'cls', 'mean', 'last_token'],
                               describe: 'pooling rule (auto follows the architecture)' })
          .option('out', { type: 'string', demandOption: true,
                           describe: 'output pool file (binary format)' })
          .option('max-tokens', { type: 'number', default: DEFAULT_MAX_TOKENS })
          .option('batch-size', { type: 'number', default: 8 }),
      (args) => {
        const table = readTable(args.table);
        const template = fs.readFileSync(args.template, 'utf-8');
        const texts = renderAll(template, table.rows);
        const result = embedTexts(texts, {
          modelId: args.model,
          pooling: args.pooling as PoolingChoice,
          maxTokens: args['max-tokens'],
          batchSize: args['batch-size'],
        });
        writePool(
          {
            ids: table.ids,
            embeddings: result.matrix,
            labels: table.labels,
            meta: { ...result.meta, source_table: args.table },
          },
          args.out,
        );
        console.log(
          `wrote ${args.out}: n=${result.matrix.length} ` +
          `d=${result.matrix[0].length} pooling=${result.pooling} ` +
          `truncated=${result.truncatedCount}`,
        );
      },
    )
    .demandCommand(1)
    .strict()
    .fail((message, error) => {
      console.error(`error: ${error ? error.message : message}`);
      failed = true;
    });
  await parser.parse();
  return failed ? 1 : 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
