#!/usr/bin/env node
/**
 * fca-export: run a pretrained backbone over images and write FMAP files.
 *
 * Weights load from --weights, or from $FCA_WEIGHTS_DIR/<backbone>.wgt.
 * Pretrained checkpoints are converted offline with
 * tools/convert_torchvision.py; there is no network access at export time,
 * so a missing bundle is a hard error with a pointer to the converter.
 */

import { Command } from 'commander';
import { existsSync } from 'fs';
import { join } from 'path';

import { exportAll } from './export.js';
import { BACKBONES, Backbone } from './models.js';
import { loadWeights } from './weights.js';

function resolveWeights(backbone: string, explicit?: string): string {
  if (explicit) {
    if (!existsSync(explicit)) {
      throw new Error(`weight bundle not found: ${explicit}`);
    }
    return explicit;
  }
  const dir = process.env.FCA_WEIGHTS_DIR ?? 'weights';
  const candidate = join(dir, `${backbone}.wgt`);
  if (!existsSync(candidate)) {
    throw new Error(
      `no weight bundle at ${candidate}; convert a torchvision checkpoint with ` +
      'tools/convert_torchvision.py or pass --weights',
    );
  }
  return candidate;
}

export function buildProgram(): Command {
  const program = new Command();
  program
    .name('fca-export')
    .description('export CNN feature maps as FMAP files');
  program
    .command('export')
    .argument('<paths...>', 'image files or directories')
    .requiredOption('--backbone <name>', `one of: ${BACKBONES.join(', ')}`)
    .option('--resize <n>', 'resize inputs to n x n before the forward pass', parseInt)
    .option('--out <dir>', 'output directory', 'features')
    .option('--weights <file>', 'weight bundle (default $FCA_WEIGHTS_DIR/<backbone>.wgt)')
    .action((paths: string[], opts) => {
      const backbone = opts.backbone as Backbone;
      if (!BACKBONES.includes(backbone)) {
        throw new Error(`--backbone must be one of ${BACKBONES.join(', ')}`);
      }
      const weights = loadWeights(resolveWeights(backbone, opts.weights));
      const written = exportAll(paths, {
        backbone,
        resize: opts.resize,
        outDir: opts.out,
        weights,
      });
      console.log(`wrote ${written.length} feature file(s) to ${opts.out}`);
    });
  return program;
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('cli.js') || entry.endsWith('cli.ts') || entry.endsWith('fca-export')) {
  buildProgram()
    .parseAsync(process.argv)
    .catch((err: Error) => {
      console.error(`error: ${err.message}`);
      process.exit(1);
    });
}
