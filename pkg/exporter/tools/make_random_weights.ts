/**
 * Generate structurally correct random weight bundles for tests and dry
 * runs. Shapes match the real checkpoints exactly; values are a seeded
 * LCG so bundles are reproducible.
 *
 * Usage: tsx tools/make_random_weights.ts <vgg19|wrn50> <out.wgt> [seed]
 */

import { writeFileSync } from 'fs';

import { encodeWeights, Tensor, WeightBundle } from '../src/weights.js';

function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    // numerical recipes LCG; plenty for test data
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 0x100000000 - 0.5;
  };
}

function tensor(rng: () => number, dims: number[], scale = 0.1): Tensor {
  const n = dims.reduce((a, b) => a * b, 1);
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    data[i] = rng() * 2 * scale;
  }
  return { dims, data };
}

function bnTensors(rng: () => number, bundle: WeightBundle, prefix: string, c: number): void {
  bundle.set(`${prefix}.weight`, tensor(rng, [c], 1.0));
  bundle.set(`${prefix}.bias`, tensor(rng, [c], 0.1));
  bundle.set(`${prefix}.running_mean`, tensor(rng, [c], 0.1));
  const variance = tensor(rng, [c], 0.0);
  for (let i = 0; i < c; i++) {
    variance.data[i] = 0.5 + Math.abs(variance.data[i]) + 0.01;
  }
  bundle.set(`${prefix}.running_var`, variance);
}

export function randomVgg19(seed = 0): WeightBundle {
  const rng = makeRng(seed + 1);
  const bundle: WeightBundle = new Map();
  bundle.set('features.0.weight', tensor(rng, [64, 3, 3, 3]));
  bundle.set('features.0.bias', tensor(rng, [64]));
  bundle.set('features.2.weight', tensor(rng, [64, 64, 3, 3]));
  bundle.set('features.2.bias', tensor(rng, [64]));
  return bundle;
}

function bottleneckTensors(
  rng: () => number,
  bundle: WeightBundle,
  prefix: string,
  inC: number,
  width: number,
  outC: number,
  downsample: boolean,
): void {
  bundle.set(`${prefix}.conv1.weight`, tensor(rng, [width, inC, 1, 1]));
  bnTensors(rng, bundle, `${prefix}.bn1`, width);
  bundle.set(`${prefix}.conv2.weight`, tensor(rng, [width, width, 3, 3]));
  bnTensors(rng, bundle, `${prefix}.bn2`, width);
  bundle.set(`${prefix}.conv3.weight`, tensor(rng, [outC, width, 1, 1]));
  bnTensors(rng, bundle, `${prefix}.bn3`, outC);
  if (downsample) {
    bundle.set(`${prefix}.downsample.0.weight`, tensor(rng, [outC, inC, 1, 1]));
    bnTensors(rng, bundle, `${prefix}.downsample.1`, outC);
  }
}

export function randomWrn50(seed = 0): WeightBundle {
  const rng = makeRng(seed + 2);
  const bundle: WeightBundle = new Map();
  bundle.set('conv1.weight', tensor(rng, [64, 3, 7, 7]));
  bnTensors(rng, bundle, 'bn1', 64);
  // wide (x2) bottlenecks: layer1 width 128 -> 256 out; layer2 width 256 -> 512 out
  bottleneckTensors(rng, bundle, 'layer1.0', 64, 128, 256, true);
  bottleneckTensors(rng, bundle, 'layer1.1', 256, 128, 256, false);
  bottleneckTensors(rng, bundle, 'layer1.2', 256, 128, 256, false);
  bottleneckTensors(rng, bundle, 'layer2.0', 256, 256, 512, true);
  for (let i = 1; i < 4; i++) {
    bottleneckTensors(rng, bundle, `layer2.${i}`, 512, 256, 512, false);
  }
  return bundle;
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('make_random_weights.ts') || entry.endsWith('make_random_weights.js')) {
  const [backbone, out, seedArg] = process.argv.slice(2);
  if (!backbone || !out) {
    console.error('usage: make_random_weights <vgg19|wrn50> <out.wgt> [seed]');
    process.exit(2);
  }
  const seed = seedArg ? parseInt(seedArg, 10) : 0;
  const bundle = backbone === 'vgg19' ? randomVgg19(seed)
    : backbone === 'wrn50' ? randomWrn50(seed)
      : null;
  if (!bundle) {
    console.error(`unknown backbone "${backbone}"`);
    process.exit(2);
  }
  writeFileSync(out, encodeWeights(bundle));
  console.log(`wrote ${bundle.size} tensors to ${out}`);
}
