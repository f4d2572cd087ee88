/**
 * The two export backbones.
 *
 * vgg19-two-convs: the first two 3x3 convolutions (64 + 64 channels, both
 * relu-activated), concatenated to 128 channels at full input resolution;
 * the stack's effective receptive field is 5x5.
 *
 * wrn50-block2: a WideResNet-50-2 trunk through its second residual stage:
 * 7x7/2 conv, bn, relu, 3x3/2 max pool, then 3 + 4 bottleneck blocks.
 * Output has 512 channels at 1/8 of the input resolution.
 *
 * Tensor names follow the torchvision state_dict convention so real
 * checkpoints convert directly (tools/convert_torchvision.py).
 */

import {
  Chw,
  addInPlace,
  batchNorm,
  conv2d,
  maxPool2d,
  relu,
} from './ops.js';
import { WeightBundle, getTensor } from './weights.js';

export type Backbone = 'vgg19' | 'wrn50';

export const BACKBONES: Backbone[] = ['vgg19', 'wrn50'];

export function vgg19TwoConvs(input: Chw, weights: WeightBundle): Chw {
  const c1 = relu(conv2d(input, getTensor(weights, 'features.0.weight'),
    getTensor(weights, 'features.0.bias'), 1, 1));
  const c2 = relu(conv2d(c1, getTensor(weights, 'features.2.weight'),
    getTensor(weights, 'features.2.bias'), 1, 1));
  const out = {
    c: c1.c + c2.c,
    h: c1.h,
    w: c1.w,
    data: new Float32Array((c1.c + c2.c) * c1.h * c1.w),
  };
  out.data.set(c1.data, 0);
  out.data.set(c2.data, c1.data.length);
  return out;
}

function bnLayer(x: Chw, weights: WeightBundle, prefix: string): Chw {
  return batchNorm(
    x,
    getTensor(weights, `${prefix}.weight`),
    getTensor(weights, `${prefix}.bias`),
    getTensor(weights, `${prefix}.running_mean`),
    getTensor(weights, `${prefix}.running_var`),
  );
}

function bottleneck(x: Chw, weights: WeightBundle, prefix: string, stride: number): Chw {
  let out = relu(bnLayer(
    conv2d(x, getTensor(weights, `${prefix}.conv1.weight`), null, 1, 0),
    weights, `${prefix}.bn1`));
  out = relu(bnLayer(
    conv2d(out, getTensor(weights, `${prefix}.conv2.weight`), null, stride, 1),
    weights, `${prefix}.bn2`));
  out = bnLayer(
    conv2d(out, getTensor(weights, `${prefix}.conv3.weight`), null, 1, 0),
    weights, `${prefix}.bn3`);
  let shortcut = x;
  if (weights.has(`${prefix}.downsample.0.weight`)) {
    shortcut = bnLayer(
      conv2d(x, getTensor(weights, `${prefix}.downsample.0.weight`), null, stride, 0),
      weights, `${prefix}.downsample.1`);
  }
  return relu(addInPlace(out, shortcut));
}

export function wrn50Block2(input: Chw, weights: WeightBundle): Chw {
  let x = relu(bnLayer(
    conv2d(input, getTensor(weights, 'conv1.weight'), null, 2, 3),
    weights, 'bn1'));
  x = maxPool2d(x, 3, 2, 1);
  for (let i = 0; i < 3; i++) {
    x = bottleneck(x, weights, `layer1.${i}`, 1);
  }
  for (let i = 0; i < 4; i++) {
    x = bottleneck(x, weights, `layer2.${i}`, i === 0 ? 2 : 1);
  }
  return x;
}

export function runBackbone(name: Backbone, input: Chw, weights: WeightBundle): Chw {
  if (name === 'vgg19') return vgg19TwoConvs(input, weights);
  if (name === 'wrn50') return wrn50Block2(input, weights);
  throw new Error(`unknown backbone "${name}"`);
}

/** Expected output contract: [channels, stride] per backbone. */
export const BACKBONE_CONTRACT: Record<Backbone, { channels: number; stride: number }> = {
  vgg19: { channels: 128, stride: 1 },
  wrn50: { channels: 512, stride: 8 },
};
