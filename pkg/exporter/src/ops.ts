/**
 * Minimal CPU tensor ops for running convolutional backbones, on planar
 * (channel, y, x) float32 buffers. Only what the two export paths need:
 * convolution, folded batch norm, relu, max pooling, residual add, concat.
 */

import { Tensor } from './weights.js';

export interface Chw {
  c: number;
  h: number;
  w: number;
  /** planar layout: data[(c * h + y) * w + x] */
  data: Float32Array;
}

export function zeros(c: number, h: number, w: number): Chw {
  return { c, h, w, data: new Float32Array(c * h * w) };
}

export function conv2d(
  input: Chw,
  weight: Tensor,
  bias: Tensor | null,
  stride: number,
  pad: number,
): Chw {
  const [outC, inC, kh, kw] = weight.dims;
  if (inC !== input.c) {
    throw new Error(`conv weight expects ${inC} input channels, got ${input.c}`);
  }
  const oh = Math.floor((input.h + 2 * pad - kh) / stride) + 1;
  const ow = Math.floor((input.w + 2 * pad - kw) / stride) + 1;
  const out = zeros(outC, oh, ow);
  const src = input.data;
  const wdat = weight.data;
  for (let oc = 0; oc < outC; oc++) {
    const b = bias ? bias.data[oc] : 0;
    for (let oy = 0; oy < oh; oy++) {
      const iy0 = oy * stride - pad;
      for (let ox = 0; ox < ow; ox++) {
        const ix0 = ox * stride - pad;
        let acc = b;
        for (let ic = 0; ic < inC; ic++) {
          const srcPlane = (ic * input.h) * input.w;
          const wBase = ((oc * inC + ic) * kh) * kw;
          for (let ky = 0; ky < kh; ky++) {
            const iy = iy0 + ky;
            if (iy < 0 || iy >= input.h) continue;
            const rowOff = srcPlane + iy * input.w;
            const wRow = wBase + ky * kw;
            for (let kx = 0; kx < kw; kx++) {
              const ix = ix0 + kx;
              if (ix < 0 || ix >= input.w) continue;
              acc += src[rowOff + ix] * wdat[wRow + kx];
            }
          }
        }
        out.data[(oc * oh + oy) * ow + ox] = acc;
      }
    }
  }
  return out;
}

/** y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel, in place. */
export function batchNorm(
  x: Chw,
  gamma: Tensor,
  beta: Tensor,
  mean: Tensor,
  variance: Tensor,
  eps = 1e-5,
): Chw {
  const plane = x.h * x.w;
  for (let c = 0; c < x.c; c++) {
    const scale = gamma.data[c] / Math.sqrt(variance.data[c] + eps);
    const shift = beta.data[c] - mean.data[c] * scale;
    const base = c * plane;
    for (let i = 0; i < plane; i++) {
      x.data[base + i] = x.data[base + i] * scale + shift;
    }
  }
  return x;
}

export function relu(x: Chw): Chw {
  for (let i = 0; i < x.data.length; i++) {
    if (x.data[i] < 0) x.data[i] = 0;
  }
  return x;
}

export function maxPool2d(input: Chw, kernel: number, stride: number, pad: number): Chw {
  const oh = Math.floor((input.h + 2 * pad - kernel) / stride) + 1;
  const ow = Math.floor((input.w + 2 * pad - kernel) / stride) + 1;
  const out = zeros(input.c, oh, ow);
  for (let c = 0; c < input.c; c++) {
    const plane = (c * input.h) * input.w;
    for (let oy = 0; oy < oh; oy++) {
      for (let ox = 0; ox < ow; ox++) {
        let best = -Infinity;
        for (let ky = 0; ky < kernel; ky++) {
          const iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= input.h) continue;
          for (let kx = 0; kx < kernel; kx++) {
            const ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= input.w) continue;
            const v = input.data[plane + iy * input.w + ix];
            if (v > best) best = v;
          }
        }
        out.data[(c * oh + oy) * ow + ox] = best;
      }
    }
  }
  return out;
}

export function addInPlace(x: Chw, y: Chw): Chw {
  if (x.data.length !== y.data.length) {
    throw new Error('residual add needs matching shapes');
  }
  for (let i = 0; i < x.data.length; i++) {
    x.data[i] += y.data[i];
  }
  return x;
}

export function concatChannels(a: Chw, b: Chw): Chw {
  if (a.h !== b.h || a.w !== b.w) {
    throw new Error('channel concat needs matching spatial dims');
  }
  const out = zeros(a.c + b.c, a.h, a.w);
  out.data.set(a.data, 0);
  out.data.set(b.data, a.data.length);
  return out;
}

/** planar (c, y, x) -> interleaved row-major (y, x, c), as FMAP expects. */
export function chwToHwc(x: Chw): Float32Array {
  const out = new Float32Array(x.c * x.h * x.w);
  for (let c = 0; c < x.c; c++) {
    for (let y = 0; y < x.h; y++) {
      for (let xx = 0; xx < x.w; xx++) {
        out[(y * x.w + xx) * x.c + c] = x.data[(c * x.h + y) * x.w + xx];
      }
    }
  }
  return out;
}
