/**
 * PNG decoding, bilinear resize, and the standard large-scale-pretraining
 * input normalization (per-channel mean/std on [0, 1] RGB).
 */

import { readFileSync } from 'fs';
import { PNG } from 'pngjs';

import { Chw, zeros } from './ops.js';

export const IMAGENET_MEAN = [0.485, 0.456, 0.406];
export const IMAGENET_STD = [0.229, 0.224, 0.225];

/** Decode a PNG file into planar RGB in [0, 1]. */
export function loadPng(path: string): Chw {
  const png = PNG.sync.read(readFileSync(path));
  const out = zeros(3, png.height, png.width);
  const plane = png.height * png.width;
  for (let i = 0; i < plane; i++) {
    out.data[i] = png.data[4 * i] / 255;
    out.data[plane + i] = png.data[4 * i + 1] / 255;
    out.data[2 * plane + i] = png.data[4 * i + 2] / 255;
  }
  return out;
}

/** Corner-aligned bilinear resize to a square side x side. */
export function resizeBilinear(img: Chw, side: number): Chw {
  if (img.h === side && img.w === side) return img;
  const out = zeros(img.c, side, side);
  const sy = side > 1 ? (img.h - 1) / (side - 1) : 0;
  const sx = side > 1 ? (img.w - 1) / (side - 1) : 0;
  for (let c = 0; c < img.c; c++) {
    const plane = c * img.h * img.w;
    for (let y = 0; y < side; y++) {
      const fy = y * sy;
      const y0 = Math.min(Math.floor(fy), img.h - 1);
      const y1 = Math.min(y0 + 1, img.h - 1);
      const wy = fy - y0;
      for (let x = 0; x < side; x++) {
        const fx = x * sx;
        const x0 = Math.min(Math.floor(fx), img.w - 1);
        const x1 = Math.min(x0 + 1, img.w - 1);
        const wx = fx - x0;
        const top = img.data[plane + y0 * img.w + x0] * (1 - wx)
          + img.data[plane + y0 * img.w + x1] * wx;
        const bot = img.data[plane + y1 * img.w + x0] * (1 - wx)
          + img.data[plane + y1 * img.w + x1] * wx;
        out.data[(c * side + y) * side + x] = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

export function normalizeImagenet(img: Chw): Chw {
  const plane = img.h * img.w;
  for (let c = 0; c < 3; c++) {
    const base = c * plane;
    for (let i = 0; i < plane; i++) {
      img.data[base + i] = (img.data[base + i] - IMAGENET_MEAN[c]) / IMAGENET_STD[c];
    }
  }
  return img;
}
