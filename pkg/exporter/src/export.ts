/**
 * The export operation: image file(s) -> backbone features -> FMAP file(s).
 * Raw activations are written unscaled; the consuming pipeline owns all
 * normalization. One run manifest records the backbone, weight file, and
 * the input normalization applied.
 */

import { mkdirSync, readdirSync, statSync, writeFileSync } from 'fs';
import { basename, extname, join } from 'path';

import { encodeFmap } from './fmap.js';
import { IMAGENET_MEAN, IMAGENET_STD, loadPng, normalizeImagenet, resizeBilinear } from './image.js';
import { chwToHwc } from './ops.js';
import { BACKBONE_CONTRACT, Backbone, runBackbone } from './models.js';
import { WeightBundle } from './weights.js';

export interface ExportSpec {
  backbone: Backbone;
  resize?: number;
  outDir: string;
  weights: WeightBundle;
}

export function collectInputs(paths: string[]): string[] {
  const files: string[] = [];
  for (const p of paths) {
    if (statSync(p).isDirectory()) {
      for (const name of readdirSync(p).sort()) {
        if (extname(name).toLowerCase() === '.png') {
          files.push(join(p, name));
        }
      }
    } else {
      files.push(p);
    }
  }
  if (files.length === 0) {
    throw new Error('no input images found');
  }
  return files;
}

export function exportOne(imagePath: string, spec: ExportSpec): string {
  let img = loadPng(imagePath);
  if (spec.resize) {
    img = resizeBilinear(img, spec.resize);
  }
  img = normalizeImagenet(img);
  const features = runBackbone(spec.backbone, img, spec.weights);
  const contract = BACKBONE_CONTRACT[spec.backbone];
  if (features.c !== contract.channels) {
    throw new Error(
      `${spec.backbone} produced ${features.c} channels, contract says ${contract.channels}`,
    );
  }
  const expectH = Math.floor(img.h / contract.stride);
  if (contract.stride > 1 && Math.abs(features.h - expectH) > 1) {
    throw new Error(
      `${spec.backbone} produced ${features.h} rows from ${img.h}, stride contract is ${contract.stride}`,
    );
  }
  const outPath = join(spec.outDir, basename(imagePath, extname(imagePath)) + '.fmap');
  writeFileSync(outPath, encodeFmap({
    height: features.h,
    width: features.w,
    channels: features.c,
    data: chwToHwc(features),
  }));
  return outPath;
}

export function exportAll(paths: string[], spec: ExportSpec): string[] {
  mkdirSync(spec.outDir, { recursive: true });
  const written = collectInputs(paths).map((p) => exportOne(p, spec));
  const manifest = {
    backbone: spec.backbone,
    resize: spec.resize ?? null,
    input_normalization: { mean: IMAGENET_MEAN, std: IMAGENET_STD },
    outputs: written,
    timestamp: new Date().toISOString(),
  };
  writeFileSync(join(spec.outDir, 'export-manifest.json'),
    JSON.stringify(manifest, null, 2) + '\n');
  return written;
}
