/**
 * Weight bundles: named float32 tensors in one little-endian file.
 *
 * Layout: magic "WGT1", u32 tensor count, then per tensor: u16 name length,
 * utf-8 name, u8 ndim, ndim x u32 dims, float32 payload. Tensor names follow
 * the torchvision state_dict convention (e.g. "layer1.0.conv2.weight") so
 * bundles convert mechanically from real checkpoints; see
 * tools/convert_torchvision.py.
 */

import { readFileSync } from 'fs';

export interface Tensor {
  dims: number[];
  data: Float32Array;
}

export type WeightBundle = Map<string, Tensor>;

const MAGIC = 'WGT1';

export function encodeWeights(bundle: WeightBundle): Buffer {
  const parts: Buffer[] = [];
  const head = Buffer.alloc(8);
  head.write(MAGIC, 0, 'ascii');
  head.writeUInt32LE(bundle.size, 4);
  parts.push(head);
  for (const [name, tensor] of bundle) {
    const nameBytes = Buffer.from(name, 'utf8');
    const meta = Buffer.alloc(2 + nameBytes.length + 1 + 4 * tensor.dims.length);
    meta.writeUInt16LE(nameBytes.length, 0);
    nameBytes.copy(meta, 2);
    meta.writeUInt8(tensor.dims.length, 2 + nameBytes.length);
    tensor.dims.forEach((d, i) =>
      meta.writeUInt32LE(d, 2 + nameBytes.length + 1 + 4 * i),
    );
    parts.push(meta);
    const payload = Buffer.alloc(4 * tensor.data.length);
    for (let i = 0; i < tensor.data.length; i++) {
      payload.writeFloatLE(tensor.data[i], 4 * i);
    }
    parts.push(payload);
  }
  return Buffer.concat(parts);
}

export function decodeWeights(buf: Buffer): WeightBundle {
  if (buf.length < 8 || buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`not a weight bundle: expected magic "${MAGIC}"`);
  }
  const count = buf.readUInt32LE(4);
  const bundle: WeightBundle = new Map();
  let off = 8;
  for (let t = 0; t < count; t++) {
    const nameLen = buf.readUInt16LE(off);
    off += 2;
    const name = buf.toString('utf8', off, off + nameLen);
    off += nameLen;
    const ndim = buf.readUInt8(off);
    off += 1;
    const dims: number[] = [];
    for (let i = 0; i < ndim; i++) {
      dims.push(buf.readUInt32LE(off));
      off += 4;
    }
    const n = dims.reduce((a, b) => a * b, 1);
    if (off + 4 * n > buf.length) {
      throw new Error(`tensor "${name}" payload truncated at byte ${off}`);
    }
    const data = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      data[i] = buf.readFloatLE(off + 4 * i);
    }
    off += 4 * n;
    bundle.set(name, { dims, data });
  }
  if (off !== buf.length) {
    throw new Error(`${buf.length - off} trailing bytes after last tensor`);
  }
  return bundle;
}

export function loadWeights(path: string): WeightBundle {
  return decodeWeights(readFileSync(path));
}

export function getTensor(bundle: WeightBundle, name: string): Tensor {
  const t = bundle.get(name);
  if (!t) {
    throw new Error(`weight bundle is missing tensor "${name}"`);
  }
  return t;
}
