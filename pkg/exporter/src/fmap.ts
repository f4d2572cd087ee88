/**
 * FMAP: the little-endian binary container shared with the localization
 * pipeline. Layout: magic "FMP1", u32 height, u32 width, u32 channels,
 * then height*width*channels float32 values in row-major (y, x, c) order.
 */

export interface FeatureGrid {
  height: number;
  width: number;
  channels: number;
  /** row-major (y, x, c) */
  data: Float32Array;
}

const MAGIC = 'FMP1';
const HEADER_BYTES = 16;

export function encodeFmap(grid: FeatureGrid): Buffer {
  const n = grid.height * grid.width * grid.channels;
  if (grid.data.length !== n) {
    throw new Error(
      `payload holds ${grid.data.length} values, header says ${n}`,
    );
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * n);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(grid.height, 4);
  buf.writeUInt32LE(grid.width, 8);
  buf.writeUInt32LE(grid.channels, 12);
  for (let i = 0; i < n; i++) {
    buf.writeFloatLE(grid.data[i], HEADER_BYTES + 4 * i);
  }
  return buf;
}

export function decodeFmap(buf: Buffer): FeatureGrid {
  if (buf.length < 4 || buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`bad magic at byte 0: expected "${MAGIC}"`);
  }
  if (buf.length < HEADER_BYTES) {
    throw new Error(`truncated header: ${buf.length} bytes`);
  }
  const height = buf.readUInt32LE(4);
  const width = buf.readUInt32LE(8);
  const channels = buf.readUInt32LE(12);
  const n = height * width * channels;
  if (buf.length !== HEADER_BYTES + 4 * n) {
    throw new Error(
      `payload is ${buf.length - HEADER_BYTES} bytes, header implies ${4 * n}`,
    );
  }
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    data[i] = buf.readFloatLE(HEADER_BYTES + 4 * i);
  }
  return { height, width, channels, data };
}
