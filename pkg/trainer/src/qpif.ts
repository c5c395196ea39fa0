/**
 * QPIF binary I/O (little-endian): magic "QPIF" | u16 version=1 | u16 reserved |
 * u32 width | u32 height | u32 channels | u32 dtype=0 (float32) | u32 meta_len |
 * UTF-8 JSON metadata | payload channels*height*width float32, row-major,
 * channel-planar. Fields carry the amplitude plane then the phase plane.
 */
import { readFileSync, writeFileSync } from 'node:fs';

import { DataError } from './errors.js';

const MAGIC = 0x46495051; // "QPIF" read as little-endian u32
const HEADER_BYTES = 28;

export interface FieldMeta {
  role: string;
  angle_index: number;
  pair_id: string;
  aberration_truth: [number, number][] | null;
  extra: Record<string, unknown>;
  pixel_size: number;
  wavelength: number;
  wrapped: boolean;
}

export interface Field {
  width: number;
  height: number;
  amplitude: Float32Array;
  phase: Float32Array;
  meta: FieldMeta;
}

export function readField(path: string): Field {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES) throw new DataError(`${path}: shorter than the QPIF header`);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  if (view.getUint32(0, true) !== MAGIC) throw new DataError(`${path}: bad QPIF magic`);
  const version = view.getUint16(4, true);
  if (version !== 1) throw new DataError(`${path}: unsupported QPIF version ${version}`);
  const width = view.getUint32(8, true);
  const height = view.getUint32(12, true);
  const channels = view.getUint32(16, true);
  const dtype = view.getUint32(20, true);
  const metaLen = view.getUint32(24, true);
  if (dtype !== 0) throw new DataError(`${path}: unsupported dtype code ${dtype}`);
  if (channels !== 2) throw new DataError(`${path}: expected 2 channels, found ${channels}`);
  const meta = JSON.parse(buf.subarray(HEADER_BYTES, HEADER_BYTES + metaLen).toString('utf-8'));
  if (meta.volume) throw new DataError(`${path}: is a QPIF-V volume, not a field`);
  const plane = width * height;
  const payloadOffset = HEADER_BYTES + metaLen;
  if (buf.length - payloadOffset !== channels * plane * 4) {
    throw new DataError(`${path}: truncated payload`);
  }
  const amplitude = new Float32Array(plane);
  const phase = new Float32Array(plane);
  for (let i = 0; i < plane; i++) {
    amplitude[i] = view.getFloat32(payloadOffset + i * 4, true);
    phase[i] = view.getFloat32(payloadOffset + (plane + i) * 4, true);
  }
  return {
    width,
    height,
    amplitude,
    phase,
    meta: {
      role: meta.role ?? 'raw',
      angle_index: meta.angle_index ?? 0,
      pair_id: meta.pair_id ?? '',
      aberration_truth: meta.aberration_truth ?? null,
      extra: meta.extra ?? {},
      pixel_size: meta.pixel_size ?? 1.0,
      wavelength: meta.wavelength ?? 1.0,
      wrapped: meta.wrapped ?? false,
    },
  };
}

export function writeField(path: string, field: Field): void {
  const { width, height, amplitude, phase, meta } = field;
  const plane = width * height;
  if (amplitude.length !== plane || phase.length !== plane) {
    throw new DataError(`field grids do not match ${width}x${height}`);
  }
  const metaBytes = Buffer.from(JSON.stringify(meta), 'utf-8');
  const buf = Buffer.alloc(HEADER_BYTES + metaBytes.length + 2 * plane * 4);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  view.setUint32(0, MAGIC, true);
  view.setUint16(4, 1, true);
  view.setUint16(6, 0, true);
  view.setUint32(8, width, true);
  view.setUint32(12, height, true);
  view.setUint32(16, 2, true);
  view.setUint32(20, 0, true);
  view.setUint32(24, metaBytes.length, true);
  metaBytes.copy(buf, HEADER_BYTES);
  const payloadOffset = HEADER_BYTES + metaBytes.length;
  for (let i = 0; i < plane; i++) {
    view.setFloat32(payloadOffset + i * 4, amplitude[i], true);
    view.setFloat32(payloadOffset + (plane + i) * 4, phase[i], true);
  }
  writeFileSync(path, buf);
}
