/**
 * Dataset loading: QPIF field pairs to NHWC tensors. Amplitude is divided by
 * the input field's mean (the scale is kept so predictions can be written
 * back in physical units); phase stays raw radians.
 */
import * as tf from '@tensorflow/tfjs';

import { DataError } from './errors.js';
import { ManifestEntry } from './manifest.js';
import { Field, readField } from './qpif.js';

export interface Sample {
  pairId: string;
  input: Float32Array; // HWC interleaved (amplitude, phase)
  gt: Float32Array;
  scale: number;
  size: number;
}

export function amplitudeScale(field: Field): number {
  let sum = 0;
  for (const v of field.amplitude) sum += v;
  const mean = sum / field.amplitude.length;
  return mean > 0 ? mean : 1.0;
}

export function fieldToHWC(field: Field, scale: number): Float32Array {
  const plane = field.width * field.height;
  const out = new Float32Array(plane * 2);
  for (let i = 0; i < plane; i++) {
    out[2 * i] = field.amplitude[i] / scale;
    out[2 * i + 1] = field.phase[i];
  }
  return out;
}

export function loadPair(entry: ManifestEntry, expectedSize: number): Sample {
  const input = readField(entry.input_path);
  const gt = readField(entry.gt_path);
  if (input.width !== expectedSize || input.height !== expectedSize) {
    throw new DataError(
      `${entry.pair_id}: input is ${input.width}x${input.height}, ` +
      `network expects ${expectedSize}`);
  }
  if (gt.width !== input.width || gt.height !== input.height) {
    throw new DataError(`${entry.pair_id}: input/gt size mismatch`);
  }
  const scale = amplitudeScale(input);
  return {
    pairId: entry.pair_id,
    input: fieldToHWC(input, scale),
    gt: fieldToHWC(gt, scale),
    size: input.width,
    scale,
  };
}

export function batchTensor(samples: Sample[], which: 'input' | 'gt'): tf.Tensor4D {
  const size = samples[0].size;
  const data = new Float32Array(samples.length * size * size * 2);
  samples.forEach((s, i) => data.set(s[which], i * size * size * 2));
  return tf.tensor4d(data, [samples.length, size, size, 2]);
}

/** Deterministic 32-bit PRNG for shuffling (mulberry32). */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function shuffled<T>(items: T[], rand: () => number): T[] {
  const out = items.slice();
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}
