import { execFileSync } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { Field, writeField } from '../src/qpif.js';
import { makeRng } from '../src/data.js';

export function tmpDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/** Invoke the imaging pipeline CLI (external interface of the primary package). */
export function qpikit(...args: string[]): string {
  return execFileSync('python3', ['-m', 'qpikit.cli', ...args], { encoding: 'utf-8' });
}

export function syntheticField(size: number, seed: number, pairId: string,
                               role = 'input'): Field {
  const rand = makeRng(seed);
  const plane = size * size;
  const amplitude = new Float32Array(plane);
  const phase = new Float32Array(plane);
  for (let i = 0; i < plane; i++) {
    amplitude[i] = 0.5 + rand();
    phase[i] = (rand() - 0.5) * 4.0;
  }
  return {
    width: size, height: size, amplitude, phase,
    meta: {
      role, angle_index: 0, pair_id: pairId, aberration_truth: null,
      extra: {}, pixel_size: 0.1, wavelength: 0.532, wrapped: false,
    },
  };
}

/** Smooth low-order target field: something a small network can memorize. */
export function smoothField(size: number, pairId: string, role = 'gt'): Field {
  const plane = size * size;
  const amplitude = new Float32Array(plane);
  const phase = new Float32Array(plane);
  for (let r = 0; r < size; r++) {
    for (let c = 0; c < size; c++) {
      const i = r * size + c;
      amplitude[i] = 1.0 + 0.2 * Math.sin((2 * Math.PI * r) / size);
      phase[i] = 0.8 * Math.cos((2 * Math.PI * c) / size);
    }
  }
  return {
    width: size, height: size, amplitude, phase,
    meta: {
      role, angle_index: 0, pair_id: pairId, aberration_truth: null,
      extra: {}, pixel_size: 0.1, wavelength: 0.532, wrapped: false,
    },
  };
}

/** Write a one-scene manifest (same pair as train and as val). */
export function writeToyDataset(dir: string, size: number, seed: number): string {
  const pairs = [
    { id: 'toy000', split: 'train' },
    { id: 'toy001', split: 'val' },
  ];
  const lines: string[] = [];
  for (const { id, split } of pairs) {
    const input = syntheticField(size, seed, id, 'input');
    const gt = smoothField(size, id, 'gt');
    writeField(join(dir, `${id}_input.qpif`), input);
    writeField(join(dir, `${id}_gt.qpif`), gt);
    lines.push(JSON.stringify({
      pair_id: id, input_path: `${id}_input.qpif`, gt_path: `${id}_gt.qpif`,
      split, angle_index: 0,
    }));
  }
  const manifestPath = join(dir, 'manifest.jsonl');
  writeFileSync(manifestPath, lines.join('\n') + '\n');
  return manifestPath;
}
