import { mkdirSync } from 'node:fs';
import { basename, join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { Checkpoint } from './checkpoint.js';
import { amplitudeScale, fieldToHWC } from './data.js';
import { DataError } from './errors.js';
import { Field, readField, writeField } from './qpif.js';

/**
 * Run the network over input QPIF files and write role="pred" fields with
 * each input's pair_id. Predicted amplitude is rescaled back to physical
 * units and floored at zero; outputs do not depend on the batch size.
 */
export function inferFields(
  checkpoint: Checkpoint, inputPaths: string[], outDir: string,
  batchSize = 16,
): string[] {
  const size = checkpoint.networkConfig.inputSize;
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (let start = 0; start < inputPaths.length; start += batchSize) {
    const paths = inputPaths.slice(start, start + batchSize);
    const fields = paths.map((p) => readField(p));
    for (const [i, f] of fields.entries()) {
      if (f.width !== size || f.height !== size) {
        throw new DataError(
          `${paths[i]}: field is ${f.width}x${f.height}, checkpoint expects ${size}`);
      }
    }
    const scales = fields.map((f) => amplitudeScale(f));
    const data = new Float32Array(fields.length * size * size * 2);
    fields.forEach((f, i) => data.set(fieldToHWC(f, scales[i]), i * size * size * 2));
    const batch = tf.tensor4d(data, [fields.length, size, size, 2]);
    const pred = checkpoint.model.predict(batch) as tf.Tensor4D;
    const values = pred.dataSync() as Float32Array;
    batch.dispose();
    pred.dispose();

    fields.forEach((field, i) => {
      const plane = size * size;
      const amplitude = new Float32Array(plane);
      const phase = new Float32Array(plane);
      const offset = i * plane * 2;
      for (let p = 0; p < plane; p++) {
        amplitude[p] = Math.max(values[offset + 2 * p] * scales[i], 0);
        phase[p] = values[offset + 2 * p + 1];
      }
      const out: Field = {
        width: size, height: size, amplitude, phase,
        meta: { ...field.meta, role: 'pred', wrapped: false },
      };
      const name = basename(paths[i]).replace(/\.qpif$/, '') + '_pred.qpif';
      const outPath = join(outDir, name);
      writeField(outPath, out);
      written.push(outPath);
    });
  }
  return written;
}
