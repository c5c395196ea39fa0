/**
 * Training objective: mean absolute error plus the contrast-only structural
 * similarity term, Loss = L1 + lambda * mean(1 - ((2 sx sy + c)/(sx^2 + sy^2 + c))^alpha),
 * with per-pixel standard deviations from a sliding uniform window
 * (symmetric-reflect padding, matching the scoring pipeline) and the
 * stabilizer derived per channel from the ground-truth dynamic range.
 */
import * as tf from '@tensorflow/tfjs';

export interface LossParams {
  window?: number;
  alpha?: number;
  c?: number | null; // null: (0.03 * gt channel range)^2, floored
  lambda?: number;
}

const C_FLOOR = 1e-12;

/** Symmetric (edge-reflecting) padding built from reverse + concat; unlike
 * tf.mirrorPad these ops carry exact gradients on the CPU backend. */
function symmetricPad2d(x: tf.Tensor4D, half: number): tf.Tensor4D {
  const height = x.shape[1];
  const width = x.shape[2];
  const top = tf.reverse(tf.slice(x, [0, 0, 0, 0], [-1, half, -1, -1]), 1);
  const bottom = tf.reverse(tf.slice(x, [0, height - half, 0, 0], [-1, half, -1, -1]), 1);
  let out = tf.concat([top, x, bottom], 1) as tf.Tensor4D;
  const left = tf.reverse(tf.slice(out, [0, 0, 0, 0], [-1, -1, half, -1]), 2);
  const right = tf.reverse(tf.slice(out, [0, 0, width - half, 0], [-1, -1, half, -1]), 2);
  out = tf.concat([left, out, right], 2) as tf.Tensor4D;
  return out;
}

function localStd(x: tf.Tensor4D, window: number): tf.Tensor4D {
  const padded = symmetricPad2d(x, Math.floor(window / 2));
  const mean = tf.avgPool(padded, window, 1, 'valid');
  const meanSq = tf.avgPool(tf.square(padded), window, 1, 'valid');
  return tf.sqrt(tf.relu(tf.sub(meanSq, tf.square(mean)))) as tf.Tensor4D;
}

export function lossL1(pred: tf.Tensor4D, gt: tf.Tensor4D): tf.Scalar {
  return tf.mean(tf.abs(tf.sub(gt, pred)));
}

/** Per-channel stabilizers from the ground truth, as plain numbers. */
export function stabilizers(gt: tf.Tensor4D, c: number | null | undefined): number[] {
  const channels = gt.shape[3];
  if (c != null) return Array(channels).fill(c);
  return tf.tidy(() => {
    const out: number[] = [];
    for (let ch = 0; ch < channels; ch++) {
      const slice = gt.slice([0, 0, 0, ch], [-1, -1, -1, 1]);
      const range = slice.max().dataSync()[0] - slice.min().dataSync()[0];
      out.push(Math.max((0.03 * range) ** 2, C_FLOOR));
    }
    return out;
  });
}

export function lossSsimContrast(
  pred: tf.Tensor4D, gt: tf.Tensor4D, params: LossParams = {}): tf.Scalar {
  const window = params.window ?? 11;
  const alpha = params.alpha ?? 1.0;
  const cs = stabilizers(gt, params.c);
  return tf.tidy(() => {
    const terms: tf.Scalar[] = [];
    for (let ch = 0; ch < cs.length; ch++) {
      const p = pred.slice([0, 0, 0, ch], [-1, -1, -1, 1]) as tf.Tensor4D;
      const g = gt.slice([0, 0, 0, ch], [-1, -1, -1, 1]) as tf.Tensor4D;
      const sp = localStd(p, window);
      const sg = localStd(g, window);
      const c = cs[ch];
      let ssim: tf.Tensor = tf.div(
        tf.add(tf.mul(tf.mul(sp, sg), 2), c),
        tf.add(tf.add(tf.square(sp), tf.square(sg)), c));
      if (alpha !== 1.0) ssim = tf.pow(ssim, alpha);
      terms.push(tf.mean(tf.sub(1, ssim)));
    }
    return tf.div(tf.addN(terms), terms.length) as tf.Scalar;
  });
}

export function lossCombined(
  pred: tf.Tensor4D, gt: tf.Tensor4D, params: LossParams = {}): tf.Scalar {
  const lambda = params.lambda ?? 1.0;
  return tf.tidy(() =>
    tf.add(lossL1(pred, gt),
           tf.mul(lossSsimContrast(pred, gt, params), lambda)) as tf.Scalar);
}
