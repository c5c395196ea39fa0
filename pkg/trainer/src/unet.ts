/**
 * Encoder-decoder aberration-compensation network.
 *
 * Encoder: an initial 4x4/stride-2/pad-1 convolution to 64 features, then
 * blocks of LeakyReLU(0.2) -> 4x4/s2/p1 conv -> batch norm, widths doubling
 * to a 512 cap, until the bottleneck is 1x1 (log2(inputSize) levels).
 * Decoder mirrors with ReLU -> bilinear x2 -> 3x3/s1/p1 conv -> batch norm
 * and concatenates the same-resolution encoder features. The last encoder
 * and decoder blocks omit batch normalization; the output is a linear
 * 2-channel image at input resolution.
 */
import * as tf from '@tensorflow/tfjs';

import { ConfigError } from './errors.js';

export interface NetworkConfig {
  inputSize: number;
  inChannels?: number;
  outChannels?: number;
  baseFeatures?: number;
  maxFeatures?: number;
  seed?: number;
}

export function levelCount(inputSize: number): number {
  const levels = Math.log2(inputSize);
  if (!Number.isInteger(levels) || inputSize < 8) {
    throw new ConfigError(`input size must be a power of two >= 8, got ${inputSize}`);
  }
  return levels;
}

export function featureWidths(config: NetworkConfig): number[] {
  const base = config.baseFeatures ?? 64;
  const cap = config.maxFeatures ?? 512;
  const levels = levelCount(config.inputSize);
  return Array.from({ length: levels }, (_, k) => Math.min(base * 2 ** k, cap));
}

export function buildNetwork(config: NetworkConfig): tf.LayersModel {
  const inChannels = config.inChannels ?? 2;
  const outChannels = config.outChannels ?? 2;
  const widths = featureWidths(config);
  const levels = widths.length;
  const seed = config.seed ?? 0;
  let convIndex = 0;
  const init = () =>
    tf.initializers.glorotUniform({ seed: seed * 1000 + convIndex++ });

  const input = tf.input({ shape: [config.inputSize, config.inputSize, inChannels] });

  // encoder
  const skips: tf.SymbolicTensor[] = [];
  let h = tf.layers
    .conv2d({
      filters: widths[0], kernelSize: 4, strides: 2, padding: 'same',
      kernelInitializer: init(), name: 'enc0_conv',
    })
    .apply(input) as tf.SymbolicTensor;
  skips.push(h);
  for (let k = 1; k < levels; k++) {
    h = tf.layers.leakyReLU({ alpha: 0.2, name: `enc${k}_act` })
      .apply(h) as tf.SymbolicTensor;
    h = tf.layers
      .conv2d({
        filters: widths[k], kernelSize: 4, strides: 2, padding: 'same',
        kernelInitializer: init(), name: `enc${k}_conv`,
      })
      .apply(h) as tf.SymbolicTensor;
    if (k < levels - 1) {
      h = tf.layers.batchNormalization({ name: `enc${k}_bn` })
        .apply(h) as tf.SymbolicTensor;
    }
    skips.push(h);
  }

  // decoder with skip concatenation; last block has no batch norm
  for (let k = levels - 1; k >= 1; k--) {
    h = tf.layers.reLU({ name: `dec${k}_act` }).apply(h) as tf.SymbolicTensor;
    h = tf.layers
      .upSampling2d({ size: [2, 2], interpolation: 'bilinear', name: `dec${k}_up` })
      .apply(h) as tf.SymbolicTensor;
    h = tf.layers
      .conv2d({
        filters: widths[k - 1], kernelSize: 3, strides: 1, padding: 'same',
        kernelInitializer: init(), name: `dec${k}_conv`,
      })
      .apply(h) as tf.SymbolicTensor;
    h = tf.layers.batchNormalization({ name: `dec${k}_bn` })
      .apply(h) as tf.SymbolicTensor;
    h = tf.layers.concatenate({ name: `dec${k}_skip` })
      .apply([h, skips[k - 1]]) as tf.SymbolicTensor;
  }
  h = tf.layers.reLU({ name: 'dec0_act' }).apply(h) as tf.SymbolicTensor;
  h = tf.layers
    .upSampling2d({ size: [2, 2], interpolation: 'bilinear', name: 'dec0_up' })
    .apply(h) as tf.SymbolicTensor;
  const output = tf.layers
    .conv2d({
      filters: outChannels, kernelSize: 3, strides: 1, padding: 'same',
      kernelInitializer: init(), name: 'dec0_conv',
    })
    .apply(h) as tf.SymbolicTensor;

  return tf.model({ inputs: input, outputs: output, name: 'aberration_unet' });
}

export function encoderLevels(model: tf.LayersModel): number {
  return model.layers.filter((l) => l.name.startsWith('enc') && l.name.endsWith('_conv'))
    .length;
}

export function bottleneckShape(model: tf.LayersModel): number[] {
  const last = model.layers
    .filter((l) => l.name.startsWith('enc') && l.name.endsWith('_conv'))
    .pop();
  return (last!.outputShape as (number | null)[]).slice(1, 3) as number[];
}
