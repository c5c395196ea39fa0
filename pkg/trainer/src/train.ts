import { writeFileSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { CurvePoint, saveCheckpoint, curveCsv } from './checkpoint.js';
import { Sample, batchTensor, loadPair, makeRng, shuffled } from './data.js';
import { DataError } from './errors.js';
import { LossParams, lossCombined } from './loss.js';
import { readManifest } from './manifest.js';
import { NetworkConfig, buildNetwork } from './unet.js';

export interface TrainConfig {
  learningRate?: number;
  batchSize?: number;
  epochs: number;
  lambda?: number;
  seed?: number;
  window?: number;
  alpha?: number;
  c?: number | null;
  patience?: number;
  logEvery?: number;
}

export interface TrainResult {
  model: tf.LayersModel;
  curve: CurvePoint[];
}

function datasetLoss(model: tf.LayersModel, samples: Sample[], batchSize: number,
                     params: LossParams): number {
  let total = 0;
  for (let i = 0; i < samples.length; i += batchSize) {
    const batch = samples.slice(i, i + batchSize);
    const value = tf.tidy(() => {
      const x = batchTensor(batch, 'input');
      const y = batchTensor(batch, 'gt');
      const pred = model.predict(x) as tf.Tensor4D;
      return lossCombined(pred, y, params).dataSync()[0];
    });
    total += value * batch.length;
  }
  return total / samples.length;
}

export async function train(
  manifestPath: string,
  networkConfig: NetworkConfig,
  trainConfig: TrainConfig,
  outDir: string,
): Promise<TrainResult> {
  const entries = readManifest(manifestPath);
  const trainEntries = entries.filter((e) => e.split === 'train');
  const valEntries = entries.filter((e) => e.split === 'val');
  if (trainEntries.length === 0) throw new DataError('manifest has no train split');
  if (valEntries.length === 0) throw new DataError('manifest has no val split');

  const size = networkConfig.inputSize;
  const trainSamples = trainEntries.map((e) => loadPair(e, size));
  const valSamples = valEntries.map((e) => loadPair(e, size));

  const seed = trainConfig.seed ?? 0;
  const model = buildNetwork({ ...networkConfig, seed });
  const optimizer = tf.train.adam(trainConfig.learningRate ?? 2e-4);
  const batchSize = trainConfig.batchSize ?? 16;
  const params: LossParams = {
    window: trainConfig.window, alpha: trainConfig.alpha,
    c: trainConfig.c, lambda: trainConfig.lambda ?? 1.0,
  };
  const patience = trainConfig.patience ?? 50;
  const rand = makeRng(seed + 0x5eed);

  const curve: CurvePoint[] = [];
  let bestVal = Infinity;
  let sinceBest = 0;
  for (let epoch = 1; epoch <= trainConfig.epochs; epoch++) {
    let running = 0;
    const order = shuffled(trainSamples, rand);
    for (let i = 0; i < order.length; i += batchSize) {
      const batch = order.slice(i, i + batchSize);
      const x = batchTensor(batch, 'input');
      const y = batchTensor(batch, 'gt');
      const value = optimizer.minimize(
        () => lossCombined(model.apply(x, { training: true }) as tf.Tensor4D, y, params),
        true);
      running += value!.dataSync()[0] * batch.length;
      value!.dispose();
      x.dispose();
      y.dispose();
    }
    const trainLoss = running / trainSamples.length;
    const valLoss = datasetLoss(model, valSamples, batchSize, params);
    curve.push({ epoch, trainLoss, valLoss });
    if ((trainConfig.logEvery ?? 1) > 0 && epoch % (trainConfig.logEvery ?? 1) === 0) {
      console.log(`epoch ${epoch}: train ${trainLoss.toFixed(5)} val ${valLoss.toFixed(5)}`);
    }
    if (valLoss < bestVal - 1e-9) {
      bestVal = valLoss;
      sinceBest = 0;
    } else if (++sinceBest >= patience) {
      console.log(`early stop at epoch ${epoch} (no val improvement in ${patience})`);
      break;
    }
  }
  optimizer.dispose();

  await saveCheckpoint(outDir, model, networkConfig,
                       trainConfig as unknown as Record<string, unknown>, curve);
  writeFileSync(join(outDir, 'curve.csv'), curveCsv(curve));
  return { model, curve };
}
