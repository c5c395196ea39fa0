/**
 * Checkpoint storage: a directory with model.json (topology, weight specs,
 * configs, training curve) and weights.bin, written temp-then-rename.
 */
import { mkdirSync, readFileSync, renameSync, rmSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { NetworkConfig } from './unet.js';

export interface CurvePoint {
  epoch: number;
  trainLoss: number;
  valLoss: number;
}

export interface Checkpoint {
  model: tf.LayersModel;
  networkConfig: NetworkConfig;
  trainConfig: Record<string, unknown>;
  curve: CurvePoint[];
}

export async function saveCheckpoint(
  dir: string,
  model: tf.LayersModel,
  networkConfig: NetworkConfig,
  trainConfig: Record<string, unknown>,
  curve: CurvePoint[],
): Promise<void> {
  let artifacts: tf.io.ModelArtifacts | null = null;
  await model.save(tf.io.withSaveHandler(async (a) => {
    artifacts = a;
    return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
  }));
  const { modelTopology, weightSpecs, weightData } = artifacts! as tf.io.ModelArtifacts;
  const tmp = `${dir}.tmp`;
  rmSync(tmp, { recursive: true, force: true });
  mkdirSync(tmp, { recursive: true });
  writeFileSync(join(tmp, 'model.json'), JSON.stringify({
    modelTopology,
    weightSpecs,
    networkConfig,
    trainConfig,
    curve,
  }));
  writeFileSync(join(tmp, 'weights.bin'),
                Buffer.from(weightData as ArrayBuffer));
  rmSync(dir, { recursive: true, force: true });
  renameSync(tmp, dir);
}

export async function loadCheckpoint(dir: string): Promise<Checkpoint> {
  const manifest = JSON.parse(readFileSync(join(dir, 'model.json'), 'utf-8'));
  const weights = readFileSync(join(dir, 'weights.bin'));
  const weightData = weights.buffer.slice(
    weights.byteOffset, weights.byteOffset + weights.byteLength);
  const model = await tf.loadLayersModel(tf.io.fromMemory({
    modelTopology: manifest.modelTopology,
    weightSpecs: manifest.weightSpecs,
    weightData,
  }));
  return {
    model,
    networkConfig: manifest.networkConfig,
    trainConfig: manifest.trainConfig,
    curve: manifest.curve,
  };
}

export function curveCsv(curve: CurvePoint[]): string {
  const lines = ['epoch,train_loss,val_loss'];
  for (const p of curve) lines.push(`${p.epoch},${p.trainLoss},${p.valLoss}`);
  return lines.join('\n') + '\n';
}
