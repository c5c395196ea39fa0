/**
 * Entry points:
 *   node dist/cli.js train --manifest data/manifest.jsonl --config train.json --out ckpt/
 *   node dist/cli.js infer --checkpoint ckpt/ --inputs a.qpif b.qpif --out preds/
 * `--inputs` also accepts a manifest; its input fields are then processed.
 */
import { readFileSync } from 'node:fs';
import { parseArgs } from 'node:util';

import { loadCheckpoint } from './checkpoint.js';
import { inferFields } from './infer.js';
import { readManifest } from './manifest.js';
import { train } from './train.js';

async function runTrain(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      manifest: { type: 'string' },
      config: { type: 'string' },
      out: { type: 'string' },
    },
  });
  if (!values.manifest || !values.config || !values.out) {
    console.error('usage: train --manifest <jsonl> --config <json> --out <dir>');
    return 2;
  }
  const config = JSON.parse(readFileSync(values.config, 'utf-8'));
  if (!config.network?.inputSize || config.train?.epochs === undefined) {
    console.error('config must provide network.inputSize and train.epochs');
    return 2;
  }
  const result = await train(values.manifest, config.network, config.train, values.out);
  const last = result.curve.at(-1);
  if (last) {
    console.log(`done: ${result.curve.length} epochs, ` +
                `final train ${last.trainLoss.toFixed(5)} val ${last.valLoss.toFixed(5)}`);
  }
  return 0;
}

async function runInfer(argv: string[]): Promise<number> {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      checkpoint: { type: 'string' },
      inputs: { type: 'string', multiple: true },
      out: { type: 'string' },
      'batch-size': { type: 'string', default: '16' },
    },
    allowPositionals: true,
  });
  const inputs = [...(values.inputs ?? []), ...positionals];
  if (!values.checkpoint || !values.out || inputs.length === 0) {
    console.error('usage: infer --checkpoint <dir> --inputs <qpif|manifest>... --out <dir>');
    return 2;
  }
  const paths = inputs.flatMap((p) =>
    p.endsWith('.jsonl') ? readManifest(p).map((e) => e.input_path) : [p]);
  const checkpoint = await loadCheckpoint(values.checkpoint);
  const written = inferFields(checkpoint, paths, values.out,
                              parseInt(values['batch-size']!, 10));
  console.log(`wrote ${written.length} predictions to ${values.out}`);
  return 0;
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    if (command === 'train') process.exitCode = await runTrain(rest);
    else if (command === 'infer') process.exitCode = await runInfer(rest);
    else {
      console.error('usage: cli.js <train|infer> ...');
      process.exitCode = 2;
    }
  } catch (err) {
    console.error(err instanceof Error ? `${err.name}: ${err.message}` : String(err));
    process.exitCode = 1;
  }
}

main();
