import { execFileSync } from 'node:child_process';
import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { tmpDir } from './helpers.js';

// Full end-to-end learning demonstration (simulate -> train -> infer -> score).
// ~12 minutes on the pure-CPU backend, so it is opt-in:
//   RUN_LEARNING_DEMO=1 npx vitest run tests/learning.test.ts
describe.skipIf(!process.env.RUN_LEARNING_DEMO)('learning demonstration', () => {
  it('beats the uncorrected baseline on held-out pairs', () => {
    const out = tmpDir('learning-');
    execFileSync('bash', ['scripts/learning_demo.sh', out, '120', '32', '8', '12'],
                 { stdio: 'inherit' });
    const network = JSON.parse(
      readFileSync(join(out, 'report_network.json'), 'utf-8')).aggregate;
    const baseline = JSON.parse(
      readFileSync(join(out, 'report_baseline.json'), 'utf-8')).aggregate;
    expect(network.median_fce).toBeLessThan(0.05);
    expect(network.median_rmse_phase).toBeLessThan(0.2);
    expect(baseline.median_fce / network.median_fce).toBeGreaterThanOrEqual(5.0);
    expect(network.fce_at_percentile).toBeGreaterThan(0);
  }, 3_600_000);
});
