import { readFileSync } from 'node:fs';
import { dirname, resolve } from 'node:path';

export interface ManifestEntry {
  pair_id: string;
  input_path: string;
  gt_path: string;
  split: 'train' | 'val' | 'test';
  angle_index: number;
}

/** Parse a JSONL manifest; paths are resolved relative to the manifest file. */
export function readManifest(path: string): ManifestEntry[] {
  const base = dirname(resolve(path));
  return readFileSync(path, 'utf-8')
    .split('\n')
    .filter((line) => line.trim().length > 0)
    .map((line) => {
      const entry = JSON.parse(line) as ManifestEntry;
      return {
        ...entry,
        input_path: resolve(base, entry.input_path),
        gt_path: resolve(base, entry.gt_path),
      };
    });
}
