import { spawnSync } from 'node:child_process'
import * as path from 'node:path'
import { ModelUnavailable, SequenceTooLong } from './errors'

/** ESM-2 scale ladder: checkpoint name and embedding width per scale. */
export const SCALES: Record<string, { model: string; dim: number }> = {
  '8M': { model: 'facebook/esm2_t6_8M_UR50D', dim: 320 },
  '35M': { model: 'facebook/esm2_t12_35M_UR50D', dim: 480 },
  '150M': { model: 'facebook/esm2_t30_150M_UR50D', dim: 640 },
  '650M': { model: 'facebook/esm2_t33_650M_UR50D', dim: 1280 },
  '3B': { model: 'facebook/esm2_t36_3B_UR50D', dim: 2560 },
}

export const DEFAULT_MODEL = SCALES['650M'].model

export const MODEL_ALLOWLIST = new Set(Object.values(SCALES).map((s) => s.model))

// ESM-2 positional budget is 1024 tokens including BOS/EOS.
export const MAX_SEQUENCE_LENGTH = 1022

export interface InferenceResult {
  rows: number[][]
  dim: number
  model: string
}

/**
 * Run the real model through the bundled python helper (transformers).
 * The helper strips special tokens so rows align 1:1 with residues and
 * reports the width read from the loaded model's configuration.
 *
 * Throws ModelUnavailable when python, the transformers library, or the
 * model weights cannot be reached.
 */
export function runModel(
  sequence: string,
  model: string,
  device: string = 'cpu',
  python: string = process.env.PLM_EXPORT_PYTHON ?? 'python3',
): InferenceResult {
  if (!MODEL_ALLOWLIST.has(model)) {
    throw new ModelUnavailable(`model '${model}' is not in the allowlist`)
  }
  if (sequence.length > MAX_SEQUENCE_LENGTH) {
    throw new SequenceTooLong(
      `sequence of ${sequence.length} residues exceeds the ${MAX_SEQUENCE_LENGTH} limit`,
    )
  }
  const helper = path.join(__dirname, '..', 'python', 'esm_embed.py')
  const proc = spawnSync(python, [helper, '--model', model, '--device', device], {
    input: sequence + '\n',
    encoding: 'utf8',
    maxBuffer: 1 << 30,
  })
  if (proc.error || proc.status !== 0) {
    const why = proc.error ? String(proc.error) : proc.stderr.trim().split('\n').pop()
    throw new ModelUnavailable(`cannot run ${model}: ${why}`)
  }
  const out = JSON.parse(proc.stdout) as { dim: number; rows: number[][] }
  if (out.rows.length !== sequence.length) {
    throw new ModelUnavailable(
      `helper returned ${out.rows.length} rows for ${sequence.length} residues`,
    )
  }
  return { rows: out.rows, dim: out.dim, model }
}
