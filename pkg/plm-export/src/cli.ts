#!/usr/bin/env node
import { BadInput, ModelUnavailable, SequenceTooLong } from './errors'
import { defaultJob, exportBatch, exportScaled, exportSingle } from './export'
import { DEFAULT_MODEL, SCALES } from './models'

const USAGE = `usage: plm-export --out PATH (--fasta FILE | --seq LETTERS) [options]

Export per-residue embeddings to PRE files.

options:
  --fasta FILE      FASTA input (batch mode when it has several records)
  --seq LETTERS     literal amino-acid sequence
  --out PATH        output PRE file, or directory in batch mode
  --model NAME      checkpoint name (default ${DEFAULT_MODEL})
  --scale SIZE      one of ${Object.keys(SCALES).join('/')}; picks the model and width
  --device DEV      inference device hint (default cpu)
  --fallback        offline mode: deterministic hash embeddings (src=fallback)
  --dim N           fallback embedding width (default: the scale's width)
  --batch           one PRE per FASTA record plus a manifest JSON
  --manifest PATH   manifest location in batch mode (default OUT/manifest.json)
`

function parseArgs(argv: string[]) {
  const flags: Record<string, string | boolean> = {}
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]
    if (!arg.startsWith('--')) throw new BadInput(`unexpected argument '${arg}'`)
    const key = arg.slice(2)
    if (key === 'fallback' || key === 'batch' || key === 'help') {
      flags[key] = true
    } else {
      const value = argv[++i]
      if (value === undefined) throw new BadInput(`--${key} needs a value`)
      flags[key] = value
    }
  }
  return flags
}

export function main(argv: string[]): number {
  let flags: Record<string, string | boolean>
  try {
    flags = parseArgs(argv)
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}`)
    return 2
  }
  if (flags.help || argv.length === 0) {
    process.stdout.write(USAGE)
    return flags.help ? 0 : 2
  }
  if (typeof flags.out !== 'string') {
    process.stderr.write(`error: --out is required\n`)
    return 2
  }

  const job = defaultJob(flags.out)
  if (typeof flags.fasta === 'string') job.fastaPath = flags.fasta
  if (typeof flags.seq === 'string') job.sequence = flags.seq
  if (typeof flags.model === 'string') job.model = flags.model
  if (typeof flags.device === 'string') job.device = flags.device
  if (typeof flags.manifest === 'string') job.manifestPath = flags.manifest
  job.fallback = flags.fallback === true
  if (typeof flags.dim === 'string') {
    const dim = Number(flags.dim)
    if (!Number.isInteger(dim) || dim < 1) {
      process.stderr.write(`error: --dim wants a positive integer\n`)
      return 2
    }
    job.fallbackDim = dim
  }

  try {
    if (flags.batch === true) {
      const mapping = exportBatch(job)
      process.stdout.write(`wrote ${Object.keys(mapping).length} PRE file(s)\n`)
    } else if (typeof flags.scale === 'string') {
      process.stdout.write(`${exportScaled(job, flags.scale)}\n`)
    } else {
      process.stdout.write(`${exportSingle(job)}\n`)
    }
    return 0
  } catch (err) {
    if (err instanceof BadInput) {
      process.stderr.write(`error: ${err.message}\n`)
      return 2
    }
    if (err instanceof ModelUnavailable || err instanceof SequenceTooLong) {
      process.stderr.write(`error: ${err.message}\n`)
      return 3
    }
    throw err
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)))
}
