import * as fs from 'node:fs'
import * as path from 'node:path'
import { BadInput } from './errors'
import { FALLBACK_SOURCE, fallbackEmbedding } from './fallback'
import { FastaRecord, parseFasta } from './fasta'
import { formatPre } from './pre'
import { DEFAULT_MODEL, SCALES, runModel } from './models'

export interface ExportJob {
  /** FASTA path or literal sequence (exactly one must be set). */
  fastaPath?: string
  sequence?: string
  model: string
  /** Output PRE path (single sequence) or directory (batch). */
  outPath: string
  device: string
  /** Offline mode: deterministic (position, residue) hash embeddings. */
  fallback: boolean
  /** Embedding width used in fallback mode. */
  fallbackDim: number
  /** Batch mode: write a manifest mapping sequence ids to PRE paths. */
  manifestPath?: string
}

export function defaultJob(outPath: string): ExportJob {
  return {
    model: DEFAULT_MODEL,
    outPath,
    device: 'cpu',
    fallback: false,
    fallbackDim: SCALES['650M'].dim,
  }
}

export function loadSequences(job: ExportJob): FastaRecord[] {
  if (job.sequence !== undefined && job.fastaPath !== undefined) {
    throw new BadInput('give either a FASTA path or a literal sequence, not both')
  }
  if (job.sequence !== undefined) {
    if (!job.sequence) throw new BadInput('empty sequence')
    return parseFasta(`>seq\n${job.sequence}\n`)
  }
  if (job.fastaPath !== undefined) {
    return parseFasta(fs.readFileSync(job.fastaPath, 'utf8'))
  }
  throw new BadInput('no sequence source given')
}

function embedOne(job: ExportJob, sequence: string): string {
  if (job.fallback) {
    return formatPre(fallbackEmbedding(sequence, job.fallbackDim), FALLBACK_SOURCE)
  }
  const result = runModel(sequence, job.model, job.device)
  return formatPre(result.rows, result.model.replace(/\s+/g, '_'))
}

/** Export one PRE file; the sequence source must hold exactly one record. */
export function exportSingle(job: ExportJob): string {
  const records = loadSequences(job)
  if (records.length !== 1) {
    throw new BadInput(
      `expected exactly one sequence, got ${records.length}; use batch mode`,
    )
  }
  const text = embedOne(job, records[0].sequence)
  fs.mkdirSync(path.dirname(path.resolve(job.outPath)), { recursive: true })
  fs.writeFileSync(job.outPath, text)
  return job.outPath
}

/**
 * Export one PRE file per FASTA record into job.outPath (a directory) and
 * write a manifest mapping sequence ids to PRE paths.
 */
export function exportBatch(job: ExportJob): Record<string, string> {
  const records = loadSequences(job)
  fs.mkdirSync(job.outPath, { recursive: true })
  const mapping: Record<string, string> = {}
  records.forEach((record, index) => {
    const stem = record.id.replace(/[^A-Za-z0-9._-]/g, '_') || `seq${index}`
    const out = path.join(job.outPath, `${stem}.pre`)
    fs.writeFileSync(out, embedOne(job, record.sequence))
    mapping[record.id] = out
  })
  const manifestPath = job.manifestPath ?? path.join(job.outPath, 'manifest.json')
  fs.writeFileSync(manifestPath, JSON.stringify(mapping, null, 2) + '\n')
  return mapping
}

/** Export at a named ESM-2 scale (8M/35M/150M/650M/3B). */
export function exportScaled(job: ExportJob, scale: string): string {
  const entry = SCALES[scale]
  if (!entry) {
    throw new BadInput(
      `unknown scale '${scale}'; expected one of ${Object.keys(SCALES).join(', ')}`,
    )
  }
  return exportSingle({ ...job, model: entry.model, fallbackDim: entry.dim })
}
