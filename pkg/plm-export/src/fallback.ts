import { createHash } from 'node:crypto'

export const FALLBACK_SOURCE = 'fallback'

/**
 * Deterministic pseudo-embeddings for offline pipeline testing.
 *
 * Row i is derived purely from (i, residue letter): each 4-byte window of
 * sha256("pre-fallback|i|aa|block") becomes one value in [-1, 1). The same
 * sequence always produces byte-identical output, and rows carry both the
 * position and the residue identity, which is all the downstream toy
 * experiments need. Never presented as model output (src=fallback).
 */
export function fallbackEmbedding(sequence: string, dim: number): number[][] {
  if (dim < 1) throw new RangeError(`dim must be >= 1, got ${dim}`)
  const rows: number[][] = []
  for (let i = 0; i < sequence.length; i++) {
    const row: number[] = []
    for (let block = 0; row.length < dim; block++) {
      const digest = createHash('sha256')
        .update(`pre-fallback|${i}|${sequence[i]}|${block}`)
        .digest()
      for (let off = 0; off + 4 <= digest.length && row.length < dim; off += 4) {
        const u = digest.readUInt32BE(off)
        row.push((u / 2 ** 32) * 2 - 1)
      }
    }
    rows.push(row)
  }
  return rows
}
