import { BadInput } from './errors'

export interface FastaRecord {
  id: string
  sequence: string
}

const STANDARD = 'ACDEFGHIKLMNPQRSTVWY'

/**
 * Parse FASTA text. Whitespace inside sequences is removed, letters are
 * uppercased, and alphabetic symbols outside the 20 standard amino acids
 * become 'X' (matching the downstream graph pipeline's alphabet).
 */
export function parseFasta(text: string): FastaRecord[] {
  const records: FastaRecord[] = []
  let id: string | null = null
  let parts: string[] = []

  const flush = () => {
    if (id === null) return
    const raw = parts.join('')
    if (!raw) throw new BadInput(`record '${id}' has an empty sequence`)
    let seq = ''
    for (const ch of raw) {
      if (!/[a-zA-Z]/.test(ch)) {
        throw new BadInput(`record '${id}': illegal residue symbol '${ch}'`)
      }
      const up = ch.toUpperCase()
      seq += STANDARD.includes(up) ? up : 'X'
    }
    records.push({ id, sequence: seq })
  }

  for (const rawLine of text.split('\n')) {
    const line = rawLine.trim()
    if (!line) continue
    if (line.startsWith('>')) {
      flush()
      id = line.slice(1).split(/\s+/)[0] ?? ''
      parts = []
    } else if (id !== null) {
      parts.push(line.replace(/\s+/g, ''))
    }
  }
  flush()

  if (records.length === 0) throw new BadInput('no FASTA record found')
  return records
}
