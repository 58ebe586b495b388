import { BadInput } from './errors'

/**
 * Serialize an N x D matrix to PRE text (bit-exact grammar):
 *   line 1: "PRE1 <N> <D>"
 *   line 2: "src=<tag>"      (tag must not contain spaces)
 *   then N lines of D space-separated decimal reals, LF endings.
 *
 * Values are written with up to 17 significant digits so every float64
 * survives a round trip exactly.
 */
export function formatPre(rows: number[][], source: string): string {
  if (rows.length < 1 || rows[0].length < 1) {
    throw new BadInput('matrix must be at least 1 x 1')
  }
  if (/\s/.test(source) || source.length === 0) {
    throw new BadInput(`src tag must be non-empty without spaces: '${source}'`)
  }
  const d = rows[0].length
  const lines = [`PRE1 ${rows.length} ${d}`, `src=${source}`]
  for (const row of rows) {
    if (row.length !== d) throw new BadInput('ragged matrix rows')
    for (const v of row) {
      if (!Number.isFinite(v)) throw new BadInput('non-finite matrix entry')
    }
    lines.push(row.map(formatValue).join(' '))
  }
  return lines.join('\n') + '\n'
}

/** Shortest decimal that round-trips, capped at 17 significant digits. */
export function formatValue(v: number): string {
  // toString() on a JS number is the shortest exact representation, but
  // its exponent format ("1e-7") matches what float parsers accept.
  const s = v.toString()
  return s === '-0' ? '0' : s
}

export interface ParsedPre {
  n: number
  d: number
  source: string
  rows: number[][]
}

/** Minimal reader used by the tests to check what we emitted. */
export function parsePre(text: string): ParsedPre {
  const lines = text.split('\n')
  if (lines[lines.length - 1] === '') lines.pop()
  if (lines.length < 2) throw new BadInput('PRE needs a header and a src line')
  const head = lines[0].split(' ')
  if (head.length !== 3 || head[0] !== 'PRE1') {
    throw new BadInput(`bad header '${lines[0]}'`)
  }
  const n = Number(head[1])
  const d = Number(head[2])
  if (!Number.isInteger(n) || !Number.isInteger(d) || n < 1 || d < 1) {
    throw new BadInput(`bad dimensions in '${lines[0]}'`)
  }
  if (!lines[1].startsWith('src=') || lines[1].includes(' ')) {
    throw new BadInput(`bad src line '${lines[1]}'`)
  }
  const rows = lines.slice(2).map((line) => line.split(/ +/).map(Number))
  if (rows.length !== n) throw new BadInput(`expected ${n} rows, got ${rows.length}`)
  for (const row of rows) {
    if (row.length !== d) throw new BadInput('bad column count')
    if (row.some((v) => !Number.isFinite(v))) throw new BadInput('non-finite value')
  }
  return { n, d, source: lines[1].slice(4), rows }
}
