export { BadInput, ModelUnavailable, SequenceTooLong } from './errors'
export { FALLBACK_SOURCE, fallbackEmbedding } from './fallback'
export { FastaRecord, parseFasta } from './fasta'
export { formatPre, formatValue, parsePre } from './pre'
export {
  DEFAULT_MODEL,
  MAX_SEQUENCE_LENGTH,
  MODEL_ALLOWLIST,
  SCALES,
  runModel,
} from './models'
export {
  ExportJob,
  defaultJob,
  exportBatch,
  exportScaled,
  exportSingle,
  loadSequences,
} from './export'
