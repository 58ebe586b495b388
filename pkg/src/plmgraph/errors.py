"""Exception types shared across the package.

Every operation that can fail raises one of these instead of a bare
ValueError, so callers (and the CLI exit-code mapping) can tell input
problems apart from domain problems.
"""


class PlmGraphError(Exception):
    """Base class for all package errors."""


# --- structure / sequence parsing ---

class MalformedRecord(PlmGraphError):
    """A fixed-column record contains an unparseable field."""


class EmptyStructure(PlmGraphError):
    """No usable residue (with a CA atom) survived parsing/filtering."""


class NoRecords(PlmGraphError):
    """FASTA input contains no '>' record."""


class IllegalCharacter(PlmGraphError):
    """A sequence contains a non-alphabetic residue symbol."""


class UnknownChain(PlmGraphError):
    """Requested chain id is not present in the structure."""


# --- alignment ---

class EmptyInput(PlmGraphError):
    """An operation received an empty sequence or empty collection."""


class InputTooLong(PlmGraphError):
    """Alignment input exceeds the supported length bound."""


class DimensionMismatch(PlmGraphError):
    """Embedding row count does not match the alignment's sequence length."""


# --- graph construction / feature fusion ---

class TooFewResidues(PlmGraphError):
    """Graph construction needs at least two residues."""


class NonPositiveCutoff(PlmGraphError):
    """Distance cutoff must be positive."""


class RowCountMismatch(PlmGraphError):
    """A per-residue matrix has the wrong number of rows."""


class SumDimMismatch(PlmGraphError):
    """Element-wise feature sum requires equal dimensions."""


# --- embedding file format ---

class BadHeader(PlmGraphError):
    """PRE header line is not 'PRE1 <N> <D>' / 'src=<tag>'."""


class ColumnCountMismatch(PlmGraphError):
    """A PRE data row has the wrong number of columns."""


class NonFiniteValue(PlmGraphError):
    """A matrix entry is NaN/inf or not a decimal real."""


class DimTooSmall(PlmGraphError):
    """Requested embedding dimension cannot hold the requested content."""


# --- network ---

class DimMismatch(PlmGraphError):
    """Graph feature dimension does not match the model's input dimension."""


class TraceConsumed(PlmGraphError):
    """A forward trace was already used by a backward pass."""


# --- training ---

class ChainTooLong(PlmGraphError):
    """Chain length exceeds the classification head's class budget."""


class GenerationFailed(PlmGraphError):
    """Self-avoiding chain generation did not converge."""


class ConfigError(PlmGraphError):
    """Inconsistent or invalid training configuration."""


# --- metrics ---

class DegenerateVariance(PlmGraphError):
    """Correlation is undefined: one input has zero variance."""


class SizeMismatch(PlmGraphError):
    """Point sets (or value lists) differ in length."""


class Degenerate(PlmGraphError):
    """Point set is too small or collinear for superposition."""


class NoInterface(PlmGraphError):
    """No residue pair falls under the interface distance cutoff."""


class OneClassOnly(PlmGraphError):
    """AUROC needs at least one positive and one negative label."""


class NonPositiveAffinity(PlmGraphError):
    """Binding affinity must be a positive Molar quantity."""
