"""PDB structure and FASTA sequence parsing.

Structures are residue-level: each residue is represented by its CA atom
coordinate and a one-letter code. Only model 1 is read (parsing stops at
the first ENDMDL), only ATOM records are considered (HETATM ignored), and
only altLoc blank or 'A' variants are kept. Residues without an accepted
CA atom are dropped and counted.

Column layout follows the PDB v3.3 ATOM record: atom name 13-16,
altLoc 17, resName 18-20, chainID 22, resSeq 23-26, iCode 27,
x/y/z 31-38 / 39-46 / 47-54 (1-based columns).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    EmptyStructure,
    IllegalCharacter,
    MalformedRecord,
    NoRecords,
    UnknownChain,
)

AA3_TO_1 = {
    "ALA": "A", "ARG": "R", "ASN": "N", "ASP": "D", "CYS": "C",
    "GLN": "Q", "GLU": "E", "GLY": "G", "HIS": "H", "ILE": "I",
    "LEU": "L", "LYS": "K", "MET": "M", "PHE": "F", "PRO": "P",
    "SER": "S", "THR": "T", "TRP": "W", "TYR": "Y", "VAL": "V",
}

# One-letter alphabet used throughout: 20 standard residues plus 'X'.
AA_ALPHABET = "ACDEFGHIKLMNPQRSTVWY"
AA_ALPHABET_X = AA_ALPHABET + "X"


@dataclass(frozen=True)
class Residue:
    """One residue, located by its CA atom.

    res_seq/icode reproduce the PDB numbering; aa is a one-letter code in
    the 20-residue alphabet or 'X' for anything non-standard.
    """

    res_seq: int
    icode: str
    aa: str
    ca: tuple[float, float, float]

    def __post_init__(self):
        if len(self.aa) != 1:
            raise MalformedRecord(f"one-letter code expected, got {self.aa!r}")
        if not all(math.isfinite(c) for c in self.ca):
            raise MalformedRecord(f"non-finite CA coordinate {self.ca}")


@dataclass(frozen=True)
class Chain:
    chain_id: str
    residues: tuple[Residue, ...]


@dataclass(frozen=True)
class Structure:
    """Parsed chains in file order; residues ordered by (res_seq, icode)."""

    id: str
    chains: tuple[Chain, ...]
    n_dropped: int = field(default=0, compare=False)

    def chain(self, chain_id: str) -> Chain:
        for c in self.chains:
            if c.chain_id == chain_id:
                return c
        raise UnknownChain(f"no chain {chain_id!r} in structure {self.id}")

    @property
    def n_residues(self) -> int:
        return sum(len(c.residues) for c in self.chains)


@dataclass(frozen=True)
class Sequence:
    """A named amino-acid string over the 20-letter alphabet plus 'X'."""

    id: str
    residues: str


def _parse_coord(line: str, start: int, end: int, lineno: int) -> float:
    text = line[start:end].strip()
    try:
        value = float(text)
    except ValueError:
        raise MalformedRecord(
            f"line {lineno}: non-numeric coordinate field {text!r}"
        ) from None
    if not math.isfinite(value):
        raise MalformedRecord(f"line {lineno}: non-finite coordinate {text!r}")
    return value


def parse_pdb(text: str, chain_filter: set[str] | None = None) -> Structure:
    """Parse PDB-format text into a residue-level Structure.

    One Residue per residue that has an accepted CA atom; residues that
    appear in ATOM records but never yield a CA are counted in
    Structure.n_dropped. Unknown three-letter names map to 'X'.

    Raises MalformedRecord on unparseable numeric fields and
    EmptyStructure when no CA survives filtering.
    """
    struct_id = "unknown"
    # chain id -> { (res_seq, icode) -> Residue }, insertion-ordered
    chains: dict[str, dict[tuple[int, str], Residue]] = {}
    seen: set[tuple[str, int, str]] = set()

    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[0:6]
        if record == "HEADER":
            code = line[62:66].strip()
            if code:
                struct_id = code
            continue
        if record == "ENDMDL":
            break  # model 1 only
        if record != "ATOM  ":
            continue

        chain_id = line[21:22]
        if chain_filter is not None and chain_id not in chain_filter:
            continue

        res_seq_text = line[22:26].strip()
        try:
            res_seq = int(res_seq_text)
        except ValueError:
            raise MalformedRecord(
                f"line {lineno}: non-numeric residue number {res_seq_text!r}"
            ) from None
        icode = line[26:27].strip()
        seen.add((chain_id, res_seq, icode))

        if line[12:16].strip() != "CA":
            continue
        altloc = line[16:17]
        if altloc not in (" ", "A", ""):
            continue

        x = _parse_coord(line, 30, 38, lineno)
        y = _parse_coord(line, 38, 46, lineno)
        z = _parse_coord(line, 46, 54, lineno)
        aa = AA3_TO_1.get(line[17:20].strip(), "X")

        residues = chains.setdefault(chain_id, {})
        key = (res_seq, icode)
        if key not in residues:  # first accepted CA wins (altLoc policy)
            residues[key] = Residue(res_seq, icode, aa, (x, y, z))

    if not chains:
        raise EmptyStructure("no CA atom found after filtering")

    built = []
    for chain_id, residues in chains.items():
        ordered = tuple(residues[k] for k in sorted(residues))
        built.append(Chain(chain_id, ordered))
    n_kept = {(c.chain_id, r.res_seq, r.icode) for c in built for r in c.residues}
    return Structure(struct_id, tuple(built), n_dropped=len(seen - n_kept))


def parse_fasta(text: str) -> list[Sequence]:
    """Parse FASTA text into a list of Sequence records.

    Whitespace inside sequences is removed and letters are uppercased;
    alphabetic symbols outside the 20-residue alphabet become 'X'.
    Raises NoRecords when no '>' header exists and IllegalCharacter on
    non-alphabetic residue symbols.
    """
    sequences: list[Sequence] = []
    header: str | None = None
    parts: list[str] = []

    def flush():
        if header is None:
            return
        raw = "".join(parts)
        if not raw:
            raise NoRecords(f"record {header!r} has an empty sequence")
        cleaned = []
        for ch in raw:
            if not ch.isalpha():
                raise IllegalCharacter(
                    f"record {header!r}: illegal residue symbol {ch!r}"
                )
            up = ch.upper()
            cleaned.append(up if up in AA_ALPHABET else "X")
        sequences.append(Sequence(header, "".join(cleaned)))

    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            header = line[1:].split()[0] if len(line) > 1 else ""
            parts = []
        elif header is not None:
            parts.append(line.replace(" ", "").replace("\t", ""))
    flush()

    if not sequences:
        raise NoRecords("no FASTA record found")
    return sequences


def structure_sequence(s: Structure, chain_id: str) -> Sequence:
    """The fragmentary sequence of a chain: its one-letter codes in order."""
    chain = s.chain(chain_id)
    return Sequence(f"{s.id}_{chain_id}", "".join(r.aa for r in chain.residues))
