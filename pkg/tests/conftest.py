import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def atom_line(serial, name, resname, chain, resseq, x, y, z,
              altloc=" ", icode=" ", record="ATOM  "):
    """One fixed-column PDB atom record (v3.3 layout)."""
    return (
        f"{record}{serial:>5d} {name:^4s}{altloc}{resname:>3s} {chain}"
        f"{resseq:>4d}{icode}   {x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00"
        f"           C"
    )


def pdb_text(lines):
    return "\n".join(lines) + "\n"
