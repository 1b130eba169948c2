"""Plain-text matrix serialization for test fixtures.

Format: a header line "rows cols", then one line per row with the
entries as "re+imj" tokens separated by single spaces. Floats are
written with repr so values round-trip exactly.
"""

from __future__ import annotations

import numpy as np

from .validation import as_complex_matrix


def _format_entry(z: complex) -> str:
    im = z.imag
    sign = "-" if im < 0 else "+"
    return f"{z.real!r}{sign}{abs(im)!r}j"


def dump_matrix(a) -> str:
    """Serialize a matrix to the text format, including the header."""
    a = as_complex_matrix(a, "a")
    rows, cols = a.shape
    lines = [f"{rows} {cols}"]
    for i in range(rows):
        lines.append(" ".join(_format_entry(complex(z)) for z in a[i]))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    """Parse the text format back into a complex matrix."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"bad header line: {lines[0]!r}")
    rows, cols = int(header[0]), int(header[1])
    if rows <= 0 or cols <= 0:
        raise ValueError(f"bad dimensions {rows}x{cols}")
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} data lines, got {len(lines) - 1}")
    out = np.empty((rows, cols), dtype=np.complex128)
    for i, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != cols:
            raise ValueError(f"row {i} has {len(tokens)} entries, expected {cols}")
        out[i] = [complex(tok) for tok in tokens]
    return out


def save_matrix(path, a) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_matrix(a))


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        return parse_matrix(fh.read())
