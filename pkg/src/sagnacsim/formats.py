"""Deterministic text and image serialization.

Everything here produces byte-stable output for identical inputs: floats
are written with 17 significant digits, images carry no timestamps or
comments, and scaling rules are fixed.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .modes import BeamGeometry, GridField, HGIndex, ModeExpansion

PGM_MAXVAL = 65535


def fmt_float(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# Expansion text format
# ---------------------------------------------------------------------------

def dump_expansion(e: ModeExpansion) -> str:
    """Serialize an expansion: header ``hg-expansion v1 w0=<meters>``,
    one ``n m re im`` line per term, sorted by index."""
    lines = [f"hg-expansion v1 w0={fmt_float(e.geometry.w0)}"]
    for idx, amp in sorted(e.terms.items()):
        lines.append(f"{idx.n} {idx.m} {fmt_float(amp.real)} {fmt_float(amp.imag)}")
    return "\n".join(lines) + "\n"


def parse_expansion(text: str) -> ModeExpansion:
    """Parse the expansion text format; ``#`` comments allowed anywhere."""
    header = None
    terms: dict[HGIndex, complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            m = re.fullmatch(r"hg-expansion v1 w0=(\S+)", line)
            if not m:
                raise ValueError(
                    f"line {lineno}: expected header 'hg-expansion v1 w0=<meters>'"
                )
            header = float(m.group(1))
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'n m re im'")
        try:
            n, m_ = int(parts[0]), int(parts[1])
            re_part, im_part = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        key = HGIndex(n, m_)
        terms[key] = terms.get(key, 0j) + complex(re_part, im_part)
    if header is None:
        raise ValueError("missing 'hg-expansion v1' header")
    return ModeExpansion(terms, BeamGeometry(header))


def read_expansion(path) -> ModeExpansion:
    with open(path, "r", encoding="ascii") as fh:
        return parse_expansion(fh.read())


def write_expansion(path, e: ModeExpansion) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_expansion(e))


# ---------------------------------------------------------------------------
# PGM / PPM images (16 bit, big endian payload)
# ---------------------------------------------------------------------------

def scale_to_levels(data: np.ndarray) -> np.ndarray:
    """Scale nonnegative data to [0, 65535] against its own maximum."""
    peak = float(np.max(data)) if data.size else 0.0
    if peak <= 0.0:
        return np.zeros(data.shape, dtype=np.uint16)
    levels = np.rint(data / peak * PGM_MAXVAL)
    return np.clip(levels, 0, PGM_MAXVAL).astype(np.uint16)


def intensity_levels(field: GridField) -> np.ndarray:
    """16-bit intensity image rows (top row = largest y)."""
    inten = np.abs(field.values) ** 2
    return scale_to_levels(inten)[::-1]


def phase_levels(field: GridField) -> np.ndarray:
    """16-bit phase image rows mapping [-pi, pi) onto [0, 65535]."""
    ph = np.angle(field.values)
    levels = np.floor((ph + math.pi) / (2.0 * math.pi) * (PGM_MAXVAL + 1))
    return np.clip(levels, 0, PGM_MAXVAL).astype(np.uint16)[::-1]


def pgm_bytes(levels: np.ndarray) -> bytes:
    h, w = levels.shape
    header = f"P5\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + levels.astype(">u2").tobytes()


def ppm_bytes(levels: np.ndarray) -> bytes:
    """Grayscale levels replicated over the three color channels."""
    h, w = levels.shape
    header = f"P6\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii")
    rgb = np.repeat(levels[:, :, None], 3, axis=2)
    return header + rgb.astype(">u2").tobytes()


def csv_matrix(data: np.ndarray) -> str:
    rows = []
    for row in data:
        rows.append(",".join(fmt_float(float(v)) for v in row))
    return "\n".join(rows) + "\n"


def parse_pnm(blob: bytes) -> tuple[str, int, int, int, np.ndarray]:
    """Minimal netpbm reader for P5/P6 with 2-byte samples.

    Returns (magic, width, height, maxval, array) with array shape
    (height, width) for P5 and (height, width, 3) for P6.
    """
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(blob):
            raise ValueError("truncated netpbm header")
        ch = blob[pos : pos + 1]
        if ch == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(blob) and not blob[pos : pos + 1].isspace():
                pos += 1
            tokens.append(blob[start:pos])
    magic = tokens[0].decode("ascii")
    if magic not in ("P5", "P6"):
        raise ValueError(f"unsupported netpbm magic {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:4])
    pos += 1  # single whitespace byte after maxval
    channels = 3 if magic == "P6" else 1
    count = width * height * channels
    payload = blob[pos : pos + 2 * count]
    if len(payload) != 2 * count:
        raise ValueError("truncated netpbm payload")
    arr = np.frombuffer(payload, dtype=">u2").astype(np.uint16)
    if magic == "P6":
        return magic, width, height, maxval, arr.reshape(height, width, 3)
    return magic, width, height, maxval, arr.reshape(height, width)
