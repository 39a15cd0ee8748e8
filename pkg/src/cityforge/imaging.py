"""Minimal deterministic PNG tooling for the offline pipeline.

Encodes 8-bit RGB PNGs with optional tEXt tags, decodes the same subset, and
composes per-tile images into a top-down board render. No imaging library is
needed; the mocks and the board composition only ever touch this format.
"""

from __future__ import annotations

import hashlib
import struct
import zlib

from .model import CityLayout, GridCoord

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + kind
        + payload
        + struct.pack(">I", zlib.crc32(kind + payload) & 0xFFFFFFFF)
    )


def encode_png(
    width: int,
    height: int,
    pixels: bytes,
    texts: dict[str, str] | None = None,
) -> bytes:
    """Encode raw RGB bytes (row-major, 3 bytes per pixel) as a PNG."""
    if len(pixels) != width * height * 3:
        raise ValueError("pixel buffer does not match dimensions")
    raw = b"".join(
        b"\x00" + pixels[y * width * 3 : (y + 1) * width * 3] for y in range(height)
    )
    out = [_PNG_SIG, _chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0))]
    for key, value in sorted((texts or {}).items()):
        out.append(_chunk(b"tEXt", key.encode("latin-1") + b"\x00" + value.encode("latin-1")))
    out.append(_chunk(b"IDAT", zlib.compress(raw, 9)))
    out.append(_chunk(b"IEND", b""))
    return b"".join(out)


def solid_png(width: int, height: int, rgb: tuple[int, int, int], texts: dict[str, str] | None = None) -> bytes:
    return encode_png(width, height, bytes(rgb) * (width * height), texts)


def _iter_chunks(data: bytes):
    if data[:8] != _PNG_SIG:
        raise ValueError("not a PNG")
    pos = 8
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        kind = data[pos + 4 : pos + 8]
        payload = data[pos + 8 : pos + 8 + length]
        yield kind, payload
        pos += 12 + length
        if kind == b"IEND":
            break


def png_texts(data: bytes) -> dict[str, str]:
    """Read tEXt tags from a PNG."""
    texts: dict[str, str] = {}
    for kind, payload in _iter_chunks(data):
        if kind == b"tEXt" and b"\x00" in payload:
            key, value = payload.split(b"\x00", 1)
            texts[key.decode("latin-1")] = value.decode("latin-1")
    return texts


def decode_png(data: bytes) -> tuple[int, int, bytes]:
    """Decode a PNG produced by :func:`encode_png` back to (w, h, RGB bytes).

    Only the subset this module writes is supported (8-bit RGB, filter 0).
    """
    width = height = 0
    idat = b""
    for kind, payload in _iter_chunks(data):
        if kind == b"IHDR":
            width, height, depth, color = struct.unpack(">IIBB", payload[:10])
            if depth != 8 or color != 2:
                raise ValueError("unsupported PNG variant")
        elif kind == b"IDAT":
            idat += payload
    raw = zlib.decompress(idat)
    stride = width * 3
    rows = []
    for y in range(height):
        off = y * (stride + 1)
        if raw[off] != 0:
            raise ValueError("unsupported PNG row filter")
        rows.append(raw[off + 1 : off + 1 + stride])
    return width, height, b"".join(rows)


def hash_color(*parts: str | bytes) -> tuple[int, int, int]:
    """Deterministic RGB derived from the given parts."""
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8") if isinstance(part, str) else part)
        h.update(b"\x1f")
    digest = h.digest()
    return digest[0], digest[1], digest[2]


def compose_board(
    layout: CityLayout,
    tile_images: dict[GridCoord, bytes],
    tile_px: int = 64,
) -> bytes:
    """Stitch per-tile images into one top-down board PNG.

    Tiles that are missing or not in this module's PNG subset fall back to a
    deterministic solid color from the tile's content hash, so the board stays
    renderable with arbitrary provider output.
    """
    rows, cols = layout.rows, layout.cols
    board = bytearray(b"\xdd" * (rows * tile_px * cols * tile_px * 3))
    for coord in layout.occupied():
        data = tile_images.get(coord)
        tile_pixels: bytes
        if data is None:
            tile_pixels = bytes(hash_color("empty", f"{coord.row},{coord.col}")) * (tile_px * tile_px)
        else:
            try:
                w, h, rgb = decode_png(data)
                if (w, h) != (tile_px, tile_px):
                    raise ValueError("size mismatch")
                tile_pixels = rgb
            except ValueError:
                tile_pixels = bytes(hash_color(data)) * (tile_px * tile_px)
        for y in range(tile_px):
            dst = ((coord.row * tile_px + y) * cols * tile_px + coord.col * tile_px) * 3
            src = y * tile_px * 3
            board[dst : dst + tile_px * 3] = tile_pixels[src : src + tile_px * 3]
    return encode_png(cols * tile_px, rows * tile_px, bytes(board))
