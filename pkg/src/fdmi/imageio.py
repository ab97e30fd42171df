"""Grayscale image, flow and plan persistence.

Supported containers
--------------------
* binary PGM (``P5``) with ``maxval`` 255 (8-bit) or 65535 (16-bit,
  big-endian samples); values are clamped to [0, 1] and quantized with
  round-half-up, ``floor(v * maxval + 0.5)``;
* grayscale PFM (``Pf``), 32-bit floats, rows stored bottom-to-top, byte
  order given by the sign of the scale (negative means little-endian);
* two-band ``.flo`` flow files (magic ``PIEH``, int32 width and height,
  interleaved little-endian float32 ``(dx, dy)``).

Every parse failure raises a :class:`~fdmi.exceptions.ParseError` subclass
that records the byte offset of the fault.
"""

from dataclasses import dataclass
import json
import os
import re
import tempfile

import numpy as np

from .exceptions import (
    MalformedHeaderError,
    ParseError,
    TruncatedPayloadError,
    UnsupportedMagicError,
    ValidationError,
)
from .plan import SidebandPlan
from .validation import check_image

FORMATS = ("p5-8", "p5-16", "pfm")

_SUFFIX_FORMATS = {".pfm": "pfm", ".pgm": "p5-16", ".pnm": "p5-16"}

_FLO_MAGIC = b"PIEH"

# netpbm headers: whitespace-separated tokens, '#' comments up to end of line
_WS = b" \t\r\n\v\f"


@dataclass(frozen=True)
class PixmapHeader:
    format: str
    width: int
    height: int
    maxval: int = None
    scale: float = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if self.format.startswith("p5") and self.maxval not in (255, 65535):
            raise ValidationError(f"P5 maxval must be 255 or 65535, got {self.maxval}")

    @property
    def payload_size(self):
        per = {"p5-8": 1, "p5-16": 2, "pfm": 4}[self.format]
        return per * self.width * self.height


class _Tokenizer:
    def __init__(self, data, pos):
        self.data = data
        self.pos = pos

    def _skip(self, comments):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos : self.pos + 1]
            if c in _WS and c:
                self.pos += 1
            elif comments and c == b"#":
                nl = d.find(b"\n", self.pos)
                self.pos = len(d) if nl < 0 else nl + 1
            else:
                break

    def token(self, what, comments=True):
        self._skip(comments)
        start = self.pos
        d = self.data
        while self.pos < len(d) and d[self.pos : self.pos + 1] not in _WS and d[self.pos] != ord("#"):
            self.pos += 1
        if self.pos == start:
            raise TruncatedPayloadError(f"header ended while reading {what}", start)
        return d[start : self.pos], start

    def single_whitespace(self, what):
        if self.pos >= len(self.data):
            raise TruncatedPayloadError(f"header ended after {what}", self.pos)
        if self.data[self.pos : self.pos + 1] not in _WS:
            raise MalformedHeaderError(f"expected one whitespace byte after {what}", self.pos)
        self.pos += 1


def _parse_int(tok, offset, what):
    if not re.fullmatch(rb"[0-9]{1,9}", tok):
        raise MalformedHeaderError(f"{what} must be a positive integer, got {tok[:16]!r}", offset)
    value = int(tok)
    if value <= 0:
        raise MalformedHeaderError(f"{what} must be positive, got {value}", offset)
    return value


def _parse_scale(tok, offset):
    if not re.fullmatch(rb"[-+]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][-+]?[0-9]+)?", tok):
        raise MalformedHeaderError(f"PFM scale must be a number, got {tok[:16]!r}", offset)
    value = float(tok)
    if value == 0 or not np.isfinite(value):
        raise MalformedHeaderError(f"PFM scale must be finite and nonzero, got {value}", offset)
    return value


def parse_header(data):
    """Decode the header of an image byte string.

    Returns
    -------
    (PixmapHeader, int)
        The header and the offset of the first payload byte.
    """
    data = bytes(data)
    if len(data) < 2:
        raise TruncatedPayloadError("file too short to hold a magic number", len(data))
    magic = data[:2]
    if magic not in (b"P5", b"Pf"):
        raise UnsupportedMagicError(f"unsupported magic {magic!r}; expected b'P5' or b'Pf'", 0)
    tk = _Tokenizer(data, 2)
    if tk.pos < len(data) and data[tk.pos : tk.pos + 1] not in _WS:
        raise MalformedHeaderError("magic number must be followed by whitespace", tk.pos)
    pfm = magic == b"Pf"
    tok, off = tk.token("width", comments=not pfm)
    width = _parse_int(tok, off, "width")
    tok, off = tk.token("height", comments=not pfm)
    height = _parse_int(tok, off, "height")
    tok, off = tk.token("maxval" if not pfm else "scale", comments=not pfm)
    if pfm:
        scale = _parse_scale(tok, off)
        tk.single_whitespace("scale")
        return PixmapHeader("pfm", width, height, scale=scale), tk.pos
    maxval = _parse_int(tok, off, "maxval")
    if maxval not in (255, 65535):
        raise MalformedHeaderError(f"P5 maxval must be 255 or 65535, got {maxval}", off)
    tk.single_whitespace("maxval")
    fmt = "p5-8" if maxval == 255 else "p5-16"
    return PixmapHeader(fmt, width, height, maxval=maxval), tk.pos


def decode_image(data):
    """Decode a P5 or PFM byte string into a float64 image (P5 scaled to [0, 1])."""
    data = bytes(data)
    header, start = parse_header(data)
    end = start + header.payload_size
    if len(data) < end:
        raise TruncatedPayloadError(
            f"payload holds {len(data) - start} bytes, {header.payload_size} expected", len(data)
        )
    if len(data) > end:
        raise ParseError(f"{len(data) - end} unexpected bytes after the payload", end)
    h, w = header.height, header.width
    payload = data[start:end]
    if header.format == "p5-8":
        return np.frombuffer(payload, dtype=np.uint8).reshape(h, w) / 255.0
    if header.format == "p5-16":
        return np.frombuffer(payload, dtype=">u2").reshape(h, w) / 65535.0
    dtype = "<f4" if header.scale < 0 else ">f4"
    img = np.frombuffer(payload, dtype=dtype).reshape(h, w)[::-1]
    if not np.all(np.isfinite(img)):
        raise ParseError("PFM payload contains non-finite samples", start)
    return img.astype(np.float64)


def quantize(img, maxval):
    """Clamp to [0, 1] and quantize with round-half-up to integers in ``[0, maxval]``."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(img * maxval + 0.5).astype(np.int64)


def encode_image(img, format="pfm"):
    """Serialize a 2D image to bytes in one of :data:`FORMATS`.

    PFM stores 32-bit floats, so the round trip is exact for float32 values
    and rounds float64 inputs to the nearest float32.
    """
    img = check_image(img, "img")
    h, w = img.shape
    if format == "p5-8":
        return b"P5\n%d %d\n255\n" % (w, h) + quantize(img, 255).astype(np.uint8).tobytes()
    if format == "p5-16":
        return b"P5\n%d %d\n65535\n" % (w, h) + quantize(img, 65535).astype(">u2").tobytes()
    if format == "pfm":
        return b"Pf\n%d %d\n-1.0\n" % (w, h) + img[::-1].astype("<f4").tobytes()
    raise ValidationError(f"format must be one of {FORMATS}, got {format!r}")


def _atomic_write(path, payload):
    """Write bytes next to ``path`` and move them into place in one step."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_for_path(path, default="pfm"):
    """Container implied by a file suffix (``.pfm``, ``.pgm``/``.pnm`` as 16-bit)."""
    return _SUFFIX_FORMATS.get(os.path.splitext(os.fspath(path))[1].lower(), default)


def read_image(path):
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def write_image(path, img, format=None):
    """Write ``img`` to ``path``; ``format`` defaults to the one implied by the suffix."""
    _atomic_write(path, encode_image(img, format or format_for_path(path)))


def read_plan(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MalformedHeaderError(f"plan file is not UTF-8: {exc.reason}", exc.start) from None
    except json.JSONDecodeError as exc:
        raise MalformedHeaderError(f"plan file is not valid JSON: {exc.msg}", exc.pos) from None
    return SidebandPlan.from_dict(doc)


def write_plan(path, plan):
    _atomic_write(path, (plan.to_json(indent=2) + "\n").encode("utf-8"))


def encode_flow(flow):
    """``.flo`` bytes of a :class:`~fdmi.flow.FlowField`."""
    v = flow.vectors
    h, w = v.shape[:2]
    return _FLO_MAGIC + np.array([w, h], dtype="<i4").tobytes() + v.astype("<f4").tobytes()


def decode_flow(data):
    from .flow import FlowField

    data = bytes(data)
    if len(data) < 4:
        raise TruncatedPayloadError("file too short to hold a magic number", len(data))
    if data[:4] != _FLO_MAGIC:
        raise UnsupportedMagicError(f"unsupported magic {data[:4]!r}; expected {_FLO_MAGIC!r}", 0)
    if len(data) < 12:
        raise TruncatedPayloadError("flow header ends early", len(data))
    w, h = (int(x) for x in np.frombuffer(data[4:12], dtype="<i4"))
    if w <= 0 or h <= 0:
        raise MalformedHeaderError(f"flow dimensions must be positive, got {w}x{h}", 4)
    end = 12 + 8 * w * h
    if len(data) < end:
        raise TruncatedPayloadError(f"flow payload holds {len(data) - 12} bytes, {end - 12} expected", len(data))
    if len(data) > end:
        raise ParseError(f"{len(data) - end} unexpected bytes after the payload", end)
    v = np.frombuffer(data[12:end], dtype="<f4").reshape(h, w, 2).astype(np.float64)
    if not np.all(np.isfinite(v)):
        raise ParseError("flow payload contains non-finite samples", 12)
    return FlowField(v)


def read_flow(path):
    with open(path, "rb") as fh:
        return decode_flow(fh.read())


def write_flow(path, flow):
    _atomic_write(path, encode_flow(flow))


def write_json(path, doc):
    _atomic_write(path, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8"))
