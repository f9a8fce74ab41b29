"""On-disk cache of q-series, one file per key.

File layout (little-endian):

    offset  size  field
    0       4     magic b"QSER"
    4       2     format version (1)
    6       1     mode: 0 residue, 1 exact
    7       1     reserved (0)
    8       8     modulus m^k as uint64 (0 in exact mode)
    16      8     offset as int64
    24      8     trunc as int64
    32      ...   payload

Residue payload: ``trunc - offset`` uint64 values.  Exact payload: per
coefficient a uint32 byte length followed by that many bytes of a signed
little-endian two's-complement integer.
"""

from __future__ import annotations

import contextlib
import contextvars
import hashlib
import os
import struct
import tempfile
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .series import Modulus, QSeries

MAGIC = b"QSER"
VERSION = 1
HEADER = struct.Struct("<4sHBBQqq")
assert HEADER.size == 32
ENV_VAR = "Q_CACHE_DIR"
DEFAULT_DIR = ".qcache"


class CacheFormatError(ValueError):
    """A cache file is truncated or has the wrong header."""


def encode(series: QSeries) -> bytes:
    mod = series.modulus
    head = HEADER.pack(
        MAGIC, VERSION, 0 if mod is not None else 1, 0,
        mod.value if mod is not None else 0, series.offset, series.trunc,
    )
    if mod is not None:
        return head + series.coeffs.astype("<u8").tobytes()
    parts = [head]
    for c in series.coeffs:
        c = int(c)
        raw = c.to_bytes((c.bit_length() + 8) // 8 or 1, "little", signed=True)
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    return b"".join(parts)


def decode(data: bytes, modulus: Modulus | None = None) -> QSeries:
    """Inverse of :func:`encode`; ``modulus`` must match the stored one."""
    if len(data) < HEADER.size:
        raise CacheFormatError("file shorter than header")
    magic, version, mode, _, mval, offset, trunc = HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise CacheFormatError(f"bad magic/version {magic!r}/{version}")
    n = trunc - offset
    body = memoryview(data)[HEADER.size :]
    if mode == 0:
        if modulus is None or modulus.value != mval:
            raise CacheFormatError(f"stored modulus {mval} does not match request")
        if len(body) != 8 * n:
            raise CacheFormatError("residue payload has wrong length")
        coeffs = np.frombuffer(body, dtype="<u8").astype(np.int64)
        return QSeries(offset, coeffs, trunc, modulus)
    if modulus is not None:
        raise CacheFormatError("exact series requested with a modulus")
    vals = []
    pos = 0
    for _ in range(n):
        if pos + 4 > len(body):
            raise CacheFormatError("exact payload truncated")
        (size,) = struct.unpack_from("<I", body, pos)
        pos += 4
        vals.append(int.from_bytes(body[pos : pos + size], "little", signed=True))
        pos += size
    if pos != len(body):
        raise CacheFormatError("trailing bytes in exact payload")
    return QSeries(offset, np.array(vals, dtype=object), trunc, None)


class SeriesCache:
    """Directory of encoded series keyed by (constructor, params, N, modulus)."""

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory or os.environ.get(ENV_VAR) or DEFAULT_DIR)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(constructor: str, params: tuple, N: int, modulus: Modulus | None) -> str:
        mod = f"{modulus.m}^{modulus.k}" if modulus is not None else "exact"
        text = f"{constructor}|{','.join(map(str, params))}|{N}|{mod}"
        digest = hashlib.sha256(text.encode()).hexdigest()[:24]
        return f"{constructor}-{digest}.qser"

    def path(self, *key_parts) -> Path:
        return self.directory / self.key(*key_parts)

    def get(self, constructor: str, params: tuple, N: int, modulus: Modulus | None) -> QSeries | None:
        p = self.path(constructor, params, N, modulus)
        try:
            data = p.read_bytes()
        except FileNotFoundError:
            return None
        try:
            return decode(data, modulus)
        except CacheFormatError:
            return None

    def put(self, constructor: str, params: tuple, N: int, modulus: Modulus | None, series: QSeries) -> Path:
        p = self.path(constructor, params, N, modulus)
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(encode(series))
            os.replace(tmp, p)
        except BaseException:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(tmp)
            raise
        return p

    def get_or_build(
        self,
        constructor: str,
        params: tuple,
        N: int,
        modulus: Modulus | None,
        build: Callable[[], QSeries],
    ) -> QSeries:
        hit = self.get(constructor, params, N, modulus)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        series = build()
        self.put(constructor, params, N, modulus, series)
        return series


_active: contextvars.ContextVar[SeriesCache | None] = contextvars.ContextVar("mpcong_cache", default=None)


def active_cache() -> SeriesCache | None:
    return _active.get()


@contextlib.contextmanager
def use_cache(cache: SeriesCache | None) -> Iterator[SeriesCache | None]:
    """Make ``cache`` visible to the series constructors inside the block."""
    token = _active.set(cache)
    try:
        yield cache
    finally:
        _active.reset(token)
