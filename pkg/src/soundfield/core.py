"""Shared field types, the binary tensor container, and splittable RNG streams.

Everything downstream (geometry sampling, simulation, noise injection,
training) builds on the three immutable field types defined here and derives
its randomness from :class:`Rng` so that a single master seed reproduces a
whole dataset bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SFTENSR1"

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("u1")}
_DTYPE_TO_CODE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.uint8): 2}


class ContainerError(RuntimeError):
    """Raised on malformed container files (bad magic, truncation, bad dims)."""


def write_tensor(path, array, metadata=None):
    """Write ``array`` to ``path`` in the tensor container format.

    Layout: 8-byte magic, dtype code (u8), rank (u8), rank x u32 dims
    (little-endian), then the row-major payload.  ``metadata`` (a flat
    key/value map) goes to a JSON sidecar at ``path + ".json"``.
    """
    path = Path(path)
    arr = np.asarray(array)
    if arr.ndim < 1:
        arr = arr.reshape(1)
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"all dims must be >= 1, got shape {arr.shape}")
    dtype = np.dtype(arr.dtype)
    if dtype not in _DTYPE_TO_CODE:
        raise ValueError(f"unsupported dtype {dtype}; use f32, f64, or u8")
    code = _DTYPE_TO_CODE[dtype]
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BB", code, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(np.ascontiguousarray(arr).astype(_DTYPE_CODES[code]).tobytes())
    if metadata is not None:
        with open(str(path) + ".json", "w") as f:
            json.dump(metadata, f, indent=2, sort_keys=True)
            f.write("\n")


def read_tensor(path, with_metadata=True):
    """Read a container file; returns ``(array, metadata)``.

    ``metadata`` is ``{}`` when no sidecar exists.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 10 or raw[:8] != MAGIC:
        raise ContainerError(f"{path}: bad magic")
    code, rank = struct.unpack_from("<BB", raw, 8)
    if code not in _DTYPE_CODES:
        raise ContainerError(f"{path}: unknown dtype code {code}")
    header_end = 10 + 4 * rank
    if len(raw) < header_end:
        raise ContainerError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{rank}I", raw, 10)
    if any(d < 1 for d in dims):
        raise ContainerError(f"{path}: invalid dims {dims}")
    n = int(np.prod(dims, dtype=np.uint64))
    dtype = _DTYPE_CODES[code]
    if len(raw) != header_end + n * dtype.itemsize:
        raise ContainerError(f"{path}: truncated payload")
    arr = np.frombuffer(raw, dtype=dtype, offset=header_end).reshape(dims).copy()
    meta = {}
    if with_metadata:
        sidecar = Path(str(path) + ".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
    return arr, meta


@dataclass(frozen=True)
class FieldVideo:
    """Real-valued pressure (or optical phase) movie on a regular grid.

    ``data`` has shape (W, H, T); ``dx`` is the grid spacing in metres and
    ``fs`` the frame rate in Hz.
    """

    data: np.ndarray
    dx: float
    fs: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        if data.ndim != 3 or any(d < 1 for d in data.shape):
            raise ValueError(f"FieldVideo needs a WxHxT array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("FieldVideo contains non-finite values")
        if self.dx <= 0 or self.fs <= 0:
            raise ValueError("dx and fs must be positive")

    @property
    def num_frames(self):
        return self.data.shape[2]


@dataclass(frozen=True)
class SpectralImage:
    """Complex amplitude image at a single frequency bin, stored as (re, im)."""

    re: np.ndarray
    im: np.ndarray
    freq_hz: float
    bin_index: int = 0

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if re.shape != im.shape or re.ndim != 2:
            raise ValueError("re and im must be 2D arrays of identical shape")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise ValueError("SpectralImage contains non-finite values")
        if self.freq_hz < 0:
            raise ValueError("freq_hz must be >= 0")

    @property
    def shape(self):
        return self.re.shape

    def as_complex(self):
        return self.re + 1j * self.im

    def power(self):
        """Mean |amplitude|^2 over all pixels."""
        return float(np.mean(self.re**2 + self.im**2))


@dataclass(frozen=True)
class SilhouetteMask:
    """Binary W x H mask; 0 = sound region, 1 = silhouette region."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError("mask must be 2D")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("mask values must be exactly 0 or 1")
        object.__setattr__(self, "labels", labels.astype(np.uint8))

    @property
    def shape(self):
        return self.labels.shape

    def area_fraction(self):
        return float(self.labels.mean())


@dataclass(frozen=True)
class SamplePair:
    """One training/eval unit: noisy input, clean target, mask, metadata."""

    noisy: SpectralImage
    clean: SpectralImage
    mask: SilhouetteMask
    meta: dict = field(default_factory=dict)


def _philox_key(seed, stream):
    # Hash-based key derivation: stable across platforms and Python versions,
    # unlike the builtin hash().
    digest = hashlib.blake2b(
        b"soundfield|%d|%d" % (seed, stream), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class Rng:
    """Splittable deterministic random stream.

    A stream is identified by ``(seed, stream)``; :meth:`split` derives an
    independent child stream from a byte-string label, so parallel pipelines
    get reproducible randomness regardless of scheduling.  Each instance is
    single-owner: share by splitting, never by handing the same object to two
    consumers.
    """

    seed: int
    stream: int = 0

    def split(self, label):
        """Derive an independent child stream, deterministic in (seed, stream, label)."""
        if isinstance(label, str):
            label = label.encode("utf-8")
        digest = hashlib.blake2b(
            b"%d|%d|" % (self.seed, self.stream) + label, digest_size=8
        ).digest()
        return Rng(self.seed, int.from_bytes(digest, "little"))

    def generator(self):
        """A fresh numpy Generator for this stream (counter-based Philox)."""
        return np.random.Generator(np.random.Philox(key=_philox_key(self.seed, self.stream)))
