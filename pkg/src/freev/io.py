"""File formats: FVT1 tensors, FVW1 weight containers and mono WAV."""

from __future__ import annotations

import io as _io
import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .dsp import Waveform
from .errors import FormatError, SignalError

FVT_MAGIC = b"FVT1"
FVW_MAGIC = b"FVW1"
DTYPE_F32 = 1
FORMAT_VERSION = 1
_F32 = np.dtype("<f4")


# ---- FVT1 -----------------------------------------------------------------

def encode_tensor(arr) -> bytes:
    """Serialise ``arr`` as little-endian f32 FVT1 bytes."""
    a = np.asarray(arr, dtype=_F32, order="C")
    if not np.all(np.isfinite(a)):
        raise FormatError("tensor contains non-finite values")
    header = FVT_MAGIC + struct.pack("<II", DTYPE_F32, a.ndim)
    header += struct.pack(f"<{a.ndim}Q", *a.shape)
    return header + a.tobytes(order="C")


def decode_tensor(buf, offset: int = 0) -> tuple[np.ndarray, int]:
    """Parse one FVT1 tensor at ``offset``; returns ``(array, next_offset)``."""
    mv = memoryview(buf)
    if len(mv) - offset < 12:
        raise FormatError("truncated FVT1 header")
    if bytes(mv[offset: offset + 4]) != FVT_MAGIC:
        raise FormatError(f"bad FVT1 magic {bytes(mv[offset: offset + 4])!r}")
    dtype, ndim = struct.unpack_from("<II", mv, offset + 4)
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported FVT1 dtype code {dtype}")
    pos = offset + 12
    if len(mv) - pos < 8 * ndim:
        raise FormatError("truncated FVT1 dims")
    dims = struct.unpack_from(f"<{ndim}Q", mv, pos)
    pos += 8 * ndim
    nbytes = int(np.prod(dims, dtype=np.uint64)) * 4
    if len(mv) - pos < nbytes:
        raise FormatError(f"FVT1 payload needs {nbytes} bytes, {len(mv) - pos} left")
    arr = np.frombuffer(mv[pos: pos + nbytes], dtype=_F32).reshape(dims).copy()
    return arr, pos + nbytes


def write_fvt(path, arr) -> None:
    Path(path).write_bytes(encode_tensor(arr))


def read_fvt(path) -> np.ndarray:
    data = Path(path).read_bytes()
    arr, end = decode_tensor(data)
    if end != len(data):
        raise FormatError(f"{path}: {len(data) - end} trailing bytes after FVT1 tensor")
    return arr


# ---- FVW1 -----------------------------------------------------------------

def encode_container(manifest: dict[str, str], tensors: dict[str, np.ndarray]) -> bytes:
    """FVW1 bytes: magic, u32 manifest length, ``key=value`` lines, then tensors.

    The manifest records ``format_version`` and the comma-separated
    ``tensors`` order; tensors follow in exactly that order.
    """
    meta = {str(k): str(v) for k, v in manifest.items()}
    meta["format_version"] = str(FORMAT_VERSION)
    meta["tensors"] = ",".join(tensors)
    for k, v in meta.items():
        if "=" in k or "\n" in k or "\n" in v:
            raise FormatError(f"manifest entry {k!r} cannot be encoded")
    text = "".join(f"{k}={meta[k]}\n" for k in sorted(meta)).encode("utf-8")
    out = _io.BytesIO()
    out.write(FVW_MAGIC)
    out.write(struct.pack("<I", len(text)))
    out.write(text)
    for arr in tensors.values():
        out.write(encode_tensor(arr))
    return out.getvalue()


def decode_container(data: bytes) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    if data[:4] != FVW_MAGIC:
        raise FormatError(f"bad FVW1 magic {bytes(data[:4])!r}")
    if len(data) < 8:
        raise FormatError("truncated FVW1 header")
    (n,) = struct.unpack_from("<I", data, 4)
    try:
        text = data[8: 8 + n].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"manifest is not UTF-8: {exc}") from None
    manifest = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"malformed manifest line {line!r}")
        manifest[key] = value
    version = manifest.get("format_version")
    if version != str(FORMAT_VERSION):
        raise FormatError(f"unsupported weight format version {version!r}")
    names = [s for s in manifest.get("tensors", "").split(",") if s]
    pos = 8 + n
    tensors = {}
    for name in names:
        tensors[name], pos = decode_tensor(data, pos)
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after last tensor")
    return manifest, tensors


# ---- WAV ------------------------------------------------------------------

def read_wav(path, expected_rate: int | None = None) -> Waveform:
    """Mono WAV as float64 in [-1, 1]; integer PCM is scaled by its full range."""
    try:
        sr, data = wavfile.read(str(path))
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: cannot read WAV ({exc})") from None
    if data.ndim != 1:
        raise SignalError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if np.issubdtype(data.dtype, np.integer):
        info = np.iinfo(data.dtype)
        if info.min == 0:  # unsigned 8-bit
            x = (data.astype(np.float64) - 128.0) / 128.0
        else:
            x = data.astype(np.float64) / -float(info.min)
    else:
        x = data.astype(np.float64)
    if expected_rate is not None and sr != expected_rate:
        raise SignalError(f"{path}: sample rate {sr} Hz, expected {expected_rate} Hz "
                          "(no implicit resampling)")
    return Waveform(x, int(sr))


def write_wav(path, w: Waveform, pcm16: bool = False) -> None:
    """Write float32 WAV, or 16-bit PCM when ``pcm16`` (clipped to [-1, 1])."""
    if pcm16:
        data = np.round(np.clip(w.samples, -1.0, 1.0) * 32767.0).astype(np.int16)
    else:
        data = w.samples.astype(np.float32)
    wavfile.write(str(path), w.sample_rate, data)
