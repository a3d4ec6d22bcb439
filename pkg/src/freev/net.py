"""Forward-only inference of the generator (numpy, float64 arithmetic).

Weight layouts follow the usual deep-learning conventions: convolutions are
``(out, in, k)``, depthwise convolutions ``(dim, 1, k)`` and dense layers
``(out, in)``. Activations are frame-major ``(T, channels)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .config import AMP_FLOOR
from .dsp import (AmplitudeSpectrogram, Domain, PhaseSpectrogram, Waveform, istft,
                  log_compress, log_expand, recombine)
from .errors import ConfigError, FormatError, ShapeError
from .io import decode_container, encode_container
from .melbank import MelFilterbank, MelSpectrogram
from .phase import PhaseComponents, parallel_phase
from .prior import PriorMethod, PriorVariant, estimate_prior

LN_EPS = 1e-6
GRN_EPS = 1e-6

DEFAULT_MANIFEST = {
    "n_mels": 80,
    "n_freq": 513,
    "psp_dim": 512,
    "psp_blocks": 8,
    "asp_dim": 513,
    "asp_blocks": 1,
    "asp_convs": 0,
    "hidden": 1536,
    "kernel": 7,
}
# ASP with its own input/output convolutions and a full block stack
APNET2_OVERRIDES = {"asp_dim": 512, "asp_blocks": 8, "asp_convs": 1}

BLOCK_FIELDS = ("dw_w", "dw_b", "ln_w", "ln_b", "pw1_w", "pw1_b",
                "grn_gamma", "grn_beta", "pw2_w", "pw2_b")


@dataclass(frozen=True)
class ConvNeXtV2BlockWeights:
    dw_w: np.ndarray
    dw_b: np.ndarray
    ln_w: np.ndarray
    ln_b: np.ndarray
    pw1_w: np.ndarray
    pw1_b: np.ndarray
    grn_gamma: np.ndarray
    grn_beta: np.ndarray
    pw2_w: np.ndarray
    pw2_b: np.ndarray

    def __post_init__(self):
        for name in BLOCK_FIELDS:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"block weight {name} has non-finite entries")
            object.__setattr__(self, name, arr)
        dim, hidden = self.dim, self.hidden
        expected = {
            "dw_b": (dim,), "ln_w": (dim,), "ln_b": (dim,), "pw1_w": (hidden, dim),
            "pw1_b": (hidden,), "grn_gamma": (hidden,), "grn_beta": (hidden,),
            "pw2_w": (dim, hidden), "pw2_b": (dim,),
        }
        if self.dw_w.ndim != 3 or self.dw_w.shape[1] != 1:
            raise ShapeError(f"dw_w must be (dim, 1, k), got {self.dw_w.shape}")
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def dim(self) -> int:
        return self.dw_w.shape[0]

    @property
    def hidden(self) -> int:
        return self.pw1_w.shape[0]


def gelu(x):
    """Exact (erf-based) GELU."""
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def layer_norm(x, weight, bias, eps: float = LN_EPS):
    """Normalise each frame over its channels."""
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * weight + bias


def grn(x, gamma, beta, eps: float = GRN_EPS):
    """Global response normalisation over the time axis of ``x`` (T, C)."""
    gx = np.sqrt(np.sum(x * x, axis=0, keepdims=True))
    nx = gx / (gx.mean(axis=-1, keepdims=True) + eps)
    return gamma * (x * nx) + beta + x


def _same_pad(x, k):
    left = (k - 1) // 2
    return np.pad(x, ((left, k - 1 - left), (0, 0)))


def depthwise_conv(x, w, b):
    """Per-channel 1-D convolution with zero "same" padding; ``w`` is (C, 1, k)."""
    k = w.shape[-1]
    xp = _same_pad(x, k)
    t = x.shape[0]
    out = np.broadcast_to(np.asarray(b, dtype=np.float64), x.shape).copy()
    for j in range(k):
        out += xp[j: j + t] * w[:, 0, j]
    return out


def conv1d(x, w, b):
    """Dense 1-D convolution with zero "same" padding; ``w`` is (out, in, k)."""
    w = np.asarray(w, dtype=np.float64)
    c_out, c_in, k = w.shape
    if x.shape[1] != c_in:
        raise ShapeError(f"conv expects {c_in} input channels, got {x.shape[1]}")
    xp = _same_pad(x, k)
    t = x.shape[0]
    out = np.broadcast_to(np.asarray(b, dtype=np.float64), (t, c_out)).copy()
    for j in range(k):
        out += xp[j: j + t] @ w[:, :, j].T
    return out


def convnext_v2_block(x, w: ConvNeXtV2BlockWeights) -> np.ndarray:
    """``x + pw2(GRN(gelu(pw1(layernorm(dwconv(x))))))`` for ``x`` of shape (T, dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != w.dim:
        raise ShapeError(f"block expects (T, {w.dim}) input, got {x.shape}")
    h = depthwise_conv(x, w.dw_w, w.dw_b)
    h = layer_norm(h, w.ln_w, w.ln_b)
    h = gelu(h @ w.pw1_w.T + w.pw1_b)
    h = grn(h, w.grn_gamma, w.grn_beta)
    return x + (h @ w.pw2_w.T + w.pw2_b)


# ---- weights ----------------------------------------------------------------

def _block_shapes(prefix: str, dim: int, hidden: int, k: int) -> dict[str, tuple]:
    return {
        f"{prefix}.dw_w": (dim, 1, k), f"{prefix}.dw_b": (dim,),
        f"{prefix}.ln_w": (dim,), f"{prefix}.ln_b": (dim,),
        f"{prefix}.pw1_w": (hidden, dim), f"{prefix}.pw1_b": (hidden,),
        f"{prefix}.grn_gamma": (hidden,), f"{prefix}.grn_beta": (hidden,),
        f"{prefix}.pw2_w": (dim, hidden), f"{prefix}.pw2_b": (dim,),
    }


def resolve_manifest(overrides: dict | None = None) -> dict[str, int]:
    """Defaults merged with ``overrides``; unknown keys and non-positive sizes are rejected."""
    m = dict(DEFAULT_MANIFEST)
    for key, value in (overrides or {}).items():
        if key not in DEFAULT_MANIFEST:
            raise ConfigError(f"unknown manifest key {key!r}")
        m[key] = int(value)
    for key, value in m.items():
        if value < 0 or (value == 0 and key not in ("asp_convs", "asp_blocks", "psp_blocks")):
            raise ConfigError(f"manifest {key} must be positive, got {value}")
    if m["asp_convs"] not in (0, 1):
        raise ConfigError("asp_convs must be 0 or 1")
    if m["kernel"] % 2 == 0:
        raise ConfigError("kernel width must be odd for symmetric same padding")
    return m


def tensor_shapes(manifest: dict) -> dict[str, tuple]:
    """Ordered tensor names and shapes implied by a manifest."""
    m = resolve_manifest(manifest)
    k, hidden = m["kernel"], m["hidden"]
    shapes = {"psp.in_conv.w": (m["psp_dim"], m["n_mels"], k), "psp.in_conv.b": (m["psp_dim"],)}
    for i in range(m["psp_blocks"]):
        shapes.update(_block_shapes(f"psp.blocks.{i}", m["psp_dim"], hidden, k))
    for head in ("out_r", "out_i"):
        shapes[f"psp.{head}.w"] = (m["n_freq"], m["psp_dim"], k)
        shapes[f"psp.{head}.b"] = (m["n_freq"],)
    if m["asp_convs"]:
        shapes["asp.in_conv.w"] = (m["asp_dim"], m["n_mels"], k)
        shapes["asp.in_conv.b"] = (m["asp_dim"],)
    for i in range(m["asp_blocks"]):
        shapes.update(_block_shapes(f"asp.blocks.{i}", m["asp_dim"], hidden, k))
    if m["asp_convs"]:
        shapes["asp.out_conv.w"] = (m["n_freq"], m["asp_dim"], k)
        shapes["asp.out_conv.b"] = (m["n_freq"],)
    return shapes


@dataclass(frozen=True, eq=False)
class GeneratorWeights:
    manifest: dict
    tensors: dict

    def __post_init__(self):
        m = resolve_manifest(self.manifest)
        shapes = tensor_shapes(m)
        if list(self.tensors) != list(shapes):
            missing = sorted(set(shapes) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(shapes))
            raise ShapeError(f"tensor set does not match manifest (missing {missing[:3]}, "
                             f"extra {extra[:3]})")
        for name, shape in shapes.items():
            if tuple(self.tensors[name].shape) != shape:
                raise ShapeError(f"{name} has shape {self.tensors[name].shape}, expected {shape}")
        object.__setattr__(self, "manifest", m)

    def block(self, prefix: str) -> ConvNeXtV2BlockWeights:
        return ConvNeXtV2BlockWeights(**{f: self.tensors[f"{prefix}.{f}"] for f in BLOCK_FIELDS})

    def psp_blocks(self) -> list[ConvNeXtV2BlockWeights]:
        return [self.block(f"psp.blocks.{i}") for i in range(self.manifest["psp_blocks"])]

    def asp_blocks(self) -> list[ConvNeXtV2BlockWeights]:
        return [self.block(f"asp.blocks.{i}") for i in range(self.manifest["asp_blocks"])]

    def replace(self, **tensors) -> "GeneratorWeights":
        """Copy with some tensors swapped (names use ``__`` for ``.``)."""
        new = dict(self.tensors)
        for key, value in tensors.items():
            name = key.replace("__", ".")
            if name not in new:
                raise KeyError(name)
            new[name] = np.asarray(value, dtype=np.float32)
        return GeneratorWeights(dict(self.manifest), new)

    def to_bytes(self) -> bytes:
        return encode_container({k: str(v) for k, v in self.manifest.items()}, self.tensors)

    @classmethod
    def from_bytes(cls, data: bytes) -> "GeneratorWeights":
        manifest, tensors = decode_container(data)
        sizes = {k: v for k, v in manifest.items() if k in DEFAULT_MANIFEST}
        try:
            sizes = {k: int(v) for k, v in sizes.items()}
        except ValueError as exc:
            raise FormatError(f"non-integer manifest entry: {exc}") from None
        return cls(sizes, tensors)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "GeneratorWeights":
        return cls.from_bytes(Path(path).read_bytes())


def gen_weights(seed: int, overrides: dict | None = None) -> GeneratorWeights:
    """Reproducible float32 test weights.

    Kernels are standard normal scaled by ``1/sqrt(fan_in)``, biases uniform
    in ``+-1/sqrt(fan_in)``, layer norms start at identity and GRN
    gamma/beta are small normals so the GRN path is exercised.
    """
    m = resolve_manifest(overrides)
    rng = np.random.default_rng(seed)
    tensors = {}
    fan_in = 1
    for name, shape in tensor_shapes(m).items():
        kind = name.rsplit(".", 1)[-1]
        if kind in ("w", "dw_w", "pw1_w", "pw2_w"):
            fan_in = int(np.prod(shape[1:]))
            arr = rng.standard_normal(shape) / np.sqrt(fan_in)
        elif kind == "ln_w":
            arr = np.ones(shape)
        elif kind == "ln_b":
            arr = np.zeros(shape)
        elif kind in ("grn_gamma", "grn_beta"):
            arr = 0.1 * rng.standard_normal(shape)
        else:  # bias of the preceding kernel
            bound = 1.0 / np.sqrt(fan_in)
            arr = rng.uniform(-bound, bound, shape)
        tensors[name] = arr.astype(np.float32)
    return GeneratorWeights(m, tensors)


def parameter_counts(manifest: dict | None = None) -> dict[str, int]:
    """Element counts per branch for the architecture a manifest describes."""
    counts = {"psp": 0, "asp": 0, "asp_convs": 0, "asp_block": 0}
    for name, shape in tensor_shapes(manifest or {}).items():
        n = int(np.prod(shape))
        branch = name.split(".", 1)[0]
        counts[branch] += n
        if name.startswith(("asp.in_conv", "asp.out_conv")):
            counts["asp_convs"] += n
        if name.startswith("asp.blocks.0."):
            counts["asp_block"] += n
    counts["total"] = counts["psp"] + counts["asp"]
    return counts


def parameter_report() -> dict:
    """Counts for the default manifest next to an APNet2-shaped one."""
    freev = parameter_counts(DEFAULT_MANIFEST)
    apnet2 = parameter_counts({**DEFAULT_MANIFEST, **APNET2_OVERRIDES})
    return {"freev": freev, "apnet2": apnet2, "saved": apnet2["total"] - freev["total"]}


# ---- forward ----------------------------------------------------------------

PRIOR_METHOD = PriorMethod(PriorVariant.PSEUDO_INVERSE_ABS)


def _check_mel(x: MelSpectrogram, w: GeneratorWeights):
    if x.domain is not Domain.LINEAR:
        raise ShapeError("network input must be a linear-domain mel spectrogram")
    if x.n_mels != w.manifest["n_mels"]:
        raise ShapeError(f"mel has {x.n_mels} bands, weights expect {w.manifest['n_mels']}")


def asp_residual(log_prior: np.ndarray, w: GeneratorWeights) -> np.ndarray:
    """Log-amplitude output of the block stack applied to the log prior."""
    h = log_prior
    for blk in w.asp_blocks():
        h = convnext_v2_block(h, blk)
    return h


def asp_forward(x: MelSpectrogram, fb: MelFilterbank, w: GeneratorWeights) -> AmplitudeSpectrogram:
    """Log amplitude: the frozen pseudo-inverse prior refined by residual blocks.

    There is no output convolution, so zeroing each block's final projection
    returns the log prior unchanged.
    """
    _check_mel(x, w)
    m = w.manifest
    if m["asp_convs"] or m["asp_dim"] != m["n_freq"]:
        raise ConfigError("asp_forward runs only prior-fed manifests (asp_convs=0, asp_dim=n_freq)")
    if fb.n_freq != m["n_freq"]:
        raise ShapeError(f"filterbank has {fb.n_freq} bins, weights expect {m['n_freq']}")
    prior = log_compress(estimate_prior(x, fb, PRIOR_METHOD).frames)
    return AmplitudeSpectrogram(asp_residual(prior, w), Domain.LOG, fb.spectral_config)


def psp_components(x: MelSpectrogram, w: GeneratorWeights) -> PhaseComponents:
    _check_mel(x, w)
    t = w.tensors
    h = conv1d(x.frames, t["psp.in_conv.w"], t["psp.in_conv.b"])
    for blk in w.psp_blocks():
        h = convnext_v2_block(h, blk)
    r = conv1d(h, t["psp.out_r.w"], t["psp.out_r.b"])
    i = conv1d(h, t["psp.out_i.w"], t["psp.out_i.b"])
    return PhaseComponents(r, i)


def psp_forward(x: MelSpectrogram, w: GeneratorWeights, config=None):
    """Phase in (-pi, pi] from the raw R/I head outputs.

    Returns a :class:`PhaseSpectrogram` when ``config`` is given, else the array.
    """
    return parallel_phase(psp_components(x, w), config)


@dataclass(frozen=True)
class VocodeResult:
    waveform: Waveform
    pred_log_amp: AmplitudeSpectrogram
    pred_phase: PhaseSpectrogram
    prior_log_amp: AmplitudeSpectrogram

    def checksum(self) -> str:
        """SHA-256 of the waveform as little-endian float64."""
        return hashlib.sha256(self.waveform.samples.astype("<f8").tobytes()).hexdigest()


def vocode(x: MelSpectrogram, fb: MelFilterbank, w: GeneratorWeights,
           phase_override: PhaseSpectrogram | None = None) -> VocodeResult:
    """Mel to waveform through both branches and the inverse STFT.

    ``phase_override`` replaces the predicted phase (oracle-phase resynthesis).
    """
    cfg = fb.spectral_config
    prior = AmplitudeSpectrogram(log_compress(estimate_prior(x, fb, PRIOR_METHOD).frames,
                                              AMP_FLOOR), Domain.LOG, cfg)
    log_amp = asp_forward(x, fb, w)
    if phase_override is None:
        phase = psp_forward(x, w, cfg)
    else:
        if phase_override.frames.shape != log_amp.frames.shape:
            raise ShapeError(f"phase override {phase_override.frames.shape} does not match "
                             f"amplitude {log_amp.frames.shape}")
        phase = phase_override
    amp = AmplitudeSpectrogram(log_expand(log_amp.frames), Domain.LINEAR, cfg)
    wave = istft(recombine(amp, phase))
    return VocodeResult(wave, log_amp, phase, prior)
