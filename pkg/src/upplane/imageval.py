"""Image evaluation pipeline: load (truth, degraded, restored) triplets, pool 9x9
patch statistics and place each restoration algorithm on the UP plane."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import correlate1d

from .bounds import DivergenceKind
from .errors import (
    ChannelMismatch,
    CorruptHeader,
    DimensionMismatch,
    DomainError,
    ImageTooSmall,
    ManifestError,
    NonFinite,
    ShapeMismatch,
    TooManySkipped,
    TruncatedData,
    UnsupportedFormat,
)
from .estimators import KdeConfig, hellinger_from_renyi_half, kde_renyi_half
from .numstats import sample_covariance

log = logging.getLogger(__name__)

DEFAULT_PATCH = 9
DEFAULT_STRIDE = 3
DEFAULT_RIDGE = 1e-8

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class ImageTensor:
    """An image as an ``h x w x c`` float array with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3) or px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionMismatch(f"image must be h x w x (1|3), got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise NonFinite("image has non-finite pixels")
        if px.min() < 0.0 or px.max() > 1.0:
            raise DomainError("pixels must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def from_unclipped(cls, values) -> "ImageTensor":
        return cls(np.clip(np.asarray(values, dtype=float), 0.0, 1.0))


# --------------------------------------------------------------------------
# decoding and encoding


def _pnm_header(raw: bytes, path) -> tuple[str, int, int, int, int]:
    """Parse a binary netpbm header; returns (magic, width, height, maxval, offset)."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise CorruptHeader(f"{path}: header ends early")
        tokens.append(raw[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise CorruptHeader(f"{path}: missing whitespace after header")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise CorruptHeader(f"{path}: non-numeric header field") from exc
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise CorruptHeader(f"{path}: invalid size {w}x{h} or maxval {maxval}")
    return tokens[0].decode("ascii", "replace"), w, h, maxval, pos + 1


def _decode_pnm(raw: bytes, path) -> ImageTensor:
    magic, w, h, maxval, offset = _pnm_header(raw, path)
    c = 1 if magic == "P5" else 3
    dtype = ">u1" if maxval < 256 else ">u2"
    count = w * h * c
    need = count * np.dtype(dtype).itemsize
    payload = raw[offset:offset + need]
    if len(payload) < need:
        raise TruncatedData(f"{path}: expected {need} raster bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype=dtype).astype(float).reshape(h, w, c)
    if values.max(initial=0.0) > maxval:
        raise CorruptHeader(f"{path}: sample exceeds maxval {maxval}")
    return ImageTensor(values / maxval)


def _raw_sidecar(path: Path) -> Path:
    return Path(str(path) + ".json")


def _decode_raw(raw: bytes, path: Path) -> ImageTensor:
    side = _raw_sidecar(path)
    if not side.exists():
        raise UnsupportedFormat(f"{path}: raw tensor needs a sidecar {side.name}")
    try:
        meta = json.loads(side.read_text())
        h, w, c = int(meta["h"]), int(meta["w"]), int(meta["c"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptHeader(f"{side}: {exc}") from exc
    if h < 1 or w < 1 or c not in (1, 3):
        raise CorruptHeader(f"{side}: invalid shape {h}x{w}x{c}")
    need = 4 * h * w * c
    if len(raw) < need:
        raise TruncatedData(f"{path}: expected {need} bytes, found {len(raw)}")
    values = np.frombuffer(raw[:need], dtype="<f4").astype(float).reshape(h, w, c)
    if not np.all(np.isfinite(values)):
        raise NonFinite(f"{path}: non-finite pixels")
    return ImageTensor.from_unclipped(values)


def load_image(path) -> ImageTensor:
    """Decode a binary PGM (P5), PPM (P6) or raw float32 tensor.

    Netpbm samples are divided by ``maxval`` (8- or 16-bit). Raw tensors are
    little-endian float32 in ``h x w x c`` order described by a sidecar
    ``<path>.json`` holding ``{"h", "w", "c"}``; their values are clipped to [0, 1].
    """
    path = Path(path)
    raw = path.read_bytes()
    # raw float payloads can start with any bytes, so the sidecar decides first
    if path.suffix.lower() == ".f32" or _raw_sidecar(path).exists():
        return _decode_raw(raw, path)
    if raw[:2] in (b"P5", b"P6") and len(raw) > 2 and raw[2:3].isspace():
        return _decode_pnm(raw, path)
    if raw[:1] == b"P" and raw[1:2].isdigit():
        raise UnsupportedFormat(f"{path}: netpbm variant {raw[:2].decode()} is not supported")
    raise UnsupportedFormat(f"{path}: unrecognised image format")


def write_pnm(path, image: ImageTensor, bits: int = 8) -> None:
    """Write ``image`` as P5 (grey) or P6 (RGB) with 8- or 16-bit samples."""
    if bits not in (8, 16):
        raise DomainError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    magic = "P5" if image.channels == 1 else "P6"
    values = np.rint(image.pixels * maxval).astype(">u1" if bits == 8 else ">u2")
    header = f"{magic}\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + values.tobytes())


def write_raw(path, values) -> None:
    """Write an ``h x w [x c]`` array as raw float32 plus its JSON sidecar (no clipping)."""
    a = np.asarray(values, dtype=float)
    if a.ndim == 2:
        a = a[:, :, None]
    h, w, c = a.shape
    Path(path).write_bytes(a.astype("<f4").tobytes(order="C"))
    _raw_sidecar(Path(path)).write_text(json.dumps({"h": h, "w": w, "c": c}))


# --------------------------------------------------------------------------
# patches and metrics


@dataclass(frozen=True)
class PatchSet:
    base: np.ndarray  # n x (size * size * channels)
    size: int
    stride: int

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def d(self) -> int:
        return self.base.shape[1]


def _patch_rows(pixels: np.ndarray, size: int, stride: int) -> np.ndarray:
    windows = sliding_window_view(pixels, (size, size), axis=(0, 1))[::stride, ::stride]
    # windows: rows x cols x c x size x size -> flatten as (row, col, channel)
    rows, cols, c = windows.shape[:3]
    return windows.transpose(0, 1, 3, 4, 2).reshape(rows * cols, size * size * c)


def extract_patches(images: Sequence, size: int = DEFAULT_PATCH, stride: int = DEFAULT_STRIDE) -> PatchSet:
    """Sliding-window patches from every image, flattened row-major with channels last.

    Patches are ordered by image, then window row, then window column.
    ``images`` may hold :class:`ImageTensor` objects or plain ``h x w [x c]``
    arrays (error images are not confined to [0, 1]).
    """
    if size < 1 or stride < 1:
        raise DomainError("patch size and stride must be positive")
    if not images:
        raise ImageTooSmall("no images to extract patches from")
    arrays = []
    for img in images:
        a = img.pixels if isinstance(img, ImageTensor) else np.asarray(img, dtype=float)
        arrays.append(a[:, :, None] if a.ndim == 2 else a)
    channels = arrays[0].shape[2]
    blocks = []
    for i, a in enumerate(arrays):
        if a.shape[2] != channels:
            raise ChannelMismatch(f"image {i} has {a.shape[2]} channels, expected {channels}")
        if a.shape[0] < size or a.shape[1] < size:
            raise ImageTooSmall(f"image {i} is {a.shape[0]}x{a.shape[1]}, smaller than the {size}x{size} patch")
        blocks.append(_patch_rows(a, size, stride))
    return PatchSet(np.ascontiguousarray(np.concatenate(blocks)), size, stride)


def _gaussian_taps() -> np.ndarray:
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    taps = np.exp(-0.5 * (r / SSIM_SIGMA) ** 2)
    return taps / taps.sum()


def _blur_valid(a: np.ndarray) -> np.ndarray:
    taps = _gaussian_taps()
    out = correlate1d(correlate1d(a, taps, axis=0, mode="constant"), taps, axis=1, mode="constant")
    m = SSIM_WINDOW // 2
    return out[m:a.shape[0] - m, m:a.shape[1] - m]


def ssim(x: ImageTensor, y: ImageTensor) -> float:
    """Mean SSIM over the fully-covered window positions, averaged over channels.

    Separable 11-tap Gaussian window with sigma 1.5, K1 = 0.01, K2 = 0.03 and
    unit dynamic range; local (co)variances use the weighted population form.
    """
    if x.pixels.shape != y.pixels.shape:
        raise ShapeMismatch(f"shapes differ: {x.pixels.shape} vs {y.pixels.shape}")
    if x.height < SSIM_WINDOW or x.width < SSIM_WINDOW:
        raise ImageTooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels")
    c1, c2 = SSIM_K1 ** 2, SSIM_K2 ** 2
    values = []
    for ch in range(x.channels):
        a, b = x.pixels[:, :, ch], y.pixels[:, :, ch]
        mu_a, mu_b = _blur_valid(a), _blur_valid(b)
        var_a = _blur_valid(a * a) - mu_a * mu_a
        var_b = _blur_valid(b * b) - mu_b * mu_b
        cov = _blur_valid(a * b) - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        values.append(float(np.mean(num / den)))
    return float(np.mean(values))


def psnr_from_mse(mse: float) -> float:
    return math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)


@dataclass(frozen=True)
class DistortionMetrics:
    mse: float
    psnr: float
    ssim: float


def distortion_metrics(x: ImageTensor, xhat: ImageTensor) -> DistortionMetrics:
    """MSE, PSNR (dB, peak 1) and SSIM of ``xhat`` against reference ``x``."""
    if x.pixels.shape != xhat.pixels.shape:
        raise ShapeMismatch(f"shapes differ: {x.pixels.shape} vs {xhat.pixels.shape}")
    mse = float(np.mean((x.pixels - xhat.pixels) ** 2))
    return DistortionMetrics(mse, psnr_from_mse(mse), ssim(x, xhat))


def _samples(patches) -> np.ndarray:
    return patches.base if isinstance(patches, PatchSet) else np.asarray(patches, dtype=float)


def uncertainty_upper(errors, ridge: float = DEFAULT_RIDGE) -> float:
    """Geometric mean of the eigenvalues of the error-patch covariance.

    This is the entropy power of a Gaussian with the same covariance, an upper
    bound on the entropy power of the errors themselves.
    """
    return sample_covariance(_samples(errors), ridge).det_root()


def perception_index(true_patches, restored_patches, cfg: KdeConfig = KdeConfig(),
                     kind: DivergenceKind = DivergenceKind.RENYI_HALF) -> float:
    """Pooled KDE divergence between true and restored patch distributions."""
    x, y = _samples(true_patches), _samples(restored_patches)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"patch dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    d = kde_renyi_half(x, y, cfg)
    if DivergenceKind(kind) is DivergenceKind.HELLINGER:
        return hellinger_from_renyi_half(d)
    return d


# --------------------------------------------------------------------------
# dataset evaluation


@dataclass(frozen=True)
class EvalConfig:
    patch_size: int = DEFAULT_PATCH
    stride: int = DEFAULT_STRIDE
    ridge: float = DEFAULT_RIDGE
    kde: KdeConfig = field(default_factory=KdeConfig)
    divergence_kind: DivergenceKind = DivergenceKind.RENYI_HALF
    max_skip_fraction: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "divergence_kind", DivergenceKind(self.divergence_kind))
        if self.patch_size < 1 or self.stride < 1:
            raise DomainError("patch_size and stride must be positive")
        if self.ridge < 0:
            raise DomainError("ridge must be nonnegative")
        if not 0 <= self.max_skip_fraction < 1:
            raise DomainError("max_skip_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class EvaluationRecord:
    algorithm: str
    perception: float
    divergence_kind: str
    uncertainty: float
    mse: float
    psnr: float
    ssim: float
    n_images: int
    n_patches: int
    n_skipped: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Triplet:
    truth: Path
    degraded: Path
    restored: Path


MANIFEST_NAME = "manifest.json"


def read_manifest(path) -> list[Triplet]:
    """Parse a manifest and check that every referenced file exists.

    ``path`` is a ``manifest.json`` or a directory holding one. Entries are
    ``{"truth", "degraded", "restored"}`` paths relative to the manifest.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        entries = json.loads(path.read_text())
    except ValueError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(entries, list) or not entries:
        raise ManifestError(f"{path}: manifest must be a non-empty JSON list")
    root = path.parent
    out = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or not {"truth", "degraded", "restored"} <= set(e):
            raise ManifestError(f"{path}: entry {i} needs truth, degraded and restored")
        files = [root / e[k] for k in ("truth", "degraded", "restored")]
        for f in files:
            if not f.is_file():
                raise ManifestError(f"{path}: entry {i} references missing file {f}")
        out.append(Triplet(*files))
    return out


_DECODE_ERRORS = (UnsupportedFormat, CorruptHeader, TruncatedData, NonFinite, DimensionMismatch,
                  ShapeMismatch, ChannelMismatch, ImageTooSmall, OSError)


def _load_triplet(t: Triplet, patch_size: int):
    truth, degraded, restored = load_image(t.truth), load_image(t.degraded), load_image(t.restored)
    if truth.pixels.shape != restored.pixels.shape:
        raise ShapeMismatch(f"{t.restored}: shape {restored.pixels.shape} != truth {truth.pixels.shape}")
    if degraded.channels != truth.channels:
        raise ChannelMismatch(f"{t.degraded}: channel count differs from truth")
    if truth.height < patch_size or truth.width < patch_size:
        raise ImageTooSmall(f"{t.truth}: smaller than a {patch_size}x{patch_size} patch")
    return truth, restored


def evaluate_algorithm(manifest_path, config: EvalConfig = EvalConfig(),
                       algorithm: Optional[str] = None) -> EvaluationRecord:
    """Evaluate one restoration algorithm described by a manifest.

    Images that fail to decode are skipped and counted; more than
    ``max_skip_fraction`` skipped images fails the run. Perception and
    uncertainty use patches pooled over all images in manifest order.
    """
    path = Path(manifest_path)
    triplets = read_manifest(path)
    if algorithm is None:
        algorithm = (path if path.is_dir() else path.parent).resolve().name
    truths, restoreds, metrics = [], [], []
    skipped = 0
    channels = None
    for t in triplets:
        try:
            truth, restored = _load_triplet(t, config.patch_size)
            if channels is not None and truth.channels != channels:
                raise ChannelMismatch(f"{t.truth}: {truth.channels} channels, expected {channels}")
            m = distortion_metrics(truth, restored)
        except _DECODE_ERRORS as exc:
            log.warning("skipping %s: %s", t.truth, exc)
            skipped += 1
            continue
        channels = truth.channels
        truths.append(truth)
        restoreds.append(restored)
        metrics.append(m)
    if skipped > config.max_skip_fraction * len(triplets) or not truths:
        raise TooManySkipped(f"{algorithm}: {skipped} of {len(triplets)} images failed to load")
    true_p = extract_patches(truths, config.patch_size, config.stride)
    rest_p = extract_patches(restoreds, config.patch_size, config.stride)
    err_p = PatchSet(rest_p.base - true_p.base, config.patch_size, config.stride)
    mse = float(np.mean([m.mse for m in metrics]))
    return EvaluationRecord(
        algorithm=algorithm,
        perception=perception_index(true_p, rest_p, config.kde, config.divergence_kind),
        divergence_kind=config.divergence_kind.value,
        uncertainty=uncertainty_upper(err_p, config.ridge),
        mse=mse,
        psnr=psnr_from_mse(mse),
        ssim=float(np.mean([m.ssim for m in metrics])),
        n_images=len(truths),
        n_patches=true_p.n,
        n_skipped=skipped,
    )


# --------------------------------------------------------------------------
# synthetic Gaussian fixture


@dataclass(frozen=True)
class FixtureInfo:
    root: Path
    sigma_x: float
    sigma_w: float
    posterior_var: float  # the analytic inherent uncertainty N(X|Y) per pixel
    algorithms: tuple[str, ...]


def make_gaussian_fixture(root, n_images: int = 64, size: int = 32, sigma_x: float = 0.1,
                          snr_ratio: float = 0.01, seed: int = 0) -> FixtureInfo:
    """Write a denoising dataset restored by the posterior mean and by posterior sampling.

    Pixels are i.i.d. ``N(0.5, sigma_x^2)`` and ``Y = X + W``. ``snr_ratio`` is
    ``sigma_x^2 / (sigma_x^2 + sigma_w^2)``, the shrinkage of the posterior mean.
    A low ratio keeps the two restorations far apart on the perception axis.
    Layout: ``truth/``, ``degraded/`` and one directory with a manifest per
    algorithm (``posterior_mean``, ``posterior_sample``), plus ``config.json``
    holding the analytic plane context.
    """
    if not 0 < snr_ratio < 1:
        raise DomainError("snr_ratio must lie in (0, 1)")
    root = Path(root)
    names = ("posterior_mean", "posterior_sample")
    for sub in ("truth", "degraded") + names:
        (root / sub).mkdir(parents=True, exist_ok=True)
    var_x = sigma_x * sigma_x
    var_w = var_x * (1.0 - snr_ratio) / snr_ratio
    var_q = var_x * (1.0 - snr_ratio)
    rng = np.random.default_rng(seed)
    manifests = {n: [] for n in names}
    for i in range(n_images):
        x = 0.5 + sigma_x * rng.standard_normal((size, size))
        y = x + math.sqrt(var_w) * rng.standard_normal((size, size))
        mean = 0.5 + snr_ratio * (y - 0.5)
        sample = mean + math.sqrt(var_q) * rng.standard_normal((size, size))
        stem = f"img_{i:03d}.f32"
        write_raw(root / "truth" / stem, x)
        write_raw(root / "degraded" / stem, y)
        write_raw(root / "posterior_mean" / stem, mean)
        write_raw(root / "posterior_sample" / stem, sample)
        for n in names:
            manifests[n].append({"truth": f"../truth/{stem}", "degraded": f"../degraded/{stem}",
                                 "restored": stem})
    for n in names:
        (root / n / MANIFEST_NAME).write_text(json.dumps(manifests[n], indent=1))
    (root / "config.json").write_text(json.dumps(
        {"inherent_uncertainty": var_q, "gaussian_envelope": var_q}, indent=1))
    return FixtureInfo(root, sigma_x, math.sqrt(var_w), var_q, names)
