"""End-to-end training and generation glue.

train_pipeline: normalize a corpus, train the autoencoder, fit the
latent mixture, and learn the plausibility region; everything needed to
generate later is packed into a Checkpoint.

generate_set: sample latent codes, decode, and post-process under one of
four ablation modes (raw, smoothed, mbr, full).  All modes consume the
same latent stream for a given seed, so raw and smoothed outputs decode
the same samples.  When the region filter discards samples, generation
keeps drawing until the requested count is reached or an attempt cap is
hit.

Checkpoints use a custom container (magic, JSON header, packed float64
little-endian tensors) so that save -> load -> save is byte-identical;
general-purpose archive formats embed timestamps and are not.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .ingest import NormalizationParams, TrajectorySet, denormalize, normalize
from .mixture import GaussianMixture
from .postprocess import ConvexRegionFilter, SavitzkyGolaySmoother, convex_hull
from .vae import Architecture, TrajectoryVAE, VaeParams, decode
from .validation import check_positive_int

_MAGIC = b"WGCKPT01"

GENERATION_MODES = ("raw", "smoothed", "mbr", "full")


class GenerationShortfallError(RuntimeError):
    """Raised when the attempt cap is hit before enough samples survive."""

    def __init__(self, requested, produced, attempts):
        self.requested = requested
        self.produced = produced
        self.attempts = attempts
        super().__init__(
            f"generation produced {produced} of {requested} requested "
            f"trajectories after {attempts} attempts"
        )


def derive_seed(master_seed, stage):
    """Stable per-stage seed: low 63 bits of sha256('master:stage')."""
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


@dataclass
class PipelineConfig:
    master_seed: int = 1234
    latent_dim: int = 3
    encoder_hidden: tuple = (300, 100)
    decoder_hidden: tuple = (100, 100, 300)
    pos_slope: float = 0.06
    neg_slope: float = 0.001
    kl_weight: float = 0.001
    epochs: int = 5000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    normalization_factor: float = 0.3
    gmm_components: int = 15
    gmm_reg_covar: float = 1e-4
    gmm_tol: float = 1e-7
    gmm_max_iter: int = 500
    smoothing_window: int = 21
    smoothing_polyorder: int = 3
    mbr_tol: float = 1e-12
    max_attempts_factor: int = 20


@dataclass
class Checkpoint:
    """Everything needed to sample new trajectories."""

    params: VaeParams
    normalization: NormalizationParams
    gmm: GaussianMixture
    region_vertices: np.ndarray
    latent_codes: np.ndarray
    horizon: int
    master_seed: int
    meta: dict = field(default_factory=dict)


def train_pipeline(trajectories, config=None):
    """Train all model components on a corpus.

    Returns (Checkpoint, LossHistory).  Stage seeds are derived from the
    master seed, so the whole run is reproducible from one integer.
    """
    if config is None:
        config = PipelineConfig()
    ts = trajectories if isinstance(trajectories, TrajectorySet) else TrajectorySet(trajectories)
    matrix, norm = normalize(ts, factor=config.normalization_factor)
    vae = TrajectoryVAE(
        encoder_hidden=tuple(config.encoder_hidden),
        latent_dim=config.latent_dim,
        decoder_hidden=tuple(config.decoder_hidden),
        pos_slope=config.pos_slope,
        neg_slope=config.neg_slope,
        kl_weight=config.kl_weight,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        optimizer=config.optimizer,
        random_state=derive_seed(config.master_seed, "train"),
    )
    vae.fit(matrix)
    codes = vae.transform(matrix)
    gmm = GaussianMixture(
        n_components=config.gmm_components,
        reg_covar=config.gmm_reg_covar,
        tol=config.gmm_tol,
        max_iter=config.gmm_max_iter,
        random_state=derive_seed(config.master_seed, "mixture"),
    ).fit(codes)
    vertices = convex_hull(ts.points)
    meta = {
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "kl_weight": config.kl_weight,
        "optimizer": config.optimizer,
        "initial_reconstruction_mse": float(vae.history_.reconstruction[0]),
        "final_reconstruction_mse": float(vae.history_.reconstruction[-1]),
        "n_trajectories": len(ts),
    }
    ckpt = Checkpoint(
        params=vae.params_,
        normalization=norm,
        gmm=gmm,
        region_vertices=vertices,
        latent_codes=codes,
        horizon=ts.horizon,
        master_seed=config.master_seed,
        meta=meta,
    )
    return ckpt, vae.history_


def generate_set(
    checkpoint,
    count,
    mode="full",
    seed=0,
    smoothing_window=21,
    smoothing_polyorder=3,
    mbr_tol=1e-12,
    max_attempts_factor=20,
):
    """Sample ``count`` trajectories under an ablation mode.

    raw: decode only.  smoothed: decode + smoothing.  mbr: decode +
    region filter.  full: decode + smoothing + region filter.  Returns
    (TrajectorySet, manifest) where the manifest records attempts and
    discards.  Raises GenerationShortfallError when the attempt cap
    (max_attempts_factor * count) is reached first.
    """
    if mode not in GENERATION_MODES:
        raise ValueError(f"mode must be one of {GENERATION_MODES}, got {mode!r}")
    check_positive_int(count, "count")
    use_smoothing = mode in ("smoothed", "full")
    use_mbr = mode in ("mbr", "full")
    rng = np.random.default_rng(seed)

    def draw(batch):
        z = checkpoint.gmm.sample(batch, random_state=rng)
        rows = decode(checkpoint.params, z)
        return denormalize(rows, checkpoint.normalization).coords

    coords, attempts, discarded = _collect(
        draw,
        count,
        smoother=_make_smoother(smoothing_window, smoothing_polyorder) if use_smoothing else None,
        region=_make_region(checkpoint.region_vertices, mbr_tol) if use_mbr else None,
        max_attempts=max_attempts_factor * count,
    )
    manifest = {
        "mode": mode,
        "requested": count,
        "attempts": attempts,
        "discarded": discarded,
        "seed": seed,
        "smoothing": (
            {"window_length": smoothing_window, "polyorder": smoothing_polyorder}
            if use_smoothing
            else None
        ),
        "mbr": use_mbr,
    }
    return TrajectorySet(coords), manifest


def sample_with_postprocessing(
    sample_fn,
    count,
    seed=0,
    smoothing_window=21,
    smoothing_polyorder=3,
    region_vertices=None,
    mbr_tol=1e-12,
    max_attempts_factor=20,
):
    """Post-process an arbitrary generator the same way as the pipeline.

    ``sample_fn(batch, random_state=rng)`` must return a TrajectorySet or
    an (n, m, 2) array.  Pass smoothing_window=None to skip smoothing and
    region_vertices=None to skip the containment filter.  Returns
    (TrajectorySet, manifest).
    """
    check_positive_int(count, "count")
    rng = np.random.default_rng(seed)

    def draw(batch):
        sampled = sample_fn(batch, random_state=rng)
        return np.asarray(getattr(sampled, "coords", sampled), dtype=float)

    use_smoothing = smoothing_window is not None
    use_mbr = region_vertices is not None
    coords, attempts, discarded = _collect(
        draw,
        count,
        smoother=_make_smoother(smoothing_window, smoothing_polyorder) if use_smoothing else None,
        region=_make_region(region_vertices, mbr_tol) if use_mbr else None,
        max_attempts=max_attempts_factor * count,
    )
    manifest = {
        "mode": "full" if (use_smoothing and use_mbr) else "custom",
        "requested": count,
        "attempts": attempts,
        "discarded": discarded,
        "seed": seed,
        "smoothing": (
            {"window_length": smoothing_window, "polyorder": smoothing_polyorder}
            if use_smoothing
            else None
        ),
        "mbr": use_mbr,
    }
    return TrajectorySet(coords), manifest


def _make_smoother(window, polyorder):
    return SavitzkyGolaySmoother(window, polyorder).fit()


def _make_region(vertices, tol):
    region = ConvexRegionFilter(tol=tol)
    region.vertices_ = np.asarray(vertices, dtype=float)
    return region


def _collect(draw, count, smoother, region, max_attempts):
    """Draw batches until ``count`` trajectories survive post-processing."""
    batches = []
    produced = 0
    attempts = 0
    discarded = 0
    while produced < count and attempts < max_attempts:
        batch = min(count, max_attempts - attempts)
        coords = draw(batch)
        if smoother is not None:
            coords = smoother.transform(coords)
        if region is not None:
            coords, dropped = region.filter(coords)
            discarded += dropped
        attempts += batch
        if len(coords):
            batches.append(coords)
            produced += len(coords)
    if produced < count:
        raise GenerationShortfallError(count, produced, attempts)
    return np.concatenate(batches, axis=0)[:count], attempts, discarded


def _architecture_to_dict(arch):
    return {
        "encoder_sizes": list(arch.encoder_sizes),
        "latent_dim": arch.latent_dim,
        "decoder_sizes": list(arch.decoder_sizes),
        "encoder_activations": list(arch.encoder_activations),
        "decoder_activations": list(arch.decoder_activations),
        "pos_slope": arch.pos_slope,
        "neg_slope": arch.neg_slope,
    }


def _architecture_from_dict(d):
    return Architecture(
        encoder_sizes=tuple(d["encoder_sizes"]),
        latent_dim=int(d["latent_dim"]),
        decoder_sizes=tuple(d["decoder_sizes"]),
        encoder_activations=tuple(d["encoder_activations"]),
        decoder_activations=tuple(d["decoder_activations"]),
        pos_slope=float(d["pos_slope"]),
        neg_slope=float(d["neg_slope"]),
    )


def _checkpoint_tensors(ckpt):
    """Named tensors in a fixed order; the header lists them in this
    order so the payload layout is implicit."""
    tensors = []
    p = ckpt.params
    for i, (w, b) in enumerate(zip(p.enc_w, p.enc_b)):
        tensors.append((f"enc_w_{i}", w))
        tensors.append((f"enc_b_{i}", b))
    tensors.extend(
        [
            ("mu_w", p.mu_w),
            ("mu_b", p.mu_b),
            ("logvar_w", p.logvar_w),
            ("logvar_b", p.logvar_b),
        ]
    )
    for j, (w, b) in enumerate(zip(p.dec_w, p.dec_b)):
        tensors.append((f"dec_w_{j}", w))
        tensors.append((f"dec_b_{j}", b))
    tensors.extend(
        [
            ("gmm_weights", ckpt.gmm.weights_),
            ("gmm_means", ckpt.gmm.means_),
            ("gmm_covariances", ckpt.gmm.covariances_),
            ("gmm_ll_history", ckpt.gmm.ll_history_),
            ("region_vertices", np.asarray(ckpt.region_vertices, dtype=float)),
            ("latent_codes", np.asarray(ckpt.latent_codes, dtype=float)),
        ]
    )
    return tensors


def save_checkpoint(path, ckpt):
    """Write a checkpoint; identical checkpoints produce identical bytes."""
    tensors = _checkpoint_tensors(ckpt)
    header = {
        "format": "wildgen-checkpoint",
        "version": 1,
        "architecture": _architecture_to_dict(ckpt.params.arch),
        "normalization": {
            "scale": float(ckpt.normalization.scale),
            "factor": float(ckpt.normalization.factor),
        },
        "gmm": {
            "n_components": int(ckpt.gmm.n_components),
            "reg_covar": float(ckpt.gmm.reg_covar),
            "tol": float(ckpt.gmm.tol),
            "max_iter": int(ckpt.gmm.max_iter),
            "log_likelihood": float(ckpt.gmm.log_likelihood_),
            "converged": bool(ckpt.gmm.converged_),
            "n_iter": int(ckpt.gmm.n_iter_),
        },
        "horizon": int(ckpt.horizon),
        "master_seed": int(ckpt.master_seed),
        "meta": ckpt.meta,
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in tensors],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("format") != "wildgen-checkpoint" or header.get("version") != 1:
            raise ValueError("unsupported checkpoint format or version")
        data = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ValueError("checkpoint is truncated")
            data[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()

    arch = _architecture_from_dict(header["architecture"])
    params = VaeParams(arch=arch)
    for i in range(len(arch.encoder_sizes) - 1):
        params.enc_w.append(data[f"enc_w_{i}"])
        params.enc_b.append(data[f"enc_b_{i}"])
    params.mu_w = data["mu_w"]
    params.mu_b = data["mu_b"]
    params.logvar_w = data["logvar_w"]
    params.logvar_b = data["logvar_b"]
    for j in range(len(arch.decoder_sizes)):
        params.dec_w.append(data[f"dec_w_{j}"])
        params.dec_b.append(data[f"dec_b_{j}"])

    g = header["gmm"]
    gmm = GaussianMixture(
        n_components=g["n_components"],
        reg_covar=g["reg_covar"],
        tol=g["tol"],
        max_iter=g["max_iter"],
    )
    gmm.weights_ = data["gmm_weights"]
    gmm.means_ = data["gmm_means"]
    gmm.covariances_ = data["gmm_covariances"]
    gmm.ll_history_ = data["gmm_ll_history"]
    gmm.log_likelihood_ = g["log_likelihood"]
    gmm.converged_ = g["converged"]
    gmm.n_iter_ = g["n_iter"]

    norm = NormalizationParams(
        scale=header["normalization"]["scale"],
        factor=header["normalization"]["factor"],
    )
    return Checkpoint(
        params=params,
        normalization=norm,
        gmm=gmm,
        region_vertices=data["region_vertices"],
        latent_codes=data["latent_codes"],
        horizon=int(header["horizon"]),
        master_seed=int(header["master_seed"]),
        meta=header.get("meta", {}),
    )
