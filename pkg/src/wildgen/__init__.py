"""Generative modeling of long-horizon wildlife migration trajectories.

The package builds a compact pipeline around daily-resolution movement
tracks: ingest raw GPS fixes into fixed-length trajectories, train a small
variational autoencoder on flattened coordinate rows, fit a Gaussian
mixture over the learned latent codes, sample and decode new trajectories,
then post-process them (Savitzky-Golay smoothing, convex-region filtering)
and score them against the real corpus (Hausdorff distances, cluster
occupancy correlation).  Two classical generators, a truncated-Cauchy
random walk and a heteroscedastic Gaussian process regression, serve as
baselines.
"""

from .ingest import (
    NormalizationParams,
    RawTrack,
    TrajectorySet,
    denormalize,
    normalize,
    parse_tracks,
    preprocess,
    read_track_csv,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .synthetic import SynthConfig, generate_corpus
from .vae import Architecture, TrainConfig, TrajectoryVAE, VaeParams
from .mixture import GaussianMixture
from .postprocess import (
    ConvexRegionFilter,
    SavitzkyGolaySmoother,
    convex_hull,
    point_in_convex_region,
    savgol_coefficients,
)
from .baselines import HeteroscedasticGPR, LevyParams, LevyWalkGenerator, azimuth
from .metrics import (
    KMeans,
    MetricsReport,
    choose_k,
    cluster_histogram,
    evaluate,
    hausdorff,
    hausdorff_directed,
    nearest_real_summary,
    pearson,
    silhouette_score,
)
from .pipeline import (
    Checkpoint,
    GenerationShortfallError,
    PipelineConfig,
    derive_seed,
    generate_set,
    load_checkpoint,
    sample_with_postprocessing,
    save_checkpoint,
    train_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "Checkpoint",
    "ConvexRegionFilter",
    "GaussianMixture",
    "GenerationShortfallError",
    "HeteroscedasticGPR",
    "KMeans",
    "LevyParams",
    "LevyWalkGenerator",
    "MetricsReport",
    "NormalizationParams",
    "PipelineConfig",
    "RawTrack",
    "SavitzkyGolaySmoother",
    "SynthConfig",
    "TrainConfig",
    "TrajectorySet",
    "TrajectoryVAE",
    "VaeParams",
    "azimuth",
    "choose_k",
    "cluster_histogram",
    "convex_hull",
    "denormalize",
    "derive_seed",
    "evaluate",
    "generate_corpus",
    "generate_set",
    "hausdorff",
    "hausdorff_directed",
    "load_checkpoint",
    "nearest_real_summary",
    "normalize",
    "parse_tracks",
    "pearson",
    "point_in_convex_region",
    "preprocess",
    "read_track_csv",
    "sample_with_postprocessing",
    "read_trajectory_csv",
    "save_checkpoint",
    "savgol_coefficients",
    "silhouette_score",
    "train_pipeline",
    "write_trajectory_csv",
]
