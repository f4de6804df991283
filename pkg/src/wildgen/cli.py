"""Command-line interface.

Subcommands cover the whole workflow: synth (build a synthetic corpus),
train (corpus -> checkpoint), generate (checkpoint -> trajectories under
an ablation mode), baseline (fit and sample the comparison generators),
evaluate (score generated against real), and plot (GeoJSON + SVG).

All commands read an optional JSON config merged over built-in defaults,
take --seed and --out overrides, exit 0 on success, and report failures
as a single "error: ..." line on stderr (exit 2 for usage or config
problems, 1 for runtime failures).  Outputs are deterministic for a
fixed config and seed.
"""

import argparse
import copy
import io
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import HeteroscedasticGPR, LevyWalkGenerator
from .ingest import (
    TRACK_HEADER,
    preprocess,
    read_track_csv,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .metrics import evaluate
from .pipeline import (
    PipelineConfig,
    derive_seed,
    generate_set,
    load_checkpoint,
    sample_with_postprocessing,
    save_checkpoint,
    train_pipeline,
)
from .plotting import (
    geojson_dumps,
    latent_scatter_svg,
    render_svg,
    trajectories_to_geojson,
)
from .postprocess import region_to_geojson
from .synthetic import SynthConfig, generate_corpus

DEFAULT_CONFIG = {
    "seed": 1234,
    "synth": {
        "n_trajectories": 60,
        "horizon_days": 185,
        "start_center": [10.0, 52.0],
        "start_radius": 4.0,
        "end_center": [34.0, 64.0],
        "end_radius": 4.0,
        "n_stopovers": 3,
        "stopover_dwell_days": 12,
        "noise_sd": 0.3,
    },
    "ingest": {
        "window_start": "03-01",
        "horizon_days": 185,
        "max_gap_days": 7,
        "normalization_factor": 0.3,
    },
    "vae": {
        "latent_dim": 3,
        "encoder_hidden": [300, 100],
        "decoder_hidden": [100, 100, 300],
        "pos_slope": 0.06,
        "neg_slope": 0.001,
        "kl_weight": 0.001,
        "epochs": 5000,
        "learning_rate": 0.001,
        "optimizer": "adam",
    },
    "gmm": {
        "n_components": 15,
        "reg_covar": 1e-4,
        "tol": 1e-7,
        "max_iter": 500,
    },
    "postprocess": {
        "smoothing_window": 21,
        "smoothing_polyorder": 3,
        "mbr_tol": 1e-12,
        "max_attempts_factor": 20,
    },
    "baselines": {
        "postprocess": True,
        "levy": {"truncation_percentile": 99.9, "clip_percentile": 99.0},
        "hgpr": {"subsample_fraction": 0.5, "noise_floor": 1e-6, "n_sweeps": 4},
    },
    "evaluate": {"k": 13},
}


class CliError(Exception):
    """Usage or configuration problem; exits with status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def _merge_config(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        dotted = f"{path}{key}"
        if key not in base:
            raise CliError(f"unknown config key: {dotted}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise CliError(f"config key {dotted} must be an object")
            out[key] = _merge_config(base[key], value, dotted + ".")
        else:
            out[key] = value
    return out


def load_config(path=None):
    """Built-in defaults, optionally overlaid with a JSON config file."""
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            user = json.load(fh)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(user, dict):
        raise CliError(f"config file {path} must contain a JSON object")
    return _merge_config(DEFAULT_CONFIG, user)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_corpus(path, cfg):
    """Read either a trajectory CSV or a raw track CSV (preprocessing it)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
    fields = [f.strip() for f in first.split(",")]
    if fields == TRACK_HEADER:
        tracks = read_track_csv(path)
        ing = cfg["ingest"]
        return preprocess(
            tracks,
            window_start=ing["window_start"],
            horizon_days=ing["horizon_days"],
            max_gap_days=ing["max_gap_days"],
        )
    return read_trajectory_csv(path)


def _pipeline_config(cfg, seed):
    vae = cfg["vae"]
    gmm = cfg["gmm"]
    post = cfg["postprocess"]
    return PipelineConfig(
        master_seed=seed,
        latent_dim=vae["latent_dim"],
        encoder_hidden=tuple(vae["encoder_hidden"]),
        decoder_hidden=tuple(vae["decoder_hidden"]),
        pos_slope=vae["pos_slope"],
        neg_slope=vae["neg_slope"],
        kl_weight=vae["kl_weight"],
        epochs=vae["epochs"],
        learning_rate=vae["learning_rate"],
        optimizer=vae["optimizer"],
        normalization_factor=cfg["ingest"]["normalization_factor"],
        gmm_components=gmm["n_components"],
        gmm_reg_covar=gmm["reg_covar"],
        gmm_tol=gmm["tol"],
        gmm_max_iter=gmm["max_iter"],
        smoothing_window=post["smoothing_window"],
        smoothing_polyorder=post["smoothing_polyorder"],
        mbr_tol=post["mbr_tol"],
        max_attempts_factor=post["max_attempts_factor"],
    )


def cmd_synth(args):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    s = dict(cfg["synth"])
    if args.n is not None:
        s["n_trajectories"] = args.n
    if args.horizon is not None:
        s["horizon_days"] = args.horizon
    synth_cfg = SynthConfig(
        n_trajectories=s["n_trajectories"],
        horizon_days=s["horizon_days"],
        start_center=tuple(s["start_center"]),
        start_radius=s["start_radius"],
        end_center=tuple(s["end_center"]),
        end_radius=s["end_radius"],
        n_stopovers=s["n_stopovers"],
        stopover_dwell_days=s["stopover_dwell_days"],
        noise_sd=s["noise_sd"],
        seed=derive_seed(seed, "synth"),
    )
    corpus = generate_corpus(synth_cfg)
    out = _out_dir(args)
    path = out / "corpus.csv"
    write_trajectory_csv(path, corpus)
    print(f"wrote {len(corpus)} trajectories of {corpus.horizon} days to {path}")
    return 0


def cmd_train(args):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    corpus = _read_corpus(args.corpus, cfg)
    pipe_cfg = _pipeline_config(cfg, seed)
    if args.epochs is not None:
        pipe_cfg.epochs = args.epochs
    ckpt, history = train_pipeline(corpus, pipe_cfg)
    out = _out_dir(args)
    ckpt_path = out / "checkpoint.bin"
    save_checkpoint(ckpt_path, ckpt)
    buf = io.StringIO()
    buf.write("epoch,total,reconstruction,kl\n")
    for i in range(len(history)):
        buf.write(
            f"{i + 1},{float(history.total[i])!r},"
            f"{float(history.reconstruction[i])!r},{float(history.kl[i])!r}\n"
        )
    _write_text(out / "loss_history.csv", buf.getvalue())
    print(
        f"trained on {len(corpus)} trajectories for {pipe_cfg.epochs} epochs; "
        f"final reconstruction mse {history.reconstruction[-1]:.6f}; "
        f"checkpoint at {ckpt_path}"
    )
    return 0


def cmd_generate(args):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    post = cfg["postprocess"]
    ckpt = load_checkpoint(args.checkpoint)
    generated, manifest = generate_set(
        ckpt,
        count=args.count,
        mode=args.mode,
        seed=derive_seed(seed, "generate"),
        smoothing_window=post["smoothing_window"],
        smoothing_polyorder=post["smoothing_polyorder"],
        mbr_tol=post["mbr_tol"],
        max_attempts_factor=post["max_attempts_factor"],
    )
    out = _out_dir(args)
    path = out / "generated.csv"
    write_trajectory_csv(path, generated)
    _write_json(out / "generate_manifest.json", manifest)
    print(
        f"generated {len(generated)} trajectories (mode {args.mode}, "
        f"{manifest['attempts']} attempts, {manifest['discarded']} discarded) to {path}"
    )
    return 0


def cmd_baseline(args):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    corpus = _read_corpus(args.corpus, cfg)
    count = args.count if args.count is not None else len(corpus)
    post = cfg["postprocess"]
    b = cfg["baselines"]
    if args.which == "levy":
        model = LevyWalkGenerator(
            truncation_percentile=b["levy"]["truncation_percentile"],
            clip_percentile=b["levy"]["clip_percentile"],
        ).fit(corpus)
        params_out = model.params_.to_dict()
    else:
        model = HeteroscedasticGPR(
            subsample_fraction=b["hgpr"]["subsample_fraction"],
            noise_floor=b["hgpr"]["noise_floor"],
            n_sweeps=b["hgpr"]["n_sweeps"],
            random_state=derive_seed(seed, "hgpr:fit"),
        ).fit(corpus)
        params_out = {
            "log_marginal_likelihood": model.log_marginal_likelihood_,
            "noise_curve_max": float(model.noise_curve_.max()),
            "noise_curve_min": float(model.noise_curve_.min()),
            "subsample_size": int(len(model.subsample_indices_)),
            "dimensions": [
                {
                    "signal_var": mdl["signal_var"],
                    "length_scale": mdl["length_scale"],
                    "bias_var": mdl["bias_var"],
                    "lml": mdl["lml"],
                }
                for mdl in model.models_
            ],
        }
    sample_seed = derive_seed(seed, f"{args.which}:sample")
    if b["postprocess"]:
        sampled, manifest = sample_with_postprocessing(
            model.sample,
            count,
            seed=sample_seed,
            smoothing_window=post["smoothing_window"],
            smoothing_polyorder=post["smoothing_polyorder"],
            region_vertices=_corpus_hull(corpus),
            mbr_tol=post["mbr_tol"],
            max_attempts_factor=post["max_attempts_factor"],
        )
    else:
        sampled = model.sample(count, random_state=np.random.default_rng(sample_seed))
        manifest = {
            "mode": "raw",
            "requested": count,
            "attempts": count,
            "discarded": 0,
            "seed": sample_seed,
            "smoothing": None,
            "mbr": False,
        }
    manifest["baseline"] = args.which
    out = _out_dir(args)
    path = out / f"{args.which}.csv"
    write_trajectory_csv(path, sampled)
    _write_json(out / f"{args.which}_params.json", params_out)
    _write_json(out / f"{args.which}_manifest.json", manifest)
    print(
        f"baseline {args.which}: wrote {len(sampled)} trajectories "
        f"({manifest['attempts']} attempts, {manifest['discarded']} discarded) to {path}"
    )
    return 0


def _corpus_hull(corpus):
    from .postprocess import convex_hull

    return convex_hull(corpus.points)


def cmd_evaluate(args):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    k = args.k if args.k is not None else cfg["evaluate"]["k"]
    real = read_trajectory_csv(args.real)
    generated = read_trajectory_csv(args.generated)
    report = evaluate(real, generated, k=k, random_state=derive_seed(seed, "evaluate"))
    out = _out_dir(args)
    _write_json(out / "report.json", report.to_dict())
    table = _format_report(report)
    _write_text(out / "report.txt", table)
    sys.stdout.write(table)
    return 0


def _format_report(report):
    rows = [
        ("hausdorff_min", f"{report.hausdorff_min:.4f}"),
        ("hausdorff_max", f"{report.hausdorff_max:.4f}"),
        ("hausdorff_avg", f"{report.hausdorff_avg:.4f}"),
        ("pearson_r", f"{report.pearson_r:.4f}"),
        ("k", str(report.k)),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name:<{width}}  {value}" for name, value in rows]
    lines.append("")
    lines.append("cluster  real  generated")
    for i, (cr, cg) in enumerate(
        zip(report.cluster_counts_real, report.cluster_counts_generated)
    ):
        lines.append(f"{i:>7}  {cr:>4}  {cg:>9}")
    return "\n".join(lines) + "\n"


def cmd_plot(args):
    named = []
    for spec in args.sets:
        if "=" not in spec:
            raise CliError(f"plot inputs must look like name=path, got {spec!r}")
        name, path = spec.split("=", 1)
        named.append((name, read_trajectory_csv(path)))
    if not named:
        raise CliError("plot needs at least one name=path input")
    out = _out_dir(args)
    _write_text(out / "trajectories.geojson", geojson_dumps(trajectories_to_geojson(named)))
    _write_text(out / "trajectories.svg", render_svg(named))
    written = ["trajectories.geojson", "trajectories.svg"]
    if args.checkpoint is not None:
        ckpt = load_checkpoint(args.checkpoint)
        _write_text(out / "region.geojson", geojson_dumps(region_to_geojson(ckpt.region_vertices)))
        samples = ckpt.gmm.sample(
            max(len(ckpt.latent_codes), 1),
            random_state=np.random.default_rng(derive_seed(ckpt.master_seed, "plot")),
        )
        _write_text(out / "latent.svg", latent_scatter_svg(ckpt.latent_codes, samples))
        written.extend(["region.geojson", "latent.svg"])
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def build_parser():
    parser = _Parser(prog="wildgen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic corpus CSV")
    common(p)
    p.add_argument("--n", type=int, default=None, help="number of trajectories")
    p.add_argument("--horizon", type=int, default=None, help="days per trajectory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the generative pipeline on a corpus")
    common(p)
    p.add_argument("--corpus", required=True, help="corpus CSV (tracks or trajectories)")
    p.add_argument("--epochs", type=int, default=None, help="training epochs override")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample trajectories from a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=int, default=60)
    p.add_argument("--mode", choices=["raw", "smoothed", "mbr", "full"], default="full")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("baseline", help="fit and sample a comparison generator")
    common(p)
    p.add_argument("--which", choices=["levy", "hgpr"], required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--count", type=int, default=None, help="default: corpus size")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="score generated trajectories against real ones")
    common(p)
    p.add_argument("--real", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--k", type=int, default=None, help="cluster count override")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="render trajectory sets as GeoJSON and SVG")
    common(p)
    p.add_argument("sets", nargs="*", help="labelled inputs: name=path ...")
    p.add_argument("--checkpoint", default=None, help="also plot region and latent space")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        message = str(exc).splitlines()[0] if str(exc) else exc.__class__.__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
