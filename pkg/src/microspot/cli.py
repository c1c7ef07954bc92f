"""Command-line entry point orchestrating the pipeline.

Subcommands: synth | preprocess | extract-features | train | spot | evaluate | serve.
Values resolve as: built-in defaults < --config file < explicit flags.
"""
from __future__ import annotations

import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .config import PipelineConfig
from .dataio import (
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    write_dataset,
)
from .errors import MicrospotError
from .evaluation import run_loso_evaluation, write_report
from .features import (
    FeatureCache,
    check_cache_consistency,
    extract_video_features,
    params_fingerprint,
    read_feature_cache,
    write_feature_cache,
)
from .network.adam import AdamConfig
from .network.model import LstmModel, load_model, save_model
from .network.training import TrainConfig, train as train_model
from .preprocess import compute_alignment, extract_rois, eye_centers, generate_windows
from .spotting import label_windows, nms, score_windows, write_detections


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel workers for per-video stages.")
@click.option("--seed", type=int, default=None, help="Global training/synthesis seed.")
@click.pass_context
def cli(ctx, config_path, jobs, seed):
    """Micro-expression spotting toolkit."""
    config = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    if seed is not None:
        config = config.replace_section("train", seed=seed)
    ctx.obj = {"config": config, "jobs": max(1, jobs), "seed": seed}


@cli.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--videos", type=int, default=6, show_default=True)
@click.option("--frames", type=int, default=1000, show_default=True)
@click.option("--fps", type=float, default=200.0, show_default=True)
@click.option("--subjects", type=int, default=None, help="Distinct subjects (default: one per video).")
@click.option("--movements", type=int, default=3, show_default=True)
@click.option("--amplitude", type=float, default=6.0, show_default=True)
@click.option("--noise-std", type=float, default=0.001, show_default=True)
@click.option("--duration-min", type=int, default=24, show_default=True)
@click.option("--duration-max", type=int, default=48, show_default=True)
@click.option("--width", type=int, default=64, show_default=True)
@click.option("--height", type=int, default=64, show_default=True)
@click.pass_context
def synth(ctx, out_dir, seed, videos, frames, fps, subjects, movements, amplitude,
          noise_std, duration_min, duration_max, width, height):
    """Generate a deterministic synthetic dataset tree."""
    if seed is None:
        seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else 0
    spec = SyntheticSpec(
        seed=seed,
        n_videos=videos,
        frames_per_video=frames,
        fps=fps,
        n_movements=movements,
        amplitude_px=amplitude,
        duration_range=(duration_min, duration_max),
        noise_std=noise_std,
        width=width,
        height=height,
        n_subjects=subjects,
    )
    dataset = generate_synthetic(spec)
    manifest_path = write_dataset(dataset, out_dir)
    click.echo(f"wrote {len(dataset.sequences)} videos, {len(dataset.ground_truth)} ground-truth rows")
    click.echo(f"manifest: {manifest_path}")


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--window-sec", type=float, default=None)
@click.option("--overlap-sec", type=float, default=None)
@click.pass_context
def preprocess(ctx, data_dir, out_dir, window_sec, overlap_sec):
    """Write per-video window tables and ROI geometry."""
    config = ctx.obj["config"].replace_section(
        "window", window_seconds=window_sec, overlap_seconds=overlap_sec
    )
    dataset = load_dataset(Path(data_dir) / "manifest.json", jobs=ctx.obj["jobs"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seq in dataset.sequences:
        landmarks = dataset.landmarks_for(seq.video_id)
        windows = generate_windows(seq.frame_count, seq.fps, config.window, seq.video_id)
        rows = []
        for win in windows:
            lm = landmarks.for_frame(win.start)
            transform = compute_alignment(*eye_centers(lm), source_index=win.start)
            rois = extract_rois(lm, transform, (seq.height, seq.width), config.roi)
            rows.append(
                {
                    "index": win.index,
                    "start": win.start,
                    "end": win.end,
                    "angle": transform.angle,
                    "rois": {
                        name: [[b.x0, b.y0, b.x1, b.y1] for b in boxes]
                        for name, boxes in rois.regions()
                    },
                }
            )
        (out / f"{seq.video_id}.windows.json").write_text(
            json.dumps(rows, indent=2, sort_keys=True) + "\n"
        )
        click.echo(f"{seq.video_id}: {len(windows)} windows")


@cli.command("extract-features")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--window-sec", type=float, default=None)
@click.option("--overlap-sec", type=float, default=None)
@click.option("--flow-alpha", type=float, default=None)
@click.option("--flow-iters", type=int, default=None)
@click.option("--flow-tol", type=float, default=None)
@click.option("--flow-sigma", type=float, default=None)
@click.option("--bins", type=int, default=None)
@click.option("--min-magnitude", type=float, default=None)
@click.pass_context
def extract_features(ctx, data_dir, out_dir, window_sec, overlap_sec, flow_alpha,
                     flow_iters, flow_tol, flow_sigma, bins, min_magnitude):
    """Compute HOOF sequence caches, one binary file per video."""
    config = ctx.obj["config"]
    config = config.replace_section("window", window_seconds=window_sec, overlap_seconds=overlap_sec)
    config = config.replace_section(
        "flow", alpha=flow_alpha, iterations=flow_iters, tolerance=flow_tol, sigma=flow_sigma
    )
    config = config.replace_section("hoof", bins=bins, min_magnitude=min_magnitude)

    dataset = load_dataset(Path(data_dir) / "manifest.json", jobs=ctx.obj["jobs"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fingerprint = params_fingerprint(config.window, config.roi, config.flow, config.hoof)

    def one(seq):
        feats = extract_video_features(
            seq,
            dataset.landmarks_for(seq.video_id),
            config.window,
            config.roi,
            config.flow,
            config.hoof,
        )
        cache = FeatureCache.from_sequences(seq, feats, fingerprint)
        write_feature_cache(cache, out / f"{seq.video_id}.msfc")
        return seq.video_id, len(feats)

    if ctx.obj["jobs"] > 1:
        with ThreadPoolExecutor(max_workers=ctx.obj["jobs"]) as pool:
            results = list(pool.map(one, dataset.sequences))
    else:
        results = [one(seq) for seq in dataset.sequences]
    for video_id, n in results:
        click.echo(f"{video_id}: {n} windows cached")


def _load_caches(features_dir: Path, config: PipelineConfig) -> list[FeatureCache]:
    paths = sorted(Path(features_dir).glob("*.msfc"))
    if not paths:
        raise MicrospotError(f"no feature caches found in {features_dir}")
    caches = [read_feature_cache(p) for p in paths]
    for cache in caches:
        check_cache_consistency(cache, config.window)
    return caches


@cli.command()
@click.option("--features", "features_dir", required=True, type=click.Path())
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--out", "model_path", required=True, type=click.Path())
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--class-weights", type=str, default=None,
              help="'balanced' or two comma-separated weights, e.g. '1,4'.")
@click.pass_context
def train(ctx, features_dir, data_dir, model_path, epochs, lr, batch, seed, class_weights):
    """Train the spotting network on every cached window."""
    config = ctx.obj["config"]
    weights = None
    if class_weights is not None:
        weights = "balanced" if class_weights == "balanced" else tuple(
            float(w) for w in class_weights.split(",")
        )
    config = config.replace_section(
        "train", epochs=epochs, batch_size=batch, seed=seed, class_weights=weights
    )
    config = config.replace_section("adam", learning_rate=lr)

    from .dataio.loading import load_ground_truth

    ground_truth = load_ground_truth(Path(data_dir) / "gt.csv")
    caches = _load_caches(Path(features_dir), config)
    xs, ys = [], []
    for cache in caches:
        labeled = label_windows(cache.windows, [g for g in ground_truth if g.video_id == cache.video_id])
        xs.append(cache.features)
        ys.extend(int(lw.label) for lw in labeled)
    X = np.concatenate(xs)
    y = np.array(ys, dtype=np.int64)

    rng = np.random.default_rng(config.train.seed)
    model = LstmModel.initialize(input_dim=X.shape[2], hidden_size=config.hidden_size, rng=rng)
    _, history = train_model(model, X, y, config.adam, config.train)
    save_model(
        model,
        model_path,
        hyperparams={
            "seed": config.train.seed,
            "epochs": config.train.epochs,
            "batch_size": config.train.batch_size,
            "learning_rate": config.adam.learning_rate,
            "n_samples": int(len(y)),
            "n_positive": int(y.sum()),
        },
    )
    click.echo(f"trained on {len(y)} windows ({int(y.sum())} positive)")
    click.echo(f"loss: first {history[0]:.6f}, final {history[-1]:.6f}")
    click.echo(f"checkpoint: {model_path}")


@cli.command()
@click.option("--features", "features_dir", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--threshold", type=float, default=None)
@click.pass_context
def spot(ctx, features_dir, model_path, out_path, threshold):
    """Score windows, suppress overlaps, and write the detections CSV."""
    config = ctx.obj["config"].replace_section("spot", threshold=threshold)
    model, _ = load_model(model_path)
    caches = _load_caches(Path(features_dir), config)

    all_detections = []
    kept_detections = []
    for cache in caches:
        scored = score_windows(cache.sequences(), model)
        above = [d for d in scored if d.confidence >= config.spot.threshold]
        kept = nms(above)
        all_detections.extend(above)
        kept_detections.extend(kept)
        click.echo(f"{cache.video_id}: {len(above)} detections, {len(kept)} kept")
    write_detections(out_path, all_detections, kept_detections)
    click.echo(f"detections: {out_path}")


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--features", "features_dir", type=click.Path(), default=None,
              help="Reuse caches from this directory instead of recomputing.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--threshold", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def evaluate(ctx, data_dir, features_dir, out_dir, threshold, epochs, seed):
    """Leave-one-subject-out evaluation; writes report.json, metrics.csv, roc.csv."""
    config = ctx.obj["config"]
    config = config.replace_section("spot", threshold=threshold)
    config = config.replace_section("train", epochs=epochs, seed=seed)
    dataset = load_dataset(Path(data_dir) / "manifest.json", jobs=ctx.obj["jobs"])

    features_by_video = None
    if features_dir is not None:
        caches = _load_caches(Path(features_dir), config)
        features_by_video = {c.video_id: c.sequences() for c in caches}

    report = run_loso_evaluation(
        dataset,
        window_params=config.window,
        roi_params=config.roi,
        flow_params=config.flow,
        hoof_params=config.hoof,
        adam_config=config.adam,
        train_config=config.train,
        threshold=config.spot.threshold,
        hidden_size=config.hidden_size,
        features_by_video=features_by_video,
    )
    write_report(report, out_dir)
    click.echo(
        f"TP {report.tp}  FP {report.fp}  FN {report.fn}  "
        f"recall {report.recall:.4f}  precision {report.precision:.4f}  "
        f"f1 {report.f1:.4f}  auc {report.auc:.4f}"
    )
    click.echo(f"report: {Path(out_dir) / 'report.json'}")


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path(), envvar="MICROSPOT_DATA_DIR")
@click.option("--port", type=int, default=None, envvar="MICROSPOT_PORT")
@click.option("--host", type=str, default=None)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static directory of the built review UI (frontend/dist).")
@click.pass_context
def serve(ctx, data_dir, port, host, ui_dir):
    """Run the annotation review service."""
    import uvicorn

    from .service import create_app

    config = ctx.obj["config"].replace_section("service", port=port, host=host)
    if ui_dir is None:
        candidate = Path("frontend") / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(data_dir, config, ui_dir)
    click.echo(f"serving {data_dir} on {config.service.host}:{config.service.port}")
    uvicorn.run(app, host=config.service.host, port=config.service.port, log_level="warning")


def main() -> None:
    try:
        code = cli(standalone_mode=False)
        sys.exit(code if isinstance(code, int) else 0)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except (MicrospotError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
