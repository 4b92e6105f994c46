"""Command-line entry points: synthetic corpus generation, training, encoding,
clustering and retrieval evaluation.

Exit codes: 0 success, 2 usage or configuration error, 3 data-format error,
4 numerical failure (non-finite loss).
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .clustering import build_hierarchy
from .datasets import make_hierarchical_blobs
from .exceptions import DataFormatError, NumericalError
from .model import HashNetwork
from .objective import OBJECTIVES
from .retrieval import (
    RetrievalSet,
    binarize,
    intra_inter_distances,
    map_at_k,
    pack_bits,
    pr_curve,
    precision_at_n,
    precision_at_radius,
)
from .trainer import (
    AugmentSettings,
    ClusterSettings,
    LossSettings,
    ModelSettings,
    TrainConfig,
    train,
)

EXIT_DATA_FORMAT = 3
EXIT_NUMERICAL = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map package exceptions onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataFormatError as exc:
            _fail(EXIT_DATA_FORMAT, str(exc))
        except NumericalError as exc:
            _fail(EXIT_NUMERICAL, str(exc))
        except FileNotFoundError as exc:
            raise click.UsageError(f"missing file: {exc.filename}")
        except ValueError as exc:
            raise click.UsageError(str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# configuration file
# ---------------------------------------------------------------------------

def _section(data: dict, cls, name: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise click.UsageError(f"unknown key(s) in '{name}': {sorted(unknown)}")
    return cls(**data)


def load_run_config(path) -> tuple[TrainConfig, dict]:
    """Parse the JSON run configuration; unknown keys are rejected at every
    level. Returns the TrainConfig plus the path/io fields."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise click.UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"{path}: invalid JSON: {exc}")
    if not isinstance(doc, dict):
        raise click.UsageError(f"{path}: config must be a JSON object")

    top_keys = {
        "features", "labels", "out_dir",
        "epochs", "batch_size", "lr", "seed", "map_k", "map_queries",
        "model", "cluster", "loss", "augment",
    }
    unknown = set(doc) - top_keys
    if unknown:
        raise click.UsageError(f"unknown config key(s): {sorted(unknown)}")
    for required in ("features", "out_dir"):
        if required not in doc:
            raise click.UsageError(f"config is missing required key '{required}'")

    cluster_raw = dict(doc.get("cluster", {}))
    if "counts" in cluster_raw:
        cluster_raw["counts"] = tuple(int(v) for v in cluster_raw["counts"])
    cfg = TrainConfig(
        epochs=int(doc.get("epochs", 30)),
        batch_size=int(doc.get("batch_size", 64)),
        lr=float(doc.get("lr", 0.001)),
        seed=int(doc.get("seed", 0)),
        map_k=int(doc.get("map_k", 100)),
        map_queries=int(doc.get("map_queries", 256)),
        model=_section(doc.get("model", {}), ModelSettings, "model"),
        cluster=_section(cluster_raw, ClusterSettings, "cluster"),
        loss=_section(doc.get("loss", {}), LossSettings, "loss"),
        augment=_section(doc.get("augment", {}), AugmentSettings, "augment"),
    )
    paths = {
        "features": doc["features"],
        "labels": doc.get("labels"),
        "out_dir": doc["out_dir"],
    }
    return cfg, paths


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Hash-code learning and retrieval evaluation on feature-vector files."""


@main.command("synth")
@click.option("--out-train", required=True, type=click.Path(dir_okay=False))
@click.option("--out-query", type=click.Path(dir_okay=False), default=None)
@click.option("--n-train", default=2000, show_default=True)
@click.option("--n-query", default=400, show_default=True)
@click.option("--dim", default=64, show_default=True)
@click.option("--n-super", default=8, show_default=True)
@click.option("--classes-per-super", default=4, show_default=True)
@click.option("--super-sep", default=8.0, show_default=True)
@click.option("--class-sep", default=3.0, show_default=True)
@click.option("--spread", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_guard
def cmd_synth(out_train, out_query, n_train, n_query, dim, n_super, classes_per_super,
              super_sep, class_sep, spread, seed):
    """Generate a planted hierarchical Gaussian-mixture feature corpus.

    Writes the feature matrix plus a .labels sidecar; with --out-query a
    disjoint query split is drawn from the same planted centers.
    """
    x, y, xq, yq = make_hierarchical_blobs(
        n_train, dim, n_super, classes_per_super,
        super_separation=super_sep, class_separation=class_sep, spread=spread,
        n_queries=n_query if out_query else 0, random_state=seed,
    )

    def emit(path, matrix, labels):
        path = Path(path)
        io.write_float_matrix(path, matrix)
        io.write_labels(path.with_suffix(".labels"), [{int(v)} for v in labels])
        click.echo(f"wrote {matrix.shape[0]} x {matrix.shape[1]} features to {path}")

    emit(out_train, x, y)
    if out_query:
        emit(out_query, xq, yq)


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--metric", type=click.Choice(["hyperbolic", "cosine"]), default=None,
              help="Override the distance backend (embedding-space ablation).")
@click.option("--objective", type=click.Choice(list(OBJECTIVES)), default=None,
              help="Override the objective variant (hierarchy ablation).")
@_guard
def cmd_train(config_path, seed, metric, objective):
    """Train a hash network from a JSON run configuration.

    Writes model.hnet, metrics.ndjson and (when the objective uses prototypes)
    hierarchy.json into the configured output directory.
    """
    cfg, paths = load_run_config(config_path)
    if seed is not None:
        cfg.seed = seed
    if metric is not None:
        cfg.loss.metric = metric
    if objective is not None:
        cfg.loss.objective = objective
    features_path = Path(paths["features"])
    if not features_path.exists():
        raise click.UsageError(f"dataset path does not exist: {features_path}")
    features = io.read_float_matrix(features_path)
    labels = None
    if paths["labels"]:
        labels_path = Path(paths["labels"])
        if not labels_path.exists():
            raise click.UsageError(f"labels path does not exist: {labels_path}")
        labels = io.read_labels(labels_path)

    result = train(features, cfg, labels=labels)

    out_dir = Path(paths["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    result.model.save(out_dir / "model.hnet")
    io.write_metrics(out_dir / "metrics.ndjson", result.metrics)
    if result.hierarchy is not None:
        io.save_hierarchy(out_dir / "hierarchy.json", result.hierarchy)
    final = result.metrics[-1]
    click.echo(
        f"trained {cfg.epochs} epochs; final total loss {final['total']:.6f}"
        + (f", map {final['map']:.4f}" if "map" in final else "")
    )
    click.echo(f"artifacts in {out_dir}")


@main.command("encode")
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--features", "features_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-codes", required=True, type=click.Path(dir_okay=False),
              help="Continuous codes (float matrix file).")
@click.option("--out-binary", required=True, type=click.Path(dir_okay=False),
              help="Packed binary codes.")
@_guard
def cmd_encode(model_path, features_path, out_codes, out_binary):
    """Encode features with the hash layer only (projection head disabled)."""
    for p in (model_path, features_path):
        if not Path(p).exists():
            raise click.UsageError(f"path does not exist: {p}")
    model = HashNetwork.load(model_path)
    features = io.read_float_matrix(features_path)
    codes, _, _ = model.forward(features, with_projection=False)
    io.write_float_matrix(out_codes, codes)
    io.write_binary_codes(out_binary, pack_bits(binarize(codes)), model.n_bits)
    click.echo(f"encoded {codes.shape[0]} rows into {model.n_bits}-bit codes")


@main.command("cluster")
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--features", "features_path", required=True, type=click.Path(dir_okay=False))
@click.option("--counts", required=True, help="Strictly decreasing layer sizes, e.g. 32,8")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--max-iter", default=30, show_default=True)
@click.option("--tol", default=1e-4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_guard
def cmd_cluster(model_path, features_path, counts, out_path, max_iter, tol, seed):
    """Embed features (hash layer + projection head) and build the bottom-up
    prototype hierarchy in the ball."""
    for p in (model_path, features_path):
        if not Path(p).exists():
            raise click.UsageError(f"path does not exist: {p}")
    try:
        layer_sizes = [int(tok) for tok in counts.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"--counts must be a comma-separated int list, got {counts!r}")
    model = HashNetwork.load(model_path)
    features = io.read_float_matrix(features_path)
    _, embeddings, _ = model.forward(features)
    hierarchy = build_hierarchy(
        embeddings, layer_sizes, metric="hyperbolic", c=model.c,
        max_iter=max_iter, tol=tol, rng=np.random.default_rng(seed),
    )
    io.save_hierarchy(out_path, hierarchy)
    click.echo(f"hierarchy with layers {hierarchy.counts} written to {out_path}")


@main.command("eval")
@click.option("--query-codes", required=True, type=click.Path(dir_okay=False))
@click.option("--query-labels", required=True, type=click.Path(dir_okay=False))
@click.option("--db-codes", required=True, type=click.Path(dir_okay=False))
@click.option("--db-labels", required=True, type=click.Path(dir_okay=False))
@click.option("--map-k", default=100, show_default=True)
@click.option("--p-at-n", default="1,5,10", show_default=True)
@click.option("--radius", default=2, show_default=True)
@click.option("--curve-out", type=click.Path(dir_okay=False), default=None,
              help="Write the P-R curve as two-column text (recall precision).")
@_guard
def cmd_eval(query_codes, query_labels, db_codes, db_labels, map_k, p_at_n, radius, curve_out):
    """Hamming-ranking evaluation of binary codes against a labeled database."""
    for p in (query_codes, query_labels, db_codes, db_labels):
        if not Path(p).exists():
            raise click.UsageError(f"path does not exist: {p}")
    q_packed, q_bits = io.read_binary_codes(query_codes)
    d_packed, d_bits = io.read_binary_codes(db_codes)
    if q_bits != d_bits:
        raise DataFormatError(
            f"query codes are {q_bits}-bit but database codes are {d_bits}-bit"
        )
    q_labels = io.read_labels(query_labels)
    d_labels = io.read_labels(db_labels)
    try:
        rset = RetrievalSet(q_packed, q_labels, d_packed, d_labels, q_bits)
    except ValueError as exc:
        raise DataFormatError(str(exc))
    try:
        ns = [int(tok) for tok in p_at_n.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"--p-at-n must be a comma-separated int list, got {p_at_n!r}")

    click.echo(f"map@{map_k} {map_at_k(rset, map_k):.6f}")
    for n, value in precision_at_n(rset, ns).items():
        click.echo(f"p@{n} {value:.6f}")
    click.echo(f"p@h<={radius} {precision_at_radius(rset, radius):.6f}")
    d_intra, d_inter = intra_inter_distances(rset.db_codes, rset.db_labels)
    click.echo(f"d_intra {d_intra:.6f}")
    click.echo(f"d_inter {d_inter:.6f}")
    if curve_out:
        _, precision, recall = pr_curve(rset)
        with open(curve_out, "w", encoding="ascii") as fh:
            fh.write("# recall precision\n")
            for r, p in zip(recall, precision):
                fh.write(f"{r:.10f} {p:.10f}\n")
        click.echo(f"p-r curve written to {curve_out}")


if __name__ == "__main__":
    main()
