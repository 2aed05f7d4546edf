"""Command-line entry points.

Verbs: extract, synth, train-jecl, fit-mbpls, train-jmml, evaluate, run.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import biomarkers, edcc, forest, io, jecl, mbpls
from .config import ExperimentConfig, load_config
from .experiment import render_table, rows_to_json, run_experiment
from .pipeline import (
    Dataset,
    SplitSpec,
    SynthSpec,
    mco_oversample,
    pair_by_label,
    stratified_split,
    synth_bimodal,
)


def _read_features(path, modality, dimension):
    return io.read_feature_csv(path, modality=modality, dimension=dimension)


def cmd_extract(args):
    reader = io.read_trials_csv if args.format == "csv" else io.read_trials
    trials, labels = reader(args.trials)
    if args.trim:
        trials = [io.trim_pretrial(t) for t in trials]
    selection = biomarkers.FeatureSelection()
    rows, ids = [], []
    for trial in trials:
        rows.append(biomarkers.extract_trial(trial, selection, k_max=args.k_max).values)
        ids.append(trial.trial_id)
    dim, _pol = io.parse_label(labels[0])
    dataset = Dataset(np.array(rows), np.array([lab[1] for lab in labels]),
                      np.array(ids), "eeg", dim)
    io.write_feature_csv(args.out, dataset)
    print(f"wrote {len(rows)} trials x {dataset.dim} features to {args.out}")


def cmd_synth(args):
    spec = SynthSpec(
        n_per_class=args.n_per_class,
        latent_dim=args.latent_dim,
        dims=(args.d1, args.d2),
        noise=args.noise,
        seed=args.seed,
    )
    ds1, ds2 = synth_bimodal(spec, dimension=args.dimension)
    io.write_feature_csv(args.out1, ds1)
    io.write_feature_csv(args.out2, ds2)
    if args.spec_out:
        with open(args.spec_out, "w") as fh:
            json.dump(spec.to_dict(), fh, indent=2)
    print(f"wrote {len(ds1)} + {len(ds2)} samples to {args.out1}, {args.out2}")


def cmd_train_jecl(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    ds = _read_features(args.features, args.modality, args.dimension)
    by_class = {1: ds.x[ds.y == "+"], 2: ds.x[ds.y == "-"]}
    model = jecl.build_jecl(
        ds.dim, 2, setup=config.jecl.setup, hidden=config.jecl.hidden,
        kld_weight=config.jecl.kld_weight, seed=args.seed,
    )
    trace = jecl.train_jecl(
        model, by_class, epochs=config.jecl.epochs, lr=config.jecl.lr,
        val_frac=config.jecl.val_frac, patience=config.jecl.patience, seed=args.seed,
    )
    jecl.save_jecl(model, args.out)
    print(f"trained {len(trace.total)} epochs; final loss {trace.total[-1]:.4f}; saved {args.out}")


def cmd_fit_mbpls(args):
    model = jecl.load_jecl(args.jecl)
    ds = _read_features(args.features, args.modality, args.dimension)
    blocks = jecl.embed_blocks(model, ds.x)
    k = min(args.components, ds.x.shape[0] - 1, model.num_classes * ds.dim)
    pls = mbpls.fit(blocks, ds.x, k)
    mbpls.save_mbpls(pls, args.out)
    print(f"fitted {pls.n_components} LVs; residual {pls.residual_norm:.4f}; saved {args.out}")


def cmd_train_jmml(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    ds1 = _read_features(args.features1, "eeg", args.dimension)
    ds2 = _read_features(args.features2, "speech", args.dimension)
    scalers = [edcc.MinMaxScaler.fit(ds.x) for ds in (ds1, ds2)]
    x1, x2, _labels = pair_by_label(ds1, ds2, seed=args.seed)
    model = edcc.build_edcc(
        (ds1.dim, ds2.dim), setup=config.edcc.setup, hidden=config.edcc.hidden,
        projection_dim=config.edcc.projection_dim, seed=args.seed,
    )
    model.scalers = scalers
    trace = edcc.train_edcc(
        model, scalers[0].transform(x1), scalers[1].transform(x2),
        epochs=config.edcc.epochs, batch_size=config.edcc.batch_size, lr=config.edcc.lr,
        cca_w=config.edcc.cca_w, srec_w=config.edcc.srec_w, xrec_w=config.edcc.xrec_w,
        reg=config.edcc.reg, seed=args.seed,
    )
    edcc.save_edcc(model, args.out)
    print(f"trained {len(trace)} epochs; final total loss {trace[-1].total:.4f}; saved {args.out}")


def cmd_evaluate(args):
    ds = _read_features(args.features, args.modality, args.dimension)
    train, _val, test = stratified_split(ds, SplitSpec(seed=args.seed))
    train = mco_oversample(train, seed=args.seed + 1)
    if args.grid_search:
        n_est, depth = forest.grid_search(train.x, train.y, seed=args.seed)
    else:
        n_est, depth = args.n_estimators, args.max_depth
    clf = forest.fit_rf(train.x, train.y, n_est, depth, seed=args.seed)
    report = forest.evaluate(test.y, forest.predict(clf, test.x), average=args.f1_average)
    print(json.dumps(report.to_dict(), indent=2))


def cmd_run(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    rows = run_experiment(config)
    payload = rows_to_json(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
        print(f"wrote report to {args.out}")
    else:
        print(payload)
    if args.table:
        print(render_table(rows, config.dimension))


def build_parser():
    parser = argparse.ArgumentParser(prog="jmml", description="Two-step joint multi-modal emotion learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="EEG biomarker extraction from a trial container")
    p.add_argument("trials")
    p.add_argument("out")
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--trim", action="store_true", help="drop the 3s pre-trial window, keep 3-63s")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="generate the synthetic bimodal benchmark")
    p.add_argument("--out1", default="modality1.csv")
    p.add_argument("--out2", default="modality2.csv")
    p.add_argument("--spec-out", default=None)
    p.add_argument("--n-per-class", type=int, default=500)
    p.add_argument("--latent-dim", type=int, default=6)
    p.add_argument("--d1", type=int, default=64)
    p.add_argument("--d2", type=int, default=32)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dimension", choices=("valence", "arousal"), default="valence")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-jecl", help="train per-class joint emotion blocks")
    p.add_argument("--features", required=True)
    p.add_argument("--modality", choices=("eeg", "speech"), required=True)
    p.add_argument("--dimension", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_jecl)

    p = sub.add_parser("fit-mbpls", help="fit the multiblock projection on block embeddings")
    p.add_argument("--jecl", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--modality", choices=("eeg", "speech"), default="eeg")
    p.add_argument("--dimension", default=None)
    p.add_argument("--components", type=int, default=40)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_mbpls)

    p = sub.add_parser("train-jmml", help="train the cross-modal autoencoder")
    p.add_argument("--features1", required=True)
    p.add_argument("--features2", required=True)
    p.add_argument("--dimension", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_jmml)

    p = sub.add_parser("evaluate", help="random-forest evaluation of a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--modality", choices=("eeg", "speech"), default="eeg")
    p.add_argument("--dimension", default=None)
    p.add_argument("--n-estimators", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--grid-search", action="store_true")
    p.add_argument("--f1-average", choices=("macro", "weighted", "positive"), default="macro")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="run the full four-setup experiment")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as err:  # surface library errors as clean CLI failures
        if isinstance(err, (SystemExit, KeyboardInterrupt)):
            raise
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
