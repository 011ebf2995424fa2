"""Command-line pipeline driver.

Commands: simulate | encode | fit-gmm | fit-outcome | esv | metrics | heatmap.
Every command is idempotent given identical inputs and seed; outputs carry a
timestamp comment line unless --no-timestamp is passed. Exit codes: 0 on
success, 1 on runtime failure (single-line diagnostic on stderr), 2 on
config errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import esv as esv_mod
from . import mixture as mixture_mod
from . import outcome as outcome_mod
from . import persistence, synth
from .config import ConfigError, PipelineConfig, load_config, substream_seed
from .conditioning import constraints_from_observations
from .encoding import bounce_location, encode, encode_corpus, layout_for
from .errors import ShotValueError
from .geometry import CourtGeometry, load_geometry
from .tracking import canonicalize, parse_tracking

SHOT_GROUPS = [
    (stype, flag)
    for stype in ("serve", "serve_return", "rally")
    for flag in ("one_bounce", "no_bounce")
]


def _timestamp_line(cfg):
    if not cfg.timestamp:
        return None
    return f"# generated: {datetime.datetime.now().isoformat(timespec='seconds')}"


def _open_out(cfg, name):
    out = cfg.path("out_dir")
    out.mkdir(parents=True, exist_ok=True)
    fh = open(out / name, "w", encoding="utf-8", newline="")
    line = _timestamp_line(cfg)
    if line:
        fh.write(line + "\n")
    return fh


def _geometry(cfg):
    if cfg.geometry_file:
        return load_geometry(cfg.geometry_file)
    return CourtGeometry()


def _load_records(cfg):
    with open(cfg.tracking_csv, encoding="utf-8") as t, open(
        cfg.metadata_csv, encoding="utf-8"
    ) as m:
        records = parse_tracking(t, m)
    return [canonicalize(r) for r in records]


def _open_path(cfg, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", encoding="utf-8", newline="")
    line = _timestamp_line(cfg)
    if line:
        fh.write(line + "\n")
    return fh


def cmd_simulate(cfg):
    sc = synth.SynthConfig(
        noise_sd=cfg.synth_noise_sd,
        rate_hz=cfg.synth_rate_hz,
        volley_fraction=cfg.synth_volley_fraction,
        restitution=cfg.synth_restitution,
        geometry=_geometry(cfg),
    )
    shots = synth.generate_corpus(sc, cfg.synth_n, cfg.seed)
    with _open_path(cfg, cfg.tracking_csv) as t, _open_path(
        cfg, cfg.metadata_csv
    ) as m, _open_path(cfg, cfg.sidecar_csv) as s:
        synth.write_corpus(shots, t, m, s)
    n_err = sum(1 for s in shots if s.record.outcome.label == "error")
    n_win = sum(1 for s in shots if s.record.outcome.label == "win")
    print(
        f"simulated {len(shots)} shots ({n_win} win, {n_err} error) -> {cfg.tracking_csv}",
        file=sys.stderr,
    )
    return 0


def _encoding_paths(cfg):
    return {
        "one_bounce": cfg.path("out_dir") / "encodings_one_bounce.csv",
        "no_bounce": cfg.path("out_dir") / "encodings_no_bounce.csv",
    }


def cmd_encode(cfg):
    records = _load_records(cfg)
    buckets, failures = encode_corpus(records)
    meta = {r.shot_id: r for r in records}
    for flag, path in _encoding_paths(cfg).items():
        ids, types, matrix = buckets[flag]
        layout = layout_for(flag)
        with _open_out(cfg, path.name) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("shot_id", "shot_type", "bounce_flag") + layout.names)
            for i, sid in enumerate(ids):
                w.writerow([sid, types[i], flag] + [repr(float(x)) for x in matrix[i]])
    if failures:
        with _open_out(cfg, "encoding_failures.csv") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("shot_id", "reason"))
            w.writerows(failures)
    print(
        f"encoded {sum(len(b[0]) for b in buckets.values())} shots "
        f"({len(failures)} failures)",
        file=sys.stderr,
    )
    return 0


def _read_encodings(cfg, flag):
    path = _encoding_paths(cfg)[flag]
    layout = layout_for(flag)
    ids, types, rows = [], [], []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = row
                expected = ["shot_id", "shot_type", "bounce_flag"] + list(layout.names)
                if row != expected:
                    raise ShotValueError(f"{path}: unexpected encoding header")
                continue
            ids.append(row[0])
            types.append(row[1])
            rows.append([float(x) for x in row[3:]])
    matrix = np.array(rows) if rows else np.empty((0, layout.dim))
    return ids, types, matrix


def _mixture_path(cfg, stype, flag):
    return cfg.path("model_dir") / f"mixture_{stype}_{flag}.json"


def cmd_fit_gmm(cfg):
    cfg.path("model_dir").mkdir(parents=True, exist_ok=True)
    fitted = 0
    for flag in ("one_bounce", "no_bounce"):
        ids, types, matrix = _read_encodings(cfg, flag)
        layout = layout_for(flag)
        types = np.array(types)
        for stype in ("serve", "serve_return", "rally"):
            sel = types == stype
            data = matrix[sel]
            rng = np.random.default_rng(substream_seed(cfg.seed, "split", stype, flag))
            order = rng.permutation(data.shape[0])
            n_hold = int(round(cfg.split_fraction * data.shape[0]))
            if data.shape[0] - n_hold <= layout.dim:
                print(
                    f"skipping {stype}/{flag}: {data.shape[0] - n_hold} training rows "
                    f"<= dim {layout.dim}",
                    file=sys.stderr,
                )
                continue
            hold, train = data[order[:n_hold]], data[order[n_hold:]]
            fc = mixture_mod.FitConfig(
                truncation=cfg.truncation,
                max_iter=cfg.fit_max_iter,
                tol=cfg.fit_tol,
                restarts=cfg.fit_restarts,
                jitter=cfg.fit_jitter,
                seed=substream_seed(cfg.seed, "fit", stype, flag)[-1],
            )
            model, report = mixture_mod.fit(
                train, config=fc, heldout=hold if len(hold) else None
            )
            model = replace(
                model, bounce_flag=flag, feature_names=tuple(layout.names)
            )
            persistence.save_model(model, _mixture_path(cfg, stype, flag))
            with _open_out(cfg, f"fit_report_{stype}_{flag}.csv") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("iteration", "elbo"))
                for i, v in enumerate(report.elbo_trace):
                    w.writerow([i, repr(float(v))])
                w.writerow(("converged", report.converged))
                w.writerow(("effective_components", report.effective_components))
                w.writerow(("heldout_loglik", repr(report.heldout_loglik)))
            fitted += 1
            print(
                f"fit {stype}/{flag}: n={data.shape[0]} K={model.n_components} "
                f"heldout={report.heldout_loglik:.3f}",
                file=sys.stderr,
            )
    if fitted == 0:
        raise ShotValueError("no (shot_type, bounce_flag) group had enough rows to fit")
    return 0


def _labels_by_id(cfg):
    labels = {}
    hands = {}
    receivers = {}
    shooters = {}
    with open(cfg.metadata_csv, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = row
                continue
            sid, stype, shooter, receiver, sh_hand, rc_hand, outcome = (
                f.strip() for f in row
            )
            labels[sid] = outcome
            hands[sid] = rc_hand
            receivers[sid] = receiver
            shooters[sid] = shooter
    return labels, hands, shooters, receivers


def _outcome_path(cfg, key):
    return cfg.path("model_dir") / f"outcome_{key}.json"


def cmd_fit_outcome(cfg):
    cfg.path("model_dir").mkdir(parents=True, exist_ok=True)
    labels, hands, _, _ = _labels_by_id(cfg)
    ids, types, matrix = _read_encodings(cfg, "one_bounce")
    layout = layout_for("one_bounce")
    geometry = _geometry(cfg)
    types = np.array(types)
    for key in ("serve", "rally"):
        sel = (
            types == "serve" if key == "serve" else (types != "serve")
        )
        sub = matrix[sel]
        sub_ids = [i for i, s in zip(ids, sel) if s]
        handed = np.array([hands[i] == "right" for i in sub_ids], dtype=float)
        feats, valid = outcome_mod.batch_features(sub, layout)
        feats = dict(feats)
        feats["handed_right"] = handed
        y = np.array([labels[i] for i in sub_ids])
        keep = valid & (y != "error")
        feats = {k: np.asarray(v)[keep] for k, v in feats.items()}
        y = y[keep]
        model, report = outcome_mod.fit_outcome(
            feats,
            y,
            outcome_mod.OutcomeConfig(
                n_interior_knots=cfg.outcome_knots,
                seed=substream_seed(cfg.seed, "outcome", key)[-1],
            ),
        )
        persistence.save_model(model, _outcome_path(cfg, key))
        with _open_out(cfg, f"outcome_report_{key}.csv") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("field", "value"))
            w.writerow(("heldout_log_loss", repr(report.heldout_log_loss)))
            w.writerow(("precision", repr(report.precision)))
            w.writerow(("recall", repr(report.recall)))
            w.writerow(("chosen_lambda", repr(report.chosen_lambda)))
            w.writerow(("bin_lo", "bin_hi", "n", "mean_pred", "win_rate"))
            for row in report.calibration:
                w.writerow([repr(row[0]), repr(row[1]), row[2], repr(row[3]), repr(row[4])])
        print(
            f"fit outcome/{key}: n={len(y)} log_loss={report.heldout_log_loss:.4f} "
            f"lambda={report.chosen_lambda}",
            file=sys.stderr,
        )
    return 0


def _load_models(cfg):
    mixtures = {}
    for stype, flag in SHOT_GROUPS:
        path = _mixture_path(cfg, stype, flag)
        if path.exists():
            mixtures[(stype, flag)] = persistence.load_model(path)
    outcomes = {}
    for key in ("serve", "rally"):
        path = _outcome_path(cfg, key)
        if path.exists():
            outcomes[key] = persistence.load_model(path)
    if not mixtures or not outcomes:
        raise ShotValueError(
            f"missing persisted models under {cfg.model_dir}; run fit-gmm and fit-outcome"
        )
    return mixtures, outcomes


def _valuer_for(record, outcomes, geometry):
    key = "serve" if record.shot_type == "serve" else "rally"
    return esv_mod.ShotValuer(
        outcome_model=outcomes[key],
        shot_type=record.shot_type,
        layout=layout_for("one_bounce"),
        geometry=geometry,
        handed_right=record.receiver_meta.handedness == "right",
    )


def cmd_esv(cfg, shot_id, t):
    records = _load_records(cfg)
    matches = [r for r in records if r.shot_id == shot_id]
    if not matches:
        raise ShotValueError(f"shot {shot_id} not found in {cfg.tracking_csv}")
    record = matches[0]
    if record.bounce_flag != "one_bounce":
        raise ShotValueError(f"shot {shot_id} has no bounce; ESV needs one-bounce shots")
    mixtures, outcomes = _load_models(cfg)
    key = (record.shot_type, record.bounce_flag)
    if key not in mixtures:
        raise ShotValueError(f"no mixture persisted for {key[0]}/{key[1]}")
    geometry = _geometry(cfg)
    enc, _ = encode(record)
    t1, _, _ = bounce_location(enc)
    obs_rows = []
    for s in record.samples:
        if s.t <= t:
            if s.entity == "ball":
                obs_rows.extend(
                    [("ball", s.t, "x", s.x), ("ball", s.t, "y", s.y), ("ball", s.t, "z", s.z)]
                )
            else:
                obs_rows.extend(
                    [(s.entity, s.t, "x", s.x), (s.entity, s.t, "y", s.y)]
                )
    obs = constraints_from_observations(obs_rows, layout_for("one_bounce"), t1)
    valuer = _valuer_for(record, outcomes, geometry)
    mc = esv_mod.McConfig(
        n_samples=cfg.mc_samples, seed=substream_seed(cfg.seed, "esv", shot_id)[-1]
    )
    est = esv_mod.esv_at(obs, mixtures[key], valuer, mc)
    print(
        f"shot {shot_id} t={t}: esv={est.mean!r} se={est.se!r} "
        f"n={est.n_samples} error_fraction={est.error_fraction!r}"
    )
    return 0


def cmd_metrics(cfg):
    records = _load_records(cfg)
    mixtures, outcomes = _load_models(cfg)
    geometry = _geometry(cfg)
    rows = []
    excluded = 0
    per_shot_path = _open_out(cfg, "metrics_per_shot.csv")
    with per_shot_path as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("shot_id", "player_id", "shot_type", "metric", "value", "se"))
        for record in records:
            if record.bounce_flag != "one_bounce":
                excluded += 1
                continue
            key = (record.shot_type, record.bounce_flag)
            if key not in mixtures:
                excluded += 1
                continue
            try:
                enc, _ = encode(record)
            except ShotValueError:
                excluded += 1
                continue
            valuer = _valuer_for(record, outcomes, geometry)
            mc = esv_mod.McConfig(
                n_samples=cfg.mc_samples,
                seed=substream_seed(cfg.seed, "metrics", record.shot_id)[-1],
            )
            try:
                vc = esv_mod.vacc(enc, mixtures[key], valuer, mc)
                iq = esv_mod.shot_iq(enc, mixtures[key], valuer, mc)
            except ShotValueError:
                excluded += 1
                continue
            shooter = record.shooter_meta.player_id
            receiver = record.receiver_meta.player_id
            trio = [
                esv_mod.MetricRow(record.shot_id, shooter, record.shot_type, "vast", vc.vast.mean, vc.vast.se),
                esv_mod.MetricRow(record.shot_id, shooter, record.shot_type, "shot_iq", iq.mean, iq.se),
                esv_mod.MetricRow(record.shot_id, receiver, record.shot_type, "vacc", vc.value, vc.vast.se),
            ]
            rows.extend(trio)
            for r in trio:
                w.writerow([r.shot_id, r.player_id, r.shot_type, r.metric, repr(r.value), repr(r.se)])
    if not rows:
        raise ShotValueError("no shots were eligible for metrics")
    report = esv_mod.aggregate(rows)
    report = esv_mod.MetricReport(rows=report.rows, excluded=excluded)
    with _open_out(cfg, "metrics_report.csv") as fh:
        esv_mod.write_metric_report(report, fh)
    print(
        f"metrics over {len({r.shot_id for r in rows})} shots "
        f"({excluded} excluded) -> {cfg.path('out_dir') / 'metrics_report.csv'}",
        file=sys.stderr,
    )
    return 0


def cmd_heatmap(cfg, metric, cell_size):
    if metric not in ("vast", "shot_iq", "vacc"):
        raise ShotValueError(f"unknown metric {metric!r}")
    values_by_shot = {}
    with open(cfg.path("out_dir") / "metrics_per_shot.csv", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = row
                continue
            if row[3] == metric:
                values_by_shot[row[0]] = float(row[4])
    ids, _, matrix = _read_encodings(cfg, "one_bounce")
    layout = layout_for("one_bounce")
    feats, valid = outcome_mod.batch_features(matrix, layout)
    points, values = [], []
    for i, sid in enumerate(ids):
        if sid in values_by_shot and valid[i]:
            points.append((feats["bounce_x"][i], feats["bounce_y"][i]))
            values.append(values_by_shot[sid])
    if not points:
        raise ShotValueError(f"no {metric} values found; run metrics first")
    cells = esv_mod.heatmap(points, values, cell_size, geometry=_geometry(cfg))
    with _open_out(cfg, f"heatmap_{metric}.csv") as fh:
        esv_mod.write_heatmap(cells, fh)
    print(f"heatmap over {len(points)} shots -> heatmap_{metric}.csv", file=sys.stderr)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="shotvalue",
        description="Expected shot value pipeline for tennis tracking data",
    )
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None, help="override the global seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument(
        "--no-timestamp",
        action="store_true",
        help="suppress the timestamp comment line in outputs",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "encode", "fit-gmm", "fit-outcome", "metrics"):
        sub.add_parser(name)
    pe = sub.add_parser("esv")
    pe.add_argument("shot_id")
    pe.add_argument("t", type=float)
    ph = sub.add_parser("heatmap")
    ph.add_argument("metric", choices=["vast", "shot_iq", "vacc"])
    ph.add_argument("--cell-size", type=float, default=0.5)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.no_timestamp:
            cfg = replace(cfg, timestamp=False)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "encode":
            return cmd_encode(cfg)
        if args.command == "fit-gmm":
            return cmd_fit_gmm(cfg)
        if args.command == "fit-outcome":
            return cmd_fit_outcome(cfg)
        if args.command == "esv":
            return cmd_esv(cfg, args.shot_id, args.t)
        if args.command == "metrics":
            return cmd_metrics(cfg)
        if args.command == "heatmap":
            return cmd_heatmap(cfg, args.metric, args.cell_size)
        raise ShotValueError(f"unknown command {args.command!r}")
    except (ShotValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
