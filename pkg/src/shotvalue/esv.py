"""Monte Carlo shot value and the derived metrics.

The expected shot value at any moment is the mean predicted win probability
over futures sampled from the conditioned mixture, with deterministic
errors (and futures whose features are undefined) worth zero. The derived
metrics differ only in which coordinates of the encoding are pinned:

* shot-taking value: everything the impact player controls is fixed and
  the receiver coordinates are integrated out;
* shot selection (positional IQ): only the positional configuration is
  fixed (both players' stances and the bounce point);
* court coverage: shot-taking value minus the pointwise prediction against
  the actual receiver.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .conditioning import (
    LinearConstraint,
    ObservationSet,
    condition_mixture,
    sample_futures,
)
from .encoding import bounce_location
from .errors import FeatureError
from .geometry import CourtGeometry
from .outcome import batch_classify_error



@dataclass(frozen=True)
class McConfig:
    n_samples: int = 1000
    seed: int = 0
    batch_size: int = 4096

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass(frozen=True)
class EsvEstimate:
    mean: float
    se: float
    n_samples: int
    error_fraction: float

    def __post_init__(self):
        if not (-1e-12 <= self.mean <= 1.0 + 1e-12):
            raise ValueError(f"estimate mean {self.mean} outside [0, 1]")
        if self.se < 0:
            raise ValueError("standard error must be >= 0")


@dataclass(frozen=True)
class PartitionSpec:
    """Which encoding coordinates a metric pins before sampling futures."""

    name: str
    unit_features: tuple  # layout feature names fixed at observed values
    fix_bounce: bool = False  # pin ball (x, y, 0) at the observed bounce time

    @classmethod
    def vast(cls, layout):
        fixed = tuple(layout.names[i] for i in layout.shooter_ball_indices)
        return cls(name="vast", unit_features=fixed)

    @classmethod
    def shot_iq(cls, layout):
        return cls(
            name="shot_iq",
            unit_features=layout.shot_iq_unit_features,
            fix_bounce=True,
        )


@dataclass(frozen=True)
class ShotValuer:
    """Maps future encodings to values in [0, 1] with the error rule.

    Callable so toy outcome rules can stand in for the fitted model in
    tests and oracles.
    """

    outcome_model: object
    shot_type: str
    layout: object
    geometry: CourtGeometry = field(default_factory=CourtGeometry)
    handed_right: bool = True

    def __call__(self, futures):
        err, feats, valid = batch_classify_error(
            futures, self.shot_type, self.geometry, self.layout
        )
        feats = dict(feats)
        feats["handed_right"] = np.full(len(err), float(self.handed_right))
        values = np.zeros(len(err))
        ok = ~err
        if ok.any():
            sub = {k: np.asarray(v)[ok] for k, v in feats.items()}
            values[ok] = self.outcome_model.predict_prob(sub)
        return values, err


def _estimate_from_values(values, err_mask):
    values = np.asarray(values, dtype=float)
    n = len(values)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EsvEstimate(
        mean=min(max(mean, 0.0), 1.0),
        se=se,
        n_samples=n,
        error_fraction=float(np.mean(err_mask)),
    )


def esv_at(obs, mixture, valuer, mc):
    """Expected shot value given partial observations.

    ``valuer`` is any callable mapping a futures matrix to (values in
    [0, 1], error mask); build one from a fitted outcome model with
    ShotValuer. Deterministic given mc.seed.
    """
    conditioned = condition_mixture(mixture, obs)
    values = np.empty(mc.n_samples)
    errs = np.empty(mc.n_samples, dtype=bool)
    done = 0
    batch = 0
    while done < mc.n_samples:
        take = min(mc.batch_size, mc.n_samples - done)
        futures = sample_futures(conditioned, take, [mc.seed, batch])
        v, e = valuer(futures)
        values[done : done + take] = v
        errs[done : done + take] = e
        done += take
        batch += 1
    return _estimate_from_values(values, errs)


def _unit_constraints(vector, layout, names, noise_var=0.0):
    rows = []
    for name in names:
        row = np.zeros(layout.dim)
        idx = layout.index(name)
        row[idx] = 1.0
        rows.append(LinearConstraint(row, float(vector[idx]), noise_var))
    return rows


def _bounce_constraints(encoding, layout, noise_var=0.0):
    """Pin ball x, y (and z = 0) at the shot's own bounce time."""
    t1, bx, by = bounce_location(encoding)
    rows = []
    for dim, value in (("x", bx), ("y", by), ("z", 0.0)):
        row = np.zeros(layout.dim)
        row[layout.arc_block("arc1", dim)] = [1.0, t1, t1 * t1, t1**3]
        rows.append(LinearConstraint(row, value, noise_var))
    return rows


def partition_observations(encoding, spec, noise_var=0.0):
    """ObservationSet pinning the coordinates a metric holds fixed."""
    layout = encoding.layout
    vector = encoding.to_vector()
    rows = _unit_constraints(vector, layout, spec.unit_features, noise_var)
    if spec.fix_bounce:
        rows.extend(_bounce_constraints(encoding, layout, noise_var))
    return ObservationSet(dim=layout.dim, constraints=tuple(rows))


def vast(encoding, mixture, valuer, mc, receiver_marginal="conditional"):
    """Shot value against the average receiver: receiver coordinates are
    integrated out under the generative model.

    ``receiver_marginal`` = 'conditional' draws receivers from
    P(receiver | shot) (the default); 'prior' ignores the shot and uses the
    unconditional receiver marginal.
    """
    spec = PartitionSpec.vast(encoding.layout)
    obs = partition_observations(encoding, spec)
    if receiver_marginal == "conditional":
        return esv_at(obs, mixture, valuer, mc)
    if receiver_marginal != "prior":
        raise ValueError(f"unknown receiver_marginal {receiver_marginal!r}")
    # Prior variant: draw receiver coordinates from the unconditioned
    # mixture and paste the observed shooter/ball block on top.
    vector = encoding.to_vector()
    layout = encoding.layout
    from .mixture import sample as sample_mixture

    draws = sample_mixture(mixture, mc.n_samples, [mc.seed, 0])
    futures = np.tile(vector, (mc.n_samples, 1))
    futures[:, layout.receiver_indices] = draws[:, layout.receiver_indices]
    values, errs = valuer(futures)
    return _estimate_from_values(values, errs)


def shot_iq(encoding, mixture, valuer, mc):
    """Shot value with only the positional configuration fixed: both
    players' impact positions and the bounce point."""
    if encoding.bounce_flag != "one_bounce":
        raise FeatureError("shot selection value needs a one-bounce encoding")
    spec = PartitionSpec.shot_iq(encoding.layout)
    obs = partition_observations(encoding, spec)
    return esv_at(obs, mixture, valuer, mc)


def pointwise_value(encoding, valuer):
    """Prediction (with the error rule) on the fully observed encoding."""
    values, errs = valuer(encoding.to_vector()[None, :])
    return float(values[0]), bool(errs[0])


@dataclass(frozen=True)
class VaccResult:
    value: float  # vast_mean - pointwise
    vast: EsvEstimate
    pointwise: float


def vacc(encoding, mixture, valuer, mc, receiver_marginal="conditional"):
    """Receiver court-coverage credit: how much the actual receiver
    depressed the shot's value relative to the average receiver."""
    v = vast(encoding, mixture, valuer, mc, receiver_marginal)
    pw, _ = pointwise_value(encoding, valuer)
    return VaccResult(value=v.mean - pw, vast=v, pointwise=pw)


@dataclass(frozen=True)
class MetricRow:
    shot_id: str
    player_id: str
    shot_type: str
    metric: str
    value: float
    se: float


@dataclass(frozen=True)
class MetricReport:
    """Group means with over-corpus-average centering per shot type."""

    rows: tuple  # (player_id, shot_type, metric, mean, over_average, se, n)
    excluded: int = 0  # shots skipped (volleys etc.)


def aggregate(rows, group_keys=("player_id", "shot_type")):
    """Group means of per-shot metric rows.

    ``over_average`` is the group mean minus the corpus mean of the same
    (shot_type, metric) cell, matching the 'over average' presentation.
    """
    if not rows:
        raise ValueError("no metric rows to aggregate")
    for key in group_keys:
        if key not in ("player_id", "shot_type"):
            raise ValueError(f"unknown grouping key {key!r}")
    corpus = {}
    for r in rows:
        corpus.setdefault((r.shot_type, r.metric), []).append(r.value)
    corpus_mean = {k: float(np.mean(v)) for k, v in corpus.items()}
    groups = {}
    for r in rows:
        key = (r.player_id, r.shot_type, r.metric)
        groups.setdefault(key, []).append(r.value)
    out = []
    for (player, stype, metric), vals in sorted(groups.items()):
        vals = np.asarray(vals)
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        out.append(
            (
                player,
                stype,
                metric,
                mean,
                mean - corpus_mean[(stype, metric)],
                se,
                len(vals),
            )
        )
    return MetricReport(rows=tuple(out))


def heatmap(points, values, cell_size, region=None, geometry=None):
    """Grid of (cell center, mean value, count) over bounce locations.

    Cells cover the landing half-court unless an explicit region
    ``(x_min, x_max, y_min, y_max)`` is given; points outside are dropped.
    Empty cells are emitted with count 0 and no value (nan).
    """
    if cell_size <= 0:
        raise ValueError("cell size must be positive")
    geometry = geometry or CourtGeometry()
    if region is None:
        region = (
            -geometry.singles_half_width,
            geometry.singles_half_width,
            0.0,
            geometry.court_half_length,
        )
    x_min, x_max, y_min, y_max = region
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float)
    nx = max(1, int(math.ceil((x_max - x_min) / cell_size)))
    ny = max(1, int(math.ceil((y_max - y_min) / cell_size)))
    sums = np.zeros((nx, ny))
    counts = np.zeros((nx, ny), dtype=int)
    inside = (
        (points[:, 0] >= x_min)
        & (points[:, 0] <= x_max)
        & (points[:, 1] >= y_min)
        & (points[:, 1] <= y_max)
        & np.isfinite(values)
    )
    ix = np.clip(((points[:, 0] - x_min) / cell_size).astype(int), 0, nx - 1)
    iy = np.clip(((points[:, 1] - y_min) / cell_size).astype(int), 0, ny - 1)
    np.add.at(sums, (ix[inside], iy[inside]), values[inside])
    np.add.at(counts, (ix[inside], iy[inside]), 1)
    cells = []
    for i in range(nx):
        for j in range(ny):
            cx = float(x_min + (i + 0.5) * cell_size)
            cy = float(y_min + (j + 0.5) * cell_size)
            c = int(counts[i, j])
            mean = float(sums[i, j] / c) if c else float("nan")
            cells.append((cx, cy, mean, c))
    return cells


METRIC_CSV_COLUMNS = ("player_id", "shot_type", "metric", "mean", "se", "n")
HEATMAP_CSV_COLUMNS = ("cell_x", "cell_y", "mean", "count")


def write_metric_report(report, stream):
    """Emit the aggregated report; the over-corpus-average centering rides
    as additional rows with an ``_over_avg`` metric suffix."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(METRIC_CSV_COLUMNS)
    for player, stype, metric, mean, over, se, n in report.rows:
        w.writerow([player, stype, metric, repr(mean), repr(se), n])
    for player, stype, metric, mean, over, se, n in report.rows:
        w.writerow([player, stype, f"{metric}_over_avg", repr(over), repr(se), n])


def write_heatmap(cells, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(HEATMAP_CSV_COLUMNS)
    for cx, cy, mean, count in cells:
        w.writerow([repr(cx), repr(cy), "" if math.isnan(mean) else repr(mean), count])
