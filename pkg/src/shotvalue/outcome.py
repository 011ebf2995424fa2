"""Shot outcome features and the win-vs-in-play classifier.

Deterministic errors are classified from geometry alone: a shot whose
bounce lands outside the legal region, or that fails to clear the net, is
worth zero. Every other one-bounce shot is scored by a penalized additive
logistic model over speed, height, bounce location, and receiver features.

The hot path is batch extraction over matrices of sampled futures, so all
feature logic is written against (n, dim) arrays; the single-encoding
operations wrap batches of one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .encoding import ONE_BOUNCE_LAYOUT, T1_CAP
from .errors import FeatureError, FitError
from .geometry import CourtGeometry
from .splines import SplineBasis1D, TensorBasis2D, _sigmoid, irls_logistic, log_loss

GOOD_POSITION_HEIGHT = 1.0

SMOOTH_FEATURES = (
    "impact_speed",
    "bounce_speed",
    "net_clearance",
    "receiver_x",
    "receiver_y",
    "dist_good_position",
    "required_speed",
)
TENSOR_FEATURES = ("bounce_x", "bounce_y")
LINEAR_FEATURES = ("handed_right",)

FEATURE_COLUMNS = SMOOTH_FEATURES + TENSOR_FEATURES + LINEAR_FEATURES


@dataclass(frozen=True)
class ShotFeatures:
    """Predictive features of one complete one-bounce shot."""

    impact_speed: float
    bounce_speed: float
    net_clearance: float  # ball z at the y = 0 crossing
    bounce_x: float
    bounce_y: float
    receiver_x: float
    receiver_y: float
    handed_right: bool
    dist_good_position: float
    required_speed: float
    shot_type: str

    def as_row(self):
        return {name: float(getattr(self, name)) for name in FEATURE_COLUMNS}


def _blocks(vectors, layout):
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.shape[1] != layout.dim:
        raise FeatureError(f"vectors have dim {v.shape[1]}, layout needs {layout.dim}")
    return v


def batch_features(vectors, layout=ONE_BOUNCE_LAYOUT, handed_right=True, t1_cap=T1_CAP):
    """Feature arrays plus a validity mask for a matrix of one-bounce
    encodings.

    Rows fail (mask False) when the arc-1 z polynomial has no bounce root
    or the ball never crosses the net before bouncing; such futures are
    error-class by construction.
    """
    if layout.bounce_flag != "one_bounce":
        raise FeatureError("outcome features are defined for one-bounce encodings")
    v = _blocks(vectors, layout)
    n = v.shape[0]
    a1x = v[:, layout.arc_block("arc1", "x")]
    a1y = v[:, layout.arc_block("arc1", "y")]
    a1z = v[:, layout.arc_block("arc1", "z")]
    a2x = v[:, layout.arc_block("arc2", "x")]
    a2y = v[:, layout.arc_block("arc2", "y")]
    a2z = v[:, layout.arc_block("arc2", "z")]

    t1 = _kernels.smallest_root_in(a1z, 0.0, t1_cap)
    valid = np.isfinite(t1)
    t1s = np.where(valid, t1, 1.0)

    bounce_x = _kernels.poly_eval(a1x, t1s)
    bounce_y = _kernels.poly_eval(a1y, t1s)

    # Net crossing: earliest y = 0 before the bounce.
    t_net = _kernels.smallest_root_in(a1y, 0.0, t1s)
    crossed = np.isfinite(t_net)
    valid &= crossed
    t_nets = np.where(crossed, t_net, 0.0)
    net_clearance = _kernels.poly_eval(a1z, t_nets)

    zero = np.zeros(n)
    vx0 = _kernels.poly_deriv(a1x, zero)
    vy0 = _kernels.poly_deriv(a1y, zero)
    vz0 = _kernels.poly_deriv(a1z, zero)
    impact_speed = np.sqrt(vx0**2 + vy0**2 + vz0**2)
    vx1 = _kernels.poly_deriv(a1x, t1s)
    vy1 = _kernels.poly_deriv(a1y, t1s)
    vz1 = _kernels.poly_deriv(a1z, t1s)
    bounce_speed = np.sqrt(vx1**2 + vy1**2 + vz1**2)

    # Good position: first time arc-2 z reaches 1 m; apex fallback; the
    # bounce instant itself when the arc never rises.
    level = a2z.copy()
    level[:, 0] -= GOOD_POSITION_HEIGHT
    t_gp = _kernels.smallest_root_in(level, -1e-12, np.inf)
    apex = _kernels.first_local_max(a2z)
    t_gp = np.where(np.isfinite(t_gp), t_gp, apex)
    t_gp = np.where(np.isfinite(t_gp), t_gp, 0.0)
    gp_x = _kernels.poly_eval(a2x, t_gp)
    gp_y = _kernels.poly_eval(a2y, t_gp)

    rx = v[:, layout.index("receiver_x_intercept")]
    ry = v[:, layout.index("receiver_y_intercept")]
    dist_gp = np.hypot(rx - gp_x, ry - gp_y)
    required_speed = dist_gp / np.maximum(t1s + t_gp, 1e-9)

    handed = np.broadcast_to(
        np.asarray(handed_right, dtype=float), (n,)
    ).astype(float)

    features = {
        "impact_speed": impact_speed,
        "bounce_speed": bounce_speed,
        "net_clearance": net_clearance,
        "bounce_x": bounce_x,
        "bounce_y": bounce_y,
        "receiver_x": rx,
        "receiver_y": ry,
        "dist_good_position": dist_gp,
        "required_speed": required_speed,
        "handed_right": handed,
        "t1": t1s,
        "t_good_position": t_gp,
        "gp_x": gp_x,
        "gp_y": gp_y,
    }
    return features, valid


def batch_classify_error(vectors, shot_type, geometry=None, layout=ONE_BOUNCE_LAYOUT):
    """Per-row deterministic error flags for one-bounce encodings.

    True when the bounce lands outside the legal region (either service box
    for serves, the opponent singles court otherwise), when the ball fails
    to clear the net, or when the feature extraction itself fails.
    """
    geometry = geometry or CourtGeometry()
    feats, valid = batch_features(vectors, layout)
    err = ~valid
    bx, by = feats["bounce_x"], feats["bounce_y"]
    depth = (
        geometry.service_line_distance
        if shot_type == "serve"
        else geometry.court_half_length
    )
    with np.errstate(invalid="ignore"):
        inside = (
            (np.abs(bx) <= geometry.singles_half_width) & (by >= 0.0) & (by <= depth)
        )
        err |= ~inside
        err |= feats["net_clearance"] < geometry.net_height_center
    return err, feats, valid


def classify_error(encoding, shot_type, geometry=None):
    """Deterministic error rule for one complete encoding."""
    err, _, valid = batch_classify_error(
        encoding.to_vector(), shot_type, geometry, encoding.layout
    )
    if not valid[0]:
        raise FeatureError("encoding has no bounce root or never reaches the net")
    return bool(err[0])


def good_position(encoding):
    """((x, y), t) where the ball first reaches 1 m out of the bounce, on
    arc-2 time; falls back to the arc-2 apex below 1 m."""
    if encoding.bounce_flag != "one_bounce":
        raise FeatureError("good_position requires a one-bounce encoding (arc 2)")
    feats, _ = batch_features(encoding.to_vector(), encoding.layout)
    return (float(feats["gp_x"][0]), float(feats["gp_y"][0])), float(
        feats["t_good_position"][0]
    )


def extract_features(encoding, receiver_meta=None, geometry=None, shot_type="rally"):
    """ShotFeatures of one complete encoding; FeatureError when undefined
    (no bounce root, or the shot never crosses the net)."""
    handed = receiver_meta.handedness == "right" if receiver_meta else True
    feats, valid = batch_features(
        encoding.to_vector(), encoding.layout, handed_right=handed
    )
    if not valid[0]:
        raise FeatureError(
            "features undefined: no bounce root or no net crossing before the bounce"
        )
    return ShotFeatures(
        impact_speed=float(feats["impact_speed"][0]),
        bounce_speed=float(feats["bounce_speed"][0]),
        net_clearance=float(feats["net_clearance"][0]),
        bounce_x=float(feats["bounce_x"][0]),
        bounce_y=float(feats["bounce_y"][0]),
        receiver_x=float(feats["receiver_x"][0]),
        receiver_y=float(feats["receiver_y"][0]),
        handed_right=bool(handed),
        dist_good_position=float(feats["dist_good_position"][0]),
        required_speed=float(feats["required_speed"][0]),
        shot_type=shot_type,
    )


@dataclass(frozen=True)
class OutcomeConfig:
    n_interior_knots: int = 8
    tensor_interior_knots: int = 2  # 6 basis functions per marginal
    lambda_grid: tuple = (0.01, 0.1, 1.0, 10.0, 100.0)
    val_fraction: float = 0.2
    max_iter: int = 100
    seed: int = 0


@dataclass(frozen=True)
class TrainReport:
    heldout_log_loss: float
    precision: float
    recall: float
    calibration: tuple  # rows (bin_lo, bin_hi, n, mean_pred, win_rate)
    chosen_lambda: float
    grid_log_loss: tuple  # (lambda, validation log-loss) pairs
    n_train: int
    n_val: int


@dataclass(frozen=True)
class OutcomeModel:
    """Basis-expanded penalized logistic classifier for P(win)."""

    smooth_bases: dict  # feature name -> SplineBasis1D
    tensor_basis: TensorBasis2D
    coef: np.ndarray
    ridge_lambda: float
    report: TrainReport | None = field(default=None, repr=False)

    def design(self, features):
        """Model matrix from a dict of feature arrays (clamped to knots)."""
        cols = [np.ones(len(np.atleast_1d(features[SMOOTH_FEATURES[0]])))[:, None]]
        for name in SMOOTH_FEATURES:
            cols.append(self.smooth_bases[name].design(np.atleast_1d(features[name])))
        cols.append(
            self.tensor_basis.design(
                np.atleast_1d(features["bounce_x"]), np.atleast_1d(features["bounce_y"])
            )
        )
        cols.append(np.atleast_1d(features["handed_right"]).astype(float)[:, None])
        return np.hstack(cols)

    def penalty_diag(self, lam):
        sizes = [1]
        sizes += [self.smooth_bases[n].n_basis for n in SMOOTH_FEATURES]
        sizes += [self.tensor_basis.n_basis, 1]
        pen = []
        for i, s in enumerate(sizes):
            penalized = 0 < i < len(sizes) - 1  # splines only
            pen.extend([lam if penalized else 0.0] * s)
        return np.array(pen)

    def predict_prob(self, features):
        """P(win) for a dict of feature arrays or a ShotFeatures value."""
        if isinstance(features, ShotFeatures):
            return float(self.predict_prob(features.as_row())[0])
        X = self.design(features)
        return _sigmoid(X @ self.coef)

    def to_dict(self):
        return {
            "version": 1,
            "kind": "outcome",
            "ridge_lambda": self.ridge_lambda,
            "smooth_bases": {
                name: self.smooth_bases[name].knots.tolist() for name in SMOOTH_FEATURES
            },
            "tensor_basis": {
                "x": self.tensor_basis.basis_x.knots.tolist(),
                "y": self.tensor_basis.basis_y.knots.tolist(),
            },
            "coef": self.coef.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("kind") != "outcome":
            raise FitError(f"expected kind 'outcome', got {doc.get('kind')!r}")
        bases = {
            name: SplineBasis1D(np.array(doc["smooth_bases"][name]))
            for name in SMOOTH_FEATURES
        }
        tens = TensorBasis2D(
            SplineBasis1D(np.array(doc["tensor_basis"]["x"])),
            SplineBasis1D(np.array(doc["tensor_basis"]["y"])),
        )
        return cls(
            smooth_bases=bases,
            tensor_basis=tens,
            coef=np.array(doc["coef"]),
            ridge_lambda=doc["ridge_lambda"],
        )


def _features_to_arrays(features):
    if isinstance(features, dict):
        return {k: np.asarray(v, dtype=float) for k, v in features.items()}
    rows = [f.as_row() for f in features]
    return {name: np.array([r[name] for r in rows]) for name in FEATURE_COLUMNS}


def _calibration_table(y, p, n_bins=10):
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    rows = []
    for i in range(n_bins):
        lo, hi = float(edges[i]), float(edges[i + 1])
        sel = (p >= lo) & (p < hi) if i < n_bins - 1 else (p >= lo) & (p <= hi)
        if sel.any():
            rows.append((lo, hi, int(sel.sum()), float(p[sel].mean()), float(y[sel].mean())))
        else:
            rows.append((lo, hi, 0, float("nan"), float("nan")))
    return tuple(rows)


def fit_outcome(features, labels, config=None):
    """Fit the penalized classifier; smoothing chosen on an internal split.

    ``labels`` are 'win'/'in_play' strings or a 0/1 array (errors must be
    removed upstream). Returns (OutcomeModel, TrainReport); the returned
    model is refit on all rows at the selected smoothing.
    """
    config = config or OutcomeConfig()
    arrays = _features_to_arrays(features)
    n = len(arrays["impact_speed"])
    labels_arr = np.asarray(labels)
    if labels_arr.dtype.kind in "US":
        bad = set(np.unique(labels_arr)) - {"win", "in_play"}
        if bad:
            raise FitError(f"labels must be win/in_play (errors removed upstream), got {bad}")
        y = (labels_arr == "win").astype(float)
    else:
        y = labels_arr.astype(float)
    if len(y) != n:
        raise FitError(f"{n} feature rows but {len(y)} labels")
    if n < 200:
        raise FitError(f"need >= 200 rows to fit the outcome model, got {n}")
    if y.min() == y.max():
        raise FitError("single-class labels: need both win and in_play rows")

    bases = {
        name: SplineBasis1D.from_values(arrays[name], config.n_interior_knots)
        for name in SMOOTH_FEATURES
    }
    tensor = TensorBasis2D.from_values(
        arrays["bounce_x"], arrays["bounce_y"], config.tensor_interior_knots
    )
    proto = OutcomeModel(
        smooth_bases=bases, tensor_basis=tensor, coef=np.zeros(1), ridge_lambda=0.0
    )
    X = proto.design(arrays)

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    n_val = max(1, int(round(config.val_fraction * n)))
    val_idx, train_idx = order[:n_val], order[n_val:]

    grid = []
    best = None
    for lam in config.lambda_grid:
        pen = proto.penalty_diag(lam)
        beta = irls_logistic(X[train_idx], y[train_idx], pen, config.max_iter)
        p_val = _sigmoid(X[val_idx] @ beta)
        ll = log_loss(y[val_idx], p_val)
        grid.append((lam, ll))
        if best is None or ll < best[1]:
            best = (lam, ll, beta)
    lam_star, _, beta_star = best

    p_val = _sigmoid(X[val_idx] @ beta_star)
    pred_pos = p_val > 0.5
    tp = float(np.sum(pred_pos & (y[val_idx] == 1.0)))
    precision = tp / pred_pos.sum() if pred_pos.any() else 0.0
    recall = tp / (y[val_idx] == 1.0).sum() if (y[val_idx] == 1.0).any() else 0.0
    report = TrainReport(
        heldout_log_loss=log_loss(y[val_idx], p_val),
        precision=float(precision),
        recall=float(recall),
        calibration=_calibration_table(y[val_idx], p_val),
        chosen_lambda=float(lam_star),
        grid_log_loss=tuple(grid),
        n_train=len(train_idx),
        n_val=len(val_idx),
    )

    final_beta = irls_logistic(X, y, proto.penalty_diag(lam_star), config.max_iter)
    model = OutcomeModel(
        smooth_bases=bases,
        tensor_basis=tensor,
        coef=final_beta,
        ridge_lambda=float(lam_star),
        report=report,
    )
    return model, report


def predict_win(model, features):
    """Win probability in (0, 1); features outside the basis support are
    clamped to the boundary knots."""
    return model.predict_prob(features)
