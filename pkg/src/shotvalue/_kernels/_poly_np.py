"""Vectorized numpy implementation of the polynomial kernels.

Coefficients are row vectors (c0, c1, c2, c3) of up-to-cubic polynomials
p(t) = c0 + c1 t + c2 t^2 + c3 t^3. All kernels operate on batches: one
polynomial per row. This module is the portable fallback for the compiled
extension and must match its semantics exactly.
"""

import numpy as np

# A cubic whose leading coefficient is this small relative to the row scale
# is solved as a quadratic; Newton polishing against the full cubic then
# recovers any lost accuracy.
_DEGREE_DROP = 1e-12

_NEWTON_STEPS = 3


def poly_eval(coeffs, t):
    """Evaluate each row polynomial at its own time: p_i(t_i)."""
    c = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    return ((c[:, 3] * t + c[:, 2]) * t + c[:, 1]) * t + c[:, 0]


def poly_deriv(coeffs, t):
    """Evaluate each row's first derivative at its own time: p_i'(t_i)."""
    c = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    return (3.0 * c[:, 3] * t + 2.0 * c[:, 2]) * t + c[:, 1]


def _real_roots(c):
    """All real roots per row, NaN-padded, shape (n, 3).

    Branches on effective degree; cubic roots via the trigonometric /
    Cardano closed form.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    roots = np.full((n, 3), np.nan)
    scale = np.max(np.abs(c), axis=1)
    scale = np.where(scale > 0, scale, 1.0)

    cubic = np.abs(c[:, 3]) > _DEGREE_DROP * scale
    quad = ~cubic & (np.abs(c[:, 2]) > _DEGREE_DROP * scale)
    lin = ~cubic & ~quad & (np.abs(c[:, 1]) > _DEGREE_DROP * scale)

    if np.any(lin):
        roots[lin, 0] = -c[lin, 0] / c[lin, 1]

    if np.any(quad):
        a, b, c0 = c[quad, 2], c[quad, 1], c[quad, 0]
        disc = b * b - 4.0 * a * c0
        ok = disc >= 0.0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        # Citardauq-style pairing avoids cancellation for small roots.
        qq = -0.5 * (b + np.sign(np.where(b != 0, b, 1.0)) * sq)
        r1 = np.where(ok, qq / a, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = np.where(ok & (qq != 0), c0 / qq, np.where(ok, -b / a - r1, np.nan))
        idx = np.where(quad)[0]
        roots[idx, 0] = r1
        roots[idx, 1] = r2

    if np.any(cubic):
        idx = np.where(cubic)[0]
        b = c[idx, 2] / c[idx, 3]
        cc = c[idx, 1] / c[idx, 3]
        d = c[idx, 0] / c[idx, 3]
        # Depressed cubic s^3 + p s + q with t = s - b/3.
        p = cc - b * b / 3.0
        q = 2.0 * b**3 / 27.0 - b * cc / 3.0 + d
        shift = -b / 3.0
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

        one = disc > 0.0  # single real root
        if np.any(one):
            sq = np.sqrt(disc[one])
            u = np.cbrt(-q[one] / 2.0 + sq)
            v = np.cbrt(-q[one] / 2.0 - sq)
            roots[idx[one], 0] = u + v + shift[one]
        three = ~one  # three real roots (possibly repeated)
        if np.any(three):
            p3 = p[three]
            q3 = q[three]
            m = np.sqrt(np.maximum(-p3 / 3.0, 0.0))
            # Guard p ~ 0 (triple root): arg -> 0.
            with np.errstate(divide="ignore", invalid="ignore"):
                arg = np.where(m > 0, 3.0 * q3 / (2.0 * p3 * m), 0.0)
            arg = np.clip(arg, -1.0, 1.0)
            theta = np.arccos(arg) / 3.0
            for j, off in enumerate((0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)):
                roots[idx[three], j] = 2.0 * m * np.cos(theta - off) + shift[three]
    return roots


def _polish(c, roots):
    """A few Newton steps per candidate against the full cubic."""
    for _ in range(_NEWTON_STEPS):
        with np.errstate(invalid="ignore", divide="ignore"):
            f = ((c[:, 3, None] * roots + c[:, 2, None]) * roots + c[:, 1, None]) * roots + c[
                :, 0, None
            ]
            fp = (3.0 * c[:, 3, None] * roots + 2.0 * c[:, 2, None]) * roots + c[:, 1, None]
            step = np.where(np.abs(fp) > 0, f / fp, 0.0)
            step = np.where(np.isfinite(step), step, 0.0)
            roots = roots - step
    return roots


def smallest_root_in(coeffs, lo, hi):
    """Per row: smallest real root r with lo < r <= hi, NaN when none.

    ``hi`` may be a scalar or a per-row array (np.inf allowed).
    """
    c = np.ascontiguousarray(coeffs, dtype=float)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (c.shape[0],))
    roots = _polish(c, _real_roots(c))
    ok = np.isfinite(roots) & (roots > lo) & (roots <= hi[:, None])
    masked = np.where(ok, roots, np.inf)
    best = masked.min(axis=1)
    return np.where(np.isfinite(best), best, np.nan)


def first_local_max(coeffs):
    """Per row: earliest t >= 0 where p has a strict local maximum, NaN if none."""
    c = np.ascontiguousarray(coeffs, dtype=float)
    n = c.shape[0]
    # Stationary points: roots of 3 c3 t^2 + 2 c2 t + c1.
    dc = np.zeros((n, 4))
    dc[:, 0] = c[:, 1]
    dc[:, 1] = 2.0 * c[:, 2]
    dc[:, 2] = 3.0 * c[:, 3]
    stat = _polish_deriv(dc, _real_roots(dc))
    curv = 2.0 * dc[:, 2, None] * stat + dc[:, 1, None]  # p'' at the candidates
    ok = np.isfinite(stat) & (stat >= 0.0) & (curv < 0.0)
    masked = np.where(ok, stat, np.inf)
    best = masked.min(axis=1)
    return np.where(np.isfinite(best), best, np.nan)


def _polish_deriv(dc, roots):
    # Same Newton refinement, but on the (quadratic) derivative rows.
    for _ in range(_NEWTON_STEPS):
        with np.errstate(invalid="ignore", divide="ignore"):
            f = (dc[:, 2, None] * roots + dc[:, 1, None]) * roots + dc[:, 0, None]
            fp = 2.0 * dc[:, 2, None] * roots + dc[:, 1, None]
            step = np.where(np.abs(fp) > 0, f / fp, 0.0)
            step = np.where(np.isfinite(step), step, 0.0)
            roots = roots - step
    return roots
