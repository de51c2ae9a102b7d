"""Limit curves, dimension spectra, and the monotone projection operators.

The scaling limit of a branching grid is a curve over theta in [0, 1]; its
ratio against (1 - theta) is the Assouad-spectrum curve.  Projections onto
the diagonally-monotone subclasses (parametrized by a growth rate) exist on
both sides and commute with the limit, which the deviation report below
measures at finite window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grids import (
    EXACT_TOL,
    GridSpec,
    TwoScaleGrid,
    ValidationReport,
    Violation,
    _Collector,
    validate_branching,
)

DEFAULT_THETA_STEP = 1.0 / 64.0


# ---------------------------------------------------------------------------
# Curve containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    """Function sampled on the uniform theta grid {0, step, ..., 1}."""

    theta_step: float
    values: np.ndarray

    def __post_init__(self):
        m = round(1.0 / self.theta_step)
        if m < 1 or abs(m * self.theta_step - 1.0) > 1e-12:
            raise ValueError("1/theta_step must be an integer")
        vals = np.array(self.values, dtype=float)
        if vals.shape != (m + 1,):
            raise ValueError(f"need {m + 1} samples, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")
        if np.any(vals < -EXACT_TOL):
            raise ValueError("curve values must be nonnegative")
        vals = np.maximum(vals, 0.0)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return round(1.0 / self.theta_step)

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.theta_step

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < -EXACT_TOL) or np.any(theta > 1 + EXACT_TOL):
            raise ValueError("theta must lie in [0, 1]")
        x = np.clip(theta, 0.0, 1.0) * self.m
        x = np.where(np.abs(x - np.rint(x)) < 1e-9, np.rint(x), x)
        i = np.minimum(np.floor(x), self.m - 1).astype(np.int64)
        frac = x - i
        out = (1 - frac) * self.values[i] + frac * self.values[i + 1]
        return out if out.shape else float(out)

    def allclose(self, other: "SpectrumGrid", tol: float = EXACT_TOL) -> bool:
        return (
            self.theta_step == other.theta_step
            and bool(np.max(np.abs(self.values - other.values)) <= tol)
        )


@dataclass(frozen=True, eq=False)
class AssouadSpectrum(SpectrumGrid):
    """Spectrum curve including its endpoint value at theta = 1."""

    @property
    def endpoint(self) -> float:
        return float(self.values[-1])


# ---------------------------------------------------------------------------
# Curve validators
# ---------------------------------------------------------------------------

def validate_limit_curve(
    curve: SpectrumGrid, lipschitz: float = np.inf, tol: float = EXACT_TOL
) -> ValidationReport:
    """Check membership in the scaling-limit class.

    Conditions: value 0 at theta = 1, decreasing, lipschitz-bounded steps, and
    gamma(lam * theta) <= gamma(theta) + theta * gamma(lam) over all sample
    pairs, with the product point interpolated linearly.
    """
    v = curve.values
    th = curve.thetas
    col = _Collector()

    end = np.array([abs(v[-1])])
    col.add_array("endpoint_zero", end > tol, end, lambda i: (1.0,))

    inc = np.diff(v)
    col.add_array("decreasing", inc > tol, inc, lambda i: (th[i + 1],))

    if np.isfinite(lipschitz):
        drop = -np.diff(v) - lipschitz * curve.theta_step
        col.add_array("lipschitz", drop > tol, drop, lambda i: (th[i + 1],))

    lam, theta = np.meshgrid(th, th, indexing="ij")
    gap = curve.evaluate(lam * theta) - (curve.evaluate(theta) + theta * curve.evaluate(lam))
    col.add_array("subadditivity", gap > tol, gap, lambda a, b: (th[a], th[b]))
    return col.report()


def validate_monotone_curve(
    curve: SpectrumGrid, lipschitz: float, growth: float, tol: float = EXACT_TOL
) -> ValidationReport:
    """Check the monotone limit subclass with floor ``growth``.

    Conditions: decreasing, lipschitz-bounded, endpoints (0 at theta = 1,
    >= growth at theta = 0), and value/(1 - theta) increasing.  Subadditivity
    is implied by these and is not re-checked here.
    """
    v = curve.values
    th = curve.thetas
    col = _Collector()

    end = np.array([abs(v[-1])])
    col.add_array("endpoint_zero", end > tol, end, lambda i: (1.0,))
    start = np.array([growth - v[0]])
    col.add_array("floor_at_zero", start > tol, start, lambda i: (0.0,))

    inc = np.diff(v)
    col.add_array("decreasing", inc > tol, inc, lambda i: (th[i + 1],))
    if np.isfinite(lipschitz):
        drop = -np.diff(v) - lipschitz * curve.theta_step
        col.add_array("lipschitz", drop > tol, drop, lambda i: (th[i + 1],))

    ratio = v[:-1] / (1.0 - th[:-1])
    dec = -np.diff(ratio)
    col.add_array("ratio_increasing", dec > tol, dec, lambda i: (th[i + 1],))
    return col.report()


def validate_monotone_grid(
    grid: TwoScaleGrid, lipschitz: float, growth: float, tol: float = EXACT_TOL
) -> ValidationReport:
    """Branching checks plus diagonal monotonicity and first-column growth."""
    base = validate_branching(grid, lipschitz, tol)
    V = grid.values
    n = grid.spec.n
    coords = grid.spec.coords
    col = _Collector()
    col.violations.extend(base.violations)
    col.counts.update(base.counts)

    # value(u + z, v + z) >= value(u, v) for every aligned z: each diagonal
    # of constant u - v must be nondecreasing.
    for d in range(1, n + 1):
        idx = np.arange(0, n + 1 - d)
        diag = V[idx + d, idx]
        drop = -np.diff(diag)
        col.add_array(
            "diagonal_monotone",
            drop > tol,
            drop,
            lambda k, d=d: (coords[k + 1 + d], coords[k + 1]),
        )

    first = V[:, 0]
    gap = growth * (coords[:, None] - coords[None, :]) - (first[:, None] - first[None, :])
    bad = (gap > tol) & (coords[None, :] < coords[:, None])
    col.add_array("column_growth", bad, gap, lambda a, b: (coords[a], coords[b]))
    return col.report()


# ---------------------------------------------------------------------------
# Limit operator and its inverse
# ---------------------------------------------------------------------------

def scaling_limit(
    grid: TwoScaleGrid,
    u_min: float | None = None,
    theta_step: float = DEFAULT_THETA_STEP,
    u_max: float | None = None,
) -> SpectrumGrid:
    """Finite-window surrogate of the normalized scaling limit.

    For each theta on the grid returns max over lattice u in [u_min, u_max] of
    value(u, theta * u) / u.  The true limit is a limsup in u; the window is
    reported by callers alongside estimates.  ``u_min`` defaults to a quarter
    of the grid's scale range.
    """
    top = grid.spec.u_max if u_max is None else min(u_max, grid.spec.u_max)
    if u_min is None:
        u_min = grid.spec.u_max / 4.0
    if not 0 < u_min < top:
        raise ValueError("need 0 < u_min < u_max within the grid")
    coords = grid.spec.coords
    us = coords[(coords >= u_min - EXACT_TOL) & (coords <= top + EXACT_TOL) & (coords > 0)]
    m = round(1.0 / theta_step)
    thetas = np.arange(m + 1) * theta_step
    uu = np.repeat(us, m + 1)
    tt = np.tile(thetas, us.size)
    vals = grid.evaluate(uu, tt * uu).reshape(us.size, m + 1)
    return SpectrumGrid(theta_step, (vals / us[:, None]).max(axis=0))


def cone_extension(curve: SpectrumGrid, spec: GridSpec) -> TwoScaleGrid:
    """Positively homogeneous grid psi(u, v) = u * curve(v / u).

    This is the largest branching grid whose scaling limit equals the curve;
    any branching grid with a dominated limit is dominated by it up to o(u).
    """
    report = validate_limit_curve(curve, np.inf, tol=1e-7)
    if not report.passed:
        raise ValueError(f"invalid limit curve: {report.summary()}")
    coords = spec.coords
    n = spec.n
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = coords[None, :] / coords[:, None]
    ratio[0, :] = 1.0
    ratio = np.clip(ratio, 0.0, 1.0)
    vals = coords[:, None] * curve.evaluate(ratio)
    vals[np.triu_indices(n + 1, k=1)] = 0.0
    np.fill_diagonal(vals, 0.0)
    return TwoScaleGrid(spec, vals)


def assouad_spectrum(curve: SpectrumGrid) -> AssouadSpectrum:
    """Spectrum curve value/(1 - theta), closed at theta = 1 by its supremum."""
    v = curve.values
    th = curve.thetas
    out = np.empty_like(v)
    out[:-1] = v[:-1] / (1.0 - th[:-1])
    out[-1] = out[:-1].max()
    return AssouadSpectrum(curve.theta_step, out)


# ---------------------------------------------------------------------------
# Monotone projections
# ---------------------------------------------------------------------------

def monotone_envelope(
    grid: TwoScaleGrid, growth: float, lipschitz: float | None = None
) -> TwoScaleGrid:
    """Least diagonally-monotone majorant with first-column growth ``growth``.

    out(u, v) = max over lattice z in [0, u] of value(u-z, v-z) for z <= v and
    growth * (z - v) + value(u-z, 0) for z >= v.  The map is idempotent, is
    the identity on its range, and dominates the input.
    """
    if growth < 0:
        raise ValueError("growth must be nonnegative")
    if lipschitz is not None and growth > lipschitz + EXACT_TOL:
        raise ValueError("growth must not exceed the lipschitz bound")
    V = grid.values
    n = grid.spec.n
    step = grid.spec.step
    out = np.zeros_like(V)
    # branch two depends only on u - v: growth*(u-v) + running max of
    # (first column minus growth * u)
    ramp = np.maximum.accumulate(V[:, 0] - growth * step * np.arange(n + 1))
    for d in range(n + 1):
        idx = np.arange(0, n + 1 - d)
        diag = np.maximum.accumulate(V[idx + d, idx])
        out[idx + d, idx] = np.maximum(diag, growth * step * d + ramp[d])
    return TwoScaleGrid(grid.spec, out)


def spectrum_envelope(curve: SpectrumGrid, growth: float) -> SpectrumGrid:
    """Least monotone-class curve above the input with floor ``growth``.

    (1 - theta) times the running maximum of the spectrum ratio over [0,
    theta], floored at ``growth``.  Idempotent and the identity on curves
    already in the class.
    """
    if growth < 0:
        raise ValueError("growth must be nonnegative")
    v = curve.values
    th = curve.thetas
    ratio = np.empty_like(v)
    ratio[:-1] = v[:-1] / (1.0 - th[:-1])
    ratio[-1] = ratio[-2] if v.size > 1 else growth
    run = np.maximum(np.maximum.accumulate(ratio), growth)
    out = (1.0 - th) * run
    out[-1] = 0.0
    return SpectrumGrid(curve.theta_step, out)


def plateau_curve(height: float, kink: float, theta_step: float = DEFAULT_THETA_STEP) -> SpectrumGrid:
    """Minimal monotone-class curve: constant height*(1-kink), then height*(1-theta).

    These curves generate the monotone class under maxima; kink = 1 gives the
    zero curve.
    """
    if height < 0:
        raise ValueError("height must be nonnegative")
    if not 0 <= kink <= 1:
        raise ValueError("kink must lie in [0, 1]")
    m = round(1.0 / theta_step)
    th = np.arange(m + 1) * theta_step
    return SpectrumGrid(theta_step, height * (1.0 - np.maximum(th, kink)))


def upper_spectrum(curve: AssouadSpectrum) -> AssouadSpectrum:
    """Running maximum over [0, theta] of a spectrum curve."""
    return AssouadSpectrum(curve.theta_step, np.maximum.accumulate(curve.values))


def direct_upper_spectrum(
    grid: TwoScaleGrid,
    u_min: float,
    theta_step: float = DEFAULT_THETA_STEP,
    u_max: float | None = None,
) -> AssouadSpectrum:
    """Upper spectrum estimated by a direct double supremum.

    For each theta takes max over grid lambdas <= theta (lambda < 1) and
    window u of value(u, lambda*u) / (u * (1 - lambda)); independent of the
    composed running-max pipeline it cross-checks.
    """
    top = grid.spec.u_max if u_max is None else min(u_max, grid.spec.u_max)
    if not 0 < u_min < top:
        raise ValueError("need 0 < u_min < u_max within the grid")
    coords = grid.spec.coords
    us = coords[(coords >= u_min - EXACT_TOL) & (coords <= top + EXACT_TOL) & (coords > 0)]
    m = round(1.0 / theta_step)
    lams = np.arange(m) * theta_step  # lambda < 1
    uu = np.repeat(us, m)
    ll = np.tile(lams, us.size)
    table = grid.evaluate(uu, ll * uu).reshape(us.size, m)
    per_lam = (table / (us[:, None] * (1.0 - lams[None, :]))).max(axis=0)
    out = np.empty(m + 1)
    for k in range(m):
        out[k] = per_lam[: k + 1].max()
    out[m] = per_lam.max()
    return AssouadSpectrum(theta_step, out)


# ---------------------------------------------------------------------------
# Commuting-diagram deviation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationReport:
    sup_deviation: float
    witness_theta: float
    window: tuple
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "sup_deviation": self.sup_deviation,
            "witness_theta": self.witness_theta,
            "window": list(self.window),
        }
        payload.update(self.extra)
        return json.dumps(payload, sort_keys=True)


def commuting_deviation(
    grid: TwoScaleGrid,
    growth: float,
    u_min: float,
    theta_step: float = DEFAULT_THETA_STEP,
) -> DeviationReport:
    """Sup-norm gap between limit-then-project and project-then-limit.

    Both paths are computed at the same finite window; the gap shrinks as the
    window grows and vanishes for homogeneous inputs up to grid tolerance.
    """
    via_grid = scaling_limit(monotone_envelope(grid, growth), u_min, theta_step)
    via_curve = spectrum_envelope(scaling_limit(grid, u_min, theta_step), growth)
    gap = np.abs(via_grid.values - via_curve.values)
    k = int(np.argmax(gap))
    return DeviationReport(
        sup_deviation=float(gap[k]),
        witness_theta=float(via_grid.thetas[k]),
        window=(u_min, grid.spec.u_max),
    )
