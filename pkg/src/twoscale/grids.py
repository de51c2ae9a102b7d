"""Lattice-sampled two-scale branching functions and their basic calculus.

A two-scale grid stores covering statistics beta(u, v) = log2 of the worst
number of 2^-u balls needed to cover a 2^-v ball, sampled on a uniform
triangular lattice over {(u, v): 0 <= v <= u <= u_max}.  All logarithms are
base 2 and all operators here are finite maxima/minima over the lattice, so
results are deterministic and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

EXACT_TOL = 1e-9

# Above this lattice size the O(n^3) triple scan switches to random sampling.
SUBADD_EXHAUSTIVE_LIMIT = 256
SUBADD_SAMPLES = 1_000_000

# Per-property cap on recorded witnesses; counts stay exact.
MAX_WITNESSES = 32


class CapExceeded(RuntimeError):
    """A materialization would exceed its configured resource cap."""


# ---------------------------------------------------------------------------
# Lattice specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform triangular lattice {(i*step, j*step): 0 <= j <= i <= n}."""

    u_max: float
    step: float = 0.25

    def __post_init__(self):
        if not (self.step > 0 and self.u_max > 0):
            raise ValueError("u_max and step must be positive")
        n = round(self.u_max / self.step)
        if n < 1 or abs(n * self.step - self.u_max) > 1e-9 * max(1.0, self.u_max):
            raise ValueError(f"step {self.step} does not divide u_max {self.u_max}")

    @property
    def n(self) -> int:
        return round(self.u_max / self.step)

    @property
    def coords(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.step

    def index_of(self, x: float, what: str = "coordinate") -> int:
        i = round(x / self.step)
        if abs(i * self.step - x) > 1e-9 or not 0 <= i <= self.n:
            raise ValueError(f"{what} {x!r} is not lattice-aligned for step {self.step}")
        return i


def _clean_triangle(spec: GridSpec, values) -> np.ndarray:
    """Validate and normalize a lower-triangular value table."""
    vals = np.array(values, dtype=float)
    n = spec.n
    if vals.shape != (n + 1, n + 1):
        raise ValueError(f"values must have shape {(n + 1, n + 1)}, got {vals.shape}")
    ii, jj = np.tril_indices(n + 1)
    tri = vals[ii, jj]
    if not np.all(np.isfinite(tri)):
        raise ValueError("values must be finite on the lattice")
    if np.any(tri < -EXACT_TOL):
        raise ValueError("values must be nonnegative on the lattice")
    vals[ii, jj] = np.maximum(tri, 0.0)
    diag = np.diagonal(vals)
    if np.any(np.abs(diag) > EXACT_TOL):
        raise ValueError("diagonal values (u, u) must be zero")
    np.fill_diagonal(vals, 0.0)
    # entries above the diagonal are unused; pin them so equality checks are stable
    vals[np.triu_indices(n + 1, k=1)] = 0.0
    vals.flags.writeable = False
    return vals


@dataclass(frozen=True, eq=False)
class TwoScaleGrid:
    """Sampled two-scale function; values[i, j] is the sample at (i*step, j*step)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _clean_triangle(self.spec, self.values))

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable) -> "TwoScaleGrid":
        u = spec.coords
        uu, vv = np.meshgrid(u, u, indexing="ij")
        vals = np.asarray(fn(uu, vv), dtype=float)
        vals = np.where(vv <= uu, vals, 0.0)
        return cls(spec, vals)

    def evaluate(self, u, v):
        """Interpolate at (u, v) with 0 <= v <= u <= u_max.

        Each lattice cell is split along its main diagonal and the function is
        linear on the two triangles, so the diagonal v = u evaluates to exactly
        zero, lattice points reproduce stored values exactly, and functions that
        are affine in (u, v) are reproduced exactly.
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.any(v < -EXACT_TOL) or np.any(v > u + EXACT_TOL) or np.any(u > self.spec.u_max + EXACT_TOL):
            raise ValueError("point outside the domain 0 <= v <= u <= u_max")
        n = self.spec.n
        s = u / self.spec.step
        t = v / self.spec.step
        # snap float dust so lattice-aligned queries stay exact
        s = np.where(np.abs(s - np.rint(s)) < 1e-9, np.rint(s), s)
        t = np.where(np.abs(t - np.rint(t)) < 1e-9, np.rint(t), t)
        t = np.minimum(t, s)
        i = np.minimum(np.floor(s), n - 1).astype(np.int64)
        j = np.minimum(np.floor(t), n - 1).astype(np.int64)
        i = np.maximum(i, 0)
        j = np.maximum(j, 0)
        ls = s - i
        lt = t - j
        V = self.values
        lower = lt <= ls
        out = np.where(
            lower,
            (1.0 - ls) * V[i, j] + (ls - lt) * V[np.minimum(i + 1, n), j] + lt * V[np.minimum(i + 1, n), np.minimum(j + 1, n)],
            (1.0 - lt) * V[i, j] + (lt - ls) * V[i, np.minimum(j + 1, n)] + ls * V[np.minimum(i + 1, n), np.minimum(j + 1, n)],
        )
        return out if out.shape else float(out)

    def lipschitz_bound(self) -> float:
        """Largest one-step slope observed on the lattice."""
        V, n = self.values, self.spec.n
        ii, jj = np.tril_indices(n, k=0)
        du = np.abs(V[ii + 1, jj] - V[ii, jj])
        keep = jj < ii
        dv = np.abs(V[ii[keep], jj[keep] + 1] - V[ii[keep], jj[keep]])
        top = max(du.max(initial=0.0), dv.max(initial=0.0))
        return top / self.spec.step

    def allclose(self, other: "TwoScaleGrid", tol: float = EXACT_TOL) -> bool:
        return self.spec == other.spec and bool(np.max(np.abs(self.values - other.values)) <= tol)


# ---------------------------------------------------------------------------
# Piecewise-linear profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Piecewise-linear function on [0, inf) with f(0) = 0.

    ``breakpoints`` is strictly increasing and starts at 0.  ``slopes`` has one
    entry per segment; when it has as many entries as breakpoints the final
    slope extends past the last breakpoint, otherwise the extension is
    constant.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        sl = np.asarray(self.slopes, dtype=float)
        if bp.ndim != 1 or bp.size == 0 or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if sl.size not in (bp.size - 1, bp.size):
            raise ValueError("need one slope per segment (plus optional final slope)")
        bp.flags.writeable = False
        sl.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)

    @classmethod
    def from_samples(cls, xs, ys) -> "PiecewiseLinear":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs[0] != 0.0 or abs(ys[0]) > EXACT_TOL:
            raise ValueError("samples must start at (0, 0)")
        slopes = np.diff(ys) / np.diff(xs)
        return cls(xs, slopes)

    @property
    def knot_values(self) -> np.ndarray:
        seg = self.slopes[: self.breakpoints.size - 1]
        vals = np.concatenate([[0.0], np.cumsum(seg * np.diff(self.breakpoints))])
        return vals

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < -EXACT_TOL):
            raise ValueError("domain is [0, inf)")
        x = np.maximum(x, 0.0)
        bp = self.breakpoints
        vals = self.knot_values
        idx = np.searchsorted(bp, x, side="right") - 1
        idx = np.clip(idx, 0, bp.size - 1)
        base = vals[idx]
        tail_slope = self.slopes[-1] if self.slopes.size == bp.size else 0.0
        seg_slope = np.where(
            idx < bp.size - 1,
            self.slopes[np.minimum(idx, self.slopes.size - 1)],
            tail_slope,
        )
        out = base + seg_slope * (x - bp[idx])
        return out if out.shape else float(out)

    def max_slope(self) -> float:
        return float(np.max(self.slopes)) if self.slopes.size else 0.0

    def is_increasing(self, tol: float = EXACT_TOL) -> bool:
        return bool(np.all(self.slopes >= -tol))

    def in_lipschitz_class(self, lipschitz: float, tol: float = EXACT_TOL) -> bool:
        """Membership in the increasing lipschitz-bounded class with f(0) = 0."""
        return self.is_increasing(tol) and bool(np.all(self.slopes <= lipschitz + tol))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    prop: str
    witness: tuple
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    counts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def worst(self, prop: str | None = None) -> float:
        mags = [v.magnitude for v in self.violations if prop is None or v.prop == prop]
        return max(mags, default=0.0)

    def summary(self) -> str:
        if self.passed:
            return "passed"
        parts = [f"{k}:{v}" for k, v in sorted(self.counts.items()) if v]
        return "failed (" + ", ".join(parts) + f"); worst={self.worst():.6g}"


class _Collector:
    def __init__(self):
        self.violations: list[Violation] = []
        self.counts: dict[str, int] = {}

    def add_array(self, prop, mask, magnitudes, witness_fn):
        k = int(np.count_nonzero(mask))
        if k == 0:
            return
        self.counts[prop] = self.counts.get(prop, 0) + k
        room = MAX_WITNESSES - sum(1 for v in self.violations if v.prop == prop)
        if room <= 0:
            return
        idx = np.argwhere(mask)
        order = np.argsort(-np.asarray(magnitudes)[mask])
        for flat in order[:room]:
            w = tuple(idx[flat])
            self.violations.append(Violation(prop, witness_fn(*w), float(np.asarray(magnitudes)[mask][flat])))

    def report(self) -> ValidationReport:
        return ValidationReport(tuple(self.violations), dict(self.counts))


def validate_branching(
    grid: TwoScaleGrid,
    lipschitz: float = np.inf,
    tol: float = EXACT_TOL,
    rng: np.random.Generator | None = None,
) -> ValidationReport:
    """Check the two-scale branching axioms on the lattice.

    Checked, each with slack ``tol``: zero diagonal, subadditivity over scale
    triples v <= w <= u, monotonicity in the first coordinate, antitonicity in
    the second, and (for finite ``lipschitz``) the bound value <= lipschitz *
    (u - v), which certifies the Lipschitz property for subadditive data.
    Failures are reported, never raised.
    """
    V = grid.values
    n = grid.spec.n
    coords = grid.spec.coords
    col = _Collector()

    diag = np.abs(np.diagonal(V))
    col.add_array("diagonal_zero", diag > tol, diag, lambda i: (coords[i],))

    ii, jj = np.tril_indices(n + 1)
    mask_lower = np.zeros_like(V, dtype=bool)
    mask_lower[ii, jj] = True

    gap = V[:-1, :] - V[1:, :]  # increase in u
    bad = (gap > tol) & mask_lower[:-1, :]
    col.add_array("increasing_u", bad, gap, lambda i, j: (coords[i + 1], coords[j]))

    gap = V[:, 1:] - V[:, :-1]  # decrease in v
    bad = (gap > tol) & mask_lower[:, 1:]
    col.add_array("decreasing_v", bad, gap, lambda i, j: (coords[i], coords[j + 1]))

    if np.isfinite(lipschitz):
        uu, vv = np.meshgrid(coords, coords, indexing="ij")
        gap = V - lipschitz * (uu - vv)
        bad = (gap > tol) & mask_lower
        col.add_array("lipschitz_bound", bad, gap, lambda i, j: (coords[i], coords[j]))

    _check_subadditivity(V, n, coords, tol, col, rng)
    return col.report()


def _check_subadditivity(V, n, coords, tol, col, rng):
    if n <= SUBADD_EXHAUSTIVE_LIMIT:
        for k in range(n + 1):
            # V[i, j] <= V[i, k] + V[k, j] for j <= k <= i
            i = np.arange(k, n + 1)
            j = np.arange(0, k + 1)
            gap = V[np.ix_(i, j)] - (V[i, k][:, None] + V[k, j][None, :])
            bad = gap > tol
            if bad.any():
                col.add_array(
                    "subadditivity",
                    bad,
                    gap,
                    lambda a, b, k=k: (coords[a + k], coords[k], coords[b]),
                )
    else:
        rng = rng or np.random.default_rng(0)
        i = rng.integers(0, n + 1, size=SUBADD_SAMPLES)
        j = (rng.random(SUBADD_SAMPLES) * (i + 1)).astype(np.int64)
        k = j + (rng.random(SUBADD_SAMPLES) * (i - j + 1)).astype(np.int64)
        gap = V[i, j] - (V[i, k] + V[k, j])
        bad = gap > tol
        col.add_array(
            "subadditivity",
            bad,
            gap,
            lambda m: (coords[i[m]], coords[k[m]], coords[j[m]]),
        )


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def pointwise_max(grids: Sequence[TwoScaleGrid]) -> TwoScaleGrid:
    """Pointwise maximum of a nonempty family on a shared lattice."""
    grids = list(grids)
    if not grids:
        raise ValueError("family must be nonempty")
    spec = grids[0].spec
    if any(g.spec != spec for g in grids):
        raise ValueError("all grids must share one GridSpec")
    return TwoScaleGrid(spec, np.maximum.reduce([g.values for g in grids]))


def profile_extension(profile: PiecewiseLinear, anchor: float, spec: GridSpec) -> TwoScaleGrid:
    """Two-scale extension xi(u, v) = g(u) - g(v) of a one-variable profile.

    The profile is first clamped to vanish on [0, anchor] via
    g~(a) = g(max(a, anchor)) - g(anchor).  The result satisfies subadditivity
    with equality at every lattice triple and is the least branching grid whose
    restriction to the line v = anchor reproduces the profile.
    """
    if not profile.is_increasing():
        raise ValueError("profile must be increasing with g(0) = 0")
    if anchor < 0:
        raise ValueError("anchor must be nonnegative")
    coords = spec.coords
    g = profile.evaluate(np.maximum(coords, anchor)) - profile.evaluate(anchor)
    vals = g[:, None] - g[None, :]
    return TwoScaleGrid(spec, np.where(coords[None, :] <= coords[:, None], vals, 0.0))


def lipschitz_minorant(
    samples: np.ndarray,
    spec: GridSpec,
    lipschitz: float,
    anchor: float = 0.0,
    tol: float = EXACT_TOL,
) -> PiecewiseLinear:
    """Largest increasing lipschitz-bounded minorant vanishing on [0, anchor].

    ``samples`` holds values on the full coordinate lattice of ``spec``; only
    entries at coordinates >= anchor are constrained.  Because the data is
    increasing there, the one-sided running form
    g[a] = min(h[a], g[a - step] + lipschitz * step) equals the discrete
    inf-convolution min over a' in [anchor, a] of h(a') + lipschitz * (a - a'),
    additionally capped by lipschitz * (a - anchor) so the output is continuous
    when h(anchor) > 0.
    """
    h = np.asarray(samples, dtype=float)
    coords = spec.coords
    if h.shape != coords.shape:
        raise ValueError("samples must cover the coordinate lattice")
    jb = spec.index_of(anchor, "anchor")
    tail = h[jb:]
    if np.any(np.diff(tail) < -tol):
        raise ValueError("samples must be increasing beyond the anchor")
    if np.any(tail < -tol):
        raise ValueError("samples must be nonnegative")
    g = np.zeros_like(h)
    g[jb:] = _anchored_minorant(np.maximum(tail, 0.0), lipschitz * spec.step)
    return PiecewiseLinear.from_samples(coords, g)


def _anchored_minorant(h: np.ndarray, cap: float) -> np.ndarray:
    """Running min-plus scan g[a] = min(h[a], g[a-1] + cap) with g[0] = 0."""
    if not np.isfinite(cap):
        out = h.copy()
        out[0] = 0.0
        return out
    steps = cap * np.arange(h.size)
    c = h - steps
    c[0] = 0.0 - steps[0]
    return np.minimum.accumulate(c) + steps


def excess_bound(grid: TwoScaleGrid, lipschitz: float) -> np.ndarray:
    """Tightest increasing error bound eta(u) with values <= lipschitz*(u-v) + eta(u).

    Returns one value per lattice row, made monotone in u.
    """
    coords = grid.spec.coords
    uu, vv = np.meshgrid(coords, coords, indexing="ij")
    excess = grid.values - lipschitz * (uu - vv)
    excess = np.where(vv <= uu, excess, -np.inf)
    row = np.maximum(excess.max(axis=1), 0.0)
    return np.maximum.accumulate(row)


def lipschitz_approximation(
    grid: TwoScaleGrid, lipschitz: float, check: bool = True
) -> TwoScaleGrid:
    """Nearest lipschitz-bounded branching grid, built by anchored extensions.

    For each lattice anchor b the column u -> value(u, b) is replaced by its
    largest increasing lipschitz-bounded minorant, extended to two scales by
    differencing, and the pointwise maximum over anchors is returned.  The
    output deviates from the input by at most the derived bound of
    :func:`excess_bound` at every lattice point, and reproduces the input
    exactly when that bound vanishes.
    """
    if lipschitz < 0:
        raise ValueError("lipschitz must be nonnegative")
    if check:
        report = validate_branching(grid, np.inf, tol=EXACT_TOL)
        if not report.passed:
            raise ValueError(f"input is not a branching grid: {report.summary()}")
    V = grid.values
    n = grid.spec.n
    cap = lipschitz * grid.spec.step
    out = np.zeros_like(V)
    g = np.empty(n + 1)
    for b in range(n + 1):
        g[:b] = 0.0
        g[b:] = _anchored_minorant(V[b:, b], cap)
        np.maximum(out, g[:, None] - g[None, :], out)
    out[np.triu_indices(n + 1, k=1)] = 0.0
    return TwoScaleGrid(grid.spec, out)


def rescale(grid: TwoScaleGrid, shift: float) -> TwoScaleGrid:
    """Branching grid of the same data viewed at scales shrunk by 2^-shift.

    out(u, v) = value(u - shift, v - shift) when shift <= v, value(u - shift, 0)
    when v <= shift <= u, and 0 when u <= shift.  ``shift`` must be
    lattice-aligned; composing two rescalings equals rescaling by the sum,
    exactly.
    """
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    k = grid.spec.index_of(shift, "shift") if shift <= grid.spec.u_max else grid.spec.n + 1
    n = grid.spec.n
    V = grid.values
    out = np.zeros_like(V)
    if k <= n:
        m = n + 1 - k
        out[k:, k:] = V[:m, :m]
        out[k:, :k] = V[:m, 0][:, None]
    out[np.triu_indices(n + 1, k=1)] = 0.0
    return TwoScaleGrid(grid.spec, out)
