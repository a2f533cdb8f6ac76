"""Sharp-interface crack energetics.

Exact piecewise fields, closed-form energies of the limit functionals,
the alternating minimizer construction, the crack-count selection rule
and the deformation reconstruction.  All admissibility checks use a
1e-12 absolute tolerance: fields are built exactly in the arithmetic of
their inputs, so only rounding noise must be absorbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FEASIBILITY_TOL = 1e-12
SLOPE_JUMP_TOL = 1e-9

__all__ = [
    "DomainError",
    "BudgetExceeded",
    "PiecewiseConstantField",
    "PiecewiseLinearField",
    "SharpMinimizer",
    "DeformationGraph",
    "BruteForceResult",
    "eval_I",
    "eval_V",
    "foundation_integral",
    "segment_h1",
    "segment_h2",
    "segment_energy",
    "v_n",
    "crack_count",
    "continuous_crack_estimate",
    "build_sharp_minimizer",
    "brute_force_segments",
    "reconstruct_deformation",
]


class DomainError(ValueError):
    """Arguments outside the domain of a sharp-interface operation."""


class BudgetExceeded(RuntimeError):
    """Grid refinement ran out of passes before reaching its target."""


@dataclass(frozen=True)
class PiecewiseConstantField:
    """Piecewise-constant inverse stretch on (0, domain_length).

    ``values`` holds one number per subinterval; ``breakpoints`` are the
    strictly increasing interior subdivision points.
    """

    domain_length: float
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        lam = self.domain_length
        if not lam > 0.0:
            raise DomainError("domain length must be positive")
        if len(self.values) != len(self.breakpoints) + 1:
            raise DomainError("need exactly one value per subinterval")
        edges = (0.0,) + self.breakpoints + (lam,)
        for left, right in zip(edges, edges[1:]):
            if not left < right:
                raise DomainError("breakpoints must increase strictly inside (0, lambda)")

    def edges(self) -> tuple[float, ...]:
        return (0.0,) + self.breakpoints + (self.domain_length,)

    def jump_count(self, tol: float = FEASIBILITY_TOL) -> int:
        return sum(
            1 for a, b in zip(self.values, self.values[1:]) if abs(b - a) > tol
        )

    def measure_of(self, level: float, tol: float = FEASIBILITY_TOL) -> float:
        edges = self.edges()
        return math.fsum(
            edges[i + 1] - edges[i]
            for i, v in enumerate(self.values)
            if abs(v - level) <= tol
        )

    def value_at(self, y):
        """Right-continuous evaluation; arrays accepted."""
        idx = np.searchsorted(np.asarray(self.breakpoints), np.asarray(y), side="right")
        out = np.asarray(self.values)[idx]
        return float(out) if out.ndim == 0 else out

    def is_I_admissible(self, tol: float = FEASIBILITY_TOL) -> bool:
        near_well = all(min(abs(v), abs(v - 1.0)) <= tol for v in self.values)
        return near_well and abs(self.measure_of(1.0, tol) - 1.0) <= tol


@dataclass(frozen=True)
class PiecewiseLinearField:
    """Continuous piecewise-linear inverse deformation on [0, domain_length]."""

    domain_length: float
    knots: tuple[float, ...]
    knot_values: tuple[float, ...]

    def __post_init__(self):
        if not self.domain_length > 0.0:
            raise DomainError("domain length must be positive")
        if len(self.knots) != len(self.knot_values) or len(self.knots) < 2:
            raise DomainError("need matching knot and value lists of length >= 2")
        if self.knots[0] != 0.0 or self.knots[-1] != self.domain_length:
            raise DomainError("knots must start at 0 and end at the domain length")
        for a, b in zip(self.knots, self.knots[1:]):
            if not a < b:
                raise DomainError("knots must increase strictly")

    def slopes(self) -> np.ndarray:
        k = np.asarray(self.knots)
        v = np.asarray(self.knot_values)
        return np.diff(v) / np.diff(k)

    def value_at(self, y):
        out = np.interp(np.asarray(y, dtype=float), self.knots, self.knot_values)
        return float(out) if out.ndim == 0 else out

    def derivative_jump_count(self, tol: float = SLOPE_JUMP_TOL) -> int:
        s = self.slopes()
        return int(np.sum(np.abs(np.diff(s)) > tol))

    def _slope_runs(self, target: float, tol: float = SLOPE_JUMP_TOL):
        """Maximal intervals where the slope stays within tol of target."""
        s = self.slopes()
        runs = []
        start = None
        for i, si in enumerate(s):
            if abs(si - target) <= tol:
                if start is None:
                    start = i
            elif start is not None:
                runs.append((self.knots[start], self.knots[i]))
                start = None
        if start is not None:
            runs.append((self.knots[start], self.knots[-1]))
        return runs

    def plateaus(self, tol: float = SLOPE_JUMP_TOL) -> list[tuple[float, float, float]]:
        """Maximal slope-0 intervals as (y_start, y_end, h value)."""
        return [(a, b, self.value_at(a)) for a, b in self._slope_runs(0.0, tol)]

    def rising_intervals(self, tol: float = SLOPE_JUMP_TOL) -> list[tuple[float, float]]:
        return self._slope_runs(1.0, tol)

    def is_V_admissible(self, tol: float = FEASIBILITY_TOL) -> bool:
        if abs(self.knot_values[0]) > tol:
            return False
        if abs(self.knot_values[-1] - 1.0) > tol:
            return False
        s = self.slopes()
        return bool(np.all(np.minimum(np.abs(s), np.abs(s - 1.0)) <= 1e-9))


@dataclass(frozen=True)
class SharpMinimizer:
    """Minimizing configuration record.

    ``n`` counts derivative jumps; ``cracks`` lists geometric cracks,
    i.e. maximal plateaus merged across segment junctions, as pairs of
    (material position, opening length in the deformed coordinate).
    """

    n: int
    segment_length: float
    variant: str
    energy: float
    field: PiecewiseLinearField
    cracks: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class DeformationGraph:
    """Graph of the deformation map recovered from an inverse field.

    ``segments`` are (x_start, x_end, f_start, f_end) pieces with unit
    slope; ``jumps`` are (material position, lower value, upper value).
    """

    segments: tuple[tuple[float, float, float, float], ...]
    jumps: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class BruteForceResult:
    lengths: tuple[float, ...]
    energy: float
    spacing: float
    passes: int


def eval_I(field: PiecewiseConstantField, c_wstar: float) -> float:
    """Energy of the interfacial limit: c_wstar per jump, inf if infeasible."""
    if not c_wstar > 0.0:
        raise DomainError("c_wstar must be positive")
    if not field.is_I_admissible():
        return math.inf
    return c_wstar * field.jump_count()


def foundation_integral(field: PiecewiseLinearField, load: float | None = None) -> float:
    """Integral of h'(y - load*h)^2 over the field's domain, in closed form.

    The load defaults to the domain length, which is the right choice
    for full admissible fields; partial segments must pass the load of
    the configuration they belong to.  Slope-0 pieces vanish; on
    slope-1 pieces the misfit is linear in y, so each piece integrates
    to a cubic expression of its endpoint misfits.  Slopes must already
    be within tolerance of {0, 1}.
    """
    lam = field.domain_length if load is None else load
    knots = field.knots
    vals = field.knot_values
    slopes = field.slopes()
    pieces = []
    for i, s in enumerate(slopes):
        if abs(s) <= 1e-9:
            continue
        m0 = knots[i] - lam * vals[i]
        m1 = knots[i + 1] - lam * vals[i + 1]
        if lam == 1.0:
            pieces.append(m0 * m0 * (knots[i + 1] - knots[i]))
        else:
            pieces.append((m1**3 - m0**3) / (3.0 * (1.0 - lam)))
    return math.fsum(pieces)


def eval_V(field: PiecewiseLinearField, c_wstar: float, mu: float) -> float:
    """Energy of the foundation-coupled limit; inf when inadmissible."""
    if not c_wstar > 0.0:
        raise DomainError("c_wstar must be positive")
    if mu < 0.0:
        raise DomainError("mu must be nonnegative")
    if not field.is_V_admissible():
        return math.inf
    jumps = field.derivative_jump_count()
    return c_wstar * jumps + 0.5 * mu * foundation_integral(field)


def _check_segment_args(ell: float, lam: float) -> None:
    if not lam > 1.0:
        raise DomainError("segments are defined for loads lambda > 1")
    if not 0.0 < ell <= lam:
        raise DomainError("segment length must satisfy 0 < ell <= lambda")


def segment_h1(ell: float, lam: float) -> PiecewiseLinearField:
    """Elastic-then-cracked segment: slope 1 on [0, ell/lam), plateau after."""
    _check_segment_args(ell, lam)
    rise = ell / lam
    return PiecewiseLinearField(ell, (0.0, rise, ell), (0.0, rise, rise))


def segment_h2(ell: float, lam: float) -> PiecewiseLinearField:
    """Cracked-then-elastic segment: plateau on [0, ell - ell/lam), slope 1 after."""
    _check_segment_args(ell, lam)
    rise = ell / lam
    return PiecewiseLinearField(ell, (0.0, ell - rise, ell), (0.0, 0.0, rise))


def segment_energy(ell: float, lam: float, c_wstar: float, mu: float) -> float:
    """Energy of either segment shape on [0, ell]: one jump plus the misfit."""
    _check_segment_args(ell, lam)
    return c_wstar + mu * (lam - 1.0) ** 2 * ell**3 / (6.0 * lam**3)


def v_n(n: int, c_wstar: float, mu: float, lam: float) -> float:
    """Minimum energy of an n-segment equal-length configuration."""
    if n < 1:
        raise DomainError("crack count n must be at least 1")
    return n * c_wstar + mu * (lam - 1.0) ** 2 / (6.0 * n**2)


def continuous_crack_estimate(c_wstar: float, mu: float, lam: float) -> float:
    """Stationary point of n -> v_n over the reals: (mu(lam-1)^2/(3c))^(1/3)."""
    if not lam > 1.0:
        raise DomainError("crack counting requires lambda > 1")
    if mu < 0.0 or not c_wstar > 0.0:
        raise DomainError("need mu >= 0 and c_wstar > 0")
    return (mu * (lam - 1.0) ** 2 / (3.0 * c_wstar)) ** (1.0 / 3.0)


def crack_count(c_wstar: float, mu: float, lam: float) -> int:
    """Number of cracks selected by the integer rounding rule.

    Below 1 the count is 1; otherwise the floor m competes against m+1
    and ties go to the smaller count.
    """
    x = continuous_crack_estimate(c_wstar, mu, lam)
    if x < 1.0:
        return 1
    m = int(math.floor(x))
    if v_n(m, c_wstar, mu, lam) <= v_n(m + 1, c_wstar, mu, lam):
        return m
    return m + 1


def build_sharp_minimizer(
    n: int, lam: float, variant: str, c_wstar: float, mu: float
) -> SharpMinimizer:
    """Concatenate n alternating segments of length lam/n.

    Variant "A" starts with the elastic-first shape, "B" with the
    cracked-first shape.  Junctions are slope-continuous, so the field
    has exactly n derivative jumps; merged plateaus become the geometric
    cracks.
    """
    if n < 1:
        raise DomainError("crack count n must be at least 1")
    if not lam > 1.0:
        raise DomainError("the minimizer construction requires lambda > 1")
    if variant not in ("A", "B"):
        raise DomainError("variant must be 'A' or 'B'")

    # Segment j spans [j*lam/n, (j+1)*lam/n]; h rises by exactly 1/n per
    # segment, with the kink 1/n (elastic-first) or (lam-1)/n
    # (cracked-first) into the segment.
    knots = [0.0]
    values = [0.0]
    for j in range(n):
        y0 = j * lam / n
        h0 = j / n
        elastic_first = (j % 2 == 0) == (variant == "A")
        if elastic_first:
            kink = y0 + 1.0 / n
            kink_value = h0 + 1.0 / n
        else:
            kink = y0 + (lam - 1.0) / n
            kink_value = h0
        end = lam if j == n - 1 else (j + 1) * lam / n
        end_value = 1.0 if j == n - 1 else h0 + 1.0 / n
        knots.extend((kink, end))
        values.extend((kink_value, end_value))

    field = PiecewiseLinearField(lam, tuple(knots), tuple(values))
    cracks = tuple((h, b - a) for a, b, h in field.plateaus())
    return SharpMinimizer(
        n=n,
        segment_length=lam / n,
        variant=variant,
        energy=v_n(n, c_wstar, mu, lam),
        field=field,
        cracks=cracks,
    )


def brute_force_segments(
    n: int,
    lam: float,
    c_wstar: float,
    mu: float,
    resolution: int = 100,
    target_spacing: float | None = None,
    max_passes: int = 60,
) -> BruteForceResult:
    """Minimize the n-segment energy over the free lengths by nested grids.

    The first n-1 lengths are free on the simplex {l >= 0, sum <= lam};
    each pass lays ``resolution`` points per axis (capped so a pass stays
    near 1e6 evaluations), then recentres a shrunken box on the argmin.
    Serves as the independent oracle for the equal-spacing claim.
    """
    if not 2 <= n <= 6:
        raise DomainError("brute force supports 2 <= n <= 6 segments")
    if resolution < 100:
        raise DomainError("resolution must be at least 100 points per axis")
    if not lam > 1.0:
        raise DomainError("brute force requires lambda > 1")
    if target_spacing is None:
        target_spacing = 1e-8 * lam

    dims = n - 1
    per_axis = min(resolution, max(9, int((1.2e6) ** (1.0 / dims))))
    factor = mu * (lam - 1.0) ** 2 / (6.0 * lam**3)

    lo = np.zeros(dims)
    hi = np.full(dims, lam)
    best_lengths = None
    best_energy = math.inf
    for passes in range(1, max_passes + 1):
        axes = [np.linspace(lo[d], hi[d], per_axis) for d in range(dims)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        rest = lam - pts.sum(axis=1)
        feasible = rest >= 0.0
        energy = np.full(pts.shape[0], np.inf)
        e = n * c_wstar + factor * ((pts[feasible] ** 3).sum(axis=1) + rest[feasible] ** 3)
        energy[feasible] = e
        i = int(np.argmin(energy))
        if energy[i] < best_energy:
            best_energy = float(energy[i])
            best_lengths = pts[i].copy()
        spacing = float(np.max((hi - lo) / (per_axis - 1)))
        if spacing <= target_spacing:
            rest_best = lam - float(best_lengths.sum())
            return BruteForceResult(
                tuple(best_lengths) + (rest_best,), best_energy, spacing, passes
            )
        lo = np.maximum(best_lengths - spacing, 0.0)
        hi = np.minimum(best_lengths + spacing, lam)
    raise BudgetExceeded(
        f"grid refinement did not reach spacing {target_spacing:g} "
        f"in {max_passes} passes"
    )


def reconstruct_deformation(field: PiecewiseLinearField) -> DeformationGraph:
    """Invert an admissible inverse deformation into the deformation graph.

    Maximal slope-1 intervals invert to unit-slope graph segments over
    the material coordinate; maximal plateaus become jumps of f, one per
    geometric crack.
    """
    s = field.slopes()
    if np.any(np.minimum(np.abs(s), np.abs(s - 1.0)) > 1e-9):
        raise DomainError("reconstruction needs slopes in {0, 1}")
    if not field.is_V_admissible():
        raise DomainError("reconstruction needs h(0) = 0 and h(lambda) = 1")
    segments = tuple(
        (field.value_at(a), field.value_at(b), a, b)
        for a, b in field.rising_intervals()
    )
    jumps = tuple((h, a, b) for a, b, h in field.plateaus())
    return DeformationGraph(segments, jumps)
