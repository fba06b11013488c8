"""Lattice alphabets, power-constrained types and joint types, counting bounds.

Letters are stored as signed integer lattice indices; the real letter is the
index times the axis step (n^-alpha on the input axis, n^-beta on the output
axis).  Information quantities are computed in nats and returned in the
requested log base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np

from .errors import CeilingError, ConstraintViolation, DomainError, InfeasibleError
from .gauss_family import ChannelSpec

DEFAULT_CEILING = 10 ** 7
_POWER_RTOL = 1e-12


@dataclass(frozen=True)
class LatticeConfig:
    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise DomainError(f"{name} must lie in (0, 1), got {v!r}")
        cube = self.delta_alpha * self.delta_beta * self.delta_gamma * self.n
        if abs(cube - 1) > 1e-14:
            raise DomainError(f"step sizes do not multiply to 1/n (relative error {cube - 1:.2e})")

    @property
    def gamma(self) -> float:
        return 1.0 - self.alpha - self.beta

    @property
    def delta_alpha(self) -> float:
        return self.n ** -self.alpha

    @property
    def delta_beta(self) -> float:
        return self.n ** -self.beta

    @property
    def delta_gamma(self) -> float:
        return self.n ** -self.gamma

    def delta(self, axis: str) -> float:
        return self.delta_alpha if _axis(axis) == "X" else self.delta_beta

    def exponent(self, axis: str) -> float:
        return self.alpha if _axis(axis) == "X" else self.beta


def _axis(axis: str) -> str:
    a = str(axis).upper()
    if a not in ("X", "Y"):
        raise DomainError(f"axis must be X or Y, got {axis!r}")
    return a


def _entropy_nats(counts, n: int) -> float:
    c = np.asarray(counts, dtype=float)
    return float(math.log(n) - np.dot(c, np.log(c)) / n)


def _log_multinomial(counts, n: int) -> float:
    return math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in counts)


@dataclass(frozen=True)
class TypePmf:
    n: int
    counts: tuple  # ((index, count), ...) ascending by index, counts >= 1
    axis: str = "X"

    def __post_init__(self):
        object.__setattr__(self, "axis", _axis(self.axis))
        items = tuple(sorted((int(i), int(c)) for i, c in dict(self.counts).items() if c != 0))
        if any(c < 0 for _, c in items):
            raise DomainError("type counts must be nonnegative")
        if sum(c for _, c in items) != self.n:
            raise DomainError(f"type counts sum to {sum(c for _, c in items)}, expected {self.n}")
        object.__setattr__(self, "counts", items)

    @classmethod
    def from_indices(cls, indices, axis: str = "X") -> "TypePmf":
        idx, cnt = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
        return cls(len(indices), tuple(zip(idx.tolist(), cnt.tolist())), axis)

    @property
    def indices(self) -> np.ndarray:
        return np.array([i for i, _ in self.counts], dtype=np.int64)

    @property
    def count_array(self) -> np.ndarray:
        return np.array([c for _, c in self.counts], dtype=np.int64)

    @property
    def support_size(self) -> int:
        return len(self.counts)

    def probs(self) -> np.ndarray:
        return self.count_array / self.n

    def letters(self, config: LatticeConfig) -> tuple[np.ndarray, np.ndarray]:
        return self.indices * config.delta(self.axis), self.probs()

    def power_index_sum(self) -> int:
        """Sum of count * index^2, an exact integer."""
        return int(sum(c * i * i for i, c in self.counts))

    def second_moment(self, config: LatticeConfig) -> float:
        return self.power_index_sum() * config.delta(self.axis) ** 2 / self.n

    def entropy(self, log_base: float = 2.0) -> float:
        return _entropy_nats(self.count_array, self.n) / math.log(log_base)

    def flipped(self) -> "TypePmf":
        return TypePmf(self.n, tuple((-i, c) for i, c in self.counts), self.axis)

    def to_text(self) -> str:
        pairs = ",".join(f"{i}:{c}" for i, c in self.counts)
        return f"n={self.n}; axis={self.axis}; pairs={pairs}"

    @classmethod
    def from_text(cls, text: str) -> "TypePmf":
        fields = dict(part.strip().split("=", 1) for part in text.split(";"))
        pairs = [p.split(":") for p in fields["pairs"].split(",") if p]
        return cls(int(fields["n"]), tuple((int(i), int(c)) for i, c in pairs), fields["axis"])


@dataclass(frozen=True)
class JointTypePmf:
    n: int
    counts: tuple  # (((i, j), count), ...) ascending, counts >= 1

    def __post_init__(self):
        items = tuple(
            sorted(((int(i), int(j)), int(c)) for (i, j), c in dict(self.counts).items() if c != 0)
        )
        if any(c < 0 for _, c in items):
            raise DomainError("joint type counts must be nonnegative")
        if sum(c for _, c in items) != self.n:
            raise DomainError(f"joint counts sum to {sum(c for _, c in items)}, expected {self.n}")
        object.__setattr__(self, "counts", items)

    @classmethod
    def from_pairs(cls, x_idx, y_idx) -> "JointTypePmf":
        x_idx, y_idx = np.asarray(x_idx, dtype=np.int64), np.asarray(y_idx, dtype=np.int64)
        if x_idx.shape != y_idx.shape:
            raise DomainError("index vectors differ in length")
        cells, cnt = np.unique(np.stack([x_idx, y_idx], axis=1), axis=0, return_counts=True)
        return cls(len(x_idx), tuple(((int(a), int(b)), int(c)) for (a, b), c in zip(cells, cnt)))

    @cached_property
    def _arrays(self):
        ij = np.array([cell for cell, _ in self.counts], dtype=np.int64).reshape(-1, 2)
        c = np.array([c for _, c in self.counts], dtype=np.int64)
        return ij[:, 0], ij[:, 1], c

    @property
    def support_size(self) -> int:
        return len(self.counts)

    def marginal(self, axis: str) -> TypePmf:
        col = 0 if _axis(axis) == "X" else 1
        acc: dict[int, int] = {}
        for cell, c in self.counts:
            acc[cell[col]] = acc.get(cell[col], 0) + c
        return TypePmf(self.n, tuple(acc.items()), axis)

    def entropy(self, log_base: float = 2.0) -> float:
        return _entropy_nats(self._arrays[2], self.n) / math.log(log_base)

    def cond_entropy(self, given: str, log_base: float = 2.0) -> float:
        """H(Y|X) when given='X', H(X|Y) when given='Y'."""
        return self.entropy(log_base) - self.marginal(given).entropy(log_base)

    def second_moments(self, config: LatticeConfig) -> tuple[float, float]:
        i, j, c = self._arrays
        return (
            float(np.dot(c, i * i)) * config.delta_alpha ** 2 / self.n,
            float(np.dot(c, j * j)) * config.delta_beta ** 2 / self.n,
        )

    def mean_sq_diff(self, config: LatticeConfig) -> float:
        """E[(Y - X)^2] under the joint type."""
        i, j, c = self._arrays
        d = j * config.delta_beta - i * config.delta_alpha
        return float(np.dot(c, d * d)) / self.n

    def flipped(self) -> "JointTypePmf":
        return JointTypePmf(self.n, tuple(((-i, -j), c) for (i, j), c in self.counts))

    def to_text(self) -> str:
        pairs = ",".join(f"{i}:{j}:{c}" for (i, j), c in self.counts)
        return f"n={self.n}; pairs={pairs}"

    @classmethod
    def from_text(cls, text: str) -> "JointTypePmf":
        fields = dict(part.strip().split("=", 1) for part in text.split(";"))
        trip = [p.split(":") for p in fields["pairs"].split(",") if p]
        return cls(int(fields["n"]), tuple(((int(i), int(j)), int(c)) for i, j, c in trip))


class LogSizeBounds(NamedTuple):
    exact_log: float
    lower: float
    upper: float


# --- alphabets ----------------------------------------------------------------


def max_index(config: LatticeConfig, c: float, axis: str = "X") -> int:
    """Largest i >= 0 with (i * delta)^2 <= n * c."""
    if c < 0:
        raise DomainError("power bound must be nonnegative")
    d = config.delta(axis)
    lim = config.n * c * (1 + _POWER_RTOL)
    i = int(math.floor(math.sqrt(config.n * c) / d))
    while ((i + 1) * d) ** 2 <= lim:
        i += 1
    while i > 0 and (i * d) ** 2 > lim:
        i -= 1
    return i


def alphabet_subset(config: LatticeConfig, c_x: float, axis: str = "X") -> tuple[int, float]:
    """Number of lattice letters with |letter| <= sqrt(n c_x), and its bound."""
    if not c_x > 0:
        raise DomainError("c_x must be positive")
    exact = 2 * max_index(config, c_x, axis) + 1
    bound = 2 * math.sqrt(c_x) * config.n ** (0.5 + config.exponent(axis)) + 1
    return exact, bound


def power_budget(config: LatticeConfig, c: float, axis: str = "X") -> int:
    """Largest integer S with S * delta^2 <= n * c; a type obeys the constraint iff
    its sum of count * index^2 is at most S."""
    d2 = config.delta(axis) ** 2
    lim = config.n * c * (1 + _POWER_RTOL)
    s = int(math.floor(config.n * c / d2))
    while (s + 1) * d2 <= lim:
        s += 1
    while s > 0 and s * d2 > lim:
        s -= 1
    return s


# --- enumeration --------------------------------------------------------------


def _compositions(total: int, costs: list[int], budget: int) -> Iterator[tuple[tuple[int, ...], int]]:
    """All count vectors over len(costs) letters summing to total with
    sum(count * cost) <= budget.  Yields (counts, used_budget)."""
    k = len(costs)
    suffix_min = [0] * (k + 1)
    suffix_min[k] = math.inf
    for t in range(k - 1, -1, -1):
        suffix_min[t] = min(costs[t], suffix_min[t + 1])
    cur = [0] * k

    def rec(t, left, room):
        if left == 0:
            yield tuple(cur), budget - room
            return
        if t == k or left * suffix_min[t] > room:
            return
        w = costs[t]
        top = left if w == 0 else min(left, room // w)
        for c in range(top, -1, -1):
            cur[t] = c
            yield from rec(t + 1, left - c, room - c * w)
        cur[t] = 0

    yield from rec(0, total, budget)


def count_types(config: LatticeConfig, c_x: float, axis: str = "X", state_limit: int = 5 * 10 ** 7) -> int:
    """Number of power-constrained types, by dynamic programming over
    (letters, mass, power).  Raises CeilingError when the table is too large."""
    m = max_index(config, c_x, axis)
    s = power_budget(config, c_x, axis)
    n = config.n
    if (2 * m + 1) * (n + 1) * (s + 1) > state_limit:
        raise CeilingError("type count table too large; enumeration infeasible")
    dp = np.zeros((n + 1, s + 1))
    dp[0, 0] = 1.0
    for i in range(-m, m + 1):
        w = i * i
        for mass in range(1, n + 1):
            if w == 0:
                dp[mass] += dp[mass - 1]
            elif w <= s:
                dp[mass, w:] += dp[mass - 1, : s + 1 - w]
    total = dp[n].sum()
    return int(total) if total < 2 ** 53 else int(min(total, 2.0 ** 62))


def enumerate_types(config: LatticeConfig, c_x: float, axis: str = "X", ceiling: int = DEFAULT_CEILING) -> list[TypePmf]:
    """All types with denominator n and E[X^2] <= c_x, in a fixed order."""
    axis = _axis(axis)
    total = count_types(config, c_x, axis)
    if total > ceiling:
        raise CeilingError(f"{total} types exceed the enumeration ceiling {ceiling}")
    m = max_index(config, c_x, axis)
    letters = list(range(-m, m + 1))
    costs = [i * i for i in letters]
    out = []
    for comp, _ in _compositions(config.n, costs, power_budget(config, c_x, axis)):
        out.append(TypePmf(config.n, tuple((i, c) for i, c in zip(letters, comp) if c), axis))
    return out


def count_joint_types(config: LatticeConfig, c_x: float, c_y: float, state_limit: int = 5 * 10 ** 7) -> int:
    """Number of joint types with E[X^2] <= c_x and E[Y^2] <= c_y."""
    mx, my = max_index(config, c_x, "X"), max_index(config, c_y, "Y")
    sx, sy = power_budget(config, c_x, "X"), power_budget(config, c_y, "Y")
    n = config.n
    cells = (2 * mx + 1) * (2 * my + 1)
    if cells * (n + 1) * (sx + 1) * (sy + 1) > state_limit:
        raise CeilingError("joint type count table too large; enumeration infeasible")
    dp = np.zeros((n + 1, sx + 1, sy + 1))
    dp[0, 0, 0] = 1.0
    for i in range(-mx, mx + 1):
        wx = i * i
        if wx > sx:
            continue
        for j in range(-my, my + 1):
            wy = j * j
            if wy > sy:
                continue
            for mass in range(1, n + 1):
                dp[mass, wx:, wy:] += dp[mass - 1, : sx + 1 - wx, : sy + 1 - wy]
    total = dp[n].sum()
    return int(total) if total < 2 ** 53 else int(min(total, 2.0 ** 62))


def _extend_rows(rows, row_letters, row_costs, budget, n, ceiling):
    """Enumerate joint types whose x-marginal is fixed by `rows`.

    rows: list of (x_index, count); row_letters[r]: candidate y indices for row
    r; row_costs[r]: matching nonnegative costs; budget: shared cost budget.
    Yields JointTypePmf.  Costs may be floats; the budget comparison then uses
    a relative guard of 1e-12.
    """
    seen = 0
    nrows = len(rows)
    cells: list = []

    def rec(r, room):
        nonlocal seen
        if r == nrows:
            seen += 1
            if seen > ceiling:
                raise CeilingError(f"more than {ceiling} joint types; raise the ceiling")
            yield JointTypePmf(n, tuple(cells))
            return
        x, cnt = rows[r]
        letters, costs = row_letters[r], row_costs[r]
        for comp, used in _compositions_real(cnt, costs, room):
            added = [((x, y), c) for y, c in zip(letters, comp) if c]
            cells.extend(added)
            yield from rec(r + 1, room - used)
            del cells[len(cells) - len(added):]

    yield from rec(0, budget)


def _compositions_real(total, costs, budget):
    """Like _compositions but with real-valued costs."""
    k = len(costs)
    suffix_min = [math.inf] * (k + 1)
    for t in range(k - 1, -1, -1):
        suffix_min[t] = min(costs[t], suffix_min[t + 1])
    slack = 1e-12 * max(1.0, abs(budget))
    cur = [0] * k

    def rec(t, left, used):
        if left == 0:
            yield tuple(cur), used
            return
        if t == k or used + left * suffix_min[t] > budget + slack:
            return
        w = costs[t]
        top = left if w <= 0 else min(left, int((budget + slack - used) // w))
        for c in range(top, -1, -1):
            cur[t] = c
            yield from rec(t + 1, left - c, used + c * w)
        cur[t] = 0

    yield from rec(0, total, 0.0)


def enumerate_joint_types(
    config: LatticeConfig, c_x: float, c_y: float, ceiling: int = DEFAULT_CEILING
) -> Iterator[JointTypePmf]:
    """All joint types with E[X^2] <= c_x and E[Y^2] <= c_y.

    The x-marginal is fixed first, then the conditional rows are distributed
    under the shared output-power budget.
    """
    total = count_joint_types(config, c_x, c_y)
    if total > ceiling:
        raise CeilingError(f"{total} joint types exceed the enumeration ceiling {ceiling}")
    my = max_index(config, c_y, "Y")
    sy = power_budget(config, c_y, "Y")
    ys = list(range(-my, my + 1))
    ycost = [j * j for j in ys]
    for px in enumerate_types(config, c_x, "X", ceiling):
        rows = list(px.counts)
        yield from _extend_rows(rows, [ys] * len(rows), [ycost] * len(rows), sy, config.n, ceiling)


# --- counting bounds ----------------------------------------------------------


def support_bound_marginal(config: LatticeConfig, c: float, axis: str = "X") -> float:
    return (12 * c + 1) ** (1 / 3) * config.n ** ((1 + 2 * config.exponent(axis)) / 3)


def support_bound_joint(config: LatticeConfig, c_x: float, c_y: float) -> float:
    return math.sqrt(2 * math.pi * (c_x + c_y + 1 / 6)) * config.n ** (
        (1 + config.alpha + config.beta) / 2
    )


def types_bound_log(config: LatticeConfig, c: float, axis: str = "X") -> float:
    """Natural log of the improved bound on the number of power-constrained types."""
    a = config.exponent(axis)
    base = (2 * math.sqrt(c) + 1) ** (1 / (1.5 + a))
    ct = (1.5 + a) * (12 * c + 1) ** (1 / 3)
    return ct * config.n ** ((1 + 2 * a) / 3) * math.log((config.n + 1) * base)


def types_crude_bound_log(config: LatticeConfig, c: float, axis: str = "X") -> float:
    """Natural log of (n+1)^(alphabet bound - 1), the polynomial-per-letter count."""
    a = config.exponent(axis)
    return (2 * math.sqrt(c) + 1) * config.n ** (0.5 + a) * math.log(config.n + 1)


def joint_types_bound_log(config: LatticeConfig, c_x: float, c_y: float) -> float:
    a, b = config.alpha, config.beta
    base = ((2 * math.sqrt(c_x) + 1) * (2 * math.sqrt(c_y) + 1)) ** (1 / (2 + a + b))
    ct = (2 + a + b) * math.sqrt(2 * math.pi * (c_x + c_y + 1 / 6))
    return ct * config.n ** ((1 + a + b) / 2) * math.log((config.n + 1) * base)


@dataclass
class CountingBoundsReport:
    n: int
    alpha: float
    beta: float
    c_x: float
    c_y: float
    alphabet_bound: float
    support_x_bound: float
    support_y_bound: float
    support_xy_bound: float
    num_types_bound_log: float
    num_types_crude_log: float
    num_joint_types_bound_log: float
    alphabet_exact: int | None = None
    alphabet_y_exact: int | None = None
    alphabet_y_bound: float | None = None
    support_x_exact: int | None = None
    support_y_exact: int | None = None
    support_xy_exact: int | None = None
    num_types_exact: int | None = None
    num_joint_types_exact: int | None = None
    mot_sandwich_ok: bool | None = None
    mot_checked: int = 0
    notes: list = field(default_factory=list)

    def rows(self) -> list[tuple[str, object, float, bool]]:
        """(name, exact or None, bound, pass) with counts compared in log space."""

        def lg(v):
            return None if v is None else math.log(v)

        spec = [
            ("alphabet_x", self.alphabet_exact, self.alphabet_bound, False),
            ("alphabet_y", self.alphabet_y_exact, self.alphabet_y_bound, False),
            ("support_x", self.support_x_exact, self.support_x_bound, False),
            ("support_y", self.support_y_exact, self.support_y_bound, False),
            ("support_xy", self.support_xy_exact, self.support_xy_bound, False),
            ("log_num_types_crude", self.num_types_exact, self.num_types_crude_log, True),
            ("log_num_types", self.num_types_exact, self.num_types_bound_log, True),
            ("log_num_joint_types", self.num_joint_types_exact, self.num_joint_types_bound_log, True),
        ]
        out = []
        for name, exact, bound, logged in spec:
            if bound is None:
                continue
            val = lg(exact) if logged else exact
            out.append((name, val, bound, val is None or val <= bound))
        if self.mot_checked:
            out.append(("type_class_sandwich", self.mot_checked, float("nan"), bool(self.mot_sandwich_ok)))
        return out

    @property
    def all_pass(self) -> bool:
        return all(r[3] for r in self.rows())


def count_types_bounds(
    config: LatticeConfig,
    c_x: float,
    c_y: float | None = None,
    enumerate_exact: bool = True,
    ceiling: int = DEFAULT_CEILING,
    log_base: float = 2.0,
) -> CountingBoundsReport:
    """Counting bounds for power-constrained types, with exact values when the
    enumeration fits under the ceiling."""
    if not c_x > 0:
        raise DomainError("c_x must be positive")
    c_y = c_x if c_y is None else c_y
    rep = CountingBoundsReport(
        n=config.n,
        alpha=config.alpha,
        beta=config.beta,
        c_x=c_x,
        c_y=c_y,
        alphabet_bound=alphabet_subset(config, c_x, "X")[1],
        alphabet_y_bound=alphabet_subset(config, c_y, "Y")[1],
        support_x_bound=support_bound_marginal(config, c_x, "X"),
        support_y_bound=support_bound_marginal(config, c_y, "Y"),
        support_xy_bound=support_bound_joint(config, c_x, c_y),
        num_types_bound_log=types_bound_log(config, c_x, "X"),
        num_types_crude_log=types_crude_bound_log(config, c_x, "X"),
        num_joint_types_bound_log=joint_types_bound_log(config, c_x, c_y),
    )
    rep.alphabet_exact = alphabet_subset(config, c_x, "X")[0]
    rep.alphabet_y_exact = alphabet_subset(config, c_y, "Y")[0]
    tighter = "improved" if rep.num_types_bound_log < rep.num_types_crude_log else "crude"
    rep.notes.append(f"tighter type-count bound: {tighter}")
    if not enumerate_exact:
        return rep
    try:
        xs = enumerate_types(config, c_x, "X", ceiling)
        ys = enumerate_types(config, c_y, "Y", ceiling)
    except CeilingError as exc:
        rep.notes.append(f"enumeration infeasible; bounds-only report ({exc})")
        return rep
    rep.num_types_exact = len(xs)
    rep.support_x_exact = max(t.support_size for t in xs)
    rep.support_y_exact = max(t.support_size for t in ys)
    ok = all(_sandwich_ok(t, log_base) for t in xs) and all(_sandwich_ok(t, log_base) for t in ys)
    checked = len(xs) + len(ys)
    try:
        joint_total = count_joint_types(config, c_x, c_y)
        if joint_total > ceiling:
            raise CeilingError(f"{joint_total} joint types")
        njoint, smax = 0, 0
        for jt in enumerate_joint_types(config, c_x, c_y, ceiling):
            njoint += 1
            smax = max(smax, jt.support_size)
            ok = ok and _sandwich_ok(jt, log_base)
        rep.num_joint_types_exact = njoint
        rep.support_xy_exact = smax
        checked += njoint
    except CeilingError as exc:
        rep.notes.append(f"joint enumeration infeasible; joint rows bounds-only ({exc})")
    rep.mot_sandwich_ok = ok
    rep.mot_checked = checked
    return rep


# --- type class sizes ---------------------------------------------------------


def _sandwich_ok(t, log_base, tol=1e-10) -> bool:
    e, lo, hi = type_class_log_size(t, log_base)
    return lo - tol <= e <= hi + tol


def type_class_log_size(t: TypePmf | JointTypePmf, log_base: float = 2.0) -> LogSizeBounds:
    """log |T(P)| with the sandwich n H - |S| log(n+1) <= log |T(P)| <= n H."""
    counts = [c for _, c in t.counts]
    lb = math.log(log_base)
    exact = _log_multinomial(counts, t.n) / lb
    nh = t.n * _entropy_nats(counts, t.n) / lb
    return LogSizeBounds(exact, nh - len(counts) * math.log(t.n + 1) / lb, nh)


def poly_log_size_bounds(
    t: TypePmf | JointTypePmf,
    config: LatticeConfig,
    c_x: float | None = None,
    c_y: float | None = None,
    log_base: float = 2.0,
) -> LogSizeBounds:
    """The sandwich with the support size replaced by its power-based bound.

    Power bounds default to the type's own second moments.
    """
    exact, _, nh = type_class_log_size(t, log_base)
    lb = math.log(log_base)
    n = config.n
    if isinstance(t, JointTypePmf):
        mx, my = t.second_moments(config)
        cx = mx if c_x is None else c_x
        cy = my if c_y is None else c_y
        corr = support_bound_joint(config, cx, cy)
    else:
        m = t.second_moment(config)
        c = (c_x if t.axis == "X" else c_y)
        corr = support_bound_marginal(config, m if c is None else c, t.axis)
    return LogSizeBounds(exact, nh - corr * math.log(n + 1) / lb, nh)


def cond_type_class_log_size(joint: JointTypePmf, given: str = "X", log_base: float = 2.0) -> LogSizeBounds:
    """log |T(P_{.|given} | sequence)| = log |T(P_XY)| - log |T(P_given)|.

    Bracketed by n H(.|given) - |S(P_XY)| log(n+1) and
    n H(.|given) + |S(P_given)| log(n+1).
    """
    given = _axis(given)
    marg = joint.marginal(given)
    ej = type_class_log_size(joint, log_base).exact_log
    em = type_class_log_size(marg, log_base).exact_log
    nh = joint.n * joint.cond_entropy(given, log_base)
    lg = math.log(joint.n + 1) / math.log(log_base)
    return LogSizeBounds(ej - em, nh - joint.support_size * lg, nh + marg.support_size * lg)


def power_cond_log_size_bounds(
    joint: JointTypePmf,
    given: str,
    config: LatticeConfig,
    c_x: float | None = None,
    c_y: float | None = None,
    log_base: float = 2.0,
) -> LogSizeBounds:
    """Conditional type class bracket with power-based polynomial corrections."""
    given = _axis(given)
    exact = cond_type_class_log_size(joint, given, log_base).exact_log
    mx, my = joint.second_moments(config)
    cx = mx if c_x is None else c_x
    cy = my if c_y is None else c_y
    lg = math.log(config.n + 1) / math.log(log_base)
    nh = joint.n * joint.cond_entropy(given, log_base)
    low = nh - support_bound_joint(config, cx, cy) * lg
    marg_c = cx if given == "X" else cy
    high = nh + support_bound_marginal(config, marg_c, given) * lg
    return LogSizeBounds(exact, low, high)


def support_bounds(joint: JointTypePmf, config: LatticeConfig, c_x: float, c_y: float):
    """Support sizes (|S_XY|, |S_X|, |S_Y|) and their power-based bounds."""
    mx, my = joint.second_moments(config)
    if mx > c_x * (1 + _POWER_RTOL) or my > c_y * (1 + _POWER_RTOL):
        raise ConstraintViolation(f"joint type moments ({mx:.6g}, {my:.6g}) exceed ({c_x}, {c_y})")
    sizes = (joint.support_size, joint.marginal("X").support_size, joint.marginal("Y").support_size)
    bounds = (
        support_bound_joint(config, c_x, c_y),
        support_bound_marginal(config, c_x, "X"),
        support_bound_marginal(config, c_y, "Y"),
    )
    return sizes, bounds


# --- divergences and finite-n objectives ---------------------------------------


def _log_w_nats(channel: ChannelSpec, diff):
    return -0.5 * math.log(2 * math.pi * channel.sigma2) - np.asarray(diff) ** 2 / (2 * channel.sigma2)


def _kl_nats(joint: JointTypePmf, channel: ChannelSpec, config: LatticeConfig) -> float:
    i, j, c = joint._arrays
    px = joint.marginal("X")
    row = dict(px.counts)
    rows = np.array([row[a] for a in i], dtype=float)
    diff = j * config.delta_beta - i * config.delta_alpha
    terms = np.log(c / rows) - _log_w_nats(channel, diff) - math.log(config.delta_beta)
    return float(np.dot(c, terms)) / joint.n


def kl_type_vs_channel_measure(joint: JointTypePmf, channel: ChannelSpec, config: LatticeConfig) -> float:
    """D(P_{Y|X} || w * delta_beta | P_X) in the channel's log base."""
    return channel.from_nats(_kl_nats(joint, channel, config))


def mutual_info_type(joint: JointTypePmf, log_base: float = 2.0) -> float:
    i = (
        joint.marginal("X").entropy(log_base)
        + joint.marginal("Y").entropy(log_base)
        - joint.entropy(log_base)
    )
    return max(i, 0.0)


def _rows_for_diff_budget(p_x: TypePmf, config: LatticeConfig, budget: float):
    """Candidate output letters for each input letter when E[(Y-X)^2] <= budget."""
    r = math.sqrt(config.n * budget) * (1 + 1e-12)
    da, db = config.delta_alpha, config.delta_beta
    letters, costs = [], []
    for i, _ in p_x.counts:
        x = i * da
        lo, hi = math.floor((x - r) / db), math.ceil((x + r) / db)
        js = [j for j in range(lo, hi + 1) if (j * db - x) ** 2 <= config.n * budget * (1 + 1e-12)]
        # nearest letters first keeps the search close to the feasible core
        js.sort(key=lambda j: (abs(j * db - x), j))
        letters.append(js)
        costs.append([(j * db - x) ** 2 for j in js])
    return letters, costs


def _joint_types_with_diff_budget(p_x, config, budget, ceiling):
    if p_x.axis != "X":
        raise DomainError("p_x must be an input-axis type")
    letters, costs = _rows_for_diff_budget(p_x, config, budget)
    return _extend_rows(list(p_x.counts), letters, costs, config.n * budget, config.n, ceiling)


def finite_n_correct_exponent(
    p_x: TypePmf,
    rate: float,
    sigma_tilde2: float,
    eps: float,
    channel: ChannelSpec,
    config: LatticeConfig,
    ceiling: int = DEFAULT_CEILING,
    with_argmin: bool = False,
):
    """min over joint types extending p_x with E[(Y-X)^2] <= sigma_tilde2 + eps
    of D(P_{Y|X} || W_n | P_X) + |rate - I|^+."""
    lb = channel.ln_base
    r_nats = rate * lb
    best, arg = math.inf, None
    for jt in _joint_types_with_diff_budget(p_x, config, sigma_tilde2 + eps, ceiling):
        val = _kl_nats(jt, channel, config) + max(0.0, r_nats - mutual_info_type(jt, math.e))
        if val < best:
            best, arg = val, jt
    if arg is None:
        raise InfeasibleError("no joint type satisfies E[(Y-X)^2] <= sigma_tilde2 + eps")
    return (best / lb, arg) if with_argmin else best / lb


def finite_n_error_exponent_bound(
    p_x: TypePmf,
    rate: float,
    eps: float,
    c_xy: float,
    channel: ChannelSpec,
    config: LatticeConfig,
    ceiling: int = DEFAULT_CEILING,
    with_argmin: bool = False,
):
    """min of D(P_{Y|X} || W_n | P_X) over joint types extending p_x with
    E[(Y-X)^2] <= c_xy and I <= rate - eps; math.inf when none qualifies."""
    if not rate > eps:
        raise DomainError("rate must exceed eps")
    lb = channel.ln_base
    cap = (rate - eps) * lb
    best, arg = math.inf, None
    for jt in _joint_types_with_diff_budget(p_x, config, c_xy, ceiling):
        if mutual_info_type(jt, math.e) > cap:
            continue
        val = _kl_nats(jt, channel, config)
        if val < best:
            best, arg = val, jt
    value = best / lb if arg is not None else math.inf
    return (value, arg) if with_argmin else value
