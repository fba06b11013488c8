"""Bridges between real vectors / densities and lattice types.

Covers the rounding quantizer, the density-exponent sandwich for quantized
pairs, constraint drift under quantization, the histogram densities built
from a joint type, the reverse construction of a joint type from a
Lipschitz conditional density with explicit finite-n slack terms, and the
scalar x ln x increment bound used along the way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConstraintViolation, DomainError, HypothesisViolation, QuadratureError
from .gauss_family import ChannelSpec, RhoPoint, lipschitz_constant, make_rho_point
from .type_system import JointTypePmf, LatticeConfig, TypePmf

SANDWICH_ATOL = 1e-12


def quantize(v, delta: float) -> np.ndarray:
    """Lattice indices floor(v / delta + 1/2)."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    return np.floor(np.asarray(v, dtype=float) / delta + 0.5).astype(np.int64)


@dataclass(frozen=True)
class QuantizedPair:
    x_raw: np.ndarray
    y_raw: np.ndarray
    x_q: np.ndarray
    y_q: np.ndarray
    config: LatticeConfig

    @classmethod
    def from_raw(cls, x, y, config: LatticeConfig) -> "QuantizedPair":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise DomainError("x and y must be vectors of equal length")
        return cls(x, y, quantize(x, config.delta_alpha), quantize(y, config.delta_beta), config)

    @property
    def x_values(self) -> np.ndarray:
        return self.x_q * self.config.delta_alpha

    @property
    def y_values(self) -> np.ndarray:
        return self.y_q * self.config.delta_beta


def empirical_joint_type(pair: QuantizedPair) -> JointTypePmf:
    if pair.x_q.shape != pair.y_q.shape:
        raise DomainError("length mismatch")
    return JointTypePmf.from_pairs(pair.x_q, pair.y_q)


@dataclass(frozen=True)
class SandwichCheck:
    ok: bool
    exponent_real: float
    exponent_quantized: float
    half_width_below: float
    half_width_above: float


def _sandwich_arrays(x, y, xq_vals, yq_vals, channel, da, db, c_xy):
    """Row-wise sandwich on 2-D arrays (trials x n)."""
    lb = channel.ln_base
    base = math.log(math.sqrt(2 * math.pi * channel.sigma2)) / lb
    scale = 1.0 / (2 * channel.sigma2 * lb)
    e_real = base + scale * np.mean((y - x) ** 2, axis=-1)
    e_q = base + scale * np.mean((yq_vals - xq_vals) ** 2, axis=-1)
    d = da + db
    below = d * np.sqrt(c_xy) * scale
    above = (d * np.sqrt(c_xy) + d * d / 4) * scale
    ok = (e_real >= e_q - below - SANDWICH_ATOL) & (e_real <= e_q + above + SANDWICH_ATOL)
    return ok, e_real, e_q, below, above


def pdf_exponent_sandwich(pair: QuantizedPair, channel: ChannelSpec, c_xy: float) -> SandwichCheck:
    """-(1/n) log_b w(y|x) against the same quantity at the quantized pair."""
    emp = float(np.mean((pair.y_values - pair.x_values) ** 2))
    if emp > c_xy * (1 + 1e-12):
        raise ConstraintViolation(f"quantized E[(Y-X)^2]={emp:.6g} exceeds c_xy={c_xy:.6g}")
    cfg = pair.config
    ok, er, eq, lo, hi = _sandwich_arrays(
        pair.x_raw, pair.y_raw, pair.x_values, pair.y_values, channel,
        cfg.delta_alpha, cfg.delta_beta, c_xy,
    )
    return SandwichCheck(bool(ok), float(er), float(eq), float(lo), float(hi))


def sandwich_batch(x, y, config: LatticeConfig, channel: ChannelSpec, c_xy=None):
    """Vectorized sandwich over the rows of 2-D arrays x, y.

    When c_xy is None each row uses its own quantized E[(Y-X)^2], the
    tightest admissible constraint.  Returns (ok, e_real, e_q, below, above).
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    da, db = config.delta_alpha, config.delta_beta
    xv = quantize(x, da) * da
    yv = quantize(y, db) * db
    emp = np.mean((yv - xv) ** 2, axis=-1)
    if c_xy is None:
        c_xy = emp
    elif np.any(emp > np.asarray(c_xy) * (1 + 1e-12)):
        raise ConstraintViolation("a row violates the E[(Y-X)^2] constraint")
    return _sandwich_arrays(x, y, xv, yv, channel, da, db, c_xy)


# --- constraint drift ------------------------------------------------------------


def drift_term(n: int, power: float, alpha: float, beta: float | None = None) -> float:
    """delta sqrt(power) + delta^2 / 4 with delta = n^-alpha (+ n^-beta)."""
    d = n ** -alpha + (0.0 if beta is None else n ** -beta)
    return d * math.sqrt(power) + d * d / 4


def power_drift_bound(power: float, alpha: float, eps: float, beta: float | None = None) -> int:
    """Smallest n whose quantization drift is at most eps.

    With beta=None this is the input power drift (step n^-alpha); with beta
    given it is the drift of E[(Y-X)^2] when both axes are quantized.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if power < 0:
        raise DomainError("power must be nonnegative")
    if drift_term(1, power, alpha, beta) <= eps:
        return 1
    lo, hi = 1, 2
    while drift_term(hi, power, alpha, beta) > eps:
        lo, hi = hi, hi * 2
        if hi > 2 ** 62:
            raise DomainError("drift never falls below eps at representable n")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if drift_term(mid, power, alpha, beta) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def quantized_power(v, delta: float) -> np.ndarray:
    """Mean square of the quantized vector(s) along the last axis."""
    q = quantize(v, delta) * delta
    return np.mean(q * q, axis=-1)


# --- type to density ---------------------------------------------------------------


@dataclass(frozen=True)
class StepDensityFamily:
    """Histogram conditional densities P(j|x)/delta_beta on output cells."""

    joint: JointTypePmf
    config: LatticeConfig

    @property
    def _rows(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        rows: dict[int, list] = {}
        for (i, j), c in self.joint.counts:
            rows.setdefault(i, []).append((j, c))
        out = {}
        for i, cells in rows.items():
            js = np.array([j for j, _ in cells], dtype=np.int64)
            cs = np.array([c for _, c in cells], dtype=float)
            out[i] = (js, cs / cs.sum())
        return out

    def heights(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        js, p = self._rows[i]
        return js, p / self.config.delta_beta

    def density(self, i: int, y) -> np.ndarray:
        js, h = self.heights(i)
        cell = quantize(y, self.config.delta_beta)
        lookup = dict(zip(js.tolist(), h.tolist()))
        return np.array([lookup.get(int(c), 0.0) for c in np.atleast_1d(cell)])

    def total_mass(self, i: int) -> float:
        _, h = self.heights(i)
        return float(h.sum() * self.config.delta_beta)

    def sup(self, i: int) -> float:
        return float(self.heights(i)[1].max())

    def mutual_information(self, log_base: float = 2.0) -> float:
        """I(P_X, step family), integrating the piecewise-constant densities."""
        px = self.joint.marginal("X")
        wx = dict(zip(px.indices.tolist(), px.probs().tolist()))
        db = self.config.delta_beta
        p_y: dict[int, float] = {}
        for i, (js, _) in self._rows.items():
            _, h = self.heights(i)
            for j, hv in zip(js.tolist(), h.tolist()):
                p_y[j] = p_y.get(j, 0.0) + wx[i] * hv
        total = 0.0
        for i in self._rows:
            js, h = self.heights(i)
            py = np.array([p_y[j] for j in js.tolist()])
            total += wx[i] * float(np.sum(h * db * np.log(h / py)))
        return total / math.log(log_base)

    def mean_sq_diff(self) -> float:
        """E[(Y-X)^2] with Y spread uniformly over each output cell."""
        px = self.joint.marginal("X")
        da, db = self.config.delta_alpha, self.config.delta_beta
        total = 0.0
        for i, w in zip(px.indices.tolist(), px.probs().tolist()):
            js, p = self._rows[i]
            total += w * float(np.sum(p * ((js * db - i * da) ** 2 + db * db / 12)))
        return total


def type_to_pdf(joint: JointTypePmf, config: LatticeConfig) -> StepDensityFamily:
    return StepDensityFamily(joint, config)


# --- density to type ----------------------------------------------------------------


class GaussianRows:
    """Rows y|x ~ N(k x, v) of a family member; must have rho >= 0 to be Lipschitz-K."""

    def __init__(self, point: RhoPoint):
        self.point = point
        self.k = point.k_rho
        self.var = point.sigma2_yx
        self.lipschitz = lipschitz_constant(point.channel)
        if point.rho < 0:
            raise HypothesisViolation(
                "rows with rho < 0 are narrower than the channel and leave the Lipschitz class"
            )

    def mean(self, x):
        return self.k * np.asarray(x)

    def sd(self, x):
        return math.sqrt(self.var) + 0 * np.asarray(x, dtype=float)

    def pdf(self, x, y):
        d = np.asarray(y) - self.k * np.asarray(x)
        return np.exp(-d * d / (2 * self.var)) / math.sqrt(2 * math.pi * self.var)

    def cell_inf(self, x: float, edges: np.ndarray) -> np.ndarray:
        # unimodal: the infimum over a closed cell sits at one of its ends
        f = self.pdf(x, edges)
        return np.minimum(f[:-1], f[1:])

    def neg_entropy(self, x: float) -> float:
        return -0.5 * math.log(2 * math.pi * math.e * self.var)

    def sq_diff_moment(self, x: float) -> float:
        return (self.k * x - x) ** 2 + self.var

    def second_moment(self, x: float) -> float:
        return (self.k * x) ** 2 + self.var


class LipschitzRows:
    """Generic rows given by a density callable pdf(x, y) with Lipschitz constant K.

    The cell infimum falls back to f(center) - K delta / 2, clamped at zero;
    integrals are done by adaptive quadrature over center +- 12 scale.
    """

    def __init__(self, pdf, lipschitz: float, center, scale):
        self._pdf, self.lipschitz, self._center, self._scale = pdf, lipschitz, center, scale

    def mean(self, x):
        return np.vectorize(self._center)(x)

    def sd(self, x):
        return np.vectorize(self._scale)(x)

    def pdf(self, x, y):
        return self._pdf(x, y)

    def cell_inf(self, x: float, edges: np.ndarray) -> np.ndarray:
        mid = 0.5 * (edges[:-1] + edges[1:])
        step = edges[1:] - edges[:-1]
        return np.maximum(self._pdf(x, mid) - self.lipschitz * step / 2, 0.0)

    def _quad(self, x, g):
        c, s = self._center(x), self._scale(x)
        edges = np.linspace(c - 12 * s, c + 12 * s, 25)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(lambda y: g(y, float(self._pdf(x, y))), a, b, epsabs=1e-13, limit=200)[0]
        return total

    def neg_entropy(self, x: float) -> float:
        return self._quad(x, lambda y, f: f * math.log(f) if f > 0 else 0.0)

    def sq_diff_moment(self, x: float) -> float:
        return self._quad(x, lambda y, f: f * (y - x) ** 2)

    def second_moment(self, x: float) -> float:
        return self._quad(x, lambda y, f: f * y * y)


def check_region(alpha: float, beta: float) -> None:
    """Raise HypothesisViolation naming every violated range condition.

    The two beta conditions together say delta1 = min(beta, 1 - beta) -
    (1 + 2 alpha)/3 > 0, so they are reported under that name.
    """
    bad = []
    if not 0 < alpha < 0.25:
        bad.append(f"0 < alpha < 1/4 (alpha={alpha})")
    d1 = min(beta, 1 - beta) - (1 + 2 * alpha) / 3
    if not d1 > 0:
        bad.append(f"delta1 = min(beta, 1-beta) - (1 + 2 alpha)/3 > 0 (delta1={d1:.6g})")
    if bad:
        raise HypothesisViolation("(alpha, beta) outside the admissible region: violates " + "; ".join(bad))


@dataclass
class SlackBudget:
    n: int
    lipschitz: float
    h: float
    h_tilde: float
    delta_exp: float
    delta1_exp: float
    c1_app: float
    c1_tilde: float
    p1_bound: float
    preconditions: dict = field(default_factory=dict)
    n_min: float = 0.0  # may be inf when no representable n qualifies

    @property
    def preconditions_met(self) -> bool:
        return all(self.preconditions.values())


def slack_budget(config: LatticeConfig, lipschitz: float, c_x: float, c_y: float) -> SlackBudget:
    a, b = config.alpha, config.beta
    m = min(b, 1 - b)
    d, d1 = m - a, m - (1 + 2 * a) / 3
    n = config.n
    k1 = lipschitz + 1
    h = k1 * n ** -d
    ht = k1 * (12 * c_x + 1) ** (1 / 3) * n ** -d1
    c1 = math.sqrt(2 * math.pi * (c_x + c_y + 1 / 12))
    pre = {
        "h<=1/(c1 e)^2": h <= 1 / (c1 * math.e) ** 2,
        "h<=1/e": h <= 1 / math.e,
        "h_tilde<=1/e": ht <= 1 / math.e,
        "n>2": n > 2,
    }
    n_min = 3.0
    if d > 0 and d1 > 0:
        # log of each threshold n; the exponents 1/d can be huge near the region edge
        logs = [
            math.log(k1 * (c1 * math.e) ** 2) / d,
            math.log(k1 * math.e) / d,
            math.log(k1 * (12 * c_x + 1) ** (1 / 3) * math.e) / d1,
        ]
        top = max(logs)
        n_min = max(n_min, float(math.ceil(math.exp(top)))) if top < 700 else math.inf
    else:
        n_min = math.inf
    return SlackBudget(
        n=n, lipschitz=lipschitz, h=h, h_tilde=ht, delta_exp=d, delta1_exp=d1,
        c1_app=c1, c1_tilde=(12 * c_y) ** (1 / 3), p1_bound=2 * c1 * math.sqrt(h),
        preconditions=pre, n_min=n_min,
    )


@dataclass(frozen=True)
class InequalityRow:
    name: str
    lhs: float
    rhs: float
    slack: float
    relation: str  # ">=" means lhs >= rhs - slack, "<=" means lhs <= rhs + slack

    @property
    def passed(self) -> bool:
        if self.relation == ">=":
            return self.lhs >= self.rhs - self.slack
        return self.lhs <= self.rhs + self.slack


@dataclass
class InequalityReport:
    rows: list
    budget: SlackBudget
    p1: float

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)


def _integrate_window(fn, edges: np.ndarray, tol: float = 1e-12) -> float:
    pieces = len(edges) - 1
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(fn, a, b, epsabs=tol / pieces, epsrel=1e-12, limit=200)
        total += v
        err += e
    if err > 1e-8:
        raise QuadratureError(f"quadrature error estimate {err:.3e}", err)
    return total


def pdf_to_type(
    p_x: TypePmf,
    cond,
    config: LatticeConfig,
    c_x: float | None = None,
    c_y: float | None = None,
    c_xy: float | None = None,
    log_base: float = 2.0,
):
    """Joint type with x-marginal p_x approximating P_X(x) * cond(y|x).

    Each output cell gets floor(count_x * delta_beta * inf_cell f) samples out of
    n, which is the floor of the cell infimum on the n^-gamma grid; leftover
    mass goes to the cell holding the rounded input letter.  Returns the joint
    type, the slack budget, and the three entropy/second-moment inequalities
    evaluated with their explicit slacks.
    """
    check_region(config.alpha, config.beta)
    if p_x.axis != "X" or p_x.n != config.n:
        raise DomainError("p_x must be an input type with denominator n")
    da, db, n = config.delta_alpha, config.delta_beta, config.n
    xs = p_x.indices * da
    cnt = p_x.count_array
    w = cnt / n

    cells: dict[tuple[int, int], int] = {}
    quantized = 0
    for i, x, c in zip(p_x.indices.tolist(), xs.tolist(), cnt.tolist()):
        mu, sd = float(cond.mean(x)), float(cond.sd(x))
        j_lo = math.floor((mu - 12 * sd) / db) - 1
        j_hi = math.ceil((mu + 12 * sd) / db) + 1
        js = np.arange(j_lo, j_hi + 1)
        edges = np.concatenate(((js - 0.5) * db, [(js[-1] + 0.5) * db]))
        inf = cond.cell_inf(x, edges)
        q = np.floor(c * db * inf).astype(np.int64)
        for j, k in zip(js[q > 0].tolist(), q[q > 0].tolist()):
            cells[(i, j)] = k
        used = int(q.sum())
        if used > c:
            raise ConstraintViolation("quantized row mass exceeds its input count")
        quantized += used
        if used < c:
            jd = int(quantize(x, db))
            cells[(i, jd)] = cells.get((i, jd), 0) + c - used
    joint = JointTypePmf(n, tuple(cells.items()))
    p1 = 1.0 - quantized / n

    # moment bounds default to the instance's own moments
    if c_x is None:
        c_x = p_x.second_moment(config)
    if c_y is None:
        c_y = float(sum(wi * cond.second_moment(x) for wi, x in zip(w, xs)))
    if c_xy is None:
        c_xy = float(sum(wi * cond.sq_diff_moment(x) for wi, x in zip(w, xs)))
    budget = slack_budget(config, cond.lipschitz, c_x, c_y)

    lb = math.log(log_base)
    c1, h, ht = budget.c1_app, budget.h, budget.h_tilde
    s_putting = 2 * c1 * math.sqrt(h) * math.log(math.sqrt(math.e) / h) / lb
    s_second2 = budget.c1_tilde * ht ** (2 / 3) * max(
        math.log(1 / ht), math.log(math.e * math.sqrt(cond.lipschitz))
    ) / lb
    s_lhs = db * db + db * math.sqrt(c_xy)
    s_rhs = c1 * math.sqrt(h) * db * db / 2
    s_disc = 4 * c1 * math.sqrt(h) * math.log(n) / lb
    s_disc_marg = 2 * c1 * math.sqrt(h) * math.log(n) / lb

    # density side
    ce_pdf = float(sum(wi * cond.neg_entropy(x) for wi, x in zip(w, xs))) / lb
    lg_pdf = float(sum(wi * cond.sq_diff_moment(x) for wi, x in zip(w, xs)))
    mus, sds = np.asarray(cond.mean(xs), dtype=float), np.asarray(cond.sd(xs), dtype=float)
    lo, hi = float((mus - 12 * sds).min()), float((mus + 12 * sds).max())
    pieces = int(min(4000, max(16, math.ceil((hi - lo) / (2 * sds.min())))))

    def py_log_py(y):
        p = float(np.dot(w, cond.pdf(xs, y)))
        return p * math.log(p) if p > 0 else 0.0

    # row centers double as breakpoints, where a merely Lipschitz row may kink
    edges = np.unique(np.concatenate((np.linspace(lo, hi, pieces + 1), mus)))
    me_pdf = _integrate_window(py_log_py, edges) / lb

    # type side
    jx = np.array([i for (i, _), _ in joint.counts])
    jy = np.array([j for (_, j), _ in joint.counts])
    jc = np.array([c for _, c in joint.counts], dtype=float)
    row_tot = dict(zip(p_x.indices.tolist(), cnt.tolist()))
    rows = np.array([row_tot[i] for i in jx.tolist()], dtype=float)
    ce_type = float(np.dot(jc / n, np.log(jc / rows / db))) / lb
    lg_type = float(np.dot(jc / n, (jy * db - jx * da) ** 2))
    py = joint.marginal("Y").probs()
    me_type = float(np.dot(py, np.log(py / db))) / lb

    report_rows = [
        InequalityRow("cond_entropy", ce_pdf, ce_type, s_putting + s_disc, ">="),
        InequalityRow("log_gaussian", lg_pdf, lg_type, s_lhs + s_rhs, ">="),
        InequalityRow("marg_entropy", me_pdf, me_type, s_second2 + s_disc_marg, "<="),
        InequalityRow("prob_loss", p1, budget.p1_bound, 0.0, "<="),
    ]
    return joint, budget, InequalityReport(report_rows, budget, p1)


def random_family_instance(config: LatticeConfig, channel: ChannelSpec, rng: np.random.Generator, rho_max: float = 2.0):
    """A quantized Gaussian input type together with a random family member (rho >= 0)."""
    x = rng.normal(0.0, math.sqrt(channel.s2), config.n)
    p_x = TypePmf.from_indices(quantize(x, config.delta_alpha), "X")
    rho = float(rng.uniform(0.0, rho_max))
    return p_x, GaussianRows(make_rho_point(channel, rho))


# --- scalar bound -------------------------------------------------------------------


def xlogx_increment(t, t1):
    """f(t1 + t) - f(t1) for f(x) = x ln x, without cancellation."""
    t, t1 = np.asarray(t, dtype=float), np.asarray(t1, dtype=float)
    return t1 * np.log1p(t / t1) + t * np.log(t1 + t)


def xlogx_bounds(t, t1):
    """Check t ln t <= f(t1 + t) - f(t1) <= t ln max{1/t, (t1 + t) e}.

    Accepts scalars or arrays; returns (lower_ok, upper_ok) of matching shape.
    """
    t, t1 = np.asarray(t, dtype=float), np.asarray(t1, dtype=float)
    if np.any(t <= 0) or np.any(t > 1 / math.e) or np.any(t1 <= 0):
        raise DomainError("need 0 < t <= 1/e and t1 > 0")
    diff = xlogx_increment(t, t1)
    lower = t * np.log(t)
    upper = t * np.maximum(-np.log(t), np.log(t1 + t) + 1.0)
    # a few ulps of the terms involved, for the cases where a bound is tight
    tol = 4 * np.finfo(float).eps * (np.abs(t1 * np.log1p(t / t1)) + np.abs(t * np.log(t1 + t)) + np.abs(upper))
    lo_ok, hi_ok = lower <= diff + tol, diff <= upper + tol
    if lo_ok.ndim == 0:
        return bool(lo_ok), bool(hi_ok)
    return lo_ok, hi_ok
