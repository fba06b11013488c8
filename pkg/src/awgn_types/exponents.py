"""Capacity, sphere-packing and correct-decoding exponents of the AWGN channel."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import BracketError, DomainError, NumericalError, QuadratureError
from .gauss_family import (
    RHO_FLOOR,
    ChannelSpec,
    RhoPoint,
    _kl_nats,
    _mi_nats,
    make_rho_point,
)

QUAD_ABS_TOL = 1e-9


class Kind(enum.Enum):
    ERROR = "error"
    CORRECT = "correct"


@dataclass(frozen=True)
class ExponentPoint:
    rate: float
    rho_star: float
    exponent: float
    kind: Kind

    def __post_init__(self):
        if self.exponent < 0:
            raise NumericalError(f"negative exponent {self.exponent!r}")
        if self.kind is Kind.ERROR and self.rho_star < 0:
            raise NumericalError("error-exponent point with negative rho")
        if self.kind is Kind.CORRECT and not (-1 < self.rho_star <= 0):
            raise NumericalError("correct-decoding point with rho outside (-1, 0]")


@dataclass(frozen=True)
class ShannonForm:
    A: float
    theta: float
    G: float


@dataclass(frozen=True)
class DiscreteInput:
    """A finite input distribution on the real line."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise DomainError("values and probs must be equal-length nonempty vectors")
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
            raise DomainError("probs must be a probability vector")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, value: float = 0.0) -> "DiscreteInput":
        return cls(np.array([value]), np.array([1.0]))

    @property
    def second_moment(self) -> float:
        return float(np.dot(self.probs, self.values ** 2))


def quantized_gaussian_input(s2: float, atoms: int, width: float = 10.0) -> DiscreteInput:
    """N(0, s2) binned onto `atoms` equally spaced points over +-width std.

    Each atom carries the Gaussian mass of its cell; the two outer cells absorb
    the tails.  Binning adds about step^2/12 of power, so the atoms are
    rescaled to make the second moment exactly s2.
    """
    s = math.sqrt(s2)
    centers = np.linspace(-width * s, width * s, atoms)
    step = centers[1] - centers[0]
    edges = np.concatenate(([-np.inf], centers[:-1] + step / 2, [np.inf]))
    mass = np.diff(special.ndtr(edges / s))
    mass /= mass.sum()
    centers *= math.sqrt(s2 / np.dot(mass, centers ** 2))
    return DiscreteInput(centers, mass)


def as_input(p_x, config=None) -> DiscreteInput:
    if isinstance(p_x, DiscreteInput):
        return p_x
    # TypePmf: materialize lattice letters
    if config is None:
        raise DomainError("a lattice type needs its LatticeConfig to be materialized")
    values, probs = p_x.letters(config)
    return DiscreteInput(values, probs)


def capacity(channel: ChannelSpec) -> float:
    return channel.from_nats(0.5 * math.log1p(channel.snr))


def shannon_form(channel: ChannelSpec, rate: float) -> ShannonForm:
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate!r}")
    r_nats = min(channel.to_nats(rate), 0.5 * math.log1p(channel.snr))
    a = math.sqrt(channel.snr)
    sin_t = math.exp(-r_nats)
    cos_t = math.sqrt(-math.expm1(-2 * r_nats))
    g = 0.5 * (a * cos_t + math.sqrt(a * a * cos_t * cos_t + 4))
    return ShannonForm(A=a, theta=math.atan2(sin_t, cos_t), G=g)


def shannon_sphere_packing(channel: ChannelSpec, rate: float) -> float:
    """Shannon's closed-form sphere-packing exponent in the channel's base."""
    f = shannon_form(channel, rate)
    if channel.to_nats(rate) >= 0.5 * math.log1p(channel.snr):
        return 0.0
    r_nats = min(channel.to_nats(rate), 0.5 * math.log1p(channel.snr))
    a, g = f.A, f.G
    cos_t = math.sqrt(-math.expm1(-2 * r_nats))
    # ln(G sin theta) = ln G - r_nats
    e = 0.5 * a * a - 0.5 * a * g * cos_t - math.log(g) + r_nats
    return channel.from_nats(max(e, 0.0))


def _objective_nats(channel: ChannelSpec, rho: float, rate_nats: float) -> float:
    p = make_rho_point(channel, rho)
    return _kl_nats(p) + rho * (_mi_nats(p) - rate_nats)


def exponent_objective(channel: ChannelSpec, rho: float, rate: float) -> float:
    """D(p_rho || w | p_X) + rho * (I(rho) - rate), in the channel's base."""
    if not rho > -1:
        raise DomainError(f"rho must exceed -1, got {rho!r}")
    return channel.from_nats(_objective_nats(channel, rho, channel.to_nats(rate)))


def _mi_of_rho(channel: ChannelSpec, rho: float) -> float:
    return _mi_nats(make_rho_point(channel, rho))


def rho_of_rate(channel: ChannelSpec, rate: float) -> float:
    """Unique rho with I(rho) = rate; I is strictly decreasing in rho."""
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate!r}")
    r = channel.to_nats(rate)
    cap = 0.5 * math.log1p(channel.snr)
    if r == cap:
        return 0.0
    f = lambda rho: _mi_of_rho(channel, rho) - r  # noqa: E731
    if r < cap:
        lo, hi = 0.0, 1.0
        while f(hi) > 0:
            lo, hi = hi, hi * 2
            if hi > 1e300:
                raise BracketError(f"rate {rate!r} too small to bracket")
    else:
        lo, hi = math.nextafter(RHO_FLOOR, 0.0), 0.0
        if f(lo) < 0:
            raise BracketError(
                f"rate {rate!r} exceeds the largest representable I(rho) "
                f"({channel.from_nats(f(lo) + r):.6g})"
            )
    rho = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(f(rho))
    # near rho=-1 the slope of I blows up; allow a few ulps of rho
    ulp_slope = abs(f(math.nextafter(rho, math.inf)) - f(rho))
    if resid > 1e-12 + 4 * ulp_slope:
        raise NumericalError(f"rho_of_rate residual {resid:.3e} at rate {rate!r}")
    return rho


def error_exponent(channel: ChannelSpec, rate: float) -> ExponentPoint:
    """sup over rho >= 0 of the exponent objective."""
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate!r}")
    if channel.to_nats(rate) >= 0.5 * math.log1p(channel.snr):
        return ExponentPoint(rate, 0.0, 0.0, Kind.ERROR)
    rho = rho_of_rate(channel, rate)
    e = _objective_nats(channel, rho, channel.to_nats(rate))
    return ExponentPoint(rate, rho, channel.from_nats(max(e, 0.0)), Kind.ERROR)


def correct_decoding_exponent(channel: ChannelSpec, rate: float) -> ExponentPoint:
    """sup over -1 < rho <= 0 of the exponent objective."""
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate!r}")
    r = channel.to_nats(rate)
    if r <= 0.5 * math.log1p(channel.snr):
        return ExponentPoint(rate, 0.0, 0.0, Kind.CORRECT)
    try:
        rho = rho_of_rate(channel, rate)
    except BracketError:
        # beyond the representable I-range: the concave objective is maximized
        # by golden-section search on the admissible interval
        lo = math.nextafter(RHO_FLOOR, 0.0)
        res = optimize.minimize_scalar(
            lambda t: -_objective_nats(channel, t, r),
            bounds=(lo, 0.0),
            method="bounded",
            options={"xatol": 1e-14},
        )
        rho = float(res.x)
        if _objective_nats(channel, lo, r) > -res.fun:
            rho = lo
    e = _objective_nats(channel, rho, r)
    return ExponentPoint(rate, rho, channel.from_nats(max(e, 0.0)), Kind.CORRECT)


def parametric_curve(channel: ChannelSpec, rho_grid) -> list[ExponentPoint]:
    """Points (I(rho), D(rho)) along the family, one per grid value."""
    out = []
    for rho in rho_grid:
        if not rho > -1:
            raise DomainError(f"rho must exceed -1, got {rho!r}")
        p = make_rho_point(channel, float(rho))
        kind = Kind.ERROR if rho >= 0 else Kind.CORRECT
        out.append(
            ExponentPoint(
                channel.from_nats(_mi_nats(p)), float(rho), channel.from_nats(_kl_nats(p)), kind
            )
        )
    return out


# --- mixture quadrature -----------------------------------------------------


def _log_mixture(y: float, means: np.ndarray, logw: np.ndarray, var: float) -> float:
    d = y - means
    return float(special.logsumexp(logw - d * d / (2 * var))) - 0.5 * math.log(2 * math.pi * var)


def _integrate_mixture(means, weights, var, integrand, tol=QUAD_ABS_TOL, width=10.0):
    """Integrate integrand(y, log p(y)) * p(y) over the mixture's bulk.

    The range is the span of the component means widened by `width` standard
    deviations; it is split into pieces about two standard deviations wide.
    """
    keep = weights > 0
    means, weights = np.asarray(means)[keep], np.asarray(weights)[keep]
    logw = np.log(weights)
    sd = math.sqrt(var)
    lo, hi = means.min() - width * sd, means.max() + width * sd
    pieces = int(min(2000, max(8, math.ceil((hi - lo) / (2 * sd)))))
    edges = np.linspace(lo, hi, pieces + 1)

    def f(y):
        lp = _log_mixture(y, means, logw, var)
        return math.exp(lp) * integrand(y, lp)

    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=tol / pieces, epsrel=1e-12, limit=200)
        total += val
        err += e
    if err > 10 * tol:
        raise QuadratureError(f"mixture quadrature error estimate {err:.3e}", err)
    return total


def marginal_mixture_kl(p_x, point: RhoPoint, config=None) -> float:
    """D(sum_x P(x) N(k x, sigma2_yx) || N(0, sigma2_y)) in the channel's base."""
    px = as_input(p_x, config)
    ch = point.channel
    v_ref = point.sigma2_y
    log_q = lambda y: -0.5 * math.log(2 * math.pi * v_ref) - y * y / (2 * v_ref)  # noqa: E731
    kl = _integrate_mixture(
        point.k_rho * px.values, px.probs, point.sigma2_yx, lambda y, lp: lp - log_q(y)
    )
    return ch.from_nats(max(kl, 0.0))


def capacity_decomposition_check(p_x, channel: ChannelSpec, config=None):
    """Both sides of I(p_X, w) = C + power penalty - D(p_Y || N(0, s2 + sigma2)).

    Returns (I, right-hand side, |difference|), all in the channel's base.
    """
    px = as_input(p_x, config)
    ex2 = px.second_moment
    if ex2 > channel.s2 * (1 + 1e-12):
        raise DomainError(f"E[X^2]={ex2!r} exceeds the power bound {channel.s2!r}")
    sig2, s2 = channel.sigma2, channel.s2
    neg_h = _integrate_mixture(px.values, px.probs, sig2, lambda y, lp: lp)
    mi = -neg_h - 0.5 * math.log(2 * math.pi * math.e * sig2)
    v_ref = s2 + sig2
    kl = _integrate_mixture(
        px.values,
        px.probs,
        sig2,
        lambda y, lp: lp + 0.5 * math.log(2 * math.pi * v_ref) + y * y / (2 * v_ref),
    )
    cap = 0.5 * math.log1p(channel.snr)
    rhs = cap + (ex2 - s2) / (2 * (s2 + sig2)) - kl
    first, second = channel.from_nats(mi), channel.from_nats(rhs)
    return first, second, abs(first - second)
