"""The rho-parametrized Gaussian tilting of the AWGN channel.

For a Lagrange parameter rho > -1 the conditional density
p_rho(y|x) = N(k_rho * x, sigma2_yx(rho)) is the optimizer of the
divergence-plus-rate objective under a Gaussian input N(0, s2).  All
quantities are computed in nats and converted to the channel's log base
on the way out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NumericalError

RHO_FLOOR = -1.0 + 1e-9
IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class ChannelSpec:
    s2: float
    sigma2: float = 1.0
    log_base: float = 2.0

    def __post_init__(self):
        for name in ("s2", "sigma2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and positive, got {v!r}")
        if not (math.isfinite(self.log_base) and self.log_base > 1):
            raise DomainError(f"log_base must be > 1, got {self.log_base!r}")

    @classmethod
    def from_snr(cls, snr: float, sigma2: float = 1.0, log_base: float = 2.0) -> "ChannelSpec":
        return cls(s2=snr * sigma2, sigma2=sigma2, log_base=log_base)

    @property
    def snr(self) -> float:
        return self.s2 / self.sigma2

    @property
    def ln_base(self) -> float:
        return math.log(self.log_base)

    def from_nats(self, value: float) -> float:
        return value / self.ln_base

    def to_nats(self, value: float) -> float:
        return value * self.ln_base

    def log(self, x: float) -> float:
        return math.log(x) / self.ln_base


@dataclass(frozen=True)
class RhoPoint:
    channel: ChannelSpec
    rho: float
    k_rho: float
    sigma2_yx: float
    sigma2_y: float

    def residuals(self) -> dict[str, float]:
        """Residuals of the three structural identities of the family.

        Each residual is scaled by the largest term entering its identity, so
        that cancellation near rho = -1 is not mistaken for an error.
        """
        s2, sig2 = self.channel.s2, self.channel.sigma2
        k, rho = self.k_rho, self.rho

        def rel(*terms):
            return abs(sum(terms)) / max(abs(t) for t in terms)

        return {
            "output_variance": rel(self.sigma2_y, -self.sigma2_yx, -k * k * s2),
            "precision": rel((1 + rho) / self.sigma2_yx, -rho / self.sigma2_y, -1 / sig2),
            "conditional_variance": rel(self.sigma2_yx, -sig2, -k * (1 - k) * s2),
        }


def k_of_rho(channel: ChannelSpec, rho: float) -> float:
    """Positive root of SNR*k^2 - (SNR - rho - 1)*k - 1 = 0.

    The closed form is finite at rho = -1, where it attains the upper end of
    the k-range; everything below -1 is rejected.
    """
    if not rho >= -1.0:
        raise DomainError(f"rho must be >= -1, got {rho!r}")
    snr = channel.snr
    a = snr - rho - 1.0
    root = math.sqrt(a * a + 4.0 * snr)
    # k = 1 + d with d = -2 rho / (snr + rho + 1 + root): exact sign, no
    # cancellation near rho = 0, and k(0) = 1 exactly
    d = -2.0 * rho / (snr + rho + 1.0 + root)
    if abs(d) <= 0.5:
        return 1.0 + d
    if a >= 0:
        return (a + root) / (2.0 * snr)
    # same root, written without the a + root cancellation
    return 2.0 / (root - a)


def make_rho_point(channel: ChannelSpec, rho: float) -> RhoPoint:
    if not rho > RHO_FLOOR:
        raise DomainError(f"rho must exceed -1 + 1e-9, got {rho!r}")
    k = k_of_rho(channel, rho)
    sigma2_yx = (1.0 + rho) * k * channel.sigma2
    sigma2_y = channel.sigma2 + k * channel.s2
    point = RhoPoint(channel, float(rho), k, sigma2_yx, sigma2_y)
    worst = max(point.residuals().values())
    if worst > IDENTITY_RTOL:
        raise NumericalError(f"family identity residual {worst:.3e} at rho={rho}")
    return point


def cond_density(point: RhoPoint, x, y):
    """Density of N(k_rho x, sigma2_yx) at y; works elementwise on arrays."""
    import numpy as np

    d = np.asarray(y) - point.k_rho * np.asarray(x)
    out = np.exp(-d * d / (2 * point.sigma2_yx)) / math.sqrt(2 * math.pi * point.sigma2_yx)
    return float(out) if np.ndim(out) == 0 else out


def expected_sq_noise(point: RhoPoint, sigma_x2: float) -> float:
    """E[(Y-X)^2] when E[X^2] = sigma_x2 and Y|X follows the family member."""
    if sigma_x2 < 0:
        raise DomainError("sigma_x2 must be nonnegative")
    ch = point.channel
    k = point.k_rho
    return ch.sigma2 + (1 - k) * ch.s2 + (1 - k) ** 2 * (sigma_x2 - ch.s2)


def sq_noise_bound(channel: ChannelSpec, rho: float, eps: float) -> float:
    """Upper bound on E[(Y-X)^2] for inputs with E[X^2] <= s2 + eps."""
    if rho >= 0:
        return channel.sigma2 + channel.s2 + eps
    return channel.sigma2 + eps * channel.sigma2 / channel.s2


def _kl_nats(point: RhoPoint) -> float:
    ch = point.channel
    k = point.k_rho
    u = k * (1 - k) * ch.snr  # sigma2_yx / sigma2 - 1
    return 0.5 * (u - math.log1p(u)) + 0.5 * (1 - k) ** 2 * ch.snr


def _mi_nats(point: RhoPoint) -> float:
    ch = point.channel
    return 0.5 * math.log1p(point.k_rho ** 2 * ch.s2 / point.sigma2_yx)


def kl_family_to_channel(channel: ChannelSpec, point: RhoPoint) -> float:
    """D(p_rho || w | N(0, s2)) in the channel's log base."""
    return channel.from_nats(_kl_nats(point))


def mutual_info_rho(channel: ChannelSpec, point: RhoPoint) -> float:
    """I(N(0, s2), p_rho) = 0.5 log(sigma2_y / sigma2_yx)."""
    return channel.from_nats(_mi_nats(point))


def c0_c1(channel: ChannelSpec, rho: float) -> tuple[float, float]:
    """Coefficients with D + rho*I = c0 + c1*s2 along the family."""
    p = make_rho_point(channel, rho)
    c0 = 0.5 * (
        math.log(channel.sigma2) + rho * math.log(p.sigma2_y) - (1 + rho) * math.log(p.sigma2_yx)
    )
    c1 = (1 - p.k_rho) / (2 * channel.sigma2)
    return channel.from_nats(c0), channel.from_nats(c1)


def lipschitz_constant(channel: ChannelSpec) -> float:
    """Lipschitz constant 1/(sigma2 sqrt(2 pi e)) shared by all rows with rho >= 0."""
    return 1.0 / (channel.sigma2 * math.sqrt(2 * math.pi * math.e))


def peak_density(point: RhoPoint) -> float:
    return 1.0 / math.sqrt(2 * math.pi * point.sigma2_yx)
