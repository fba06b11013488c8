"""Monte Carlo block coding over the AWGN channel with ML decoding.

Two estimators are provided.  `run` draws one literal codebook and counts
decoding errors; it is limited to M <= 2^20 codewords.  `run_ensemble`
averages over the random-codebook ensemble instead: for each sampled
transmitted codeword and noise vector it computes in closed form the
probability that none of the other M - 1 independent codewords is closer to
the received vector.  That conditional probability is exact for the
ensemble, so the estimator works for any M, including rates where a literal
codebook could never be stored.

Randomness is counter based (Philox): block b of trials always uses the
stream keyed by the seed with counter word b, so results do not depend on
how blocks are scheduled across workers.
"""

from __future__ import annotations

import decimal
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import CeilingError, DomainError
from .gauss_family import ChannelSpec

M_CAP = 2 ** 20
BLOCK = 4096
_CODEBOOK, _TRIALS, _ENSEMBLE, _NOISE = 0, 1, 2, 3


class CodebookRule(enum.Enum):
    GAUSSIAN = "gaussian"  # iid N(0, s2 (1 - 1/n)), violators projected onto the sphere
    SPHERE = "sphere"  # uniform on the radius sqrt(n s2) sphere
    ANTIPODAL = "antipodal"  # +-sqrt(s2) on every coordinate, M <= 2


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, purpose, index) via the Philox counter."""
    return np.random.Generator(np.random.Philox(key=seed & (2 ** 64 - 1), counter=[0, 0, purpose, index]))


@dataclass(frozen=True)
class SimConfig:
    n: int
    rate: float
    channel: ChannelSpec
    codebook_rule: CodebookRule = CodebookRule.GAUSSIAN
    trials: int = 10000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if not self.rate > 0:
            raise DomainError("rate must be positive")
        if self.trials < 1:
            raise DomainError("trials must be positive")
        object.__setattr__(self, "codebook_rule", CodebookRule(self.codebook_rule))

    @property
    def log_num_messages(self) -> float:
        """ln M, accurate also when M is far beyond integer range."""
        return math.log(self.num_messages) if self.num_messages < 2 ** 52 else self._nr_nats

    @property
    def _nr_nats(self) -> float:
        return self.n * self.rate * self.channel.ln_base

    @property
    def num_messages(self) -> int:
        """floor(b^(nR)), with exact powers protected from rounding down."""
        nr = self.n * self.rate
        base = self.channel.log_base
        k = round(nr)
        if float(base).is_integer() and abs(nr - k) <= 1e-9 * max(1.0, abs(nr)):
            return max(int(base) ** int(k), 1)
        x = self._nr_nats
        if x > 700:
            with decimal.localcontext() as ctx:
                ctx.prec = 400
                d = decimal.Decimal(base).ln() * decimal.Decimal(nr)
                return int(d.exp().to_integral_value(decimal.ROUND_FLOOR))
        v = math.exp(x)
        r = round(v)
        if abs(v - r) <= 1e-9 * max(1.0, r):
            return max(int(r), 1)
        return max(int(math.floor(v)), 1)


@dataclass
class SimResult:
    n: int
    log_base: float
    method: str
    trials: int
    errors: float
    corrects: float
    p_err_hat: float
    p_err_ci: tuple
    p_correct_hat: float
    p_correct_ci: tuple
    emp_error_exponent: float | None
    emp_correct_exponent: float | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_err_ci"] = list(self.p_err_ci)
        d["p_correct_ci"] = list(self.p_correct_ci)
        return d


def _emp_exponent(p: float, n: int, log_base: float) -> float | None:
    return None if p <= 0 else -math.log(p) / (n * math.log(log_base)) + 0.0


def wilson(count: int, trials: int) -> tuple[float, float]:
    ci = stats.binomtest(int(count), int(trials)).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


# --- codebooks and channel --------------------------------------------------------


def _clip_power(x: np.ndarray, s2: float) -> np.ndarray:
    """Shrink rows by a few ulps until their power is at most s2 in floating point."""
    n = x.shape[-1]
    for _ in range(64):
        bad = np.mean(x * x, axis=-1) > s2
        if not bad.any():
            return x
        x[bad] *= 1 - 4 * np.finfo(float).eps
    raise AssertionError("power clipping did not converge")


def _sphere(rng, m: int, n: int, s2: float) -> np.ndarray:
    g = rng.standard_normal((m, n))
    g *= math.sqrt(n * s2) / np.linalg.norm(g, axis=1, keepdims=True)
    return g


def _gaussian_projected(rng, m: int, n: int, s2: float) -> np.ndarray:
    g = rng.standard_normal((m, n)) * math.sqrt(s2 * (1 - 1 / n))
    norm = np.linalg.norm(g, axis=1, keepdims=True)
    over = norm[:, 0] > math.sqrt(n * s2)
    g[over] *= math.sqrt(n * s2) / norm[over]
    return g


def draw_codewords(rule: CodebookRule, rng, m: int, n: int, s2: float) -> np.ndarray:
    if rule is CodebookRule.SPHERE:
        x = _sphere(rng, m, n, s2)
    elif rule is CodebookRule.GAUSSIAN:
        x = _gaussian_projected(rng, m, n, s2)
    else:
        if m > 2:
            raise DomainError("the antipodal codebook has at most two codewords")
        x = np.array([[1.0], [-1.0]])[:m] * np.full((1, n), math.sqrt(s2))
    return _clip_power(x, s2)


def gen_codebook(cfg: SimConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """M power-feasible codewords as an (M, n) array; row m-1 is message m."""
    m = cfg.num_messages
    if m > M_CAP:
        raise CeilingError(f"M = {m} exceeds the codebook cap 2^20; use the ensemble estimator")
    rng = stream(cfg.seed, _CODEBOOK) if rng is None else rng
    return draw_codewords(cfg.codebook_rule, rng, m, cfg.n, cfg.channel.s2)


def transmit(x, channel: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x + rng.standard_normal(x.shape) * math.sqrt(channel.sigma2)


def ml_decode(codebook, y) -> int:
    """1-based index of the nearest codeword, smallest index on ties.

    Index 0 is reserved for an erasure and is never produced here.
    """
    cb = np.atleast_2d(np.asarray(codebook, dtype=float))
    if cb.shape[0] == 0:
        raise DomainError("empty codebook")
    d = np.sum((cb - np.asarray(y, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d)) + 1


def ml_decode_batch(codebook: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Row-wise ML decisions (1-based) for a batch of received vectors."""
    if codebook.shape[0] * codebook.shape[1] <= 64:
        d = np.sum((ys[:, None, :] - codebook[None, :, :]) ** 2, axis=2)
    else:
        d = np.sum(codebook * codebook, axis=1)[None, :] - 2.0 * ys @ codebook.T
    return np.argmin(d, axis=1) + 1


# --- literal codebook simulation -------------------------------------------------------


def _run_block(cfg: SimConfig, codebook: np.ndarray, b: int) -> int:
    size = min(BLOCK, cfg.trials - b * BLOCK)
    rng = stream(cfg.seed, _TRIALS, b)
    j = rng.integers(1, codebook.shape[0] + 1, size=size)
    y = transmit(codebook[j - 1], cfg.channel, rng)
    return int(np.count_nonzero(ml_decode_batch(codebook, y) != j))


def run(cfg: SimConfig, codebook: np.ndarray | None = None) -> SimResult:
    """Error and correct-decoding frequencies for one drawn codebook."""
    if codebook is None:
        codebook = gen_codebook(cfg)
    blocks = range(-(-cfg.trials // BLOCK))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            errors = sum(ex.map(lambda b: _run_block(cfg, codebook, b), blocks))
    else:
        errors = sum(_run_block(cfg, codebook, b) for b in blocks)
    corrects = cfg.trials - errors
    n, base = cfg.n, cfg.channel.log_base
    pe, pc = errors / cfg.trials, corrects / cfg.trials
    return SimResult(
        n=n, log_base=base, method="codebook", trials=cfg.trials,
        errors=errors, corrects=corrects,
        p_err_hat=pe, p_err_ci=wilson(errors, cfg.trials),
        p_correct_hat=pc, p_correct_ci=wilson(corrects, cfg.trials),
        emp_error_exponent=_emp_exponent(pe, n, base) if errors else None,
        emp_correct_exponent=_emp_exponent(pc, n, base) if corrects else None,
    )


# --- ensemble estimator ---------------------------------------------------------------


def _log_sphere_cap(n: int, t: float) -> float:
    """log P(<U, e> >= t) for U uniform on the unit sphere in R^n."""
    if t >= 1:
        return -math.inf
    if t <= -1:
        return 0.0
    half = 0.5 * special.betainc((n - 1) / 2, 0.5, 1 - t * t)
    if t >= 0:
        return math.log(half) if half > 0 else -math.inf
    return math.log1p(-half)


def _log_closer_sphere(n, s2, y_norm, d2):
    r = math.sqrt(n * s2)
    t = (y_norm ** 2 + r * r - d2) / (2 * r * y_norm)
    return _log_sphere_cap(n, t)


def _log_closer_gaussian(n, s2, y_norm, d2):
    """log P(||y - X'||^2 <= d2) for X' from the projected Gaussian rule."""
    v = s2 * (1 - 1 / n)
    big = n * s2
    r = math.sqrt(big)
    k = n - 1
    # X' inside the ball: split G into its component along y and the rest
    lo, hi = max(-r, y_norm - math.sqrt(d2)), min(r, y_norm + math.sqrt(d2))
    inside = 0.0
    if hi > lo:
        def f(g):
            a = min(big - g * g, d2 - (y_norm - g) ** 2)
            if a <= 0:
                return 0.0
            return math.exp(-g * g / (2 * v)) / math.sqrt(2 * math.pi * v) * special.gammainc(k / 2, a / (2 * v))

        kink = (big - d2 + y_norm ** 2) / (2 * y_norm)
        cuts = [lo] + ([kink] if lo < kink < hi else []) + [hi]
        for a, b in zip(cuts[:-1], cuts[1:]):
            inside += integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-10, limit=200)[0]
    # X' projected onto the sphere: direction uniform, independent of the norm
    p_out = special.gammaincc(n / 2, big / (2 * v))
    outside = p_out * math.exp(_log_closer_sphere(n, s2, y_norm, d2))
    total = inside + outside
    return math.log(total) if total > 0 else -math.inf


def _ensemble_block(cfg: SimConfig, b: int, size: int, log_m1: float, tilt):
    """Log conditional correct-decoding probabilities and log importance weights."""
    rng = stream(cfg.seed, _ENSEMBLE, b)
    n, s2, sig2 = cfg.n, cfg.channel.s2, cfg.channel.sigma2
    x = draw_codewords(cfg.codebook_rule, rng, size, n, s2)
    if tilt is None:
        z = rng.standard_normal((size, n)) * math.sqrt(sig2)
        log_w = np.zeros(size)
    else:
        # y | x ~ N(k x, v): noise with mean (k - 1) x and variance v
        k, v = tilt
        mu = (k - 1) * x
        z = mu + rng.standard_normal((size, n)) * math.sqrt(v)
        log_w = (
            -np.sum(z * z, axis=1) / (2 * sig2)
            + np.sum((z - mu) ** 2, axis=1) / (2 * v)
            + 0.5 * n * math.log(v / sig2)
        )
    y = x + z
    d2 = np.sum(z * z, axis=1)
    y_norm = np.linalg.norm(y, axis=1)
    closer = _log_closer_sphere if cfg.codebook_rule is CodebookRule.SPHERE else _log_closer_gaussian
    log_pc = np.empty(size)
    for t in range(size):
        q = math.exp(closer(n, s2, float(y_norm[t]), float(d2[t])))
        # log of (1 - q)^(M - 1)
        if log_m1 == -math.inf:
            log_pc[t] = 0.0
        elif q >= 1:
            log_pc[t] = -math.inf
        else:
            log_pc[t] = math.exp(log_m1) * math.log1p(-q)
    return log_pc, log_w


def _tilt_for(cfg: SimConfig, tilt):
    if tilt is None:
        return None
    from .exponents import rho_of_rate
    from .gauss_family import make_rho_point

    rho = rho_of_rate(cfg.channel, cfg.rate) if tilt == "auto" else float(tilt)
    p = make_rho_point(cfg.channel, rho)
    return p.k_rho, p.sigma2_yx


def _log_mean_exp(a: np.ndarray) -> float:
    return float(special.logsumexp(a)) - math.log(a.size)


def _log_se(a: np.ndarray, log_mean: float) -> float:
    """log of the standard error of the mean of exp(a), computed with scaling."""
    if a.size < 2 or log_mean == -math.inf:
        return -math.inf
    top = float(np.max(a))
    vals = np.exp(a - top)
    return top + math.log(max(float(np.std(vals, ddof=1)), 0.0) + 1e-300) - 0.5 * math.log(a.size)


def _log_complement(lp: float) -> float:
    """log(1 - exp(lp)) for lp <= 0."""
    if lp == 0.0:
        return -math.inf
    return math.log(-math.expm1(lp)) if lp > -0.7 else math.log1p(-math.exp(lp))


def run_ensemble(cfg: SimConfig, tilt="auto") -> SimResult:
    """Ensemble-average error and correct-decoding probabilities for any M.

    Each trial contributes P(correct | x, y) = (1 - q)^(M - 1), where q is the
    probability that an independent codeword lands at least as close to y as
    the transmitted one.  With tilt="auto" (or an explicit rho) the output is
    drawn from the family member N(k_rho x, sigma2_yx) instead of the channel
    and each trial is reweighted by the exact likelihood ratio; "auto" uses the
    rho whose mutual information equals the rate, which concentrates samples
    on the events that dominate the rare probability.  tilt=None samples the
    channel directly.  The reported counts are weighted sums of the
    conditional probabilities, and the intervals are normal-approximation 95%
    intervals.  Under a tilt only the rare event (errors below capacity,
    correct decisions above it) is estimated directly; the other probability
    is reported as its complement.
    """
    if cfg.codebook_rule is CodebookRule.ANTIPODAL:
        raise DomainError("the ensemble estimator needs an iid codebook rule")
    m = cfg.num_messages
    log_m1 = math.log(m - 1) if 1 < m < 2 ** 52 else (cfg._nr_nats if m > 1 else -math.inf)
    tw = _tilt_for(cfg, tilt)
    blocks = [(b, min(BLOCK, cfg.trials - b * BLOCK)) for b in range(-(-cfg.trials // BLOCK))]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(lambda bs: _ensemble_block(cfg, bs[0], bs[1], log_m1, tw), blocks))
    else:
        parts = [_ensemble_block(cfg, b, s, log_m1, tw) for b, s in blocks]
    log_pc = np.concatenate([p[0] for p in parts])
    log_w = np.concatenate([p[1] for p in parts])
    with np.errstate(divide="ignore"):
        log_pe = np.log(-np.expm1(log_pc))
    a_pc, a_pe = log_w + log_pc, log_w + log_pe
    lpc, lpe = _log_mean_exp(a_pc), _log_mean_exp(a_pe)
    t = cfg.trials

    def ci(a, lm):
        mean, se = math.exp(lm), math.exp(_log_se(a, lm))
        return max(0.0, mean - 1.96 * se), min(1.0, mean + 1.96 * se)

    ci_pe, ci_pc = ci(a_pe, lpe), ci(a_pc, lpc)
    if tw is not None:
        # the tilt only serves the rare event; the other one is its complement
        if tw[0] <= 1.0:
            lpe = min(lpe, 0.0)
            lpc, ci_pc = _log_complement(lpe), (1.0 - ci_pe[1], 1.0 - ci_pe[0])
        else:
            lpc = min(lpc, 0.0)
            lpe, ci_pe = _log_complement(lpc), (1.0 - ci_pc[1], 1.0 - ci_pc[0])

    n, base = cfg.n, cfg.channel.log_base
    lb = math.log(base)
    pc, pe = math.exp(lpc), math.exp(lpe)
    return SimResult(
        n=n, log_base=base, method="ensemble" if tw is None else "ensemble-tilted", trials=t,
        errors=pe * t, corrects=pc * t,
        p_err_hat=pe, p_err_ci=ci_pe,
        p_correct_hat=pc, p_correct_ci=ci_pc,
        emp_error_exponent=(0.0 - lpe / (n * lb)) if lpe > -math.inf else None,
        emp_correct_exponent=(0.0 - lpc / (n * lb)) if lpc > -math.inf else None,
    )


# --- noise tail ---------------------------------------------------------------------


def chernoff_noise_tail(channel: ChannelSpec, sigma_tilde2: float, n: int) -> float:
    """exp(-n f(sigma_tilde2 / sigma2)) with f(x) = (x - 1 - ln x) / 2."""
    if sigma_tilde2 < channel.sigma2:
        raise DomainError("sigma_tilde2 must be at least sigma2")
    x = sigma_tilde2 / channel.sigma2
    return math.exp(-n * 0.5 * (x - 1 - math.log(x)))


def outlier_exponent(channel: ChannelSpec, sigma_tilde2: float) -> float:
    """(1/(2 ln b)) (x - 1 - ln x) with x = sigma_tilde2 / sigma2."""
    x = sigma_tilde2 / channel.sigma2
    return 0.5 * (x - 1 - math.log(x)) / channel.ln_base


def noise_tail_frequency(channel: ChannelSpec, sigma_tilde2: float, n: int, trials: int, seed: int = 0) -> float:
    """Fraction of trials with (1/n) sum z_k^2 >= sigma_tilde2."""
    hits = 0
    for b in range(-(-trials // 65536)):
        size = min(65536, trials - b * 65536)
        z = stream(seed, _NOISE, b).standard_normal((size, n)) * math.sqrt(channel.sigma2)
        hits += int(np.count_nonzero(np.mean(z * z, axis=1) >= sigma_tilde2))
    return hits / trials
