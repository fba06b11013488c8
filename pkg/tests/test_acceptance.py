"""The eleven acceptance criteria, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""
import json
import math
import time

import numpy as np
import pytest

from awgn_types.exponents import (
    capacity,
    correct_decoding_exponent,
    error_exponent,
    parametric_curve,
    rho_of_rate,
    shannon_sphere_packing,
)
from awgn_types.gauss_family import (
    ChannelSpec,
    c0_c1,
    k_of_rho,
    kl_family_to_channel,
    lipschitz_constant,
    make_rho_point,
    mutual_info_rho,
)
from awgn_types.quantization import (
    GaussianRows,
    pdf_to_type,
    quantize,
    sandwich_batch,
    xlogx_bounds,
)
from awgn_types.simulator import (
    CodebookRule,
    SimConfig,
    chernoff_noise_tail,
    noise_tail_frequency,
    run,
    run_ensemble,
    stream,
)
from awgn_types.type_system import (
    JointTypePmf,
    LatticeConfig,
    TypePmf,
    count_types_bounds,
    enumerate_joint_types,
    finite_n_correct_exponent,
    finite_n_error_exponent_bound,
    support_bounds,
)

from golden_cases import CASES, GOLDEN, produce
from oracles import (
    brute_force_joint_count,
    brute_force_types,
    exhaustive_correct_exponent,
    exhaustive_error_bound,
    grid_min_constrained_kl,
    normal_tail,
)

SNRS = (0.5, 1.0, 4.0, 10.0)
RHO_GRID = np.concatenate([np.linspace(-0.99, 0, 80)[1:], np.geomspace(1e-3, 100, 121)])


@pytest.mark.criterion(1, "dual-formula sphere-packing agreement")
def test_criterion_01_dual_formula():
    t0 = time.perf_counter()
    worst = 0.0
    for snr in SNRS:
        ch = ChannelSpec.from_snr(snr, log_base=2.0)
        c = capacity(ch)
        for r in np.linspace(0.02 * c, c, 51)[1:]:
            worst = max(worst, abs(error_exponent(ch, r).exponent - shannon_sphere_packing(ch, r)))
    assert worst < 1e-6
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2, "divergence/information identity and family identities")
def test_criterion_02_identities():
    assert len(RHO_GRID) == 200 and RHO_GRID.min() > -0.99 - 1e-15 and RHO_GRID.max() == 100
    for snr in SNRS:
        ch = ChannelSpec.from_snr(snr, log_base=2.0)
        for rho in RHO_GRID:
            p = make_rho_point(ch, float(rho))
            c0, c1 = c0_c1(ch, float(rho))
            lhs = kl_family_to_channel(ch, p) + rho * mutual_info_rho(ch, p)
            assert abs(lhs - (c0 + c1 * ch.s2)) < 1e-10
            assert max(p.residuals().values()) < 1e-12


@pytest.mark.criterion(3, "boundary values")
def test_criterion_03_boundaries():
    for snr in SNRS:
        ch = ChannelSpec.from_snr(snr)
        c = capacity(ch)
        assert abs(error_exponent(ch, c).exponent) < 1e-9
        for r in np.linspace(1e-4, c, 40):
            assert abs(correct_decoding_exponent(ch, r).exponent) < 1e-9
        assert abs(k_of_rho(ch, 0.0) - 1.0) <= np.finfo(float).eps


@pytest.mark.criterion(4, "parametric round-trip")
def test_criterion_04_round_trip():
    grid = np.concatenate([np.linspace(-0.9, 0, 46)[1:], np.geomspace(1e-3, 50, 60)])
    for snr in SNRS:
        ch = ChannelSpec.from_snr(snr)
        for pt in parametric_curve(ch, grid):
            assert abs(rho_of_rate(ch, pt.rate) - pt.rho_star) < 1e-9
            sup = error_exponent(ch, pt.rate) if pt.rho_star >= 0 else correct_decoding_exponent(ch, pt.rate)
            assert abs(sup.exponent - pt.exponent) < 1e-8


@pytest.mark.criterion(5, "grid-search oracle for the constrained minimization")
def test_criterion_05_grid_oracle():
    t0 = time.perf_counter()
    ch = ChannelSpec.from_snr(1.0, log_base=math.e)
    for frac in (0.25, 0.5, 0.75):
        r = frac * capacity(ch)
        grid_min, slack = grid_min_constrained_kl(ch.s2, ch.sigma2, r, size=400)
        assert error_exponent(ch, r).exponent <= grid_min + slack
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion(6, "type-system audits for n = 2..8")
def test_criterion_06_type_audits():
    t0 = time.perf_counter()
    cx, cy = 0.5, 0.25
    for n in range(2, 9):
        cfg = LatticeConfig(n, 0.3, 0.3)
        rep = count_types_bounds(cfg, cx, cy)
        assert rep.num_types_exact is not None and rep.num_joint_types_exact is not None
        assert rep.mot_sandwich_ok and rep.all_pass
        if n <= 6:
            assert rep.num_types_exact == len(brute_force_types(n, cfg.delta_alpha, cx))
        if n <= 4:
            assert rep.num_joint_types_exact == brute_force_joint_count(n, cfg.delta_alpha, cfg.delta_beta, cx, cy)
        for jt in enumerate_joint_types(cfg, cx, cy):
            sizes, bounds = support_bounds(jt, cfg, cx, cy)
            assert all(s <= b for s, b in zip(sizes, bounds))
    assert time.perf_counter() - t0 < 60.0


@pytest.mark.criterion(7, "finite-n exponents against exhaustive recomputation")
def test_criterion_07_finite_n():
    cfg = LatticeConfig(4, 0.3, 0.3)
    ch = ChannelSpec.from_snr(1.0, log_base=math.e)
    inputs = [[0, 0, 0, 0], [0, 1, -1, 0], [1, 1, 0, -1], [2, 0, 0, -1], [1, -1, 1, -1]]
    da, db = cfg.delta_alpha, cfg.delta_beta
    for xs in inputs:
        px = TypePmf.from_indices(xs)
        for rate in (0.0, 0.3, 1.5):
            got = finite_n_correct_exponent(px, rate, 0.8, 0.2, ch, cfg)
            want = exhaustive_correct_exponent(xs, rate, 1.0, da, db, ch.sigma2)
            assert abs(got - want) <= 1e-12
        for rate in (0.2, 0.5, 2.0):
            got = finite_n_error_exponent_bound(px, rate, 0.05, 1.0, ch, cfg)
            want = exhaustive_error_bound(xs, rate - 0.05, 1.0, da, db, ch.sigma2)
            assert got == want or abs(got - want) <= 1e-12


@pytest.mark.criterion(8, "quantization audits")
def test_criterion_08_quantization():
    ch = ChannelSpec.from_snr(1.0)
    # sandwich on 10^4 random pairs, each checked against its own constraint
    cfg = LatticeConfig(1000, 0.2, 0.5)
    rng = stream(8, 0)
    for _ in range(10):
        scale = rng.uniform(0.2, 3.0, (1000, 1))
        x = rng.normal(size=(1000, 1000)) * scale
        y = x + rng.normal(size=x.shape) * rng.uniform(0.2, 3.0, (1000, 1))
        ok, *_ = sandwich_batch(x, y, cfg, ch)
        assert ok.all()
    # scalar x ln x bounds on 10^6 pairs spread over small, comparable and large t1
    t = np.exp(rng.uniform(np.log(1e-12), -1.0, 10 ** 6))
    t1 = np.exp(rng.uniform(np.log(1e-12), np.log(1e6), 10 ** 6))
    lo, hi = xlogx_bounds(t, t1)
    assert lo.all() and hi.all()
    # pdf-to-type construction at n = 10^4
    cfg = LatticeConfig(10 ** 4, 0.2, 0.5)
    K = lipschitz_constant(ch)
    for i in range(10):
        r = stream(8, 4, i)
        x = r.normal(0.0, math.sqrt(ch.s2), cfg.n)
        px = TypePmf.from_indices(quantize(x, cfg.delta_alpha), "X")
        rows = GaussianRows(make_rho_point(ch, float(r.uniform(0.0, 2.0))))
        joint, budget, report = pdf_to_type(px, rows, cfg)
        assert isinstance(joint, JointTypePmf) and joint.marginal("X") == px
        assert report.all_pass
        assert report.p1 <= 2 * budget.c1_app * math.sqrt(budget.h)
        assert budget.h == pytest.approx((K + 1) * cfg.n ** -(0.5 - cfg.alpha))


@pytest.mark.criterion(9, "Chernoff dominance of the noise-power tail")
def test_criterion_09_chernoff():
    ch = ChannelSpec.from_snr(1.0)
    for n in (8, 16):
        for ratio in (1.5, 2.0):
            freq = noise_tail_frequency(ch, ratio * ch.sigma2, n, 10 ** 6, seed=9)
            assert freq <= chernoff_noise_tail(ch, ratio * ch.sigma2, n)


@pytest.mark.criterion(10, "simulation sanity")
def test_criterion_10_simulation():
    ch = ChannelSpec.from_snr(1.0)
    c = capacity(ch)
    # antipodal n = 1 baseline, M = 2
    base = run(SimConfig(1, 2 * c, ch, CodebookRule.ANTIPODAL, trials=10 ** 6, seed=10))
    p = normal_tail(1.0)
    assert abs(base.p_err_hat - p) < 3 * math.sqrt(p * (1 - p) / base.trials)
    # n = 128 is beyond any literal codebook; use the ensemble estimator
    low = SimConfig(128, 0.5 * c, ch, CodebookRule.GAUSSIAN, trials=4096, seed=10)
    high = SimConfig(128, 2.0 * c, ch, CodebookRule.GAUSSIAN, trials=4096, seed=10)
    r_low, r_high = run_ensemble(low), run_ensemble(high)
    assert r_low.emp_error_exponent <= error_exponent(ch, 0.5 * c).exponent + 0.15
    assert r_high.emp_correct_exponent >= max(0.0, correct_decoding_exponent(ch, 2.0 * c).exponent - 0.15)
    # byte-exact reruns, including a different worker count
    again = SimConfig(128, 2.0 * c, ch, CodebookRule.GAUSSIAN, trials=4096, seed=10, workers=2)
    assert json.dumps(run_ensemble(again).to_dict()) == json.dumps(r_high.to_dict())
    rerun = run(SimConfig(1, 2 * c, ch, CodebookRule.ANTIPODAL, trials=10 ** 6, seed=10, workers=3))
    assert json.dumps(rerun.to_dict()) == json.dumps(base.to_dict())


@pytest.mark.criterion(11, "CLI golden files")
def test_criterion_11_golden(tmp_path):
    commands = {argv[0] for argv, _ in CASES.values()}
    assert commands == {"capacity", "exponent-curve", "parametric", "types-audit", "quant-audit", "simulate"}
    for name, (_, code_want) in CASES.items():
        code, text = produce(name, tmp_path)
        assert code == code_want
        assert text == (GOLDEN / name).read_text(encoding="utf-8"), name
