import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llab.core import LinearMean, Norm, TabulatedStepMean
from llab.random_models import (
    SamplerKind,
    SamplerSpec,
    f_density,
    f_density_integral,
    hoeffding_reference,
    monte_carlo,
    quantiles_of,
    sample,
    step_quantile,
    uniforms,
)


# -- counter-based uniforms -------------------------------------------------


def test_uniforms_subrange_matches_full():
    full = uniforms(7, 3, 0, 20000)
    # any sub-range, including ones crossing chunk boundaries, must agree
    for start, count in [(0, 5), (8190, 10), (8192, 8192), (12345, 4321)]:
        assert np.array_equal(uniforms(7, 3, start, count), full[start : start + count])


def test_uniforms_streams_distinct():
    a = uniforms(7, 0, 0, 100)
    b = uniforms(7, 1, 0, 100)
    c = uniforms(8, 0, 0, 100)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all((a >= 0.0) & (a < 1.0))


# -- quantiles --------------------------------------------------------------


def test_step_quantile_linear():
    model = LinearMean(2.0, 1.0)  # M(x) = 2(x - 1)
    assert step_quantile(model, 4.0) == pytest.approx(3.0, abs=1e-9)
    q = quantiles_of(model, 5)
    assert np.allclose(q, 1.0 + np.arange(1, 6) / 2.0)


def test_step_quantile_comb():
    model = TabulatedStepMean.comb(1, 100)
    # M(x) = floor(x): inf{x : M(x) >= 3} = 3
    assert step_quantile(model, 3.0) == pytest.approx(3.0, abs=1e-9)


# -- quantile sampler -------------------------------------------------------


def test_quantile_containment_linear():
    spec = SamplerSpec(SamplerKind.QUANTILE, J=500, seed=11, model=LinearMean(1.0, 1.0))
    seq = sample(spec)
    vals = np.asarray(seq.values)
    q = quantiles_of(spec.model, spec.J)
    lo = np.concatenate(([spec.model.x0], q[:-1]))
    assert np.all(vals > lo) and np.all(vals <= q)
    # |N(x) - M(x)| <= 1 for the quantile sampler
    for x in [10.0, 100.0, 400.0]:
        assert abs(seq.counting(x) - spec.model.value(x)) <= 1.0


def test_quantile_comb_lands_on_atoms():
    model = TabulatedStepMean.comb(1, 1000)
    spec = SamplerSpec(SamplerKind.QUANTILE, J=200, seed=4, model=model)
    vals = np.asarray(sample(spec).values)
    assert np.array_equal(vals, np.arange(1, 201, dtype=float))


def test_quantile_reproducible_and_trial_dependent():
    spec = SamplerSpec(SamplerKind.QUANTILE, J=100, seed=9, model=LinearMean(1.0, 0.0))
    a = np.asarray(sample(spec, trial=0).values)
    b = np.asarray(sample(spec, trial=0).values)
    c = np.asarray(sample(spec, trial=1).values)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# -- block sampler ----------------------------------------------------------


def test_block_sampler_containment():
    ends = []
    j = 0
    while j < 400:
        j = min(400, j + max(1, int(1.5 * math.sqrt(max(j, 1)))))
        ends.append(j)
    spec = SamplerSpec(
        SamplerKind.QUANTILE_BLOCK,
        J=400,
        seed=2,
        model=LinearMean(1.0, 0.0),
        block_ends=tuple(ends),
    )
    vals = np.asarray(sample(spec).values)
    # per-block containment: points of block (lo, hi] stay in its mass range
    lo = 0
    for hi in ends:
        blk = vals[lo:hi]
        assert np.all(blk > spec.model.quantile(lo) - 1e-9)
        assert np.all(blk <= spec.model.quantile(hi) + 1e-9)
        lo = hi


def test_block_validation_errors():
    model = LinearMean(1.0, 0.0)
    with pytest.raises(ValueError):
        SamplerSpec(
            SamplerKind.QUANTILE_BLOCK, J=100, seed=0, model=model, block_ends=(100, 50)
        ).validate()
    with pytest.raises(ValueError):
        SamplerSpec(
            SamplerKind.QUANTILE_BLOCK, J=100, seed=0, model=model, block_ends=(50,)
        ).validate()
    with pytest.raises(ValueError):
        # block (100, 200] has length 100 > 2*sqrt(100)
        SamplerSpec(
            SamplerKind.QUANTILE_BLOCK,
            J=200,
            seed=0,
            model=model,
            block_ends=(100, 200),
        ).validate()


# -- uniform window ---------------------------------------------------------


def test_uniform_window_containment():
    spec = SamplerSpec(SamplerKind.UNIFORM_WINDOW, J=1000, seed=3, A=2.0, K=1.5, theta=0.4)
    vals = np.asarray(sample(spec).values)
    j = np.arange(1, 1001, dtype=float)
    half = spec.K * j**spec.theta
    assert np.all(vals > np.maximum(j / spec.A - half, 0.0) - 1e-12)
    assert np.all(vals <= j / spec.A + half + 1e-12)


def test_uniform_window_spec_validation():
    with pytest.raises(ValueError):
        SamplerSpec(SamplerKind.UNIFORM_WINDOW, J=10, seed=0, theta=1.5).validate()
    with pytest.raises(ValueError):
        SamplerSpec(SamplerKind.UNIFORM_WINDOW, J=10, seed=0, A=-1.0).validate()
    with pytest.raises(ValueError):
        SamplerSpec(SamplerKind.QUANTILE, J=10, seed=0, model=None).validate()
    with pytest.raises(ValueError):
        SamplerSpec(SamplerKind.QUANTILE, J=0, seed=0, model=LinearMean(1, 0)).validate()


@given(workers=st.integers(1, 7))
@settings(max_examples=10, deadline=None)
def test_workers_bit_identical(workers):
    spec = SamplerSpec(SamplerKind.UNIFORM_WINDOW, J=9000, seed=5, A=1.0, K=1.0, theta=0.5)
    base = np.asarray(sample(spec, workers=1).values)
    assert np.array_equal(np.asarray(sample(spec, workers=workers).values), base)


# -- overlap density --------------------------------------------------------


def test_f_density_point_values():
    # theta=0.5, K=1: windows j +- sqrt(j); at u=4.0 the members are exactly
    # the j with j - sqrt(j) < 4 <= j + sqrt(j)
    K, theta = 1.0, 0.5
    u = 4.0
    expect = sum(
        j**-theta
        for j in range(1, 50)
        if j - K * j**theta < u <= j + K * j**theta
    ) / (2 * K)
    assert f_density(u, K, theta) == pytest.approx(expect, rel=1e-12)
    assert f_density(-1.0, K, theta) == 0.0


def test_f_density_integral_tracks_x():
    # F(x) = x + O(x^theta + x^{1-theta}): check a stable measured constant
    K, theta = 1.0, 0.5
    for x in [100.0, 1000.0, 10000.0]:
        F = f_density_integral(x, K, theta)
        assert abs(F - x) <= 3.0 * (x**theta + x ** (1 - theta))
    assert f_density_integral(0.5, K, theta) == 0.0


def test_f_density_integral_is_integral_of_density():
    # crude Riemann check on a short range
    K, theta = 1.0, 0.4
    a, b = 10.0, 12.0
    us = np.linspace(a, b, 4001)
    riemann = np.trapezoid([f_density(u, K, theta) for u in us], us)
    diff = f_density_integral(b, K, theta) - f_density_integral(a, K, theta)
    assert abs(riemann - diff) < 1e-3


# -- Monte-Carlo ------------------------------------------------------------


def test_hoeffding_reference_value():
    assert hoeffding_reference(99.0, 9.0, 2.0) == pytest.approx(4.0 / (100.0 * 10.0) ** 2)


def test_monte_carlo_report_schema():
    spec = SamplerSpec(SamplerKind.QUANTILE, J=2000, seed=1, model=LinearMean(1.0, 0.0))
    rep = monte_carlo(spec, 8, [100.0, 1000.0], [10.0, 100.0])
    assert rep.trials == 8 and len(rep.per_trial_max) == 8
    assert rep.quantiles["q50"] <= rep.quantiles["q90"] <= rep.quantiles["q99"]
    assert rep.flagged == ()
    assert 0.0 < rep.hoeffding_reference < 1.0
    doc = json.loads(rep.to_json())
    for key in (
        "trials",
        "per_trial_max",
        "x_grid",
        "t_grid",
        "norm",
        "quantiles",
        "hoeffding_reference",
        "flagged",
    ):
        assert key in doc
    lines = rep.maxima_csv().split("\n")
    assert lines[0] == "trial,max_normalized_dev"
    assert len(lines) == 8 + 2  # header + rows + trailing newline


def test_monte_carlo_prob_bound_order_one():
    # normalized by the concentration envelope, maxima should be O(1)
    spec = SamplerSpec(SamplerKind.QUANTILE, J=5000, seed=6, model=LinearMean(1.0, 0.0))
    rep = monte_carlo(spec, 16, [500.0, 5000.0], [10.0, 1000.0], norm=Norm.PROB_BOUND)
    assert rep.quantiles["q99"] < 2.0


def test_monte_carlo_rejects_no_trials():
    spec = SamplerSpec(SamplerKind.QUANTILE, J=10, seed=0, model=LinearMean(1.0, 0.0))
    with pytest.raises(ValueError):
        monte_carlo(spec, 0, [5.0], [2.0])


def test_spec_json_roundtrip_fields():
    spec = SamplerSpec(SamplerKind.UNIFORM_WINDOW, J=10, seed=0, A=2.0, K=3.0, theta=0.25)
    doc = json.loads(spec.to_json())
    assert doc == {"kind": "uniform_window", "J": 10, "seed": 0, "A": 2.0, "K": 3.0, "theta": 0.25}
