import math

import numpy as np
import pytest

import uniest


def test_fixed_grid():
    g = uniest.build_fixed_grid(15000)
    assert len(g) == 201
    assert uniest.fixed_grid_gamma(15000) == 10
    with pytest.raises(ValueError):
        uniest.build_fixed_grid(1)


def test_quantize_round_trip():
    g = uniest.build_uniform_grid(-1.0, 1.0, 5)
    s = uniest.quantize([-0.9, 0.26, 1.7], g)
    assert list(s) == [0, 3, 4]
    assert list(uniest.dequantize(s, g)) == [-1.0, 0.5, 1.0]


def test_entropy():
    assert uniest.h_q([0, 1, 0, 1], 2, 0) == pytest.approx(1.0)
    assert uniest.h_q([0, 1, 0, 1], 2, 1) == 0.0
    assert uniest.default_order(256, 4) == 2


def test_map_denoises_a_markov_sequence():
    x = np.asarray(uniest.markov_source(128, [0.95, 0.95], [0.0, 1.0], 3))
    y, var = uniest.add_awgn(x, 15.0, 4)
    ch = uniest.Channel(y, var)
    grid = uniest.build_uniform_grid(0.0, 1.0, 2)
    est = uniest.estimate_map(ch, grid, uniest.SamplerConfig(seed=1))
    assert np.mean((np.asarray(est.x) - x) ** 2) < 0.02
    terms = uniest.energy(est.symbols, est.grid, est.order, ch)
    assert terms.coding_bits + terms.likelihood_bits == pytest.approx(est.energy.coding_bits + est.energy.likelihood_bits)
    mmse = uniest.estimate_mmse(ch, grid, uniest.SamplerConfig(seed=2, samples=100))
    assert len(mmse.x) == 128


def test_linear_channel_and_fista():
    J = np.asarray(uniest.gaussian_matrix(40, 64, 1))
    assert J.shape == (40, 64)
    x = np.asarray(uniest.bernoulli_source(64, 0.05, 2))
    y, var = uniest.add_awgn(J @ x, 20.0, 3)
    res = uniest.fista(J, y, 0.01)
    assert res.converged
    assert np.mean((np.asarray(res.x) - x) ** 2) < 0.05
    ch = uniest.Channel(y, var, J)
    assert math.isfinite(ch.log_likelihood(x))


def test_rate_distortion_references():
    pts = uniest.blahut_arimoto([0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]], [math.log(9.0)])
    rate, dist = pts[0]
    h2 = -0.1 * math.log2(0.1) - 0.9 * math.log2(0.9)
    assert dist == pytest.approx(0.1, rel=1e-4)
    assert abs(rate - (1.0 - h2)) <= 1e-3
    r, d = uniest.ecsq_rd_point([0.3] * 10, 1.0)
    assert r == 0.0 and d == pytest.approx(0.09)
    with pytest.raises(ValueError):
        uniest.blahut_arimoto([0.5, 0.6], [[0.0, 1.0], [1.0, 0.0]], [1.0])


def test_run_experiment_is_deterministic():
    yaml = "runs: 1\nsource: {length: 32, levels: [-1, 1]}\nchannel: {snr_db: [5]}\nestimator: {schedule: {sweeps: 20}, samples: 20}\n"
    a = uniest.run_experiment("denoise", yaml)
    assert a.startswith("n,snr_db,sigma2,seed,mse_map,mse_mmse,ratio\n")
    assert a == uniest.run_experiment("denoise", yaml)
    with pytest.raises(ValueError):
        uniest.run_experiment("denoise", "sed: 1\n")
