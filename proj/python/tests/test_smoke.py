import math

import numpy as np
import pytest

import ssum


def test_kernels():
    a = np.array([[2.0, 0.5j], [-0.5j, 1.0]])
    assert ssum.chol_logdet(a) == pytest.approx(math.log(np.linalg.det(a).real), abs=1e-12)
    b = np.array([[1.0], [2.0j]])
    x = ssum.hermitian_solve(a, b)
    assert np.allclose(a @ x, b)
    mu, v = ssum.power_bisection(np.zeros((2, 2)), b, 1.0)
    assert mu == pytest.approx(np.linalg.norm(b), rel=1e-7)
    with pytest.raises(ssum.NotPositiveDefinite):
        ssum.chol_logdet(-np.eye(2))


def test_scalar_rate():
    cfg = ssum.NetworkConfig.uniform(1, 1, 1, 1, 1, 1.0, 1.0)
    h = ssum.ChannelRealization(1, 1)
    h[0, 0] = np.array([[1.0 + 0j]])
    v = [np.array([[1.0 + 0j]])]
    u = ssum.mmse_receiver(cfg, v, h, 0)
    assert ssum.rate(cfg, u, v, h, 0) == pytest.approx(math.log(2.0), abs=1e-14)


def test_stochastic_wmmse_runs():
    cfg = ssum.NetworkConfig.uniform(3, 1, 2, 2, 1, 1.0, 1.0)
    model = ssum.ChannelModel.generate(cfg, 1)
    x0 = ssum.random_precoders(cfg, 2)
    v, steps = ssum.stochastic_wmmse(model, x0, 50, 3)
    assert len(steps) == 50
    assert all(p <= 1.0 + 1e-9 for p in ssum.cell_powers(cfg, v))
    before, _ = ssum.ergodic_sum_rate(x0, model, 50, 4)
    after, se = ssum.ergodic_sum_rate(v, model, 50, 4)
    assert after > before and se >= 0


def test_lasso_and_shrink():
    a = ssum.lasso(np.eye(2), np.array([2.0, 0.3]), 1.0)
    assert np.allclose(a, [1.0, 0.0])
    assert np.allclose(ssum.shrink(np.array([-2.0, 0.5]), 1.0), [-1.0, 0.0])


def test_sg_variants_agree():
    rng = np.random.default_rng(0)
    samples = rng.normal(size=(40, 4))
    x0 = np.zeros(3)
    a = ssum.sg_variant("sg", "least_squares", samples, x0)
    b = ssum.sg_variant("ssum_sg", "least_squares", samples, x0)
    assert a.shape == (41, 3)
    assert np.max(np.abs(a - b)) < 1e-10
    with pytest.raises(ssum.ConfigError):
        ssum.sg_variant("nope", "least_squares", samples, x0)


def test_experiment_and_hash(tmp_path):
    text = "scenario = sg\nmethods = [sg, l1_ssum_sg]\nr_max = 30\nn_mc = 10\neval_every = 10\n"
    rows = ssum.run_experiment(text, str(tmp_path))
    assert len(rows) == 8
    assert (tmp_path / "manifest.txt").read_text().startswith("config_hash " + ssum.config_hash(text))
    assert rows == ssum.run_experiment(text)
    with pytest.raises(ssum.ConfigError):
        ssum.run_experiment("bogus_key = 1\n")
