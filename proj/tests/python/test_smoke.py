import json

import numpy as np
import pytest

import nlborn


def small_config(out):
    cfg = nlborn.default_config()
    cfg.update(h_recon=0.25, h_data=0.18, n_sources=4, n_detectors=8,
               wavenumbers=[1.0], g0=0.1, phantom="disk", order=3,
               chord_samples=11, output_dir=str(out))
    return cfg


def test_grid_and_quadrature():
    g = nlborn.DiskGrid(0.2)
    assert len(g) == g.radial * g.angular
    assert g.nodes.shape == (len(g), 2)
    assert np.isclose(g.quad_weights.sum(), np.pi, atol=1e-12)
    assert len(g.fingerprint()) == 16
    with pytest.raises(nlborn.ParameterError):
        nlborn.DiskGrid(0.0)


def test_nu_sequence_and_constants():
    assert nlborn.nu_sequence(1.0, [3], 4) == [1.0, 1.0, 3.0, 12.0, 55.0]
    c = nlborn.cubic_constants(0.8)
    g = nlborn.general_constants(0.8, [3])
    assert (c.nu, c.K) == (g.nu, g.K)
    r = nlborn.inverse_radius(1.0, 0.5, 2.0)
    assert r.C >= 2.0 and r.r > 0.0


def test_forward_born_matches_fixed_point():
    g = nlborn.DiskGrid(0.2)
    op = nlborn.HelmholtzOperator(g, 1.0)
    assert op.wellposedness.ok
    src = nlborn.BoundarySource(0.0, 1.0, 3 * g.boundary_spacing, 1.0)
    u0 = nlborn.solve_background(op, nlborn.gaussian_boundary_source(src, g))
    gop = nlborn.greens_operator(op)
    mu = nlborn.compute_mu(gop)
    c = nlborn.cubic_constants(np.abs(u0).max())
    beta = np.full(len(g), 0.3 / (c.K * mu))
    nl = nlborn.Nonlinearity.cubic(beta)
    fp = nlborn.fixed_point_solve(gop, u0, nl, mu=mu)
    assert fp.admissible
    bs = nlborn.born_sum(12, u0, nl, gop)
    assert np.abs(bs.u - fp.u).max() <= 1e-8 * np.abs(fp.u).max()


def test_inverse_series_first_order_is_pseudoinverse():
    g = nlborn.DiskGrid(0.25)
    layout = nlborn.make_sensor_layout(4, 8, [1.0], 0.5, 3 * g.boundary_spacing)
    model = nlborn.ForwardModel(g, layout, [3])
    k1 = nlborn.assemble_k1(model)
    assert k1.shape == (32, model.n_unknowns)
    reg = nlborn.Regularizer(k1, 1e-5)
    beta = np.exp(-4 * (g.nodes ** 2).sum(axis=1))
    phi = model.k_n_apply([beta])
    rec = nlborn.ibs_reconstruct(phi, reg, model, order=2)
    assert np.allclose(rec.corrections[0], reg.matrix @ (k1 @ beta), atol=1e-12)
    assert len(rec.partial_sums) == 2


def test_pipeline_and_mismatch(tmp_path):
    cfg = small_config(tmp_path / "run")
    data, bounds, code = nlborn.run_forward(cfg)
    assert code == 0 and data.shape == (4, 8)
    assert bounds["mu"] > 0
    meta = json.loads((tmp_path / "run" / "data.json").read_text())
    assert meta["config_hash"] == nlborn.config_hash(cfg)
    rec = nlborn.run_reconstruct(cfg)
    assert rec["exit_code"] == 0 and len(rec["correction_norms"]) == 3
    other = dict(cfg, g0=0.2, output_dir=str(tmp_path / "other"))
    with pytest.raises(nlborn.ConfigMismatchError):
        nlborn.run_reconstruct(other, data_dir=tmp_path / "run")
