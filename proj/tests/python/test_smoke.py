"""Smoke tests for the python bindings: the module builds, the main operations
run, and a couple of frozen geometric constants come out right."""
import math

import _bundlediff as bd


def test_models_and_report():
    hopf = bd.make_model("hopf")
    assert hopf.dim == 3 and hopf.gdim == 1
    chart, q = hopf.random_sigma_point(3, 0)
    rep = bd.geometry_report(hopf, chart, q)
    sc = rep["scalars"]
    assert abs(sc["R_P"] + 6.0) < 1e-6
    assert abs(sc["HR"] + 8.0) < 1e-6
    assert abs(sc["F2"] - 8.0) < 1e-8
    assert abs(sc["Jtilde"]) < 1e-6
    assert max(rep["residuals"].values()) < 1e-10


def test_metric_block_contract():
    flat = bd.make_model("flat")
    chart, q = flat.random_sigma_point(1, 0)
    mb = bd.metric_block(flat, chart, q, [0.3])
    assert abs(mb["det_reduced"] - 1.0) < 1e-12
    assert abs(mb["det_factorized"] - 1.0) < 1e-12


def test_semigroup_decay():
    flat = bd.make_model("flat")
    val, err = bd.semigroup_on_bump(flat, 1, kernel="f3", t=0.5, steps=100,
                                    paths=4000, seed=2, width=2.0)
    # the fiber Fourier factor e^{-1/2 t} times heat smoothing keeps the
    # estimate well inside (0, 1)
    assert 0.0 < abs(val[0]) < 1.0
    assert err[0] < 0.02


def test_girsanov_flat_exact():
    flat = bd.make_model("flat")
    out = bd.girsanov_residual(flat, 1, 0.3, 30, 400, 5)
    assert abs(out["diff"][0][0]) < 1e-13


def test_operator_identity():
    hopf = bd.make_model("hopf")
    r = bd.operator_identity_residual(hopf, 1, points=10, sections=3, seed=4)
    assert r < 1e-8


def test_verify_suite():
    out = bd.verify("geometry", "flat", seed=1)
    assert out[0]["pass"]
    names = [c["name"] for c in out[0]["checks"]]
    assert any("projector" in n for n in names)
