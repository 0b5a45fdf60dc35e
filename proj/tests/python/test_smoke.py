import json

import numpy as np
import pytest

import polyboot


def test_exact_line_estimate():
    s = polyboot.make_fixture("exact-line")
    assert s.n_units == 6 and len(s) == 30
    est = polyboot.Estimator(s, kind="ols", y="lnflow", x=["lncost"])
    assert est.param_names == ["lncost"]
    np.testing.assert_allclose(est.estimate(), [2.0], rtol=1e-12)


def test_bootstrap_is_deterministic_and_consistent():
    s = polyboot.make_fixture("unit-effects")
    est = polyboot.Estimator(s, kind="mean", column="x")
    a = est.bootstrap(method="bayes", draws=200, seed=7, levels=[0.9])
    b = est.bootstrap(method="bayes", draws=200, seed=7, levels=[0.9], threads=3)
    np.testing.assert_array_equal(a["draws"], b["draws"])
    lo, hi = a["intervals"][0.9]
    d = a["draws"][:, 0]
    assert lo[0] == pytest.approx(np.quantile(d, 0.05), abs=1e-14)
    assert hi[0] == pytest.approx(np.quantile(d, 0.95), abs=1e-14)


def test_weighted_estimate_matches_numpy():
    s = polyboot.make_fixture("unit-effects")
    est = polyboot.Estimator(s, kind="mean", column="x")
    w = np.random.default_rng(0).exponential(size=len(s))
    assert est.estimate_weighted(w)[0] == pytest.approx(np.average(s.column("x"), weights=w), rel=1e-12)


def test_variance_and_errors():
    s = polyboot.make_fixture("exact-line")
    v = polyboot.Estimator(s, kind="ols", y="lnflow", x=["lncost"]).variance("graham")
    assert abs(v["se"][0]) < 1e-12
    with pytest.raises(polyboot.DataError, match="nope"):
        polyboot.Estimator(s, kind="ols", y="lnflow", x=["nope"])
    with pytest.raises(polyboot.ConfigError):
        polyboot.Estimator(s, kind="lasso")
    with pytest.raises(polyboot.ParamError):
        polyboot.make_fixture("bogus")


def test_parse_csv_round_trip():
    s = polyboot.make_fixture("triadic")
    back = polyboot.parse_csv(s.to_csv(), order=3)
    assert back.order == 3
    np.testing.assert_array_equal(back.column("x"), s.column("x"))
    assert back.tuples().shape == (len(s), 3)


def test_cli_in_process(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text(polyboot.make_fixture("exact-line").to_csv())
    code, out, err = polyboot.cli("estimate", "--data", path, "--estimator", "ols", "--y", "lnflow", "--x", "lncost")
    assert code == 0, err
    assert json.loads(out)["point_estimate"] == [2.0]
    assert polyboot.cli("bootstrap", "--data", path, "--y", "lnflow", "--x", "lncost")[0] == 4
