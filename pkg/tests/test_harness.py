import io
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qedbounds import __version__
from qedbounds.cli import main
from qedbounds.errors import ConfigurationError
from qedbounds.harness import (CSV_HEADER, InsufficientDataError, ResultRow, SweepConfig, fit_powerlaw,
                               read_csv, row_seed, run, write_csv)


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_header_exact():
    text = write_csv([])
    assert text.splitlines()[0] == ("task,model,statistics,side,alpha,lambda,box_side,n,value,aux_name,"
                                    "aux_value,seed,status,tool_version")
    assert tuple(text.splitlines()[0].split(",")) == CSV_HEADER


def test_bounds_row_example():
    rows = run(SweepConfig("bounds", alpha=(1.0,), lambda_uv=(1.0,)))
    com = [r for r in rows if r.model == "commutator"][0]
    assert com.side == "lower"
    assert com.value == pytest.approx(math.sqrt(0.5) / (3 * math.pi) - 9 / 8, abs=1e-14)
    assert all(r.tool_version == __version__ for r in rows)


finite = st.floats(-1e300, 1e300, allow_nan=False)


@given(st.lists(st.tuples(finite, st.floats(1e-3, 1e3), st.integers(1, 100), st.sampled_from(["", "K_star"]),
                          finite, st.integers(0, 2**64 - 1)), max_size=5))
def test_csv_roundtrip(items):
    rows = [ResultRow("a2", "a2", "single", "upper", 1.0, lam, 2.0, n, v, an, av if an else math.nan, s)
            for v, lam, n, an, av, s in items]
    back = read_csv(io.StringIO(write_csv(rows)))
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        for f in ("task", "model", "statistics", "side", "alpha", "lambda_uv", "box_side", "n_particles",
                  "value", "aux_name", "seed", "status", "tool_version"):
            assert getattr(a, f) == getattr(b, f)
        assert (math.isnan(a.aux_value) and math.isnan(b.aux_value)) or a.aux_value == b.aux_value


def test_fit_exact_powerlaw():
    x = np.geomspace(1, 100, 10)
    fit = fit_powerlaw([{"x": a, "y": 7 * a**1.5} for a in x], "x", "y")
    assert fit.exponent == pytest.approx(1.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 10


def test_fit_noisy_powerlaw():
    rng = np.random.default_rng(4)
    x = np.geomspace(1, 100, 20)
    y = 3 * x**0.5 * (1 + 0.01 * rng.standard_normal(20))
    assert abs(fit_powerlaw([{"x": a, "y": b} for a, b in zip(x, y)], "x", "y").exponent - 0.5) < 0.02


def test_fit_filters_nonpositive():
    data = [{"x": 1, "y": 1}, {"x": 2, "y": -1}, {"x": 3, "y": 0}, {"x": 4, "y": 2}]
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        with pytest.raises(InsufficientDataError):
            fit_powerlaw(data, "x", "y")
    assert any("dropped" in str(m.message) for m in w)


def test_fit_with_filter_on_rows():
    rows = [ResultRow("bounds", m, "single", "lower", 1.0, l, math.nan, 1, l ** p)
            for l in (10.0, 20.0, 40.0, 80.0) for m, p in (("x", 1.5), ("y", 2.0))]
    assert fit_powerlaw(rows, "lambda", filter={"model": "y"}).exponent == pytest.approx(2.0)


@pytest.mark.parametrize("doc", [
    {"task": "bounds", "grid": {"alpha": []}},
    {"task": "warp"},
    {"task": "bounds", "constants": {"c_unknown": 1.0}},
    {"task": "bounds", "constants": {"c_rel_upper": -1.0}},
    {"task": "bounds", "grid": {"mass": [1.0]}},
    {"task": "bounds", "seed": -3},
])
def test_config_errors(doc):
    with pytest.raises(ConfigurationError):
        SweepConfig.from_dict(doc)


def test_config_roundtrip():
    cfg = SweepConfig.from_dict({"task": "rel", "grid": {"alpha": [0.1, 0.2], "lambda": [3]}, "seed": 11})
    assert SweepConfig.from_dict({k: v for k, v in cfg.to_dict().items() if v is not None}) == cfg


def test_row_seeds_distinct():
    seeds = {row_seed(7, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert row_seed(7, 3) == row_seed(7, 3)


def test_cli_determinism_across_threads(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "lt", "grid": {"box_side": [1.0], "n": [2, 3, 4]}, "seed": 99,
                               "options": {"n_samples": 200, "burn_in": 20}})
    outs = []
    for i, t in enumerate((1, 3)):
        out = tmp_path / f"o{i}.csv"
        assert main(["lt", "--config", cfg, "--out", str(out), "--threads", str(t)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    out = tmp_path / "o_seed.csv"
    main(["lt", "--config", cfg, "--out", str(out), "--seed", "100"])
    assert out.read_bytes() != outs[0]


def test_cli_config_error_writes_nothing(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "bounds", "grid": {"alpha": []}})
    out = tmp_path / "x.csv"
    assert main(["bounds", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert main(["bounds", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_bad_grid_point_row(tmp_path):
    # a grid point with a negative coupling is recorded, the rest still written
    cfg = write_cfg(tmp_path, {"task": "bounds", "grid": {"alpha": [1.0, -1.0], "lambda": [10.0]}})
    out = tmp_path / "b.csv"
    code = main(["bounds", "--config", cfg, "--out", str(out)])
    rows = read_csv(out)
    assert code == 2
    assert any(r.status == "ok" for r in rows) and rows[-1].status == "config_error"


def test_cli_capacity_failure_exit_one(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "oracle", "grid": {"alpha": [1.0], "lambda": [1.5]},
                               "options": {"model": "a2", "caps": [1, 9]}})
    out = tmp_path / "o.csv"
    assert main(["oracle", "--config", cfg, "--out", str(out)]) == 1
    assert read_csv(out)[0].status.startswith("error")


def test_cli_oracle_task(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "oracle", "grid": {"alpha": [0.5], "lambda": [1.2]},
                               "options": {"model": "minimal", "caps": [2, 3, 4]}})
    out = tmp_path / "o.csv"
    assert main(["oracle", "--config", cfg, "--out", str(out)]) == 0
    row = read_csv(out)[0]
    assert row.status == "ok" and row.aux_name == "residual" and row.value > 0


def test_cli_fit_task(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "bounds", "grid": {"alpha": [1.0], "lambda": [1e2, 1e3, 1e4]}})
    src = tmp_path / "b.csv"
    assert main(["bounds", "--config", cfg, "--out", str(src)]) == 0
    fit_cfg = write_cfg(tmp_path, {"task": "fit", "options": {"source": str(src), "x_field": "lambda",
                                                              "filter": {"model": "rel", "side": "upper"}}},
                        "fit.json")
    out = tmp_path / "fit.csv"
    assert main(["fit", "--config", fit_cfg, "--out", str(out)]) == 0
    assert read_csv(out)[0].value == pytest.approx(1.0, abs=1e-12)


def test_accept_forced_failure(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "accept", "constants": {"c_rel_upper": 0.5},
                               "options": {"criteria": [1, 2]}})
    out = tmp_path / "rep.json"
    assert main(["accept", "--config", cfg, "--out", str(out)]) == 1
    rep = json.loads(out.read_text())
    assert [r["criterion_id"] for r in rep] == [1, 2]
    assert rep[0]["status"] == "fail" and rep[1]["status"] == "pass"
    assert set(rep[0]) >= {"criterion_id", "status", "measured", "expected", "tolerance", "runtime_s",
                           "seed", "tool_version"}


def test_accept_passing_subset(tmp_path):
    cfg = write_cfg(tmp_path, {"task": "accept", "options": {"criteria": [1, 9, 10]}})
    assert main(["accept", "--config", cfg, "--out", str(tmp_path / "r.json")]) == 0


def test_out_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("QEDBOUNDS_OUT_DIR", str(tmp_path / "outs"))
    cfg = write_cfg(tmp_path, {"task": "bounds"})
    assert main(["bounds", "--config", cfg, "--out", "b.csv"]) == 0
    assert (tmp_path / "outs" / "b.csv").exists()
