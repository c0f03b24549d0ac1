import json

import numpy as np
import pytest

from funloc.basis import TRIG, FunctionVec
from funloc.experiments import StudyConfig, TuningRule, run_rate_study
from funloc.reporting import (
    fmt_float,
    parse_site,
    read_dataset_csv,
    read_results_csv,
    write_dataset_csv,
    write_study_outputs,
)
from funloc.simulate import ExpLinear, GaussianCovariateModel, NoiseModel


@pytest.fixture(scope="module")
def tiny_result():
    cfg = StudyConfig(
        model=GaussianCovariateModel(FunctionVec.zero(1), np.array([0.08, 0.02])),
        target=ExpLinear(FunctionVec([0.5])),
        noise=NoiseModel(0.2, "gaussian"),
        site=FunctionVec.zero(1),
        delta=0.5,
        n_grid=(50, 100, 200),
        replications=20,
        rule=TuningRule(D0=0.09, D1=0.95, gamma=2.0, J_override=2, K_override=2),
        seed=5,
        config_digest="deadbeef",
    )
    return run_rate_study(cfg)


def test_fmt_float_round_trips_exactly():
    rng = np.random.default_rng(40)
    for _ in range(200):
        x = float(rng.normal() * 10.0 ** rng.integers(-12, 12))
        assert float(fmt_float(x)) == x


def test_study_outputs_round_trip_and_determinism(tiny_result, tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    m1 = write_study_outputs(tiny_result, str(out1), render_figure=False)
    m2 = write_study_outputs(tiny_result, str(out2), render_figure=False)
    assert sorted(m1.outputs) == ["plotdata.csv", "results.csv", "summary.json"]
    for name in ("results.csv", "summary.json", "plotdata.csv"):
        b1 = (out1 / name).read_bytes()
        b2 = (out2 / name).read_bytes()
        assert b1 == b2, name
        assert b"\r" not in b1

    rows = read_results_csv(str(out1 / "results.csv"))
    assert len(rows) == len(tiny_result.per_n)
    for parsed, row in zip(rows, tiny_result.per_n):
        for key in ("n", "J", "K", "arm", "median_sq_err", "mean_sq_err",
                    "q10", "q90", "mean_n_local", "smallball_hat"):
            assert parsed[key] == row[key], key

    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["kappa_hat"] == tiny_result.kappa_hat
    assert summary["config_digest"] == "deadbeef"
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["config_digest"] == "deadbeef"


def test_empty_result_refused(tiny_result, tmp_path):
    import dataclasses
    empty = dataclasses.replace(tiny_result, per_n=[])
    with pytest.raises(ValueError, match="empty"):
        write_study_outputs(empty, str(tmp_path / "x"))
    assert not (tmp_path / "x" / "results.csv").exists()


def test_figure_rendered(tiny_result, tmp_path):
    manifest = write_study_outputs(tiny_result, str(tmp_path), render_figure=True)
    assert "rate_study.png" in manifest.outputs
    png = (tmp_path / "rate_study.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(png) > 5000


def test_dataset_csv_round_trip(tmp_path):
    rng = np.random.default_rng(41)
    C = rng.normal(size=(12, 3))
    y = rng.normal(size=12)
    path = tmp_path / "data.csv"
    write_dataset_csv(str(path), y, C)
    xs, ys = read_dataset_csv(str(path))
    assert np.array_equal(ys, y)
    for f, row in zip(xs, C):
        assert np.array_equal(f.coeffs, row)


def test_dataset_csv_grid_flavor(tmp_path):
    from funloc.basis import synthesize
    f = FunctionVec([0.4, 1.2, -0.3])
    samples = synthesize(f, TRIG, 64)
    path = tmp_path / "grid.csv"
    header = "y," + ",".join(f"grid_{i}" for i in range(1, 65))
    row = "2.5," + ",".join(repr(float(v)) for v in samples)
    path.write_text(header + "\n" + row + "\n")
    xs, ys = read_dataset_csv(str(path), TRIG, L=3)
    assert ys[0] == 2.5
    assert np.max(np.abs(xs[0].coeffs - f.coeffs)) <= 1e-8


def test_dataset_csv_validation(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="'y' column"):
        read_dataset_csv(str(p))
    p.write_text("y,coeff_1,grid_1\n1,2,3\n")
    with pytest.raises(ValueError, match="all coeff"):
        read_dataset_csv(str(p))


def test_parse_site_inline_and_file(tmp_path):
    s = parse_site("0.1,-0.2,0.3")
    assert np.allclose(s.coeffs, [0.1, -0.2, 0.3])
    p = tmp_path / "site.csv"
    p.write_text("coeff_1,coeff_2\n0.5,0.25\n")
    s = parse_site(str(p))
    assert np.array_equal(s.coeffs, [0.5, 0.25])
    with pytest.raises(ValueError, match="neither"):
        parse_site("not-a-number")
