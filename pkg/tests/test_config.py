import json

import numpy as np
import pytest

from funloc.config import ConfigError, build_study, config_digest, load_config
from funloc.simulate import CosLinear, ExpLinear, PolyCoord

MINIMAL = {
    "model": {"eigen": {"kind": "exp", "gamma": 2.0}},
    "target": {"kind": "exp_linear", "theta_coeffs": [0.5, 0.2]},
    "n_grid": [100, 200, 400],
}


def test_minimal_config_gets_documented_defaults():
    study, normalized, notices = build_study(json.loads(json.dumps(MINIMAL)))
    assert study.delta == 0.5
    assert study.replications == 200
    assert study.noise.law == "gaussian" and study.noise.sigma == 0.0
    assert study.seed == 0
    assert study.rule.D0 == 0.09 and study.rule.D1 == 0.95
    assert study.rule.gamma == 2.0
    assert study.rule.c1 == 1.0  # z = 0 so c2* = 0
    assert isinstance(study.target, ExpLinear)
    assert any("model.L defaulted" in n for n in notices)
    assert normalized["model"]["L"] == study.model.rank


def test_negative_sigma_reports_path():
    cfg = dict(MINIMAL, noise={"sigma": -0.5})
    with pytest.raises(ConfigError, match=r"noise\.sigma"):
        build_study(cfg)


def test_unknown_keys_rejected_with_path():
    cfg = dict(MINIMAL, extra=1)
    with pytest.raises(ConfigError, match="extra: unknown key"):
        build_study(cfg)
    cfg = dict(MINIMAL, model={"eigen": {"kind": "exp", "bogus": 2}})
    with pytest.raises(ConfigError, match=r"model\.eigen\.bogus"):
        build_study(cfg)


def test_missing_required_key_reports_path():
    cfg = {k: v for k, v in MINIMAL.items() if k != "target"}
    with pytest.raises(ConfigError, match="target: missing"):
        build_study(cfg)


def test_ill_typed_fields_report_path():
    cfg = dict(MINIMAL, replications="many")
    with pytest.raises(ConfigError, match="replications: expected an integer"):
        build_study(cfg)
    cfg = dict(MINIMAL, n_grid=[100, "x"])
    with pytest.raises(ConfigError, match=r"n_grid\[1\]"):
        build_study(cfg)


def test_unsorted_grid_sorted_with_notice():
    cfg = dict(MINIMAL, n_grid=[400, 100, 200])
    study, _, notices = build_study(cfg)
    assert study.n_grid == (100, 200, 400)
    assert any("unsorted" in n for n in notices)


def test_poly_eigen_requires_rank():
    cfg = dict(MINIMAL, model={"eigen": {"kind": "poly", "p": 2.0}})
    with pytest.raises(ConfigError, match=r"model\.L"):
        build_study(cfg)
    cfg = dict(MINIMAL, model={"eigen": {"kind": "poly", "p": 2.0}, "L": 8})
    study, _, _ = build_study(cfg)
    assert study.model.rank == 8
    assert study.rule.gamma == 0.0  # no exponential decay claimed


def test_poly_coord_target_config():
    cfg = dict(MINIMAL, target={"kind": "poly_coord", "J": 2, "K": 2,
                                "coeffs": [1.0, 0.5, -0.5]})
    study, _, _ = build_study(cfg)
    assert isinstance(study.target, PolyCoord)
    bad = dict(MINIMAL, target={"kind": "poly_coord", "J": 2, "K": 2,
                                "coeffs": [1.0]})
    with pytest.raises(ConfigError, match="length 3"):
        build_study(bad)


def test_target_kind_validation():
    cfg = dict(MINIMAL, target={"kind": "mystery"})
    with pytest.raises(ConfigError, match="target.kind"):
        build_study(cfg)
    cfg = dict(MINIMAL, target={"kind": "cos_linear", "theta_coeffs": [1.0]})
    study, _, _ = build_study(cfg)
    assert isinstance(study.target, CosLinear)


def test_c1_defaults_from_shifted_mean():
    cfg = dict(MINIMAL, model={"eigen": {"kind": "exp", "gamma": 2.0},
                               "mean_coeffs": [0.1]},
               delta=0.5)
    study, _, _ = build_study(cfg)
    # c2* = (0.1^2 / lambda_1) / delta^2, lambda_1 = exp(-1)
    want = 1.0 + 2.0 * (0.01 / np.exp(-1.0)) / 0.25
    assert study.rule.c1 == pytest.approx(want, rel=1e-12)


def test_digest_stable_under_key_reordering():
    a = {"b": 1, "a": {"y": [1, 2], "x": 0.5}}
    b = {"a": {"x": 0.5, "y": [1, 2]}, "b": 1}
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest({"b": 2, "a": {"y": [1, 2], "x": 0.5}})


def test_load_config_roundtrip(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(MINIMAL))
    study, normalized, _ = load_config(str(p))
    assert study.config_digest == config_digest(normalized)
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="valid JSON"):
        load_config(str(bad))


def test_tuning_overrides_parsed():
    cfg = dict(MINIMAL, tuning={"D0": 0.2, "D1": 1.1, "J_override": 3,
                                "K_override": 3, "c1": 1.5})
    study, normalized, _ = build_study(cfg)
    assert study.rule.J_override == 3 and study.rule.K_override == 3
    assert study.rule.c1 == 1.5
    assert normalized["tuning"]["J_override"] == 3
    with pytest.raises(ConfigError, match=r"tuning\.K_override"):
        build_study(dict(MINIMAL, tuning={"K_override": 40}))
