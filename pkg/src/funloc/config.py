"""Experiment configuration: JSON parsing, validation, defaults and digests.

Configs are plain JSON.  Validation fills documented defaults, rejects
unknown keys and reports problems with their JSON path.  The digest is a
SHA-256 over the canonically serialized, normalized config, so it is stable
under key reordering.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

from .basis import FunctionVec
from .experiments import StudyConfig, TuningRule
from .multiindex import enumerate_indices
from .simulate import (
    GaussianCovariateModel,
    NoiseModel,
    PolyCoord,
    c2_star,
    exponential_eigenvalues,
    make_target,
    polynomial_eigenvalues,
    truncate_eigenvalues,
)

__all__ = ["ConfigError", "load_config", "build_study", "config_digest"]

DEFAULT_DELTA = 0.5
DEFAULT_REPLICATIONS = 200
DEFAULT_LAW = "gaussian"
DEFAULT_D0 = 0.09
DEFAULT_D1 = 0.95
MAX_AUTO_RANK = 512


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the JSON path."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _as_dict(v, path) -> dict:
    if not isinstance(v, dict):
        _fail(path, f"expected an object, got {type(v).__name__}")
    return v


def _as_number(v, path, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        _fail(path, "must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        _fail(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        _fail(path, f"must be {'<' if hi_open else '<='} {hi}, got {v}")
    return v


def _as_int(v, path, lo=None, hi=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {type(v).__name__}")
    if lo is not None and v < lo:
        _fail(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        _fail(path, f"must be <= {hi}, got {v}")
    return v


def _as_float_list(v, path) -> list[float]:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a nonempty array of numbers")
    return [_as_number(e, f"{path}[{i}]") for i, e in enumerate(v)]


def _check_keys(d: dict, path: str, allowed: set, required: set):
    for k in d:
        if k not in allowed:
            _fail(f"{path}.{k}" if path else k, "unknown key")
    for k in required:
        if k not in d:
            _fail(f"{path}.{k}" if path else k, "missing required key")


def _build_model(raw: dict, notices: list) -> tuple[GaussianCovariateModel, dict, float]:
    path = "model"
    d = _as_dict(raw, path)
    _check_keys(d, path, {"eigen", "mean_coeffs", "L"}, {"eigen"})
    eig = _as_dict(d["eigen"], f"{path}.eigen")

    kind = eig.get("kind")
    if kind == "exp":
        _check_keys(eig, f"{path}.eigen", {"kind", "C_lambda", "C_gamma1", "gamma"}, {"kind"})
        c_lambda = _as_number(eig.get("C_lambda", 1.0), f"{path}.eigen.C_lambda", lo=0, lo_open=True)
        c_gamma1 = _as_number(eig.get("C_gamma1", 1.0), f"{path}.eigen.C_gamma1", lo=0, lo_open=True)
        gamma = _as_number(eig.get("gamma", 2.0), f"{path}.eigen.gamma", lo=0, lo_open=True)
        if "L" in d:
            L = _as_int(d["L"], f"{path}.L", lo=1)
            lams = exponential_eigenvalues(L, c_lambda, c_gamma1, gamma)
        else:
            lams = truncate_eigenvalues(
                exponential_eigenvalues(MAX_AUTO_RANK, c_lambda, c_gamma1, gamma))
            notices.append(f"model.L defaulted to {lams.size} by the 1e-12 tail rule")
        norm_eigen = {"kind": "exp", "C_lambda": c_lambda, "C_gamma1": c_gamma1, "gamma": gamma}
        decay_gamma = gamma
    elif kind == "poly":
        _check_keys(eig, f"{path}.eigen", {"kind", "C_lambda", "p"}, {"kind"})
        c_lambda = _as_number(eig.get("C_lambda", 1.0), f"{path}.eigen.C_lambda", lo=0, lo_open=True)
        p = _as_number(eig.get("p", 2.0), f"{path}.eigen.p", lo=0, lo_open=True)
        if "L" not in d:
            _fail(f"{path}.L", "required for the poly eigenvalue family "
                  "(its tail decays too slowly for the automatic rule)")
        L = _as_int(d["L"], f"{path}.L", lo=1)
        lams = polynomial_eigenvalues(L, c_lambda, p)
        norm_eigen = {"kind": "poly", "C_lambda": c_lambda, "p": p}
        decay_gamma = 0.0  # no exponential decay claimed
    else:
        _fail(f"{path}.eigen.kind", f"must be 'exp' or 'poly', got {kind!r}")

    mean = _as_float_list(d.get("mean_coeffs", [0.0]), f"{path}.mean_coeffs")
    model = GaussianCovariateModel(FunctionVec(np.array(mean)), lams)
    normalized = {"eigen": norm_eigen, "mean_coeffs": mean, "L": int(lams.size)}
    return model, normalized, decay_gamma


def _build_target(raw: dict) -> tuple[Any, dict]:
    path = "target"
    d = _as_dict(raw, path)
    kind = d.get("kind")
    if kind in ("exp_linear", "cos_linear", "quadratic"):
        _check_keys(d, path, {"kind", "theta_coeffs"}, {"kind", "theta_coeffs"})
        theta = _as_float_list(d["theta_coeffs"], f"{path}.theta_coeffs")
        target = make_target(kind, theta=FunctionVec(np.array(theta)))
        return target, {"kind": kind, "theta_coeffs": theta}
    if kind == "poly_coord":
        _check_keys(d, path, {"kind", "J", "K", "coeffs", "anchor_coeffs"},
                    {"kind", "J", "K", "coeffs"})
        J = _as_int(d["J"], f"{path}.J", lo=1)
        K = _as_int(d["K"], f"{path}.K", lo=1)
        table = enumerate_indices(J, K)
        coeffs = _as_float_list(d["coeffs"], f"{path}.coeffs")
        if len(coeffs) != table.size:
            _fail(f"{path}.coeffs", f"needs length {table.size} for J={J}, K={K}, "
                  f"got {len(coeffs)}")
        anchor = None
        norm = {"kind": kind, "J": J, "K": K, "coeffs": coeffs}
        if "anchor_coeffs" in d:
            ac = _as_float_list(d["anchor_coeffs"], f"{path}.anchor_coeffs")
            anchor = FunctionVec(np.array(ac))
            norm["anchor_coeffs"] = ac
        return PolyCoord(table, coeffs, anchor), norm
    _fail(f"{path}.kind",
          "must be one of 'exp_linear', 'cos_linear', 'quadratic', 'poly_coord'")


def _build_noise(raw, notices) -> tuple[NoiseModel, dict]:
    path = "noise"
    d = _as_dict(raw, path) if raw is not None else {}
    _check_keys(d, path, {"sigma", "law"}, set())
    sigma = _as_number(d.get("sigma", 0.0), f"{path}.sigma", lo=0.0)
    law = d.get("law", DEFAULT_LAW)
    if law not in ("gaussian", "uniform", "none"):
        _fail(f"{path}.law", f"must be 'gaussian', 'uniform' or 'none', got {law!r}")
    return NoiseModel(sigma=sigma, law=law), {"sigma": sigma, "law": law}


def build_study(raw: dict) -> tuple[StudyConfig, dict, list[str]]:
    """Validate a raw config dict; returns (study, normalized dict, notices)."""
    d = _as_dict(raw, "")
    _check_keys(d, "", {"model", "target", "noise", "site_coeffs", "delta",
                        "n_grid", "replications", "tuning", "seed"},
                {"model", "target", "n_grid"})
    notices: list[str] = []

    model, norm_model, decay_gamma = _build_model(d["model"], notices)
    target, norm_target = _build_target(d["target"])
    noise, norm_noise = _build_noise(d.get("noise"), notices)

    site = _as_float_list(d.get("site_coeffs", [0.0]), "site_coeffs")
    x = FunctionVec(np.array(site))
    delta = _as_number(d.get("delta", DEFAULT_DELTA), "delta", lo=0.0, hi=1.0,
                       lo_open=True, hi_open=True)

    grid = d.get("n_grid")
    if not isinstance(grid, list) or not grid:
        _fail("n_grid", "expected a nonempty array of integers")
    n_grid = [_as_int(v, f"n_grid[{i}]", lo=10) for i, v in enumerate(grid)]
    if n_grid != sorted(n_grid):
        notices.append("n_grid was unsorted; sorted ascending")
        n_grid = sorted(n_grid)

    reps = _as_int(d.get("replications", DEFAULT_REPLICATIONS), "replications", lo=1)
    seed = _as_int(d.get("seed", 0), "seed")

    t = _as_dict(d.get("tuning", {}), "tuning")
    _check_keys(t, "tuning", {"D0", "D1", "J_override", "K_override", "c1"}, set())
    D0 = _as_number(t.get("D0", DEFAULT_D0), "tuning.D0", lo=0.0, lo_open=True)
    D1 = _as_number(t.get("D1", DEFAULT_D1), "tuning.D1", lo=0.0, lo_open=True)
    J_override = _as_int(t["J_override"], "tuning.J_override", lo=1) if "J_override" in t else None
    K_override = _as_int(t["K_override"], "tuning.K_override", lo=1, hi=20) if "K_override" in t else None
    if "c1" in t:
        c1 = _as_number(t["c1"], "tuning.c1", lo=0.0, lo_open=True)
    else:
        c2s = c2_star(model, x, delta)
        c1 = 1.0 + 2.0 * c2s if math.isfinite(c2s) else 1.0
        if not math.isfinite(c2s):
            notices.append("c2* is infinite for this model/site; tuning.c1 defaulted to 1.0")
    rule = TuningRule(D0=D0, D1=D1, gamma=decay_gamma, c1=c1,
                      J_override=J_override, K_override=K_override)

    normalized = {
        "model": norm_model, "target": norm_target, "noise": norm_noise,
        "site_coeffs": site, "delta": delta, "n_grid": n_grid,
        "replications": reps, "seed": seed,
        "tuning": {"D0": D0, "D1": D1, "c1": c1,
                   **({"J_override": J_override} if J_override is not None else {}),
                   **({"K_override": K_override} if K_override is not None else {})},
    }
    digest = config_digest(normalized)
    study = StudyConfig(model=model, target=target, noise=noise, site=x, delta=delta,
                        n_grid=tuple(n_grid), replications=reps, rule=rule,
                        seed=seed, config_digest=digest)
    return study, normalized, notices


def load_config(path: str) -> tuple[StudyConfig, dict, list[str]]:
    """Read and validate a JSON experiment config from disk."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    return build_study(raw)


def config_digest(normalized: dict) -> str:
    """SHA-256 over the canonical serialization; key order cannot change it."""
    blob = json.dumps(normalized, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
