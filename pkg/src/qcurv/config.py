"""INI scenario configuration: parsing and validation.

Each scenario reads a fixed set of sections; unknown sections or keys are
rejected before any computation starts.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .model import CutoffConfig
from .profiles import (Constant, Decay, InversePower, OnePlusL1, PiecewiseLinearFamily,
                       PowerSum, SelfScaled, Tabulated, Tent)

SCENARIOS = ("solve", "bol-scan", "window-scan", "lambda-rho-curve", "remark62",
             "pohozaev-check", "totalcurv-bound", "cross-validate", "kernel-check")


class ConfigError(ValueError):
    pass


def floats(text):
    """Comma-separated reals; ``a:b:step`` expands to an inclusive range."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            parts = [float(x) for x in item.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ConfigError(f"bad range {item!r}; use start:stop:step")
            a, b, h = parts
            count = int(np.floor((b - a) / h + 1e-9)) + 1
            out.extend(float(a + i * h) for i in range(count))
        else:
            out.append(float(item))
    return out


def names(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def boolean(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


SCHEMA = {
    "scenario": {"name": str, "seed": int, "strict": boolean},
    "params": {"n": int, "alpha": float},
    "grid": {"m": int, "r_min": float, "r_max": float},
    "normalization": {"mode": str, "c": float, "rho": float, "lambda_star": float,
                      "lambda_star_rel": float},
    "solver": {"damping": float, "tol": float, "max_iter": int, "gaussian_eps": float,
               "eps": float, "delta": float, "p": float},
    "scan": {"alphas": floats, "rhos": floats, "fractions": floats, "case1_k": floats,
             "case2_k": floats, "cases": floats, "profiles": names, "p": float, "gaussian_eps": float,
             "fit_window": float, "r_max": float, "dimensions": floats, "samples": int,
             "power": float, "m_coef": float},
    "assert": {"converged": boolean, "lambda_vol_rel": float, "pohozaev_rel": float,
               "verdict": str, "all_converged": boolean, "upper_margin": float,
               "strict_gap": float, "lower_margin": float, "quantization_rel": float,
               "feasible": floats, "infeasible": floats, "pohozaev_singular_rel": float,
               "volume_identity_rel": float, "endpoint_rel": float, "bound_margin": float,
               "regularized_margin": float, "case1_monotone_from": float,
               "case1_growth_factor": float, "case1_harmonic_tol": float,
               "case2_increasing": boolean, "flux_tol": float, "cap": boolean,
               "ratio_baseline": float, "enu_ratio": float, "enu_cap": boolean,
               "sup_diff": float, "normality": float, "symmetry_tol": float,
               "homogeneity_tol": float, "closed_form_tol": float, "monotone": boolean},
    "output": {"profile_csv": str, "report": str},
    "profile": {"kind": str, "c": float, "c0": float, "c1": float, "p": float,
                "amplitude": float, "shape": str, "scale": float, "power": float,
                "alpha": float, "n": int, "k": float, "radii": floats, "samples": floats},
}

REQUIRED = {
    "solve": ("params", "profile", "normalization"),
    "bol-scan": ("scan",),
    "window-scan": ("scan",),
    "lambda-rho-curve": ("params", "profile", "scan"),
    "remark62": ("scan",),
    "pohozaev-check": ("scan",),
    "totalcurv-bound": ("profile", "scan"),
    "cross-validate": ("scan",),
    "kernel-check": ("scan",),
}


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 0
    strict: bool = False
    sections: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    source: str = ""

    def section(self, name):
        return self.sections.get(name, {})

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section, key):
        try:
            return self.sections[section][key]
        except KeyError:
            raise ConfigError(f"scenario {self.scenario}: missing [{section}] {key}") from None

    def cutoffs(self):
        s = self.section("solver")
        return CutoffConfig(eps=s.get("eps", 0.0), delta=s.get("delta", 0.0), p=s.get("p", 0.5))

    def echo(self):
        out = {k: dict(v) for k, v in self.sections.items()}
        for k, v in self.profiles.items():
            out[k] = dict(v)
        return out


def _schema_for(section):
    return SCHEMA["profile"] if section == "profile" or section.startswith("profile:") else \
        SCHEMA.get(section)


def parse_config(text, scenario=None, source="<string>"):
    """Parse INI text into a validated ``ScenarioConfig``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    sections, profiles = {}, {}
    for name in parser.sections():
        schema = _schema_for(name)
        if schema is None:
            raise ConfigError(f"{source}: unknown section [{name}]")
        values = {}
        for key, raw in parser.items(name):
            if key not in schema:
                raise ConfigError(f"{source}: unknown key {key!r} in [{name}]")
            try:
                values[key] = schema[key](raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{source}: bad value for [{name}] {key}: {exc}") from None
        if name.startswith("profile:"):
            profiles[name.split(":", 1)[1]] = values
        else:
            sections[name] = values
    if "profile" in sections:
        profiles.setdefault("default", sections["profile"])
    head = sections.get("scenario", {})
    name = head.get("name", scenario)
    if scenario is not None and name != scenario:
        raise ConfigError(f"{source}: config is for {name!r}, command asked for {scenario!r}")
    if name not in SCENARIOS:
        raise ConfigError(f"{source}: unknown scenario {name!r}")
    for req in REQUIRED[name]:
        if req == "profile" and profiles:
            continue
        if req not in sections:
            raise ConfigError(f"{source}: scenario {name} needs a [{req}] section")
    cfg = ScenarioConfig(scenario=name, seed=head.get("seed", 0), strict=head.get("strict", False),
                         sections=sections, profiles=profiles, source=source)
    for label, spec in profiles.items():
        make_profile(spec, cfg.get("params", "n", 2), label)
    return cfg


def load_config(path, scenario=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), scenario, source=str(path))


def _need(spec, key, label):
    if key not in spec:
        raise ConfigError(f"profile {label!r}: missing key {key!r}")
    return spec[key]


def make_profile(spec, n=2, label="default"):
    """Build a ``QProfile`` from a parsed profile section."""
    kind = _need(spec, "kind", label)
    decay = None
    if "amplitude" in spec:
        decay = Decay(amplitude=spec["amplitude"], shape=spec.get("shape", "gaussian"),
                      scale=spec.get("scale", 1.0), power=spec.get("power", 4.0))
    try:
        if kind == "constant":
            return Constant(spec.get("c", 1.0))
        if kind == "power_sum":
            return PowerSum(_need(spec, "c0", label), _need(spec, "c1", label),
                            _need(spec, "p", label), decay)
        if kind == "inverse_power":
            return InversePower(_need(spec, "alpha", label), spec.get("n", n))
        if kind == "one_plus_l1":
            if decay is None:
                raise ConfigError(f"profile {label!r}: one_plus_l1 needs an amplitude")
            return OnePlusL1(decay)
        if kind == "tent":
            return Tent()
        if kind == "piecewise_linear":
            return PiecewiseLinearFamily(_need(spec, "k", label))
        if kind == "self_scaled":
            return SelfScaled(_need(spec, "alpha", label), spec.get("n", n))
        if kind == "tabulated":
            return Tabulated(tuple(_need(spec, "radii", label)),
                             tuple(_need(spec, "samples", label)))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"profile {label!r}: {exc}") from None
    raise ConfigError(f"profile {label!r}: unknown kind {kind!r}")
