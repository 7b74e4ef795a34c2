"""Scenario files: TOML with unit-suffixed keys, Table defaults, stable hash.

The schema is the shipped ``data/defaults.toml``. Every key is optional and
unknown keys are rejected with an error naming them.
"""

import hashlib
import json
import sys
from importlib import resources

from .distributions import ExponentialParams, TruncLognormalParams, TruncParetoParams
from .mixture import ConfigError, EngagingRates, ScenarioConfig
from .rate_models import BITS_PER_BYTE, BatchTrafficParams, UhdTrafficParams, WebBrowsingParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_INT_KEYS = {"seed", "n_ue", "n_runs", "cs.batch_n", "vr.batch_n"}


class ScenarioError(ConfigError):
    """A scenario file that cannot be turned into a valid configuration."""


def defaults_text():
    return resources.files("traffic5g").joinpath("data/defaults.toml").read_text("utf-8")


def _defaults():
    return tomllib.loads(defaults_text())


def _merge(base, override, prefix=""):
    out = dict(base)
    for key, value in override.items():
        name = f"{prefix}{key}"
        if key not in base:
            raise ScenarioError(f"unknown key {name!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ScenarioError(f"key {name!r} must be a table")
            out[key] = _merge(base[key], value, prefix=f"{name}.")
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"key {name!r} must be a number, got {value!r}")
        if name in _INT_KEYS:
            if not isinstance(value, int):
                raise ScenarioError(f"key {name!r} must be an integer, got {value!r}")
        else:
            value = float(value)
        out[key] = value
    return out


def _build(doc):
    def section(name, fn):
        try:
            return fn(doc[name])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"[{name}]: {exc}") from exc

    rates = section("engaging_rates", lambda s: EngagingRates(
        p_wb=s["web"], p_cs=s["cs"], p_vr=s["vr"], p_uhd=s["uhd"]))
    web = section("web", lambda s: WebBrowsingParams(
        packet=TruncLognormalParams(mu=s["mu_ln_bytes"], sigma=s["sigma_ln_bytes"],
                                    a_low=s["a_low_bytes"], a_up=s["a_up_bytes"]),
        iat=ExponentialParams(s["mean_iat_s"])))

    def batch(s):
        return BatchTrafficParams(packet_size=s["packet_size_bytes"] * BITS_PER_BYTE,
                                  rate_lambda=s["rate_per_s"], batch_n=s["batch_n"])

    cs = section("cs", batch)
    vr = section("vr", batch)
    uhd = section("uhd", lambda s: UhdTrafficParams(
        packet=TruncParetoParams(s["packet_alpha"], s["packet_low_mbit"] * 1e6,
                                 s["packet_up_mbit"] * 1e6),
        iat=TruncParetoParams(s["iat_alpha"], s["iat_low_ms"] / 1e3, s["iat_up_ms"] / 1e3)))
    try:
        return ScenarioConfig(rates=rates, n_ue=doc["n_ue"], n_runs=doc["n_runs"],
                              seed=doc["seed"], spectral_eff=doc["spectral_eff_bps_per_hz"],
                              web=web, cs=cs, vr=vr, uhd=uhd)
    except ConfigError as exc:
        raise ScenarioError(str(exc)) from exc


def parse_scenario_text(text):
    """Configuration from TOML text; empty text gives the defaults."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc
    return _build(_merge(_defaults(), doc))


def parse_scenario(path=None):
    """Configuration from a scenario file, or pure defaults when ``path`` is None.

    Raises ``ScenarioError`` (a ``ConfigError``) for malformed files, unknown
    keys and invariant violations; ``OSError`` if the file cannot be read.
    """
    if path is None:
        return parse_scenario_text("")
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"scenario file is not UTF-8: {exc}") from exc
    return parse_scenario_text(text)


def canonical_document(cfg: ScenarioConfig):
    """The configuration in scenario-file form (same keys and units)."""
    r, w, u = cfg.rates, cfg.web, cfg.uhd

    def batch(p):
        return {"packet_size_bytes": p.packet_size / BITS_PER_BYTE,
                "rate_per_s": p.rate_lambda, "batch_n": p.batch_n}

    return {
        "seed": cfg.seed, "n_ue": cfg.n_ue, "n_runs": cfg.n_runs,
        "spectral_eff_bps_per_hz": cfg.spectral_eff,
        "engaging_rates": {"web": r.p_wb, "cs": r.p_cs, "vr": r.p_vr, "uhd": r.p_uhd},
        "web": {"mu_ln_bytes": w.packet.mu, "sigma_ln_bytes": w.packet.sigma,
                "a_low_bytes": w.packet.a_low, "a_up_bytes": w.packet.a_up,
                "mean_iat_s": w.iat.mean_iat},
        "cs": batch(cfg.cs), "vr": batch(cfg.vr),
        "uhd": {"packet_alpha": u.packet.alpha, "packet_low_mbit": u.packet.a_low / 1e6,
                "packet_up_mbit": u.packet.a_up / 1e6, "iat_alpha": u.iat.alpha,
                "iat_low_ms": u.iat.a_low * 1e3, "iat_up_ms": u.iat.a_up * 1e3},
    }


def scenario_hash(cfg: ScenarioConfig):
    """SHA-256 of the canonical document serialized as sorted compact JSON."""
    blob = json.dumps(canonical_document(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
