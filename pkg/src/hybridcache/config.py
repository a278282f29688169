"""Experiment configuration files (INI, one flat ``[experiment]`` section)."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .params import NetworkParams
from .sim.config import SimConfig

__all__ = ["ExperimentConfig", "load_config", "default_config_text"]

SECTION = "experiment"
_INT_KEYS = ("n", "M", "f_n", "K_n", "K_sbs")
_EXP_KEYS = ("gamma", "beta", "delta")


def default_config_text() -> str:
    return resources.files("hybridcache").joinpath("data/default.ini").read_text("utf-8")


@dataclass(frozen=True)
class ExperimentConfig:
    params: NetworkParams
    alphas: tuple
    sim: SimConfig | None = None
    outputs: Path = Path("results")
    format: str = "csv"
    seed: int = 0
    tolerance: float = 0.03
    tie_split: str = "analytic_center"
    sim_settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if not self.alphas or any(not a > 0 for a in self.alphas):
            raise ValueError("alphas must be a non-empty list of positive numbers")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def params_for(self, alpha: float) -> NetworkParams:
        return self.params.with_(alpha=float(alpha))

    def sim_for(self, alpha: float) -> SimConfig:
        if self.sim is not None:
            return self.sim.with_(params=self.params_for(alpha))
        s = self.sim_settings
        return SimConfig(
            params=self.params_for(alpha),
            horizon_slots=int(s.get("horizon_slots", 200)),
            drain_slots=int(s.get("drain_slots", s.get("horizon_slots", 200))),
            trials=int(s.get("trials", 4)),
            area_constant=float(s.get("area_constant", 2.0)),
            protocol_delta=float(s.get("protocol_delta", 1.0)),
            boundary=s.get("boundary", "torus"),
            mobility=str(s.get("mobility", "true")).lower() in ("1", "true", "yes", "on"),
            master_seed=self.seed,
        )

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _parse(text: str, where: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text, source=where)
    if not cp.has_section(SECTION):
        raise ValueError(f"{where}: missing [{SECTION}] section")
    return dict(cp.items(SECTION))


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Read ``path`` on top of the bundled defaults."""
    values = _parse(default_config_text(), "default.ini")
    if path is not None:
        values.update(_parse(Path(path).read_text("utf-8"), str(path)))
    ints = {k: int(values[k]) for k in _INT_KEYS}
    exps = {k: (float(values[k]) if values.get(k, "").strip() not in ("", "none") else None)
            for k in _EXP_KEYS}
    alphas = tuple(float(a) for a in values["alphas"].split(",") if a.strip())
    params = NetworkParams(alpha=alphas[0], **ints, **exps)
    sim = {k[4:]: v for k, v in values.items() if k.startswith("sim_")}
    return ExperimentConfig(
        params=params, alphas=alphas, format=values.get("format", "csv").strip(),
        seed=int(values.get("seed", 0)), tolerance=float(values.get("tolerance", 0.03)),
        tie_split=values.get("tie_split", "analytic_center").strip(), sim_settings=sim)
