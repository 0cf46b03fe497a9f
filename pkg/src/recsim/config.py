"""
JSON sweep configuration.

A sweep is a base :class:`~recsim.simulation.ExperimentConfig` crossed with
lists of beta conditions, strategies and epsilon values.  Epsilon values only
multiply the ``epsilon_greedy`` strategy.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from recsim.errors import ConfigError
from recsim.simulation import ExperimentConfig
from recsim.strategies import EPSILON_GREEDY, STRATEGY_NAMES, StrategyKind
from recsim.student import TrainingHyperparams
from recsim.teacher import BetaCondition

_SCALARS = {
    "n": int,
    "m": int,
    "k": int,
    "k_prime": int,
    "seed_fraction": float,
    "realizations": int,
    "regenerate_teacher": bool,
    "master_seed": int,
    "workers": int,
}
_OPTIONAL = {"latent_scale": float, "snapshot_t": int}
_HP_TYPES = {f.name: f.type for f in fields(TrainingHyperparams)}


@dataclass(frozen=True)
class SweepSpec:
    base: ExperimentConfig = field(
        default_factory=lambda: ExperimentConfig(n=4000, m=200, k=4, k_prime=5, realizations=10)
    )
    betas: tuple[BetaCondition, ...] = (BetaCondition(0.0),)
    strategies: tuple[str, ...] = STRATEGY_NAMES
    epsilons: tuple[float, ...] = (0.1,)
    out_dir: str = "results"
    snapshot_t: int | None = None
    "Timestep of the correlation snapshot; defaults to ``m // 2``."
    popularity_stride: int = 1

    def __post_init__(self):
        if not self.betas:
            raise ConfigError("at least one beta value is required", "beta")
        if not self.strategies:
            raise ConfigError("at least one strategy is required", "strategies")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigError(f"unknown strategy {s!r}", "strategies")
        if EPSILON_GREEDY in self.strategies and not self.epsilons:
            raise ConfigError("epsilon_greedy needs at least one epsilon", "epsilons")
        for e in self.epsilons:
            if not 0.0 <= e <= 1.0:
                raise ConfigError(f"epsilon must be in [0, 1], got {e}", "epsilons")
        if self.snapshot_t is not None and not 1 <= self.snapshot_t <= self.base.m:
            raise ConfigError(f"snapshot_t must be in 1..{self.base.m}", "snapshot_t")
        if self.popularity_stride < 1:
            raise ConfigError("popularity_stride must be >= 1", "popularity_stride")

    @property
    def t_snapshot(self) -> int:
        return self.snapshot_t if self.snapshot_t is not None else max(self.base.m // 2, 1)

    def cells(self) -> list[tuple[str, ExperimentConfig]]:
        "Expanded sweep as ``(cell_id, config)`` in a fixed order."
        out = []
        for beta in self.betas:
            for name in self.strategies:
                kinds = (
                    [StrategyKind(name, e) for e in self.epsilons]
                    if name == EPSILON_GREEDY
                    else [StrategyKind(name)]
                )
                for kind in kinds:
                    out.append((cell_id(kind, beta), self.base.replace(beta=beta, strategy=kind)))
        return out

    def to_dict(self) -> dict:
        b = self.base
        d = {
            "n": b.n,
            "m": b.m,
            "k": b.k,
            "k_prime": b.k_prime,
            "latent_scale": b.latent_scale,
            "seed_fraction": b.seed_fraction,
            "realizations": b.realizations,
            "regenerate_teacher": b.regenerate_teacher,
            "master_seed": b.master_seed,
            "workers": b.parallelism,
            "hyperparams": asdict(b.hyperparams),
            "beta": [x.to_json() for x in self.betas],
            "strategies": list(self.strategies),
            "epsilons": list(self.epsilons),
            "out_dir": self.out_dir,
            "snapshot_t": self.snapshot_t,
            "popularity_stride": self.popularity_stride,
        }
        return d


def cell_id(kind: StrategyKind, beta: BetaCondition) -> str:
    name = f"{kind.name}{kind.epsilon!r}" if kind.name == EPSILON_GREEDY else kind.name
    return f"{name}-beta{beta.label}"


def _typed(key, value, typ):
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean", key)
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer", key)
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number", key)
        return float(value)
    raise AssertionError(typ)


def _as_list(key, value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def spec_from_dict(raw: dict) -> SweepSpec:
    """
    Validate a parsed config document and fill defaults.

    Raises:
        ConfigError: naming the offending field.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = set(_SCALARS) | set(_OPTIONAL) | {
        "hyperparams", "beta", "strategies", "epsilons", "epsilon", "out_dir", "popularity_stride",
    }
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}", key)

    base_kw = {}
    for key, typ in _SCALARS.items():
        if key in raw:
            base_kw["parallelism" if key == "workers" else key] = _typed(key, raw[key], typ)
    if raw.get("latent_scale") is not None:
        base_kw["latent_scale"] = _typed("latent_scale", raw["latent_scale"], float)

    hp_raw = raw.get("hyperparams", {}) or {}
    if not isinstance(hp_raw, dict):
        raise ConfigError("hyperparams must be an object", "hyperparams")
    hp_kw = {}
    for key, value in hp_raw.items():
        if key not in _HP_TYPES:
            raise ConfigError(f"unknown hyperparameter {key!r}", f"hyperparams.{key}")
        typ = {"int": int, "float": float, "bool": bool}.get(_HP_TYPES[key])
        if key == "init_scale":
            hp_kw[key] = None if value is None else _typed(f"hyperparams.{key}", value, float)
        else:
            hp_kw[key] = _typed(f"hyperparams.{key}", value, typ)
    try:
        base_kw["hyperparams"] = TrainingHyperparams(**hp_kw)
    except ConfigError as exc:
        exc.field = f"hyperparams.{exc.field}"
        raise
    base = ExperimentConfig(**{"n": 4000, "m": 200, "k": 4, "k_prime": 5, "realizations": 10, **base_kw})

    spec_kw = {"base": base}
    if "beta" in raw:
        spec_kw["betas"] = tuple(BetaCondition.parse(b) for b in _as_list("beta", raw["beta"]))
    if "strategies" in raw:
        strategies = _as_list("strategies", raw["strategies"])
        if not all(isinstance(s, str) for s in strategies):
            raise ConfigError("strategies must be strings", "strategies")
        spec_kw["strategies"] = tuple(strategies)
    if "epsilons" in raw and "epsilon" in raw:
        raise ConfigError("give either epsilon or epsilons, not both", "epsilons")
    eps_key = "epsilons" if "epsilons" in raw else "epsilon" if "epsilon" in raw else None
    if eps_key:
        spec_kw["epsilons"] = tuple(_typed(eps_key, e, float) for e in _as_list(eps_key, raw[eps_key]))
    if "out_dir" in raw:
        if not isinstance(raw["out_dir"], str):
            raise ConfigError("out_dir must be a string", "out_dir")
        spec_kw["out_dir"] = raw["out_dir"]
    if raw.get("snapshot_t") is not None:
        spec_kw["snapshot_t"] = _typed("snapshot_t", raw["snapshot_t"], int)
    if "popularity_stride" in raw:
        spec_kw["popularity_stride"] = _typed("popularity_stride", raw["popularity_stride"], int)
    return SweepSpec(**spec_kw)


def load_config(path) -> SweepSpec:
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return spec_from_dict(raw)


def write_config(spec: SweepSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
