"""Scenario configuration (JSON)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from .errors import ValidationError
from .preisach import Density, MemoryStaircase, discretize, staircase_init
from .simulate import ClassifierSpec, SolverSpec
from .sir import ModelParams, SirState

_TOP = {"params", "density", "init", "memory", "solver", "run", "classifier", "outputs"}


@dataclass
class RunSpec:
    t_end: float = 20000.0
    discard: float | None = None
    max_doublings: int = 2


@dataclass
class ScenarioConfig:
    params: ModelParams
    density: Density
    init: SirState
    memory: dict = field(default_factory=lambda: {"mode": "virgin"})
    solver: SolverSpec = field(default_factory=SolverSpec)
    run: RunSpec = field(default_factory=RunSpec)
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def initial_memory(self):
        """Build the initial Preisach state (staircase or relay bank)."""
        I0 = self.init.I
        mode = self.memory.get("mode", "virgin")
        if mode == "virgin":
            return staircase_init(I0, "virgin")
        if mode == "explicit":
            mem = MemoryStaircase(self.memory.get("maxima", []), self.memory.get("minima", []),
                                  self.memory.get("current", I0), self.memory.get("trend", "flat"))
            return staircase_init(I0, "explicit", mem)
        if mode == "relay_bank":
            N = self.memory.get("N")
            if not isinstance(N, int) or N < 1:
                raise ValidationError("memory.N must be a positive integer")
            return discretize(self.density, N, memory=staircase_init(I0, "virgin"))
        raise ValidationError(f"memory.mode must be virgin, explicit or relay_bank, got {mode!r}")

    def with_value(self, name, value):
        """Copy with one swept parameter replaced (sigma, beta, v_nat or mu)."""
        raw = json.loads(json.dumps(self.raw))
        if name == "sigma":
            if raw["density"].get("kind") != "gaussian":
                raise ValidationError("sigma sweeps need a gaussian density")
            raw["density"]["sigma"] = value
        elif name in ("beta", "v_nat", "mu"):
            raw["params"][name] = value
        else:
            raise ValidationError(f"cannot sweep {name!r}; use sigma, beta, v_nat or mu")
        return parse_config(raw)


def _sub(obj, key, cls):
    sub = obj.get(key, {})
    if sub is None:
        sub = {}
    if not isinstance(sub, dict):
        raise ValidationError(f"{key} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(sub) - names
    if unknown:
        raise ValidationError(f"{key}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**sub)
    except TypeError as exc:
        raise ValidationError(f"{key}: {exc}") from None


def parse_config(obj):
    """Validate a decoded JSON scenario and build a :class:`ScenarioConfig`."""
    if not isinstance(obj, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(obj) - _TOP
    if unknown:
        raise ValidationError(f"unknown top-level field(s) {sorted(unknown)}")
    for key in ("params", "density", "init"):
        if key not in obj:
            raise ValidationError(f"missing required section '{key}'")
    params = ModelParams.from_dict(obj["params"])
    if not params.delta > params.mu:
        raise ValidationError("params: need delta > mu")
    dens = dict(obj["density"]) if isinstance(obj["density"], dict) else obj["density"]
    if isinstance(dens, dict) and "v_nat" in dens:
        raise ValidationError("density: v_nat belongs in params")
    density = Density.from_json(dens).with_v_nat(params.v_nat)
    init = obj["init"]
    if not isinstance(init, dict) or "I0" not in init or "S0" not in init:
        raise ValidationError("init must be an object with I0 and S0")
    try:
        I0, S0 = float(init["I0"]), float(init["S0"])
    except (TypeError, ValueError):
        raise ValidationError("init: I0 and S0 must be numbers") from None
    if not (I0 > 0.0 and S0 > 0.0 and I0 + S0 <= 1.0):
        raise ValidationError("init: need I0 > 0, S0 > 0 and I0 + S0 <= 1")
    memory = obj.get("memory", {"mode": "virgin"})
    if not isinstance(memory, dict):
        raise ValidationError("memory must be an object")
    cfg = ScenarioConfig(params, density, SirState(I0, S0), memory,
                         _sub(obj, "solver", SolverSpec), _sub(obj, "run", RunSpec),
                         _sub(obj, "classifier", ClassifierSpec), dict(obj.get("outputs") or {}), obj)
    if not cfg.run.t_end > 0.0:
        raise ValidationError("run.t_end must be > 0")
    cfg.initial_memory()  # validates the memory section
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_config(obj)
    except ValidationError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise ValidationError(f"{path}: invalid value ({exc})") from None
