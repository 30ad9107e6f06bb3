"""Run configuration: JSON parsing, defaults and validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ParseError, ValidationError
from .iteration import IterationConfig
from .scenarios import SCENARIOS, ScenarioConfig
from .state import CurrentMode, ModelConfig, SurfaceCurrent

__all__ = ["MODES", "RunConfig", "parse_config", "load_config"]

MODES = ("direct", "picard", "linear", "convergence")


@dataclass
class RunConfig:
    """Everything a run needs. Defaults give a 32x32x33 equilibrium run to ``t = 1``.

    ``scenario`` is a preset name or a mapping with ``name`` and the preset
    parameters (``eps``, ``k``, ``shear``). ``current`` is a constant wall
    current ``[J1, J2]`` or a mapping with ``mean``, ``profile``, ``rate``
    and ``modes`` (``[k1, k2, amplitude]`` triples); ``None`` keeps the
    preset current. ``levels`` lists ``[N, M, dt]`` for the convergence mode.
    """

    mode: str = "direct"
    N: int = 32
    M: int = 32
    s: int = 3
    c0: float = 0.1
    c1: float = 0.1
    cfl: float = 0.4
    dt_max: float = 0.05
    dt: float | None = None
    t_end: float = 1.0
    scenario: object = "equilibrium"
    current: object = None
    output_dir: str = "mhdsim_out"
    tol: float = 1e-10
    jac_floor: float = 0.1
    dealias_fraction: float = 2.0 / 3.0
    monitor_stability: bool = True
    residuals: bool = True
    snapshot_every: int = 0
    max_steps: int | None = None
    seed: int = 0
    picard_T: float = 0.05
    picard_steps: int = 8
    picard_max_iters: int = 12
    picard_delta0: float = 0.5
    picard_tol: float = 1e-12
    levels: list = field(default_factory=lambda: [[16, 16, 0.02], [32, 32, 0.01]])

    def model_config(self, n: int | None = None, m: int | None = None) -> ModelConfig:
        return ModelConfig(
            n=n or self.N,
            m=m or self.M,
            s=self.s,
            c0=self.c0,
            c1=self.c1,
            tol=self.tol,
            jac_floor=self.jac_floor,
            dealias_fraction=self.dealias_fraction,
            monitor_stability=self.monitor_stability,
        )

    def scenario_config(self) -> ScenarioConfig:
        sc = self.scenario if isinstance(self.scenario, dict) else {"name": self.scenario}
        kwargs = {k: v for k, v in sc.items() if k in ("name", "eps", "shear")}
        if "k" in sc:
            kwargs["k"] = tuple(int(v) for v in sc["k"])
        return ScenarioConfig(current=self.surface_current(), **kwargs)

    def surface_current(self) -> SurfaceCurrent | None:
        cur = self.current
        if cur is None:
            return None
        if isinstance(cur, (list, tuple)):
            return SurfaceCurrent((float(cur[0]), float(cur[1])))
        modes = tuple(CurrentMode(int(a), int(b), float(c)) for a, b, c in cur.get("modes", []))
        mean = cur.get("mean", [1.0, 0.0])
        return SurfaceCurrent((float(mean[0]), float(mean[1])), modes, cur.get("profile", "constant"), float(cur.get("rate", 0.0)))

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(
            T=self.picard_T,
            n_steps=self.picard_steps,
            max_iters=self.picard_max_iters,
            delta0=self.picard_delta0,
            contraction_tol=self.picard_tol,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def _power_of_two(n) -> bool:
    return isinstance(n, int) and n >= 4 and n & (n - 1) == 0


def _validate(cfg: RunConfig) -> list[str]:
    errs = []
    if cfg.mode not in MODES:
        errs.append(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if not _power_of_two(cfg.N):
        errs.append(f"N must be a power of two >= 4, got {cfg.N!r}")
    if not (isinstance(cfg.M, int) and cfg.M >= 4):
        errs.append(f"M must be an integer >= 4, got {cfg.M!r}")
    if not (isinstance(cfg.s, int) and cfg.s >= 3):
        errs.append(f"s must be an integer >= 3, got {cfg.s!r}")
    if not 0.0 < cfg.c0 < 0.5:
        errs.append("c0 must lie in (0, 0.5)")
    if not cfg.c1 > 0.0:
        errs.append("c1 must be positive")
    for name in ("cfl", "dt_max", "t_end", "tol", "picard_T"):
        if not getattr(cfg, name) > 0.0:
            errs.append(f"{name} must be positive")
    if cfg.dt is not None and not cfg.dt > 0.0:
        errs.append("dt must be positive")
    if not 0.0 < cfg.dealias_fraction <= 1.0:
        errs.append("dealias_fraction must lie in (0, 1]")
    if cfg.picard_steps < 1 or cfg.picard_max_iters < 1:
        errs.append("picard_steps and picard_max_iters must be at least 1")
    if cfg.max_steps is not None and cfg.max_steps < 0:
        errs.append("max_steps must be non-negative")
    sc = cfg.scenario if isinstance(cfg.scenario, dict) else {"name": cfg.scenario}
    if sc.get("name") not in SCENARIOS:
        errs.append(f"scenario must be one of {SCENARIOS}, got {sc.get('name')!r}")
    if "k" in sc and not (isinstance(sc["k"], (list, tuple)) and len(sc["k"]) == 2):
        errs.append("scenario k must be a pair of integers")
    cur = cfg.current
    if cur is not None:
        if isinstance(cur, (list, tuple)):
            if len(cur) != 2:
                errs.append("constant current must be a pair [J1, J2]")
        elif isinstance(cur, dict):
            if cur.get("profile", "constant") not in ("constant", "ramp", "oscillating"):
                errs.append(f"unknown current profile {cur.get('profile')!r}")
        else:
            errs.append("current must be a pair or a mapping")
    if cfg.mode == "convergence":
        for lev in cfg.levels:
            if not (isinstance(lev, (list, tuple)) and len(lev) == 3 and _power_of_two(lev[0]) and lev[2] > 0):
                errs.append(f"bad convergence level {lev!r}; expected [N, M, dt] with N a power of two")
    return errs


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration; missing keys take defaults.

    Raises
    ------
    ParseError
        Malformed JSON, a non-object document or unknown keys.
    ValidationError
        One or more invalid values; the message lists all of them.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("configuration must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ParseError(f"unknown configuration keys: {unknown}")
    cfg = RunConfig(**raw)
    errs = _validate(cfg)
    if errs:
        raise ValidationError("; ".join(errs))
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
