"""Experiment configuration: a small TOML schema with exact round-tripping.

One experiment per file.  Fragments mirror the constructors they feed:

    experiment = "verify-survival"
    phi    = { kind = "power", alpha = 1.0 }
    domain = { shape = "half_space", dim = 1 }
    depths = [0.01, 0.04, 0.16, 0.64]
    t_grid = [1.0]
    n_paths = 20000

Floats are serialized through repr(), so parse(serialize(c)) == c exactly.
Keys not listed in the schema are rejected rather than ignored; a typo in
an experiment file should fail loudly, not silently run with defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .errors import ConfigError
from .geometry import Domain
from .scalefn import ScaleFunction
from .simulate import KappaSpec

EXPERIMENTS = (
    "validate-scalefn",
    "check-dgamma",
    "verify-free-kernel",
    "verify-dhke",
    "verify-survival",
    "verify-exit",
    "verify-green",
    "fit-eigenvalue",
    "generator-identity",
)

_TOP_KEYS = {
    "experiment", "phi", "domain", "kappa",
    "t_grid", "x_grid", "y_grid", "depths",
    "n_paths", "seed", "ratio_ceiling", "out",
    "gamma", "box_halfwidth", "eps", "horizon",
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    phi: ScaleFunction
    domain: Domain
    kappa: KappaSpec = field(default_factory=KappaSpec.constant_one)
    t_grid: tuple[float, ...] = ()
    x_grid: tuple[tuple[float, ...], ...] = ()
    y_grid: tuple[tuple[float, ...], ...] = ()
    depths: tuple[float, ...] = ()
    n_paths: int = 10_000
    seed: int = 0
    ratio_ceiling: float = 30.0
    out: str = "."
    gamma: float = 1.0          # check-dgamma only
    box_halfwidth: float | None = None  # verify-green target boxes
    eps: float | None = None    # small-jump cut override
    horizon: float | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; "
                f"choose one of {', '.join(EXPERIMENTS)}")
        coerce = object.__setattr__
        coerce(self, "t_grid", tuple(float(t) for t in self.t_grid))
        coerce(self, "depths", tuple(float(d) for d in self.depths))
        coerce(self, "x_grid", _point_tuple("x_grid", self.x_grid))
        coerce(self, "y_grid", _point_tuple("y_grid", self.y_grid))
        coerce(self, "n_paths", int(self.n_paths))
        coerce(self, "seed", int(self.seed))
        coerce(self, "ratio_ceiling", float(self.ratio_ceiling))
        coerce(self, "gamma", float(self.gamma))
        for name in ("box_halfwidth", "eps", "horizon"):
            v = getattr(self, name)
            if v is not None:
                v = float(v)
                coerce(self, name, v)
                if not v > 0:
                    raise ConfigError(f"{name} must be positive, got {v}")
        if self.n_paths < 100:
            raise ConfigError(f"n_paths must be at least 100, got {self.n_paths}")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not self.ratio_ceiling > 1.0:
            raise ConfigError(
                f"ratio_ceiling must exceed 1, got {self.ratio_ceiling}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if any(t <= 0 for t in self.t_grid):
            raise ConfigError("t_grid entries must be positive")
        if any(d <= 0 for d in self.depths):
            raise ConfigError("depths must be positive")
        d = self.domain.dim
        for name, grid in (("x_grid", self.x_grid), ("y_grid", self.y_grid)):
            for i, pt in enumerate(grid):
                if len(pt) != d:
                    raise ConfigError(
                        f"{name}[{i}] has {len(pt)} coordinates, "
                        f"domain dimension is {d}")


def _point_tuple(name, grid):
    out = []
    for i, pt in enumerate(grid):
        if not hasattr(pt, "__len__"):
            raise ConfigError(
                f"{name}[{i}] must be a coordinate list, e.g. [[0.0]] for "
                f"a single 1d point; got {pt!r}")
        out.append(tuple(float(c) for c in pt))
    return tuple(out)


# -- fragment parsers ----------------------------------------------------

def _take(frag: dict, context: str, required: tuple, optional: tuple = ()):
    known = set(required) | set(optional)
    extra = set(frag) - known
    if extra:
        raise ConfigError(f"{context}: unknown key(s) {sorted(extra)}")
    missing = [k for k in required if k not in frag]
    if missing:
        raise ConfigError(f"{context}: missing key(s) {missing}")


def _phi_from_fragment(frag) -> ScaleFunction:
    if not isinstance(frag, dict) or "kind" not in frag:
        raise ConfigError('phi must be a table with a "kind" key')
    kind = frag["kind"]
    try:
        if kind == "power":
            _take(frag, "phi", ("kind", "alpha"), ("r_min", "r_max"))
            return ScaleFunction.power(
                frag["alpha"],
                r_min=frag.get("r_min", 1e-8), r_max=frag.get("r_max", 1e8))
        if kind == "power_log":
            _take(frag, "phi", ("kind", "alpha", "beta"), ("r_min", "r_max"))
            return ScaleFunction.power_log(
                frag["alpha"], frag["beta"],
                r_min=frag.get("r_min", 1e-8), r_max=frag.get("r_max", 1e8))
        if kind == "tabulated":
            _take(frag, "phi", ("kind", "grid_r", "grid_phi"))
            return ScaleFunction.tabulated(frag["grid_r"], frag["grid_phi"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"phi: {e}") from e
    raise ConfigError(f"phi: unknown kind {kind!r}")


def _domain_from_fragment(frag) -> Domain:
    if not isinstance(frag, dict) or "shape" not in frag:
        raise ConfigError('domain must be a table with a "shape" key')
    shape = frag["shape"]
    try:
        if shape == "full_space":
            _take(frag, "domain", ("shape", "dim"))
            return Domain.full_space(frag["dim"])
        if shape == "half_space":
            _take(frag, "domain", ("shape", "dim"), ("axis", "offset"))
            return Domain.half_space(frag["dim"], axis=frag.get("axis"),
                                     offset=frag.get("offset", 0.0))
        if shape == "ball":
            _take(frag, "domain", ("shape", "center", "radius"))
            return Domain.ball(frag["center"], frag["radius"])
        if shape == "annulus":
            _take(frag, "domain",
                  ("shape", "center", "inner_radius", "outer_radius"))
            return Domain.annulus(frag["center"], frag["inner_radius"],
                                  frag["outer_radius"])
        if shape == "axis_box_rounded":
            _take(frag, "domain",
                  ("shape", "center", "half_widths", "corner_radius"))
            return Domain.axis_box_rounded(frag["center"], frag["half_widths"],
                                           frag["corner_radius"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"domain: {e}") from e
    raise ConfigError(f"domain: unknown shape {shape!r}")


def _kappa_from_fragment(frag) -> KappaSpec:
    if not isinstance(frag, dict) or "kind" not in frag:
        raise ConfigError('kappa must be a table with a "kind" key')
    if frag["kind"] == "constant_one":
        _take(frag, "kappa", ("kind",))
        return KappaSpec.constant_one()
    raise ConfigError(
        f"kappa: kind {frag['kind']!r} is not available from a config file; "
        "bounded coefficients carry a callable and must be built in code")


# -- parse / serialize ---------------------------------------------------

def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"TOML parse error: {e}") from e
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)}")
    missing = [k for k in ("experiment", "phi", "domain") if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s) {missing}")
    kw = {
        "experiment": raw["experiment"],
        "phi": _phi_from_fragment(raw["phi"]),
        "domain": _domain_from_fragment(raw["domain"]),
    }
    if "kappa" in raw:
        kw["kappa"] = _kappa_from_fragment(raw["kappa"])
    for key in ("t_grid", "x_grid", "y_grid", "depths", "n_paths", "seed",
                "ratio_ceiling", "out", "gamma", "box_halfwidth", "eps",
                "horizon"):
        if key in raw:
            kw[key] = raw[key]
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        inner = ", ".join(f"{k} = {_fmt(x)}" for k, x in v.items())
        return "{ " + inner + " }"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _phi_fragment(f: ScaleFunction) -> dict:
    if f.kind == "tabulated":
        return {"kind": f.kind, "grid_r": list(f.grid_r),
                "grid_phi": list(f.grid_phi)}
    frag = {"kind": f.kind, "alpha": f.alpha}
    if f.kind == "power_log":
        frag["beta"] = f.beta
    if f.r_min != 1e-8:
        frag["r_min"] = f.r_min
    if f.r_max != 1e8:
        frag["r_max"] = f.r_max
    return frag


def _domain_fragment(D: Domain) -> dict:
    if D.shape == "full_space":
        return {"shape": D.shape, "dim": D.dim}
    if D.shape == "half_space":
        frag = {"shape": D.shape, "dim": D.dim}
        if D.axis != D.dim - 1:
            frag["axis"] = D.axis
        if D.offset != 0.0:
            frag["offset"] = D.offset
        return frag
    if D.shape == "ball":
        return {"shape": D.shape, "center": list(D.center), "radius": D.radius}
    if D.shape == "annulus":
        return {"shape": D.shape, "center": list(D.center),
                "inner_radius": D.inner_radius, "outer_radius": D.outer_radius}
    if D.shape == "axis_box_rounded":
        return {"shape": D.shape, "center": list(D.center),
                "half_widths": list(D.half_widths),
                "corner_radius": D.corner_radius}
    raise ConfigError(f"cannot serialize domain shape {D.shape!r}")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit the TOML text for cfg; keys with default values are omitted."""
    if cfg.kappa.kind != "constant_one":
        raise ConfigError("bounded kappa coefficients cannot be serialized")
    lines = [
        f"experiment = {_fmt(cfg.experiment)}",
        f"phi = {_fmt(_phi_fragment(cfg.phi))}",
        f"domain = {_fmt(_domain_fragment(cfg.domain))}",
    ]
    defaults = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    for key in ("t_grid", "depths"):
        grid = getattr(cfg, key)
        if grid:
            lines.append(f"{key} = {_fmt(list(grid))}")
    for key in ("x_grid", "y_grid"):
        grid = getattr(cfg, key)
        if grid:
            lines.append(f"{key} = {_fmt([list(p) for p in grid])}")
    for key in ("n_paths", "seed", "ratio_ceiling", "out", "gamma"):
        v = getattr(cfg, key)
        if v != defaults[key].default:
            lines.append(f"{key} = {_fmt(v)}")
    for key in ("box_halfwidth", "eps", "horizon"):
        v = getattr(cfg, key)
        if v is not None:
            lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
