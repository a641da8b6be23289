"""Flat key = value run configuration.

Recognised keys::

    rho0            inner radius of the annulus            (0.3)
    depth           number of levels k*                    (2)
    tau1            first budget; default min(1/e, rho0 (e-1)/e)
    lambda          constant of the fourth condition       (100)
    mode            exact | grid                           (exact)
    schedule        desk | explicit | adaptive             (desk, or explicit
                                                            when schedule.k.i keys appear)
    schedule.K.I    corrugation number N_{K,I}
    conditions      comma list used by adaptive runs      (LC2,LC3)
    grid.rho        radial samples                         (141)
    grid.phi        angular samples, a multiple of 7L      (14 * 7L)
    outdir          output directory                       (h2corr-out)
    seed            seed for scattered samples             (0)
    formal.rho      comma list of circle radii to dump     (0.5,0.7,0.9)
    formal.samples  samples per fundamental arc            (4096)
    formal.m        circle index m for rho = m/M           (round(0.7 M), kept in 1..M-1)
    compare.K       rho interval for comparisons           (0.3,0.8)

Lines starting with # or ; are comments.
"""
import configparser
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError
from .holonomic.pipeline import DEFAULT_LAMBDA, LC_NAMES, TAU_CONDITIONS, RunSpec
from .schedule import DESK_NUMBERS, DESK_RHO0, Schedule, default_tau1, tau1_limit

SCHEDULE_MODES = ("desk", "explicit", "adaptive")
_SECTION = "run"


@dataclass
class RunConfig:
    rho0: float = DESK_RHO0
    depth: int = 2
    tau1: float = None
    lam: float = DEFAULT_LAMBDA
    mode: str = "exact"
    schedule_mode: str = "desk"
    numbers: dict = field(default_factory=dict)
    conditions: tuple = TAU_CONDITIONS
    grid_rho: int = 141
    grid_phi: int = None
    outdir: str = "h2corr-out"
    seed: int = 0
    formal_rho: tuple = (0.5, 0.7, 0.9)
    formal_samples: int = 4096
    formal_m: int = None
    compare_K: tuple = (0.3, 0.8)

    @property
    def budget(self):
        return default_tau1(self.rho0) if self.tau1 is None else self.tau1

    def validate(self):
        if not 0.0 < self.rho0 < 1.0:
            raise ConfigurationError(f"rho0 must lie in (0, 1), got {self.rho0}")
        if self.depth < 0:
            raise ConfigurationError("depth must be >= 0")
        if self.budget <= 0.0:
            raise ConfigurationError("tau1 must be positive")
        if self.budget > tau1_limit(self.rho0) * (1 + 1e-12):
            raise ConfigurationError(
                f"tau1={self.budget} breaks T <= lambda_C(df0)/2 = rho0; "
                f"the largest allowed value is {tau1_limit(self.rho0):.6g}")
        if self.lam <= 0.0:
            raise ConfigurationError("lambda must be positive")
        if self.mode not in ("exact", "grid"):
            raise ConfigurationError("mode must be exact or grid")
        if self.schedule_mode not in SCHEDULE_MODES:
            raise ConfigurationError(f"schedule must be one of {', '.join(SCHEDULE_MODES)}")
        if self.schedule_mode == "desk" and self.depth > len(DESK_NUMBERS) // 3:
            raise ConfigurationError("the desk schedule has depth 2; use an explicit or adaptive schedule")
        for name in self.conditions:
            if name not in LC_NAMES:
                raise ConfigurationError(f"unknown condition {name}")
        lo, hi = self.compare_K
        if not 0.0 < lo < hi <= 1.0:
            raise ConfigurationError("compare.K must be an interval inside (0, 1]")
        if self.formal_samples < 16:
            raise ConfigurationError("formal.samples must be at least 16")
        self.schedule()
        return self

    def schedule(self):
        """Fixed schedule for the run, or None for adaptive runs."""
        if self.schedule_mode == "adaptive":
            return None
        if self.schedule_mode == "desk":
            return Schedule.from_list(DESK_NUMBERS[:3 * self.depth], tau1=self.budget, rho0=self.rho0)
        table = {key: n for key, n in self.numbers.items() if key[0] <= self.depth}
        return Schedule(table, self.depth, self.budget, self.rho0)

    def run_spec(self):
        return RunSpec(rho0=self.rho0, depth=self.depth, mode=self.mode, schedule=self.schedule(),
                       tau1=self.budget, lam=self.lam, n_rho=self.grid_rho, phi_count=self.grid_phi,
                       seed=self.seed, conditions=tuple(self.conditions))

    def with_overrides(self, outdir=None, depth=None, seed=None):
        out = self
        if outdir is not None:
            out = replace(out, outdir=outdir)
        if depth is not None:
            out = replace(out, depth=int(depth))
        if seed is not None:
            out = replace(out, seed=int(seed))
        return out

    def as_text(self):
        lines = [f"rho0 = {self.rho0!r}", f"depth = {self.depth}", f"tau1 = {self.budget!r}",
                 f"lambda = {self.lam!r}", f"mode = {self.mode}", f"schedule = {self.schedule_mode}"]
        lines += [f"schedule.{k}.{i} = {n}" for (k, i), n in sorted(self.numbers.items())]
        lines += [f"conditions = {','.join(self.conditions)}", f"grid.rho = {self.grid_rho}"]
        if self.grid_phi is not None:
            lines.append(f"grid.phi = {self.grid_phi}")
        lines += [f"outdir = {self.outdir}", f"seed = {self.seed}",
                  f"formal.rho = {','.join(repr(r) for r in self.formal_rho)}",
                  f"formal.samples = {self.formal_samples}"]
        if self.formal_m is not None:
            lines.append(f"formal.m = {self.formal_m}")
        lines.append(f"compare.K = {self.compare_K[0]!r},{self.compare_K[1]!r}")
        return "\n".join(lines) + "\n"


def _number(text, kind, key):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot read {text!r} as {kind.__name__}") from None
    return value


def _integer(text, key):
    value = _number(text, float, key)
    if value != int(value):
        raise ConfigurationError(f"{key}: {text!r} is not an integer")
    return int(value)


def _floats(text, key):
    return tuple(_number(part.strip(), float, key) for part in text.split(",") if part.strip())


_SCALARS = {
    "rho0": ("rho0", lambda t, k: _number(t, float, k)),
    "depth": ("depth", _integer),
    "tau1": ("tau1", lambda t, k: _number(t, float, k)),
    "lambda": ("lam", lambda t, k: _number(t, float, k)),
    "mode": ("mode", lambda t, k: t.strip()),
    "schedule": ("schedule_mode", lambda t, k: t.strip()),
    "conditions": ("conditions", lambda t, k: tuple(p.strip() for p in t.split(",") if p.strip())),
    "grid.rho": ("grid_rho", _integer),
    "grid.phi": ("grid_phi", _integer),
    "outdir": ("outdir", lambda t, k: t.strip()),
    "seed": ("seed", _integer),
    "formal.rho": ("formal_rho", _floats),
    "formal.samples": ("formal_samples", _integer),
    "formal.m": ("formal_m", _integer),
    "compare.K": ("compare_K", _floats),
}


def parse_config(text):
    """RunConfig from the text of a key = value file."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    values = {}
    numbers = {}
    for key, raw in parser.items(_SECTION):
        if key.startswith("schedule.") and key.count(".") == 2:
            _, k, i = key.split(".")
            k, i = _integer(k, key), _integer(i, key)
            if k < 1 or i not in (1, 2, 3):
                raise ConfigurationError(f"{key}: stage out of range")
            numbers[(k, i)] = _integer(raw, key)
            continue
        if key not in _SCALARS:
            raise ConfigurationError(f"unknown config key {key!r}")
        attr, conv = _SCALARS[key]
        values[attr] = conv(raw, key)
    if "compare_K" in values and len(values["compare_K"]) != 2:
        raise ConfigurationError("compare.K needs two numbers")
    if numbers and "schedule_mode" not in values:
        values["schedule_mode"] = "explicit"
    return RunConfig(numbers=numbers, **values)


def load_config(path=None):
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
