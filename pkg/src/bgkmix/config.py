"""Sectioned key-value run configuration (INI syntax).

Sections: ``[grid]``, ``[parameters]``, ``[initial.species1.<i>]`` /
``[initial.species2.<i>]``, ``[time]``, ``[suite]``, ``[compare]``, ``[output]``.
Unknown sections or keys are errors; a parsed config echoes back to text that
parses to the same config.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigurationError
from .grid import GridConfig
from .macroscopic import coupling, gamma_of_c
from .mixture import AAP_PRINTED, SINGLE_TERM, TWO_TERM, VARIANTS, MixtureParameters, validate_params
from .estimates import SuiteConfig
from .solver import MaxwellianComponent, SimulationConfig

MODES = ("simulate", "estimates", "bridge", "compare")


@dataclass(frozen=True)
class CompareConfig:
    dts: tuple = (0.1, 0.05, 0.025)
    t_end: float = 1.0
    ref_substeps: int = 16


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    diagnostics: str = "diagnostics.csv"


@dataclass(frozen=True)
class RunConfig:
    model_variant: str
    grid: GridConfig
    params: MixtureParameters
    species1: tuple = ()
    species2: tuple = ()
    time: SimulationConfig = SimulationConfig()
    suite: SuiteConfig = SuiteConfig()
    compare: CompareConfig = CompareConfig()
    output: OutputConfig = OutputConfig()
    lambda_u: Optional[float] = field(default=None, compare=False)
    c: Optional[float] = field(default=None, compare=False)

    @property
    def initial_densities(self) -> tuple[float, float]:
        return (sum(c.n for c in self.species1), sum(c.n for c in self.species2))

    def with_seed(self, seed: int) -> "RunConfig":
        from dataclasses import replace
        return replace(self, suite=replace(self.suite, master_seed=int(seed)))

    def with_variant(self, variant: str) -> "RunConfig":
        from dataclasses import replace
        if variant not in VARIANTS:
            raise ConfigurationError(f"must be one of {VARIANTS}", key="model_variant")
        return replace(self, model_variant=variant, params=self.params.replace(model_variant=variant))

    def to_text(self) -> str:
        """Fully resolved config; ``delta`` and ``gamma`` are written even when derived."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["grid"] = {f.name: _fmt(getattr(self.grid, f.name)) for f in fields(GridConfig)}
        par = {k: _fmt(getattr(self.params, k)) for k in _PARAM_KEYS
               if getattr(self.params, k) is not None}
        cp["parameters"] = par
        for tag, comps in (("species1", self.species1), ("species2", self.species2)):
            for i, c in enumerate(comps):
                cp[f"initial.{tag}.{i}"] = {f.name: _fmt(getattr(c, f.name))
                                            for f in fields(MaxwellianComponent)}
        cp["time"] = {f.name: _fmt(getattr(self.time, f.name)) for f in fields(SimulationConfig)}
        cp["suite"] = {f.name: _fmt(getattr(self.suite, f.name)) for f in fields(SuiteConfig)}
        cp["compare"] = {f.name: _fmt(getattr(self.compare, f.name)) for f in fields(CompareConfig)}
        cp["output"] = {f.name: _fmt(getattr(self.output, f.name)) for f in fields(OutputConfig)}
        import io
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_PARAM_KEYS = ("model_variant", "m1", "m2", "nu11t", "nu12t", "nu21t", "nu22t", "alpha", "delta",
               "gamma", "epsilon", "chi12", "chi21", "nu11_aap", "nu12_aap", "nu21_aap",
               "nu22_aap", "aap_sign")
_PARAM_REQUIRED = ("m1", "m2", "alpha", "epsilon")
_GRID_REQUIRED = ("velocity_dim", "v_max", "n_nodes_per_axis")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _num(section: str, key: str, raw: str, kind=float):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"[{section}] expected {kind.__name__}, got {raw!r}", key=key) from None


def _vec(section: str, key: str, raw: str, kind=float) -> tuple:
    return tuple(_num(section, key, s.strip(), kind) for s in raw.split(",") if s.strip())


def _bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"[{section}] expected boolean, got {raw!r}", key=key)


def _check_keys(section: str, got, allowed, required=()):
    for k in got:
        if k not in allowed:
            raise ConfigurationError(f"unknown key in [{section}]", key=k)
    for k in required:
        if k not in got:
            raise ConfigurationError(f"missing required key in [{section}]", key=k)


def _dataclass_section(cp, section: str, cls, required=(), converters=None, default=None):
    converters = converters or {}
    names = {f.name: f for f in fields(cls)}
    if section not in cp:
        if required:
            raise ConfigurationError(f"missing section [{section}]", key=section)
        return default if default is not None else cls()
    sec = cp[section]
    _check_keys(section, sec, names, required)
    kw = {}
    for k, raw in sec.items():
        conv = converters.get(k)
        if conv is None:
            typ = type(names[k].default)
            conv = {int: lambda s, k, r: _num(s, k, r, int), float: _num,
                    bool: _bool, str: lambda s, k, r: r.strip()}.get(typ, _num)
        kw[k] = conv(section, k, raw)
    return cls(**kw)


def _components(cp, tag: str) -> tuple:
    prefix = f"initial.{tag}."
    secs = sorted((s for s in cp.sections() if s.startswith(prefix)),
                  key=lambda s: _num(s, "section", s[len(prefix):], int))
    out = []
    for s in secs:
        out.append(_dataclass_section(cp, s, MaxwellianComponent, required=("n",),
                                      converters={"u": _vec, "T": _num, "n": _num,
                                                  "amplitude": _num,
                                                  "wavenumber": lambda s, k, r: _num(s, k, r, int)}))
    return tuple(out)


def parse_config(text: str, mode: Optional[str] = None) -> RunConfig:
    """Parse and validate a run configuration; ``mode`` enforces the blocks it needs."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None

    known = {"grid", "parameters", "time", "suite", "compare", "output"}
    for s in cp.sections():
        if s not in known and not s.startswith(("initial.species1.", "initial.species2.")):
            raise ConfigurationError("unknown section", key=s)

    grid = _dataclass_section(cp, "grid", GridConfig, required=_GRID_REQUIRED)
    d = grid.velocity_dim

    species1, species2 = _components(cp, "species1"), _components(cp, "species2")
    needs_initial = mode in ("simulate", "compare", "bridge")
    if needs_initial and not (species1 and species2):
        raise ConfigurationError("both species need at least one [initial.speciesK.i] section",
                                 key="initial")

    if "parameters" not in cp:
        raise ConfigurationError("missing section [parameters]", key="parameters")
    sec = cp["parameters"]
    _check_keys("parameters", sec, set(_PARAM_KEYS) | {"lambda_u", "c"}, _PARAM_REQUIRED)
    for a, b in (("gamma", "c"), ("delta", "lambda_u")):
        if a in sec and b in sec:
            raise ConfigurationError(f"'{a}' and '{b}' are mutually exclusive", key=b)
    if "delta" not in sec and "lambda_u" not in sec:
        raise ConfigurationError("one of 'delta' or 'lambda_u' is required", key="delta")
    kw = {}
    for k, raw in sec.items():
        if k in ("model_variant", "aap_sign"):
            kw[k] = raw.strip()
        else:
            kw[k] = _num("parameters", k, raw)
    variant = kw.get("model_variant", TWO_TERM)
    if variant not in VARIANTS:
        raise ConfigurationError(f"must be one of {VARIANTS}", key="model_variant")
    kw.setdefault("aap_sign", AAP_PRINTED)
    lambda_u = kw.pop("lambda_u", None)
    c = kw.pop("c", None)
    p = MixtureParameters(**{k: v for k, v in kw.items() if k not in ("delta", "gamma")})
    if lambda_u is not None:
        if not (species1 and species2):
            raise ConfigurationError("deriving delta from lambda_u needs the initial densities",
                                     key="lambda_u")
        n1, n2 = sum(x.n for x in species1), sum(x.n for x in species2)
        delta = 1.0 - lambda_u / coupling(p, n1, n2)
    else:
        delta = kw["delta"]
    gamma = gamma_of_c(p.m1, delta, c, d) if c is not None else kw.get("gamma", 0.0)
    p = p.replace(delta=float(delta), gamma=float(gamma))
    validate_params(p, d).raise_if_invalid()
    if variant == SINGLE_TERM and p.aap_sign not in ("printed", "physical"):
        raise ConfigurationError("must be 'printed' or 'physical'", key="aap_sign")

    time = _dataclass_section(cp, "time", SimulationConfig,
                              required=("dt", "t_end") if mode in ("simulate",) else (),
                              converters={"nq_orders": _vec})
    if time.dt <= 0 or time.t_end < 0 or time.cadence < 1:
        raise ConfigurationError("need dt > 0, t_end >= 0 and cadence >= 1", key="time")
    suite = _dataclass_section(cp, "suite", SuiteConfig,
                               converters={"lemma_qs": _vec})
    if suite.samples < 0 or suite.master_seed < 0:
        raise ConfigurationError("samples and master_seed must be nonnegative", key="suite")
    compare = _dataclass_section(cp, "compare", CompareConfig, converters={"dts": _vec})
    output = _dataclass_section(cp, "output", OutputConfig)
    return RunConfig(variant, grid, p, species1, species2, time, suite, compare, output,
                     lambda_u, c)


def load_config(path, mode: Optional[str] = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}", key="config") from None
    return parse_config(text, mode)
