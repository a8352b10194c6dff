"""Run configuration: nested dataclasses and a flat dotted ``key = value`` format.

Example::

    # 1D reversible run
    scheme = "reversible"
    mesh.dim = 1
    mesh.n = 64
    schedule.T = 0.1
    schedule.tau = 0.001
    material.W = "indicator01"
    data.g.kind = "gaussian"
    data.g.amplitude = 2.0

Values are JSON literals (numbers, quoted strings, ``true``/``false``,
lists); a bare word is read as a string.  ``#`` starts a comment.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .material import MaterialModel

SCHEMES = ("reversible", "reversible_expansion", "irreversible",
           "isothermal_irreversible", "isothermal_reversible")
EXPERIMENTS = ("single_run", "tau_refinement", "delta_sweep", "continuous_dependence")
DATA_KINDS = ("zero", "constant", "gaussian", "cosine", "sine_bump", "random")


@dataclass
class DataSpec:
    """Space-time data ``base + amplitude * shape(x) * time_factor(t)``.

    ``kind`` selects the spatial shape: ``zero``, ``constant`` (shape 1),
    ``gaussian`` (centered at ``center`` with width ``width``),
    ``cosine`` (product of ``cos(pi * wavenumber * x_j / L_j)``),
    ``sine_bump`` (product of ``sin(pi * x_j / L_j)``, vanishing on the
    boundary) or ``random`` (uniform in [-1, 1] per node, drawn from
    ``seed``).  The time factor is 1, a linear ramp reaching 1 at ``ramp``,
    or piecewise constant ``values`` on intervals starting at ``times``.
    For vector data ``amplitude`` and ``base`` may be lists, one entry per
    component.
    """

    kind: str = "zero"
    base: object = 0.0
    amplitude: object = 0.0
    center: list = field(default_factory=lambda: [0.5, 0.5])
    width: float = 0.1
    wavenumber: float = 1.0
    seed: int = 0
    ramp: float = 0.0
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def validate(self, name):
        if self.kind not in DATA_KINDS:
            raise ValueError(f"{name}.kind must be one of {DATA_KINDS}, got {self.kind!r}")
        if len(self.times) != len(self.values):
            raise ValueError(f"{name}.times and {name}.values must have equal length")
        if self.times and any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError(f"{name}.times must be strictly increasing")
        if self.width <= 0:
            raise ValueError(f"{name}.width must be positive")

    def breakpoints(self):
        """Times where the time factor is not smooth."""
        pts = list(self.times)
        if self.ramp > 0:
            pts.append(self.ramp)
        return pts

    def time_factor(self, t):
        t = float(t)
        if self.times:
            idx = np.searchsorted(np.asarray(self.times, dtype=float), t, side="right") - 1
            return float(self.values[idx]) if idx >= 0 else 0.0
        if self.ramp > 0:
            return min(t / self.ramp, 1.0)
        return 1.0

    def shape(self, mesh):
        x = mesh.nodes
        L = np.asarray(mesh.extent)
        if self.kind == "zero":
            return np.zeros(mesh.n_nodes)
        if self.kind == "constant":
            return np.ones(mesh.n_nodes)
        if self.kind == "gaussian":
            c = np.asarray(self.center, dtype=float)[: mesh.dim]
            r2 = np.sum((x - c) ** 2, axis=1)
            return np.exp(-r2 / (2.0 * self.width ** 2))
        if self.kind == "cosine":
            return np.prod(np.cos(np.pi * self.wavenumber * x / L), axis=1)
        if self.kind == "sine_bump":
            return np.prod(np.sin(np.pi * x / L), axis=1)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(-1.0, 1.0, mesh.n_nodes)

    def evaluate(self, t, mesh, ncomp=None):
        """Nodal values at time ``t``; shape ``(n,)`` or ``(n, ncomp)``."""
        base_only = self.kind == "zero"
        tf = self.time_factor(t)
        if ncomp is None:
            out = np.full(mesh.n_nodes, float(_scalar(self.base)))
            if not base_only:
                out = out + float(_scalar(self.amplitude)) * tf * self.shape(mesh)
            return out
        base = np.broadcast_to(np.asarray(self.base, dtype=float), (ncomp,))
        amp = np.broadcast_to(np.asarray(self.amplitude, dtype=float), (ncomp,))
        out = np.tile(base, (mesh.n_nodes, 1)).astype(float)
        if not base_only:
            out = out + tf * self.shape(mesh)[:, None] * amp[None, :]
        return out


def _scalar(v):
    v = np.asarray(v, dtype=float)
    if v.size != 1:
        raise ValueError("scalar data expects scalar base/amplitude")
    return float(v.reshape(()))


@dataclass
class MeshConfig:
    dim: int = 1
    extent: object = 1.0
    n: object = 64


@dataclass
class ScheduleConfig:
    T: float = 0.1
    tau: float = 1e-3


@dataclass
class DataConfig:
    f: DataSpec = field(default_factory=DataSpec)
    g: DataSpec = field(default_factory=DataSpec)
    theta_star: DataSpec = field(default_factory=DataSpec)


@dataclass
class InitialConfig:
    theta0: DataSpec = field(default_factory=lambda: DataSpec(kind="constant", base=0.0))
    chi0: DataSpec = field(default_factory=lambda: DataSpec(kind="constant", base=1.0))
    u0: DataSpec = field(default_factory=DataSpec)
    v0: DataSpec = field(default_factory=DataSpec)


@dataclass
class ExperimentConfig:
    kind: str = "single_run"
    levels: int = 4
    deltas: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    epsilons: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    chi_thresh: float = 0.1
    factor: float = 10.0
    varsigma: float = 0.5
    min_rate: float = 0.4


@dataclass
class OutputConfig:
    dir: str = "out"
    snapshot_every: int = 0


@dataclass
class Tolerances:
    chi_tol: float = 1e-8
    chi_max_iter: int = 500
    cg_tol: float = 1e-12
    fp_tol: float = 1e-9
    fp_max_iter: int = 200
    damping: float = 0.5


@dataclass
class RunConfig:
    scheme: str = "reversible"
    mesh: MeshConfig = field(default_factory=MeshConfig)
    material: MaterialModel = field(default_factory=MaterialModel)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    data: DataConfig = field(default_factory=DataConfig)
    ic: InitialConfig = field(default_factory=InitialConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def validate(self) -> "RunConfig":
        check_config(self)
        return self

    def hash(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:16]

    def copy(self) -> "RunConfig":
        return copy.deepcopy(self)


REQUIRED_KEYS = ("scheme", "mesh.dim", "mesh.n", "schedule.T", "schedule.tau")


# -- flattening ---------------------------------------------------------------

def flatten(obj, prefix=""):
    """Dotted-key dictionary of a (nested) dataclass."""
    out = {}
    for f in dataclasses.fields(obj):
        val = getattr(obj, f.name)
        key = prefix + f.name
        if dataclasses.is_dataclass(val):
            out.update(flatten(val, key + "."))
        else:
            out[key] = val
    return out


def _template_types():
    return flatten(RunConfig())


def set_key(cfg: RunConfig, key: str, value):
    """Assign a dotted key, rejecting unknown keys."""
    if key not in _template_types():
        raise KeyError(f"unknown config key {key!r}")
    *path, last = key.split(".")
    obj = cfg
    for part in path:
        obj = getattr(obj, part)
    setattr(obj, last, _coerce(value, getattr(obj, last), key))


def _coerce(value, default, key):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError(f"{key} expects true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            if isinstance(value, list):
                return value
            raise ValueError(f"{key} expects an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float, list)):
            raise ValueError(f"{key} expects a number, got {value!r}")
        return float(value) if not isinstance(value, list) else value
    if isinstance(default, str) and not isinstance(value, str):
        raise ValueError(f"{key} expects a string, got {value!r}")
    if isinstance(default, list) and not isinstance(value, list):
        raise ValueError(f"{key} expects a list, got {value!r}")
    return value


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def loads(text: str, validate: bool = True) -> RunConfig:
    """Parse config text; errors on unknown keys and missing required keys."""
    cfg = RunConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not _hash_in_string(raw) else raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            set_key(cfg, key, parse_value(val))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc.args[0]}") from None
    missing = [k for k in REQUIRED_KEYS if k not in seen]
    if missing:
        raise ValueError(f"missing required config keys: {', '.join(missing)}")
    return cfg.validate() if validate else cfg


def _hash_in_string(line):
    # a '#' inside a quoted string value is not a comment
    if "#" not in line or '"' not in line:
        return False
    before = line.split("#", 1)[0]
    return before.count('"') % 2 == 1


def dumps(cfg: RunConfig) -> str:
    """Serialize every key, one per line, in a stable order."""
    lines = []
    for key, val in flatten(cfg).items():
        lines.append(f"{key} = {json.dumps(_jsonable(val))}")
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float):
        return float(repr(v)) if np.isfinite(v) else v
    return v


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return loads(fh.read())


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"override must be key=value, got {item!r}")
        key, val = item.split("=", 1)
        set_key(cfg, key.strip(), parse_value(val))
    return cfg.validate()


# -- compatibility rules ---------------------------------------------------------

def check_config(cfg: RunConfig):
    m = cfg.material
    dim = cfg.mesh.dim
    if cfg.scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {cfg.scheme!r}")
    if cfg.experiment.kind not in EXPERIMENTS:
        raise ValueError(f"experiment.kind must be one of {EXPERIMENTS}")
    if dim not in (1, 2):
        raise ValueError("mesh.dim must be 1 or 2")
    m.validate(dim)
    s = cfg.schedule
    if s.tau <= 0 or s.T <= 0:
        raise ValueError("schedule.T and schedule.tau must be positive")
    K = round(s.T / s.tau)
    if K < 1 or abs(K * s.tau - s.T) > 1e-12 * max(1.0, s.T):
        raise ValueError(f"schedule.T / schedule.tau = {s.T / s.tau!r} is not an integer")
    for name in ("f", "g", "theta_star"):
        getattr(cfg.data, name).validate(f"data.{name}")
    for name in ("theta0", "chi0", "u0", "v0"):
        getattr(cfg.ic, name).validate(f"ic.{name}")

    sch = cfg.scheme
    if sch in ("irreversible", "isothermal_irreversible"):
        if m.mu != 1:
            raise ValueError(f"scheme {sch!r} is irreversible: set material.mu = 1")
        if m.W != "indicator0inf":
            raise ValueError(f"scheme {sch!r} needs material.W = \"indicator0inf\"")
    else:
        if m.mu != 0:
            raise ValueError(
                f"scheme {sch!r} is reversible: set material.mu = 0 (mu = 1 requires W = indicator "
                "of [0, inf), used by the irreversible schemes)")
        if m.W == "indicator0inf" and sch in ("reversible", "reversible_expansion"):
            raise ValueError("reversible schemes need a bounded phase box: material.W = indicator01 or log")
    if sch in ("reversible", "irreversible") and m.rho != 0:
        raise ValueError(f"scheme {sch!r} assumes no thermal expansion: set material.rho = 0 "
                         "or use scheme = reversible_expansion")
    if sch == "reversible_expansion" and m.conductivity != "power":
        raise ValueError("scheme 'reversible_expansion' needs the power-law conductivity: "
                         "material.conductivity = \"power\" (with c10 and q)")
    if sch == "reversible_expansion" and not np.isfinite(m.M):
        raise ValueError("material.M must be finite for the truncated scheme")

    exp = cfg.experiment
    if exp.kind == "delta_sweep":
        if not (m.mu == 1 and m.rho == 0 and m.a == "identity" and m.b == "identity"):
            raise ValueError("delta_sweep needs mu = 1, rho = 0 and a = b = identity")
        if any(d <= 0 for d in exp.deltas) or list(exp.deltas) != sorted(exp.deltas, reverse=True):
            raise ValueError("experiment.deltas must be positive and decreasing")
    if exp.kind == "continuous_dependence":
        if sch != "isothermal_reversible":
            raise ValueError("continuous_dependence runs the isothermal reversible scheme: "
                             "set scheme = \"isothermal_reversible\"")
        if m.a != "constant":
            raise ValueError("continuous_dependence needs a constant viscosity coefficient: material.a = \"constant\"")
        if m.phi != "regularized":
            raise ValueError("continuous_dependence needs the strictly monotone flux: material.phi = \"regularized\"")
    if exp.kind == "tau_refinement" and exp.levels < 3:
        raise ValueError("experiment.levels must be >= 3 for a refinement study")
    t = cfg.tolerances
    if not (0 < t.damping <= 1):
        raise ValueError("tolerances.damping must lie in (0, 1]")
    return cfg
