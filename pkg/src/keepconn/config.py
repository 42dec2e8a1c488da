"""Plain ``key = value`` experiment configuration.

Every key has a default that depends on the experiment ``kind``; presets layer
a named parameter set between the kind defaults and the file. Unknown keys,
unparsable values and violated invariants are reported with the offending
line number.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .bands import BandConfig
from .flow import FlowConfig
from .functionals import ModelParams

KINDS = ("segmentation", "curvature-flow", "penalty-probe", "mesh-info")


class ConfigError(ValueError):
    """A configuration file could not be turned into a valid experiment."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "segmentation"
    seed: int = 0
    # mesh
    n: int = 128
    lower: float = -0.5
    upper: float = 0.5
    length_scale: float | None = None
    # model
    eps: float = 1e-2
    lam: float = 0.0
    h0: float = 0.0
    eta: float = 10.5
    well: str = "shifted"
    c0: float | None = None
    sigma: int = 1
    # band close to the +1 (or 1) phase
    alpha: float = 0.9
    beta: float = 1.2
    a: float = 0.4
    p: int = 0
    normalization: float = 1.0
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    # optional second band close to the other phase
    dual_band: bool = False
    alpha_minus: float = -0.95
    beta_minus: float = -0.85
    a_minus: float | None = None
    # time stepping
    tau: float = 1e-6
    tau_init: float | None = None
    warmup_steps: int = 500
    max_steps: int = 30_000
    stop_tol: float = 1e-4
    solver: str = "direct"
    solver_tol: float = 1e-10
    solver_maxiter: int = 1000
    log_every: int = 1
    snapshot_every: int = 0
    # reference image for segmentation
    image: str = "two-disks"
    radius: float = 0.16
    center_distance: float = 0.6
    image_width: float | None = None
    image_file: str | None = None
    # initial condition
    initial: str = "flower"
    flower_base: float = 0.25
    flower_amplitude: float = 0.15
    flower_petals: int = 5
    dumbbell_radius: float = 0.2
    dumbbell_center_distance: float = 0.64
    dumbbell_neck: float = 0.08
    dumbbell_fillet: float = 0.05
    initial_file: str | None = None
    # penalty probe
    field_file: str | None = None
    # bookkeeping
    preset: str | None = None
    compare_costs: bool = False

    # -- derived objects ----------------------------------------------------

    def model_params(self) -> ModelParams:
        return ModelParams(
            eps=self.eps, lam=self.lam, h0=self.h0, eta=self.eta, well=self.well, c0=self.c0, sigma=self.sigma
        )

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            tau=self.tau,
            max_steps=self.max_steps,
            tau_init=self.tau_init,
            warmup_steps=self.warmup_steps,
            stop_tol=self.stop_tol,
            solver=self.solver,
            solver_tol=self.solver_tol,
            solver_maxiter=self.solver_maxiter,
            log_every=self.log_every,
            snapshot_every=self.snapshot_every,
        )

    def bands(self) -> dict[str, BandConfig]:
        out = {
            "plus": BandConfig(
                self.alpha, self.beta, eps=self.eps, amplitude=self.a, exponent=self.p,
                normalization=self.normalization, c1=self.c1, c2=self.c2, c3=self.c3,
                lower_well=0.0 if self.well == "shifted" else -1.0,
            )
        }
        if self.dual_band:
            out["minus"] = BandConfig(
                self.alpha_minus, self.beta_minus, eps=self.eps,
                amplitude=self.a if self.a_minus is None else self.a_minus,
                exponent=self.p, normalization=self.normalization,
            )
        return out

    def validate(self) -> None:
        """Build every derived object once so invalid combinations surface early."""
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {', '.join(KINDS)}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not self.lower < self.upper:
            raise ValueError(f"lower ({self.lower}) must be below upper ({self.upper})")
        self.model_params()
        self.flow_config()
        self.bands()
        if self.kind == "segmentation" and self.well != "shifted":
            raise ValueError("segmentation requires well = shifted")
        if self.kind == "curvature-flow" and self.well != "symmetric":
            raise ValueError("curvature-flow requires well = symmetric")
        if self.image not in ("two-disks", "flower", "file"):
            raise ValueError(f"unknown image {self.image!r}")
        if self.image == "file" and not self.image_file:
            raise ValueError("image = file needs image_file")
        if self.initial not in ("flower", "dumbbell", "image", "file", "zero"):
            raise ValueError(f"unknown initial condition {self.initial!r}")
        if self.initial == "file" and not self.initial_file:
            raise ValueError("initial = file needs initial_file")
        if self.kind == "penalty-probe" and not self.field_file:
            raise ValueError("penalty-probe needs field_file")

    def to_text(self) -> str:
        """Effective configuration in the same ``key = value`` syntax; re-parses to an equal object."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}

KIND_DEFAULTS: dict[str, dict] = {
    "segmentation": {},
    "mesh-info": {},
    "penalty-probe": {},
    "curvature-flow": {
        "n": 128,
        "lower": -0.7,
        "upper": 0.7,
        "eps": 0.03,
        "lam": 0.1,
        "h0": 6.0,
        "eta": 0.0,
        "well": "symmetric",
        "alpha": 0.85,
        "beta": 0.95,
        "a": 10.0,
        "p": 1,
        "dual_band": True,
        "tau": 5e-8,
        "warmup_steps": 500,
        "max_steps": 6000,
        "initial": "dumbbell",
    },
}

PRESETS: dict[str, dict] = {
    "two-disks-large": {"kind": "segmentation", "radius": 0.16, "center_distance": 0.6, "eps": 1e-2,
                     "eta": 10.5, "a": 0.4, "alpha": 0.9, "beta": 1.2, "n": 128, "compare_costs": True},
    "two-disks-small": {"kind": "segmentation", "radius": 0.11, "center_distance": 0.6, "eps": 1e-2,
                     "eta": 10.5, "a": 0.4, "alpha": 0.9, "beta": 1.2, "n": 128, "compare_costs": True},
    "dumbbell2d": {"kind": "curvature-flow"},
}


def _parse_value(name: str, text: str):
    typ = _FIELD_TYPES[name]
    optional = "None" in typ
    base = typ.replace(" | None", "")
    if optional and text.lower() in ("none", ""):
        return None
    if base == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if base == "int":
        try:
            return int(text)
        except ValueError:
            as_float = float(text)
            if not as_float.is_integer():
                raise ValueError(f"expected an integer, got {text!r}") from None
            return int(as_float)
    if base == "float":
        return float(text)
    return text


def parse_text(text: str, source: str = "<config>", preset: str | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Precedence, lowest first: built-in defaults, defaults of the chosen kind,
    the preset (argument or ``preset`` key), the file itself.
    """
    entries: dict[str, tuple[object, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: key {key!r} already set on line {entries[key][1]}")
        try:
            entries[key] = (_parse_value(key, value), lineno)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None

    preset = preset or (entries["preset"][0] if "preset" in entries else None)
    if preset is not None and preset not in PRESETS:
        where = f"{source}:{entries['preset'][1]}: " if "preset" in entries else ""
        raise ConfigError(f"{where}unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    layered = dict(PRESETS.get(preset, {}))
    layered.update({k: v for k, (v, _) in entries.items()})
    kind = layered.get("kind", "segmentation")
    if kind not in KINDS:
        line = entries["kind"][1] if "kind" in entries else 0
        raise ConfigError(f"{source}:{line}: unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    values = dict(KIND_DEFAULTS[kind])
    values.update(layered)
    values["preset"] = preset
    cfg = ExperimentConfig(**values)
    try:
        cfg.validate()
    except ValueError as exc:
        lines = sorted(ln for _, ln in entries.values())
        span = f"{lines[0]}-{lines[-1]}" if lines else "0"
        # point at the most specific line we can find
        for key in sorted(entries, key=len, reverse=True):
            if len(key) > 1 and re.search(rf"\b{re.escape(key)}\b", str(exc)):
                span = str(entries[key][1])
                break
        raise ConfigError(f"{source}:{span}: {exc}") from None
    return cfg


def parse_config(path, preset: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_text(text, str(path), preset)


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """Copy with changes, validated."""
    new = dataclasses.replace(cfg, **changes)
    new.validate()
    return new
