"""Run configuration: flat key=value parsing, validation, and initial data.

The format is deliberately nesting-free: one `key = value` per line, '#'
comments, case-sensitive keys, duplicates rejected.  Three initial-data
variants are supported: a Gaussian beam (optionally with a matched density
well), the explicit collapsing family, and a stored checkpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .fields import Grid2D, SystemState, read_checkpoint, state_from_arrays


@dataclass(frozen=True)
class GaussianInitial:
    amplitude: float
    width: float
    center_x: Optional[float] = None   # None: box middle
    center_y: Optional[float] = None
    e2_mode: str = "zero"              # "zero" or "minus_i_e1"
    n0_scale: float = 0.0              # n0 = -n0_scale * (|E1|^2 + |E2|^2)


@dataclass(frozen=True)
class SelfsimilarInitial:
    omega: float
    T: float
    theta: float = 0.0


@dataclass(frozen=True)
class CheckpointInitial:
    path: str


@dataclass(frozen=True)
class RunConfig:
    nx: int
    ny: int
    L: float
    eta: float
    dt: float
    horizon: float
    initial: object
    lambda_cap: float = math.inf
    checkpoint_interval: Optional[float] = None
    adaptive: bool = False
    nsub: int = 4
    seed: int = 0
    output_dir: Optional[str] = None
    radial: bool = False
    drift_tolerance: Optional[float] = None

    def as_dict(self) -> dict:
        """Flat resolved view for manifests, variant keys prefixed."""
        out = {"nx": self.nx, "ny": self.ny, "L": self.L, "eta": self.eta,
               "dt": self.dt, "horizon": self.horizon,
               "lambda_cap": self.lambda_cap,
               "checkpoint_interval": self.checkpoint_interval,
               "adaptive": self.adaptive, "nsub": self.nsub,
               "seed": self.seed, "radial": self.radial,
               "drift_tolerance": self.drift_tolerance}
        ini = self.initial
        if isinstance(ini, GaussianInitial):
            out["initial"] = "gaussian"
            out.update(amplitude=ini.amplitude, width=ini.width,
                       center_x=ini.center_x, center_y=ini.center_y,
                       e2_mode=ini.e2_mode, n0_scale=ini.n0_scale)
        elif isinstance(ini, SelfsimilarInitial):
            out["initial"] = "selfsimilar"
            out.update(omega=ini.omega, T=ini.T, theta=ini.theta)
        else:
            out["initial"] = "checkpoint"
            out["path"] = ini.path
        return out


_BASE_KEYS = {
    "nx": int, "ny": int, "L": float, "eta": float, "dt": float,
    "horizon": float, "initial": str, "lambda_cap": float,
    "checkpoint_interval": float, "adaptive": bool, "nsub": int,
    "seed": int, "output_dir": str, "radial": bool, "drift_tolerance": float,
}
_VARIANT_KEYS = {
    "gaussian": {"amplitude": float, "width": float, "center_x": float,
                 "center_y": float, "e2_mode": str, "n0_scale": float},
    "selfsimilar": {"omega": float, "T": float, "theta": float},
    "checkpoint": {"path": str},
}
_REQUIRED = ("nx", "ny", "L", "eta", "dt", "horizon", "initial")


def _convert(key, raw, kind, line):
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", line=line) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat key=value configuration."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}",
                              line=lineno)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", line=lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} "
                              f"(first set on line {entries[key][1]})", line=lineno)
        entries[key] = (value, lineno)

    for req in _REQUIRED:
        if req not in entries:
            raise ConfigError(f"missing required key {req!r}")
    variant = entries["initial"][0]
    if variant not in _VARIANT_KEYS:
        raise ConfigError(f"initial must be one of {sorted(_VARIANT_KEYS)}, "
                          f"got {variant!r}", line=entries["initial"][1])
    allowed = dict(_BASE_KEYS)
    allowed.update(_VARIANT_KEYS[variant])

    values = {}
    for key, (raw, line) in entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", line=line)
        values[key] = _convert(key, raw, allowed[key], line)

    def positive(key):
        if key in values and not values[key] > 0.0:
            raise ConfigError(f"{key!r} must be positive, got {values[key]}",
                              line=entries[key][1])

    for key in ("nx", "ny", "L", "eta", "dt", "horizon", "lambda_cap",
                "checkpoint_interval", "nsub", "drift_tolerance"):
        positive(key)

    if variant == "gaussian":
        for need in ("amplitude", "width"):
            if need not in values:
                raise ConfigError(f"gaussian initial data needs {need!r}")
        positive("amplitude")
        positive("width")
        mode = values.get("e2_mode", "zero")
        if mode not in ("zero", "minus_i_e1"):
            raise ConfigError(f"e2_mode must be 'zero' or 'minus_i_e1', got {mode!r}",
                              line=entries["e2_mode"][1])
        if values.get("n0_scale", 0.0) < 0.0:
            raise ConfigError("n0_scale must be nonnegative",
                              line=entries["n0_scale"][1])
        initial = GaussianInitial(
            amplitude=values["amplitude"], width=values["width"],
            center_x=values.get("center_x"), center_y=values.get("center_y"),
            e2_mode=mode, n0_scale=values.get("n0_scale", 0.0))
        centered = values.get("center_x") is None and values.get("center_y") is None
        radial_default = centered
    elif variant == "selfsimilar":
        for need in ("omega", "T"):
            if need not in values:
                raise ConfigError(f"selfsimilar initial data needs {need!r}")
        positive("omega")
        positive("T")
        initial = SelfsimilarInitial(omega=values["omega"], T=values["T"],
                                     theta=values.get("theta", 0.0))
        radial_default = True
    else:
        if "path" not in values:
            raise ConfigError("checkpoint initial data needs 'path'")
        initial = CheckpointInitial(path=values["path"])
        radial_default = False

    return RunConfig(
        nx=values["nx"], ny=values["ny"], L=values["L"], eta=values["eta"],
        dt=values["dt"], horizon=values["horizon"], initial=initial,
        lambda_cap=values.get("lambda_cap", math.inf),
        checkpoint_interval=values.get("checkpoint_interval"),
        adaptive=values.get("adaptive", False),
        nsub=values.get("nsub", 4),
        seed=values.get("seed", 0),
        output_dir=values.get("output_dir"),
        radial=values.get("radial", radial_default),
        drift_tolerance=values.get("drift_tolerance"))


def build_initial_state(cfg: RunConfig, ground_state=None) -> SystemState:
    """Construct the configured initial state on the configured grid.

    ground_state supplies the radial profile for the selfsimilar variant
    (solved on demand when omitted, which costs about a second).
    """
    grid = Grid2D(nx=cfg.nx, ny=cfg.ny, L=cfg.L)
    ini = cfg.initial
    if isinstance(ini, GaussianInitial):
        cx = 0.5 * cfg.L if ini.center_x is None else ini.center_x
        cy = 0.5 * cfg.L if ini.center_y is None else ini.center_y
        r_sq = (grid.xs - cx) ** 2 + (grid.ys - cy) ** 2
        e1 = ini.amplitude * np.exp(-r_sq / (2.0 * ini.width ** 2)) + 0.0j
        e2 = -1j * e1 if ini.e2_mode == "minus_i_e1" else np.zeros_like(e1)
        rho = np.abs(e1) ** 2 + np.abs(e2) ** 2
        n = -ini.n0_scale * rho
        zero = np.zeros_like(n)
        return state_from_arrays(grid, e1, e2, n, zero, zero, t=0.0)
    if isinstance(ini, SelfsimilarInitial):
        from .groundstate import solve_Q
        from .selfsimilar import ExplicitSolution, evaluate, seeded_profile
        Q = ground_state if ground_state is not None else solve_Q()
        pair = seeded_profile(ini.omega, cfg.eta, Q)
        sol = ExplicitSolution(profile=pair, T=ini.T, theta=ini.theta)
        return evaluate(sol, 0.0, grid)
    state = read_checkpoint(ini.path)
    if state.grid.nx != cfg.nx or state.grid.ny != cfg.ny:
        raise DomainError(
            f"checkpoint grid {state.grid.nx}x{state.grid.ny} does not match "
            f"config {cfg.nx}x{cfg.ny}")
    return state


# Presets exercised by the command-line tool and the acceptance checks.
# A: mass far below the lower threshold, disperses; lambda stays put.
# B: radial beam with E2 = -i E1 inside the mass window plus a matched
#    density well, negative Hamiltonian; collapses until resolution loss.
PRESETS = {
    "A": """\
# dispersing beam: mass well below the lower threshold
nx = 128
ny = 128
L = 24.0
eta = 1.0
dt = 5e-3
horizon = 10.0
initial = gaussian
amplitude = 0.3
width = 2.0
e2_mode = zero
""",
    "B": """\
# collapsing beam: in-window mass, negative Hamiltonian via density well
nx = 128
ny = 128
L = 16.0
eta = 1.0
dt = 4e-3
horizon = 4.0
adaptive = true
lambda_cap = 26.0
checkpoint_interval = 0.25
initial = gaussian
amplitude = 0.776
width = 1.5
e2_mode = minus_i_e1
n0_scale = 1.0
""",
    "smoke": """\
# tiny fast run for plumbing checks
nx = 64
ny = 64
L = 16.0
eta = 1.0
dt = 1e-2
horizon = 0.1
checkpoint_interval = 0.05
initial = gaussian
amplitude = 0.2
width = 2.0
e2_mode = zero
""",
}
