"""Shared fixtures: the ground state, smooth random states, preset runs."""

import numpy as np
import pytest

from mzk import config as cfgmod
from mzk.dynamics import StepperConfig, run
from mzk.fields import smooth_random_field, state_from_arrays
from mzk.groundstate import solve_Q


@pytest.fixture(scope="session")
def Q():
    return solve_Q()


def soften(field, factor=8.0):
    """Extra Gaussian spectral filter so cascade products stay in-band."""
    g = field.grid
    k_cut = g.dealias_fraction * np.pi * min(g.nx, g.ny) / g.L
    env = np.exp(-0.5 * g.k_sq / (k_cut / factor) ** 2)
    out = np.fft.ifft2(env * np.fft.fft2(field.values))
    return out if np.iscomplexobj(field.values) else out.real


def smooth_state(grid, seed, scales=(0.3, 0.3, 0.2, 0.1, 0.1), factor=8.0):
    """Generic smooth random state with well-separated spectral margin."""
    rng = np.random.default_rng(seed)
    e1 = soften(smooth_random_field(grid, rng, complex_valued=True,
                                    scale=scales[0]), factor)
    e2 = soften(smooth_random_field(grid, rng, complex_valued=True,
                                    scale=scales[1]), factor)
    n = soften(smooth_random_field(grid, rng, complex_valued=False,
                                   scale=scales[2]), factor)
    vx = soften(smooth_random_field(grid, rng, complex_valued=False,
                                    scale=scales[3]), factor)
    vy = soften(smooth_random_field(grid, rng, complex_valued=False,
                                    scale=scales[4]), factor)
    return state_from_arrays(grid, e1, e2, n, vx, vy)


@pytest.fixture(scope="session")
def preset_b_trajectory():
    """The full collapsing preset-B run; shared because it costs a minute."""
    cfg = cfgmod.parse_config(cfgmod.PRESETS["B"])
    state0 = cfgmod.build_initial_state(cfg)
    stepper = StepperConfig(dt=cfg.dt, eta=cfg.eta, adaptive=cfg.adaptive,
                            lambda_cap=cfg.lambda_cap, nsub=cfg.nsub)
    traj = run(state0, stepper, horizon=cfg.horizon,
               checkpoint_interval=cfg.checkpoint_interval)
    return cfg, traj
