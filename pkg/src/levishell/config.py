"""Named numerical tolerances and defaults.

Every report embeds the values it used (see ``defaults_dict``).
"""

# projection (Lagrange-Newton on the closest-point conditions)
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
MULTISTART_SEEDS = 32
SEED_POOL_SIZE = 512
AMBIGUITY_GAP = 1e-8
DISTINCT_POINT_TOL = 1e-6

# derivative estimates of the distance function
FD_STEP = 1e-5              # times scale, central differences of the normal field
NORMAL_ANNIHILATION_TOL = 1e-6
NORMAL_ANNIHILATION_FAIL = 1e-4
D_FORMS_CHECK_RTOL = 1e-5
LEVI_POWER_CHECK_RTOL = 1e-4

# boundary limits of delta-Hessians
BOUNDARY_OFFSET = 1e-4      # times scale, along the inward normal

# positivity classification
SEMIDEF_EPS = 1e-8          # tol = eps * (1 + ||form||)
GAMMA_CAP = 1e3
GAMMA_PROBE = 1e-4
GAMMA_FLOOR = 1e-3
GAMMA_BISECT_ITER = 60
GAMMA_BISECT_WIDTH = 1e-6
CONE_RESOLUTION = 64
GOLDEN_ITER = 60

# sweeps
SHELL_FRACTION = 0.1        # default shell width = SHELL_FRACTION * scale
DEFAULT_SAMPLES = 500
DEFAULT_TOL = 1e-8
DEFAULT_SEED = 20110101


def defaults_dict():
    return {
        "newton_tol": NEWTON_TOL,
        "newton_max_iter": NEWTON_MAX_ITER,
        "multistart_seeds": MULTISTART_SEEDS,
        "fd_step": FD_STEP,
        "boundary_offset": BOUNDARY_OFFSET,
        "semidef_eps": SEMIDEF_EPS,
        "gamma_cap": GAMMA_CAP,
        "gamma_floor": GAMMA_FLOOR,
        "cone_resolution": CONE_RESOLUTION,
        "shell_fraction": SHELL_FRACTION,
        "samples": DEFAULT_SAMPLES,
        "tol": DEFAULT_TOL,
        "seed": DEFAULT_SEED,
    }
