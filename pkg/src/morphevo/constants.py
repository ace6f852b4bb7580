"""Design-space domains and environment constants.

Every value here is a default; runtime configuration may override the
evolution-level constants but the morphology domains are fixed.
"""

from __future__ import annotations

MAX_LIMBS = 10
MIN_LIMBS = 1

LIMB_RADIUS = 0.05
LIMB_LENGTHS = (0.2, 0.3, 0.4)
DENSITIES = (500, 600, 700, 800, 900, 1000)
THETAS = (0, 45, 90, 135, 180, 225, 270, 315)
PHIS = (90, 135, 180)
SAGITTAL_THETAS = (0, 180)

HEAD_RADIUS = 0.10

JOINT_AXES = (("x",), ("y",), ("x", "y"))
GEARS = (150, 200, 250, 300)
JOINT_LIMITS = (
    (-30, 0), (0, 30), (-30, 30),
    (-45, 45), (-45, 0), (0, 45),
    (-60, 0), (0, 60), (-60, 60),
    (-90, 0), (0, 90), (-60, 30), (-30, 60),
)

# geometric tolerances
COM_SAGITTAL_TOL = 1e-6
OVERLAP_TOL = 1e-6
GROUND_CONTACT_TOL = 1e-3
# length of a limb ignored around a shared attachment point
ATTACH_CLEARANCE = 2 * LIMB_RADIUS

GRAVITY = 9.81

# lifetime learning
ITERATION_BUDGET = 5_000_000
FITNESS_WINDOW = 100_000

# evolution
POPULATION_SIZE = 576
TOURNAMENT_SIZE = 4
MAX_EVALUATIONS = 4000
MUTATION_RETRIES = 64

ENVS = ("FT", "VT", "MVT")
ARENAS = {"FT": (150.0, 150.0), "VT": (100.0, 100.0), "MVT": (60.0, 40.0)}
BENEFICIAL_THRESHOLDS = {"FT": 300.0, "VT": 100.0, "MVT": 100.0}

# rewards
W_FORWARD = 1.0
W_CTRL = 0.001
W_AGENT_OBJECT = 100.0
W_OBJECT_GOAL = 100.0
W_AGENT_GOAL = 100.0
W_EXPLORE = 1.0
W_ESCAPE = 1.0
SPARSE_BONUS = 10.0
OBJECT_RADIUS = 0.75
GOAL_RADIUS = 0.5
FALL_FRACTION = 0.5

# terrain
FLAT_LENGTH = (1.0, 3.0)
OBSTACLE_LENGTH = (4.0, 8.0)
HILL_AMPLITUDE = (0.6, 1.2)
STEP_HEIGHT = 0.2
STEP_COUNT = 8
RUBBLE_CLIP = (0.2, 0.3)
RUBBLE_PERIOD = 0.6
RUBBLE_PEAK = 0.4
TERRAIN_RESOLUTION = 0.1
OBS_ALONG = (-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.25, 3.0, 4.0)
OBS_ACROSS = (-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0)
