"""Central registry of numeric tolerances and defaults.

Every tolerance that influences a computed number lives here under a single
name, so run manifests can echo the full set and tests can import the same
values the library uses.
"""

# ── convex bodies ────────────────────────────────────────────────────────────
ZERO_VECTOR_ATOL = 1e-14        # below this norm a direction counts as zero
GAUGE_RAY_RTOL = 1e-10          # ray/boundary root for sampled-boundary gauges
SUPPORT_REFINE_RTOL = 1e-8      # local refinement of sampled support function
GRAD_FD_REL_STEP = 1e-6         # central-difference step for gauge gradients
HESS_FD_REL_STEP = 1e-5         # central-difference step for gauge Hessians
PARAMETRIC_SAMPLES = 4096       # default boundary sample count for sampled bodies

# ── distance field and ray fan ───────────────────────────────────────────────
DISTANCE_REFINE_TOL = 1e-8      # relative tolerance of the projection refinement
OUTSIDE_DOMAIN_SLACK = 0.5      # multiples of a grid cell tolerated outside
PROJECTION_VALUE_SLACK = 1e-6   # absolute slack selecting near-optimal projections
PROJECTION_CLUSTER_GAP = 1e-3   # angular gap separating projection clusters
SINGULAR_EXTENT = 0.1           # candidate arc length marking a degenerate minimum
CUT_LENGTH_RTOL = 1e-6          # cut-length bisection tolerance, times diameter
CUT_CHECK_SLACK = 1e-9          # slack in "distance equals ray parameter" checks
CURVATURE_OFFSET_CELLS = 3.0    # inward offset (in cells) for distance Hessians
KAPPA_DISAGREE_WARN = 1e-2      # curvature cross-check disagreement threshold
GRID_RESOLUTION = 512           # default cells per axis
FAN_RAYS = 2048                 # default boundary sample count of a ray fan
RAY_NODES = 256                 # default quadrature nodes along a ray

# ── single quasistatic step ──────────────────────────────────────────────────
LIPSCHITZ_SLACK = 1e-4          # tolerated relative excess in the gradient bound
PARTITION_SLACK = 1e-10         # strict-inequality slack for region labels
CLIP_LENGTH_TOL = 1e-6          # clipping-length bisection tolerance
CLIP_PREDICATE_MARGIN = 1e-12   # margin making ties fail the strict ray predicate
DUAL_ZERO_THRESHOLD = 1e-8      # dual values below this count as zero support
MINIMALITY_REL_TOL = 1e-6       # relative slack in the quadratic growth bound
FEASIBILITY_GATE = 1e-6         # tolerated excess of the gradient constraint
TEST_BANK_SIZE = 20             # smooth compactly supported test functions
TEST_BANK_SEED = 1234           # default seed for test-function placement

# ── quasistatic evolution ────────────────────────────────────────────────────
JUNCTION_CONTINUITY_TOL = 1e-9  # drive continuity across piece junctions
EVENT_BISECT_TOL = 1e-10        # bisection tolerance for indicator crossings
PENETRATION_TIME_TOL = 1e-8     # root tolerance for the full penetration time
DISSIPATION_FLOOR = 1e-12       # dissipation below this drops the field direction
LOOP_SAMPLES_PER_PIECE = 64     # magnetization samples per drive piece
SNAPSHOTS_PER_PIECE = 8         # field snapshots per drive piece

# ── power-law approximation ──────────────────────────────────────────────────
POWER_MIN_EXPONENT = 2.0
POWER_ARMIJO_C = 1e-4
POWER_BACKTRACK = 0.5
POWER_CONVERGE_RTOL = 1e-9      # relative objective decrease over the window
POWER_CONVERGE_WINDOW = 10
POWER_MAX_ITERATIONS = 20000
POWER_WARM_START_SCALE = 0.99
POWER_EXPONENTS = (4.0, 8.0, 16.0, 32.0, 64.0)
GRADIENT_ZERO_FLOOR = 1e-12     # gauge values below this contribute no gradient

# ── configuration limits ─────────────────────────────────────────────────────
RESOLUTION_MIN = 64
RESOLUTION_MAX = 2048


def registry() -> dict:
    """All module-level numeric constants, for run manifests."""
    out = {}
    for name, value in globals().items():
        if name.isupper() and isinstance(value, (int, float, tuple)):
            out[name.lower()] = list(value) if isinstance(value, tuple) else value
    return out
