"""Construction and verification of PNMC biconservative surfaces in the unit 4-sphere.

Two numerical pipelines realize the same two-parameter family of surfaces:

* the intrinsic pipeline integrates a third-order ODE for the curvature of
  the level circles of the Gaussian curvature (:mod:`pnmcsurf.intrinsic`);
* the profile pipeline integrates the mean-curvature profile determined by
  the constants (c, C) and builds the embedded patch from a Frenet system
  (:mod:`pnmcsurf.profile`, :mod:`pnmcsurf.extrinsic`).

:mod:`pnmcsurf.verify` recomputes the geometry of a finished patch from its
grid points alone and checks every structural identity the construction is
supposed to satisfy.  :mod:`pnmcsurf.service` exposes the pipelines over
HTTP; the command line in :mod:`pnmcsurf.cli` is a thin client of it.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BracketError,
    FrameError,
    InadmissibleInitialData,
    IntegrationError,
    PatchError,
    PnmcsurfError,
    VerificationInputError,
    WindowError,
)
from .extrinsic import (  # noqa: F401
    FrenetState,
    SurfacePatch,
    initial_frame,
    integrate_frenet,
    sample_patch,
    surface_point,
)
from .intrinsic import (  # noqa: F401
    InitialTriple,
    IntrinsicSolution,
    check_admissible,
    f_from_K,
    integrate_intrinsic,
    to_f_chart,
)
from .profile import (  # noqa: F401
    ModelParams,
    admissible_window,
    integrate_profile,
    poly_P,
)
from .verify import VerificationReport, local_geometry, verify_patch  # noqa: F401
