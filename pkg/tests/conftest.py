"""Shared fixtures: the closed-form anchor configuration used across tests.

The anchor initial data (kappa, kappa', kappa'')(0) = (1, 0, -6) has fully
closed-form derived quantities, which makes it the reference point for both
pipelines:

    K = -1,  f_K = 1/sqrt(2),  c^2 = sqrt(2),  C^2 = (28/9) * 2^(7/4),
    kappa = 1,  k = 1,  tau = 1/3,  kappa_hat = sqrt(7),
    pinned frame components (1, -1, 2, -1) / sqrt(7).
"""

import math

import pytest

from pnmcsurf.extrinsic import sample_patch
from pnmcsurf.intrinsic import InitialTriple, integrate_intrinsic
from pnmcsurf.profile import ModelParams, integrate_profile
from pnmcsurf.verify import verify_patch

ANCHOR_F0 = 2.0**-0.5
ANCHOR_C2 = math.sqrt(2.0)
ANCHOR_CSQ = (28.0 / 9.0) * 2.0**1.75  # C^2
ANCHOR_C = ANCHOR_C2**0.5
ANCHOR_CC = ANCHOR_CSQ**0.5  # C


@pytest.fixture(scope="session")
def anchor_triple():
    return InitialTriple(1.0, 0.0, -6.0)


@pytest.fixture(scope="session")
def anchor_solution(anchor_triple):
    return integrate_intrinsic(anchor_triple, u_max_request=5.0)


@pytest.fixture(scope="session")
def anchor_params():
    return ModelParams(c=ANCHOR_C, C=ANCHOR_CC)


@pytest.fixture(scope="session")
def anchor_profile(anchor_params):
    return integrate_profile(anchor_params, ANCHOR_F0, u_max_request=5.0)


@pytest.fixture(scope="session")
def reference_patch(anchor_params):
    return sample_patch(
        anchor_params, ANCHOR_F0, u_span=0.2, n_u=64, n_t=64, t_span=0.2
    )


@pytest.fixture(scope="session")
def reference_report(reference_patch):
    return verify_patch(reference_patch, level="full", stride=1)
