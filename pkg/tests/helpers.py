"""Shared strategies and random-state helpers."""

import numpy as np
from hypothesis import strategies as st

from su2mzi import BeamSplitter, FockState, Su2CoherentParams

# lines collected by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def random_fock(rng, cutoff: int) -> FockState:
    return FockState.normalized(rng.normal(size=cutoff + 1) + 1j * rng.normal(size=cutoff + 1))


half_integers = st.integers(min_value=1, max_value=8).map(lambda k: k / 2)
lambdas = st.builds(
    lambda mag, arg: complex(mag * np.exp(1j * arg)),
    st.floats(min_value=0.0, max_value=5.0),
    st.floats(min_value=0.0, max_value=2 * np.pi),
)
su2_params = st.builds(Su2CoherentParams, half_integers, lambdas)
tau_sqs = st.floats(min_value=0.0, max_value=1.0)
inner_tau_sqs = st.floats(min_value=0.05, max_value=0.95)
splitters = tau_sqs.map(BeamSplitter.from_tau_sq)
angles = st.floats(min_value=-2 * np.pi, max_value=2 * np.pi)
