"""Input validation helpers for the estimator API."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import DataValidationError, DimensionError
from .lattice import MortalityData, build_lattice, validate_data


def check_lexis_arrays(exposures, deaths, *, year_origin=0, age_origin=0, label="",
                       min_extent=2) -> MortalityData:
    """Turn a pair of ``T x A`` arrays into validated :class:`MortalityData`.

    Raises
    ------
    DimensionError
        Shapes differ or an extent is below ``min_extent``.
    DataValidationError
        Values break the data invariants (see :func:`validate_data`).
    """
    n = check_array(exposures, dtype=np.float64, ensure_min_samples=1, ensure_min_features=1,
                    input_name="exposures")
    y = check_array(deaths, dtype=np.float64, ensure_min_samples=1, ensure_min_features=1,
                    input_name="deaths")
    if n.shape != y.shape:
        raise DimensionError(f"exposures {n.shape} and deaths {y.shape} differ in shape")
    lattice = build_lattice(n.shape[0], n.shape[1], year_origin, age_origin, min_extent=min_extent)
    data = MortalityData(lattice, y, n, label)
    report = validate_data(data)
    if not report.is_valid:
        raise DataValidationError(f"invalid mortality data: {report.summary()}", report)
    return data


def check_mortality_data(data: MortalityData) -> MortalityData:
    report = validate_data(data)
    if not report.is_valid:
        raise DataValidationError(f"invalid mortality data: {report.summary()}", report)
    return data


def check_seed(random_state):
    """Map ``None``, an int or a ``numpy`` ``Generator``/``RandomState`` to a 64-bit seed."""
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    if isinstance(random_state, (int, np.integer)):
        if not 0 <= int(random_state) < 2**64:
            raise ValueError("random_state must be a non-negative 64-bit integer")
        return int(random_state)
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**63))
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**31 - 1))
    raise TypeError(f"cannot derive a seed from {type(random_state).__name__}")
