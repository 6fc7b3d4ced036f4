"""Vectorized numpy backend for the trial loop.

Mirrors the compiled kernel draw for draw: identical counter layout,
identical comparison directions, identical cumulative tables. The two
backends must tally bit-for-bit the same, which the test suite checks.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from . import _rng
from ._mc_tables import ACTION_KEEP, TableSet

_CHUNK = 1 << 16


def run_kernel(
    seed: int,
    start_trial: int,
    n_trials: int,
    eta_a: float,
    eta_b: float,
    p_dark: float,
    e_d: float,
    tables: TableSet,
) -> Tuple[np.ndarray, int, int]:
    """Tally (mask_counts, keeps, errors) for one contiguous trial range."""
    mask_counts = np.zeros(64, dtype=np.int64)
    keep = 0
    errors = 0
    cum = tables.outcome_cum
    action = tables.action
    base_error = tables.base_error
    done = 0
    while done < n_trials:
        m = min(_CHUNK, n_trials - done)
        first = start_trial + done
        base = np.arange(first, first + m, dtype=np.uint64) * np.uint64(
            _rng.DRAWS_PER_TRIAL
        )

        raw_setting = _rng.raw_draw_array(seed, base + np.uint64(_rng.DRAW_SETTING))
        s = (raw_setting >> np.uint64(60)).astype(np.int64)
        survived_a = _rng.unit_draw_array(seed, base + np.uint64(_rng.DRAW_LOSS_A)) < eta_a
        survived_b = _rng.unit_draw_array(seed, base + np.uint64(_rng.DRAW_LOSS_B)) < eta_b
        case = 2 * survived_a.astype(np.int64) + survived_b.astype(np.int64)

        u = _rng.unit_draw_array(seed, base + np.uint64(_rng.DRAW_PATTERN))
        rows = cum[s, case]
        # count of cumulative entries <= u == index of first entry > u,
        # the same selection the compiled linear scan makes
        mask = (rows <= u[:, None]).sum(axis=1).astype(np.int64)

        for j in range(6):
            dark = (
                _rng.unit_draw_array(seed, base + np.uint64(_rng.DRAW_DARK_BASE + j))
                < p_dark
            )
            mask |= dark.astype(np.int64) << j

        kept = action[mask] == ACTION_KEEP
        misalign = _rng.unit_draw_array(seed, base + np.uint64(_rng.DRAW_MISALIGN)) < e_d
        err = base_error[s, mask].astype(np.int64) ^ misalign.astype(np.int64)

        keep += int(kept.sum())
        errors += int(err[kept].sum())
        mask_counts += np.bincount(mask, minlength=64)
        done += m
    return mask_counts, keep, errors
