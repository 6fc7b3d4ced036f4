"""Precomputed lookup tables for the Monte Carlo kernels.

Click patterns are packed into 6-bit masks (bits 0..2 the 'c' detector
in bins 1..3, bits 3..5 the 'd' detector). For each of the 16 binary
phase settings and each photon-arrival case the exact output-state
distribution over masks is tabulated cumulatively, and the sifting
decision plus the phase-disagreement bit are tabulated per mask, so the
hot loop only does table lookups.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, Tuple

import numpy as np

from .fock_optics import (
    PhaseSetting,
    TwoPartyFockState,
    beamsplitter_transform,
    encode_single_photon,
    joint_input,
)
from .protocol_sifting import Action, DetectionOutcome, PhaseUsed, extract_bits, sift

# Arrival cases, indexed 2*(a survived) + (b survived).
CASE_NONE = 0
CASE_B_ONLY = 1
CASE_A_ONLY = 2
CASE_BOTH = 3

ACTION_KEEP = 0
ACTION_DISCARD = 1
ACTION_INCONCLUSIVE = 2


def setting_bits(index: int) -> Tuple[int, int, int, int]:
    """(j_a1, j_a2, j_b1, j_b2) for setting index 0..15, lexicographic."""
    return (index >> 3) & 1, (index >> 2) & 1, (index >> 1) & 1, index & 1


def mask_of_pattern(pattern: Tuple[int, ...]) -> int:
    """Threshold-detector click mask of an occupation pattern."""
    mask = 0
    for bit, occupancy in enumerate(pattern):
        if occupancy >= 1:
            mask |= 1 << bit
    return mask


def clicks_of_mask(mask: int) -> frozenset:
    clicks = set()
    for bit in range(6):
        if mask & (1 << bit):
            detector = "c" if bit < 3 else "d"
            clicks.add((detector, bit % 3 + 1))
    return frozenset(clicks)


def _mask_distribution(state: TwoPartyFockState) -> np.ndarray:
    out = np.zeros(64)
    for pattern, amp in state.amplitudes.items():
        out[mask_of_pattern(pattern)] += abs(amp) ** 2
    return out


@dataclass
class TableSet:
    """Everything the kernels need, in flat numeric form.

    outcome_cum[s, case] is the cumulative mask distribution for phase
    setting s and arrival case; action/phase/flip give the sifting
    decision per mask; base_error[s, mask] is 1 when the senders' bits
    disagree for a Keep mask under setting s (before misalignment).
    """

    outcome_cum: np.ndarray  # (16, 4, 64) float64, last entry exactly 1
    action: np.ndarray  # (64,) int8
    phase: np.ndarray  # (64,) int8: 0 first pair, 1 second pair, -1 none
    flip: np.ndarray  # (64,) int8: 0/1, -1 where undefined
    base_error: np.ndarray  # (16, 64) int8


@lru_cache(maxsize=1)
def build_tables() -> TableSet:
    outcome_cum = np.zeros((16, 4, 64))
    for s in range(16):
        j_a1, j_a2, j_b1, j_b2 = setting_bits(s)
        setting = PhaseSetting.from_bits(j_a1, j_a2, j_b1, j_b2)

        distributions = np.zeros((4, 64))
        distributions[CASE_NONE, 0] = 1.0
        alice_only = beamsplitter_transform(encode_single_photon(j_a1, j_a2, "a"))
        bob_only = beamsplitter_transform(encode_single_photon(j_b1, j_b2, "b"))
        both = beamsplitter_transform(joint_input(setting))
        distributions[CASE_A_ONLY] = _mask_distribution(alice_only)
        distributions[CASE_B_ONLY] = _mask_distribution(bob_only)
        distributions[CASE_BOTH] = _mask_distribution(both)

        cum = np.cumsum(distributions, axis=1)
        if np.any(np.abs(cum[:, -1] - 1.0) > 1e-9):
            raise AssertionError("mask distribution does not sum to 1")
        cum[:, -1] = 1.0  # guard searchsorted/linear scan against roundoff
        outcome_cum[s] = cum

    action = np.full(64, ACTION_INCONCLUSIVE, dtype=np.int8)
    phase = np.full(64, -1, dtype=np.int8)
    flip = np.full(64, -1, dtype=np.int8)
    for mask in range(64):
        clicks = clicks_of_mask(mask)
        if len(clicks) > 2:
            continue  # stays Inconclusive: outside the announcement table
        decision = sift(DetectionOutcome(clicks))
        if decision.action is Action.KEEP:
            action[mask] = ACTION_KEEP
            phase[mask] = 0 if decision.phase_used is PhaseUsed.DELTA1 else 1
            flip[mask] = 1 if decision.bit_flip else 0
        elif decision.action is Action.DISCARD:
            action[mask] = ACTION_DISCARD

    base_error = np.zeros((16, 64), dtype=np.int8)
    for s, mask in product(range(16), range(64)):
        if action[mask] != ACTION_KEEP:
            continue
        decision = sift(DetectionOutcome(clicks_of_mask(mask)))
        j_a1, j_a2, j_b1, j_b2 = setting_bits(s)
        bits = extract_bits(decision, PhaseSetting.from_bits(j_a1, j_a2, j_b1, j_b2))
        base_error[s, mask] = 1 if bits[0] != bits[1] else 0

    return TableSet(outcome_cum, action, phase, flip, base_error)


def conclusive_mask_names() -> Dict[int, str]:
    """mask -> compact outcome name (e.g. 'c1+c2') for the 12 table rows."""
    names = {}
    for mask in range(64):
        clicks = clicks_of_mask(mask)
        if len(clicks) != 2:
            continue
        if sift(DetectionOutcome(clicks)).action is Action.INCONCLUSIVE:
            continue
        names[mask] = "+".join(f"{d}{t}" for d, t in sorted(clicks))
    return names
