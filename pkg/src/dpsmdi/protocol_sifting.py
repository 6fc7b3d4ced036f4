"""Announcement alphabet and reconciliation rules of the relay protocol.

The relay announces which threshold detectors fired in which time bins.
Coincidences that pair the first bin with a later bin let the senders
keep a bit (flipping Bob's when the detectors differ), coincidences on
the two later bins are discarded, and everything else is inconclusive.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .fock_optics import PhaseSetting, beamsplitter_transform, joint_input

Click = Tuple[str, int]


class Action(str, Enum):
    KEEP = "Keep"
    DISCARD = "Discard"
    INCONCLUSIVE = "Inconclusive"


class PhaseUsed(str, Enum):
    """Which sender phase pair a kept bit is read from."""

    DELTA1 = "delta_phi1"
    DELTA2 = "delta_phi2"
    NONE = "none"


class BellLabel(str, Enum):
    """Bell state shared on the retained ancilla register after a Keep."""

    CORRELATED = "phi_minus"  # (|00> - |11>)/sqrt(2)
    ANTICORRELATED = "psi_minus"  # (|01> - |10>)/sqrt(2)


class Register(str, Enum):
    A1B1 = "A1B1"
    A2B2 = "A2B2"


@dataclass(frozen=True)
class DetectionOutcome:
    """Set of relay clicks, each a (detector, time_bin) pair.

    Threshold detectors give at most one click per (detector, bin), and
    single-photon inputs never produce more than two clicks, so 0, 1 or
    2 entries are allowed.
    """

    clicks: FrozenSet[Click] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        clicks = frozenset(tuple(c) for c in self.clicks)
        object.__setattr__(self, "clicks", clicks)
        if len(clicks) > 2:
            raise ValueError(f"at most 2 clicks per announcement, got {len(clicks)}")
        for detector, time_bin in clicks:
            if detector not in ("c", "d"):
                raise ValueError(f"detector must be 'c' or 'd', got {detector!r}")
            if time_bin not in (1, 2, 3):
                raise ValueError(f"time_bin must be 1, 2 or 3, got {time_bin}")

    def __str__(self) -> str:
        if not self.clicks:
            return "(none)"
        return "+".join(f"({d},{t})" for d, t in sorted(self.clicks))

    @classmethod
    def from_pattern(cls, pattern: Sequence[int]) -> "DetectionOutcome":
        """Clicks implied by a six-mode photon-number pattern.

        Mode order matches the detector-side state: (c1, c2, c3, d1, d2, d3).
        Threshold detection: any positive occupancy is one click.
        """
        clicks = set()
        for index, occupancy in enumerate(pattern):
            if occupancy > 0:
                detector = "c" if index < 3 else "d"
                clicks.add((detector, index % 3 + 1))
        return cls(frozenset(clicks))


@dataclass(frozen=True)
class SiftDecision:
    """What the senders do with one announcement.

    ``phase_used`` is NONE exactly when the action is not Keep, and
    ``bit_flip`` carries a boolean only for Keep decisions.
    """

    action: Action
    phase_used: PhaseUsed = PhaseUsed.NONE
    bit_flip: Optional[bool] = None

    def __post_init__(self) -> None:
        if (self.phase_used is PhaseUsed.NONE) != (self.action is not Action.KEEP):
            raise ValueError("phase_used must be set exactly for Keep decisions")
        if (self.bit_flip is None) == (self.action is Action.KEEP):
            raise ValueError("bit_flip is defined exactly for Keep decisions")


@dataclass(frozen=True)
class AncillaBellState:
    """Bell label plus the ancilla register pair it lives on."""

    label: BellLabel
    register: Register


def _keep(phase: PhaseUsed, flip: bool) -> SiftDecision:
    return SiftDecision(Action.KEEP, phase, flip)


# The 12 conclusive announcement rows, in documentation order: first the
# unflipped coincidences (same detector, bin 1 with bin 2 or 3), then the
# flipped ones (opposite detectors), then the discarded bins-{2,3} pairs.
_CONCLUSIVE_ROWS: List[Tuple[FrozenSet[Click], SiftDecision]] = [
    (frozenset({("c", 1), ("c", 2)}), _keep(PhaseUsed.DELTA1, False)),
    (frozenset({("d", 1), ("d", 2)}), _keep(PhaseUsed.DELTA1, False)),
    (frozenset({("c", 1), ("c", 3)}), _keep(PhaseUsed.DELTA2, False)),
    (frozenset({("d", 1), ("d", 3)}), _keep(PhaseUsed.DELTA2, False)),
    (frozenset({("c", 1), ("d", 2)}), _keep(PhaseUsed.DELTA1, True)),
    (frozenset({("c", 2), ("d", 1)}), _keep(PhaseUsed.DELTA1, True)),
    (frozenset({("c", 1), ("d", 3)}), _keep(PhaseUsed.DELTA2, True)),
    (frozenset({("c", 3), ("d", 1)}), _keep(PhaseUsed.DELTA2, True)),
    (frozenset({("c", 2), ("c", 3)}), SiftDecision(Action.DISCARD)),
    (frozenset({("d", 2), ("d", 3)}), SiftDecision(Action.DISCARD)),
    (frozenset({("c", 2), ("d", 3)}), SiftDecision(Action.DISCARD)),
    (frozenset({("c", 3), ("d", 2)}), SiftDecision(Action.DISCARD)),
]

_DECISION_TABLE: Dict[FrozenSet[Click], SiftDecision] = dict(_CONCLUSIVE_ROWS)

_INCONCLUSIVE = SiftDecision(Action.INCONCLUSIVE)

# Bell vectors over (sender-a bit, sender-b bit), index 2*a + b.
_BELL_VECTORS = {
    BellLabel.CORRELATED: np.array([1.0, 0.0, 0.0, -1.0]) / math.sqrt(2.0),
    BellLabel.ANTICORRELATED: np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0),
}


def sift(outcome: DetectionOutcome) -> SiftDecision:
    """Classify one announcement per the reconciliation table.

    The 8 Keep and 4 Discard coincidence rows are matched exactly;
    every other announcement (no click, one click, or a same-bin
    cross-detector pair) is Inconclusive.
    """
    if not isinstance(outcome, DetectionOutcome):
        outcome = DetectionOutcome(frozenset(outcome))
    if len(outcome.clicks) > 2:
        raise ValueError("malformed announcement: more than 2 clicks")
    return _DECISION_TABLE.get(outcome.clicks, _INCONCLUSIVE)


def _phase_bit(phi: float, label: str) -> int:
    ratio = phi / math.pi
    bit = round(ratio)
    if abs(ratio - bit) > 1e-9:
        raise ValueError(f"{label}={phi} is not a multiple of pi; bits are undefined")
    return bit % 2


def extract_bits(
    decision: SiftDecision, setting: PhaseSetting
) -> Optional[Tuple[int, int]]:
    """Final key bits of both senders for a Keep decision.

    Each sender's bit is their applied phase divided by pi on the bin
    selected by the decision; Bob's bit is inverted when the decision
    carries a flip. Returns None for non-Keep decisions.
    """
    if decision.action is not Action.KEEP:
        return None
    if decision.phase_used is PhaseUsed.DELTA1:
        phi_a, phi_b = setting.phi_a1, setting.phi_b1
    else:
        phi_a, phi_b = setting.phi_a2, setting.phi_b2
    alice = _phase_bit(phi_a, "phi_a")
    bob = _phase_bit(phi_b, "phi_b")
    if decision.bit_flip:
        bob ^= 1
    return alice, bob


def sifted_key_fraction() -> Fraction:
    """Fraction of rounds that yield a key bit: 2/3 survive bunching,
    2 of 3 surviving coincidence classes are kept."""
    return Fraction(2, 3) * Fraction(2, 3)


def conclusive_rows() -> Dict[DetectionOutcome, SiftDecision]:
    """All 12 two-click reconciliation rows, in table order."""
    return {
        DetectionOutcome(clicks): decision for clicks, decision in _CONCLUSIVE_ROWS
    }


def _outcome_pattern(outcome: DetectionOutcome) -> Tuple[int, ...]:
    pattern = [0, 0, 0, 0, 0, 0]
    for detector, time_bin in outcome.clicks:
        side = 0 if detector == "c" else 3
        pattern[side + time_bin - 1] += 1
    return tuple(pattern)


def verify_entanglement_mapping(outcome: DetectionOutcome) -> AncillaBellState:
    """Bell state left on the senders' ancilla qubits after a Keep announcement.

    Rebuilds the joint state in the equivalent entanglement-based picture:
    each sender holds two ancilla qubits (one per modulated bin) that are
    uniformly entangled with the emitted phase pattern. Projecting the
    optical part onto the announced click pattern leaves a 16-component
    ancilla vector over (A1, B1, A2, B2); it must factorize into a Bell
    state on the register matching the decision's phase pair and a
    Z-uniform state on the other register.
    """
    decision = sift(outcome)
    if decision.action is not Action.KEEP:
        raise ValueError(f"entanglement mapping is defined for Keep outcomes, got {outcome}")
    pattern = _outcome_pattern(outcome)

    # ancilla[a1, b1, a2, b2] = optical amplitude of the click pattern
    # when the senders' phase bits equal the ancilla basis labels.
    ancilla = np.zeros((2, 2, 2, 2), dtype=complex)
    for j_a1 in (0, 1):
        for j_a2 in (0, 1):
            for j_b1 in (0, 1):
                for j_b2 in (0, 1):
                    setting = PhaseSetting.from_bits(j_a1, j_a2, j_b1, j_b2)
                    optical = beamsplitter_transform(joint_input(setting))
                    ancilla[j_a1, j_b1, j_a2, j_b2] = optical.amplitudes.get(pattern, 0j)
    matrix = ancilla.reshape(4, 4)  # rows: (A1,B1), columns: (A2,B2)
    if np.linalg.matrix_rank(matrix, tol=1e-9) != 1:
        raise AssertionError(f"projected ancilla state for {outcome} does not factorize")

    # Rank 1: split into kept-register and traced-out-register factors.
    i0, j0 = np.unravel_index(np.argmax(np.abs(matrix)), matrix.shape)
    row_factor = matrix[:, j0]
    col_factor = matrix[i0, :] / matrix[i0, j0]
    if not np.allclose(np.outer(row_factor, col_factor), matrix, atol=1e-12):
        raise AssertionError(f"rank-1 factorization failed for {outcome}")

    if decision.phase_used is PhaseUsed.DELTA1:
        register, kept, other = Register.A1B1, row_factor, col_factor
    else:
        register, kept, other = Register.A2B2, col_factor, row_factor

    other_mags = np.abs(other)
    if not np.allclose(other_mags, other_mags[0], atol=1e-12):
        raise AssertionError(f"traced-out register is not Z-uniform for {outcome}")

    kept = kept / np.linalg.norm(kept)
    for label, vector in _BELL_VECTORS.items():
        if abs(np.vdot(vector, kept)) >= 1.0 - 1e-9:
            return AncillaBellState(label, register)
    raise AssertionError(f"kept register state for {outcome} is not a recognized Bell state")


def reconciliation_table_csv() -> str:
    """CSV rendition of the conclusive announcement table.

    Columns: outcome, action, phase_used, bit_flip, bell_state. The
    bell_state column is filled from verify_entanglement_mapping for
    Keep rows and left empty for Discard rows.
    """
    buffer = io.StringIO()
    buffer.write("outcome,action,phase_used,bit_flip,bell_state\n")
    for clicks, decision in _CONCLUSIVE_ROWS:
        outcome = DetectionOutcome(clicks)
        if decision.action is Action.KEEP:
            bell = verify_entanglement_mapping(outcome)
            bell_text = f"{bell.label.value}@{bell.register.value}"
            flip_text = "yes" if decision.bit_flip else "no"
        else:
            bell_text = ""
            flip_text = ""
        buffer.write(
            f"{outcome},{decision.action.value},{decision.phase_used.value},"
            f"{flip_text},{bell_text}\n"
        )
    return buffer.getvalue()
