"""State algebra: encoding, interference, post-selection, filters."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsmdi.fock_optics import (
    BUNCHED_PATTERNS,
    DISCARD_PATTERNS,
    FILTER_PATTERNS,
    INPUT,
    OUTPUT,
    BasisMismatchError,
    ModeIndex,
    PhaseSetting,
    TwoPartyFockState,
    apply_filter,
    beamsplitter_transform,
    conclusive_output_state,
    discrete_settings,
    encode_single_photon,
    joint_input,
    output_state,
    postselect_hom,
    states_equal_up_to_phase,
)


def test_mode_index_layout():
    assert ModeIndex("a", 1).flat_index == 0
    assert ModeIndex("a", 3).flat_index == 2
    assert ModeIndex("b", 1).flat_index == 3
    assert ModeIndex("d", 2).flat_index == 4
    assert ModeIndex("a", 2).basis == INPUT
    assert ModeIndex("c", 2).basis == OUTPUT
    with pytest.raises(ValueError):
        ModeIndex("e", 1)
    with pytest.raises(ValueError):
        ModeIndex("a", 4)


def test_phase_setting_differences():
    setting = PhaseSetting(math.pi, 0.0, 0.0, math.pi)
    assert setting.delta_phi1 == pytest.approx(math.pi)
    assert setting.delta_phi2 == pytest.approx(math.pi)
    # differences are reduced mod 2*pi
    wrapped = PhaseSetting(0.0, 0.0, 3.0 * math.pi, 0.0)
    assert wrapped.delta_phi1 == pytest.approx(math.pi)


def test_discrete_settings_enumeration():
    settings_list = discrete_settings()
    assert len(settings_list) == 16
    assert len(set(settings_list)) == 16
    for s in settings_list:
        for phi in (s.phi_a1, s.phi_a2, s.phi_b1, s.phi_b2):
            assert phi in (0.0, math.pi)


def test_single_photon_encoding_amplitudes():
    """Each bit pattern flips the sign of the matching later bin."""
    inv_sqrt3 = 1.0 / math.sqrt(3.0)
    state = encode_single_photon(0, 0, port="a")
    assert state.amplitudes[(1, 0, 0, 0, 0, 0)] == pytest.approx(inv_sqrt3)
    assert state.amplitudes[(0, 1, 0, 0, 0, 0)] == pytest.approx(inv_sqrt3)
    assert state.amplitudes[(0, 0, 1, 0, 0, 0)] == pytest.approx(inv_sqrt3)
    flipped = encode_single_photon(1, 0, port="b")
    assert flipped.amplitudes[(0, 0, 0, 0, 1, 0)] == pytest.approx(-inv_sqrt3)
    assert flipped.amplitudes[(0, 0, 0, 0, 0, 1)] == pytest.approx(inv_sqrt3)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_joint_input_norm_and_size():
    for setting in discrete_settings():
        state = joint_input(setting)
        assert state.port_basis == INPUT
        assert len(state.amplitudes) == 9
        assert state.norm_squared() == pytest.approx(1.0, abs=1e-12)


def test_postselection_survival_probability():
    # Two photons land in the same bin in 3 of 9 product terms.
    for setting in discrete_settings():
        survivor, survival = postselect_hom(joint_input(setting))
        assert survival == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert survivor.norm() == pytest.approx(1.0, abs=1e-12)
        for pattern in survivor.amplitudes:
            same_bin = any(pattern[k] and pattern[3 + k] for k in range(3))
            assert not same_bin


def test_postselection_rejects_wrong_basis_and_zero():
    out = output_state(discrete_settings()[0])
    with pytest.raises(BasisMismatchError):
        postselect_hom(out)
    with pytest.raises(ValueError):
        postselect_hom(TwoPartyFockState({}, INPUT))


def test_beamsplitter_bunches_same_bin_photons():
    """One photon per arm in the same bin never produces a coincidence."""
    state = TwoPartyFockState({(1, 0, 0, 1, 0, 0): 1.0}, INPUT)
    transformed = beamsplitter_transform(state)
    expect = 1.0 / math.sqrt(2.0)
    assert transformed.probability((2, 0, 0, 0, 0, 0)) == pytest.approx(0.5, abs=1e-12)
    assert transformed.probability((0, 0, 0, 2, 0, 0)) == pytest.approx(0.5, abs=1e-12)
    assert transformed.amplitudes[(2, 0, 0, 0, 0, 0)].real == pytest.approx(expect)
    # the coincidence amplitude cancels
    assert transformed.probability((1, 0, 0, 1, 0, 0)) == pytest.approx(0.0, abs=1e-24)


def test_beamsplitter_acts_per_time_bin():
    state = TwoPartyFockState({(1, 0, 0, 0, 1, 0): 1.0}, INPUT)
    transformed = beamsplitter_transform(state)
    # distinct bins: four equally likely two-click patterns
    for pattern in ((1, 1, 0, 0, 0, 0), (1, 0, 0, 0, 1, 0),
                    (0, 1, 0, 1, 0, 0), (0, 0, 0, 1, 1, 0)):
        assert transformed.probability(pattern) == pytest.approx(0.25, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(
    st.dictionaries(
        st.tuples(*[st.integers(min_value=0, max_value=2)] * 6).filter(
            lambda p: 0 < sum(p) <= 3
        ),
        st.complex_numbers(
            min_magnitude=0.0, max_magnitude=2.0, allow_infinity=False, allow_nan=False
        ),
        min_size=1,
        max_size=6,
    )
)
def test_beamsplitter_preserves_norm(amplitudes):
    state = TwoPartyFockState(amplitudes, INPUT)
    transformed = beamsplitter_transform(state)
    assert transformed.port_basis == OUTPUT
    assert transformed.norm_squared() == pytest.approx(
        state.norm_squared(), rel=1e-9, abs=1e-12
    )


def test_output_state_completeness():
    """Conclusive + discarded + bunched weights exhaust the output state."""
    conclusive = FILTER_PATTERNS["F1"] | FILTER_PATTERNS["F2"]
    for setting in discrete_settings():
        # cancelled same-bin coincidence terms stay in the dict with zero
        # amplitude; prune before classifying
        state = output_state(setting).pruned()
        weights = {"conclusive": 0.0, "discard": 0.0, "bunched": 0.0}
        for pattern, amp in state.amplitudes.items():
            weight = abs(amp) ** 2
            if pattern in conclusive:
                weights["conclusive"] += weight
            elif pattern in DISCARD_PATTERNS:
                weights["discard"] += weight
            elif pattern in BUNCHED_PATTERNS:
                weights["bunched"] += weight
            else:
                raise AssertionError(f"unclassified pattern {pattern}")
        assert sum(weights.values()) == pytest.approx(1.0, abs=1e-12)
        assert weights["conclusive"] == pytest.approx(4.0 / 9.0, abs=1e-12)
        assert weights["discard"] == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert weights["bunched"] == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_filter_probabilities_conditioned_on_survival():
    for setting in discrete_settings():
        state = conclusive_output_state(setting)
        _, p1 = apply_filter(state, "F1")
        _, p2 = apply_filter(state, "F2")
        assert p1 == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert p2 == pytest.approx(1.0 / 3.0, abs=1e-12)
        # per setting only one pattern pair inside each filter interferes
        # constructively (same-detector or cross-detector, depending on the
        # phase difference); each compatible pattern carries weight 1/6
        for name in ("F1", "F2"):
            projected, _ = apply_filter(state, name)
            supported = [
                p for p in FILTER_PATTERNS[name]
                if projected.probability(p) > 1e-12
            ]
            assert len(supported) == 2
            for pattern in supported:
                assert projected.probability(pattern) == pytest.approx(
                    1.0 / 6.0, abs=1e-12
                )


def test_filter_validation():
    state = conclusive_output_state(discrete_settings()[0])
    with pytest.raises(ValueError):
        apply_filter(state, "F3")
    with pytest.raises(BasisMismatchError):
        apply_filter(joint_input(discrete_settings()[0]), "F1")


def test_inner_product_basis_check():
    a = joint_input(discrete_settings()[0])
    b = output_state(discrete_settings()[0])
    with pytest.raises(BasisMismatchError):
        a.inner(b)


def test_states_equal_up_to_phase():
    setting = discrete_settings()[5]
    state = joint_input(setting)
    rotated = TwoPartyFockState(
        {p: a * complex(0.0, 1.0) for p, a in state.amplitudes.items()}, INPUT
    )
    assert states_equal_up_to_phase(state, rotated)
    other = joint_input(discrete_settings()[6])
    assert not states_equal_up_to_phase(state, other)


def test_pruned_drops_small_amplitudes():
    state = TwoPartyFockState(
        {(1, 0, 0, 0, 0, 0): 1.0, (0, 1, 0, 0, 0, 0): 1e-16}, INPUT
    )
    assert len(state.pruned().amplitudes) == 1


def test_dump_is_deterministic_and_sorted():
    setting = discrete_settings()[3]
    text = output_state(setting).dump()
    assert text == output_state(setting).dump()
    lines = text.splitlines()
    assert lines == sorted(lines)
    assert lines[0].endswith("cd") or ">cd " in lines[0]


def test_pattern_validation():
    with pytest.raises(ValueError):
        TwoPartyFockState({(1, 0, 0, 0, 0): 1.0}, INPUT)  # five modes
    with pytest.raises(ValueError):
        TwoPartyFockState({(1, 0, 0, 0, 0, -1): 1.0}, INPUT)
    with pytest.raises(ValueError):
        TwoPartyFockState({(1, 0, 0, 0, 0, 0): 1.0}, "ab")
