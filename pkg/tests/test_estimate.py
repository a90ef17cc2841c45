import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellprobe.dcqd import MeasurementRecord, PreparationConfig, normalizer_statistics, outcome_probabilities, sample_outcomes
from bellprobe.dynamics import (
    ExchangeHamiltonian,
    RelaxationParams,
    SingleQubitHamiltonian,
    chi_from_unitary,
    hamiltonian_channel,
    identity_channel,
    process_oracle,
    relaxation_channel,
)
from bellprobe.errors import (
    ConditioningError,
    DegenerateTimeError,
    InconsistencyError,
    ModelViolationError,
    OutOfRangeError,
    ParameterError,
)
from bellprobe.estimate import (
    OffDiagonalSolution,
    bell_energies,
    estimate_anisotropic_couplings,
    estimate_direction_magnitudes,
    estimate_isotropic_coupling,
    estimate_relaxation,
    exchange_relative_signs,
    exchange_spectrum,
    reconstruct_direction_signs,
    solve_offdiagonal,
)

BELLZ = PreparationConfig("BellZ")
DOUBLE = PreparationConfig("DoubleBell")


def bellz(p, t=1.0):
    return MeasurementRecord(BELLZ, t, np.array(p, dtype=float))


def single(j, t):
    ch = hamiltonian_channel(SingleQubitHamiltonian(j), t)
    return ch, outcome_probabilities(BELLZ, ch, t)


def solutions(ch, t, kinds=("NonMaxZ", "NonMaxX", "NonMaxY"), diag=None):
    return [solve_offdiagonal(normalizer_statistics(PreparationConfig(k), ch, t), diag) for k in kinds]


def double(h, t):
    return outcome_probabilities(DOUBLE, hamiltonian_channel(h, t), t)


# --- direction magnitudes -------------------------------------------------


def test_magnitudes_z_axis():
    assert np.allclose(estimate_direction_magnitudes(bellz([0.5, 0, 0, 0.5])).magnitudes, [0, 0, 1])


def test_magnitudes_tilted_axis():
    est = estimate_direction_magnitudes(bellz([1 / 4, 1 / 12, 1 / 3, 1 / 3]))
    assert np.allclose(est.magnitudes, [1 / 3, 2 / 3, 2 / 3], atol=1e-12)
    assert est.signs is None and est.vector is None


def test_magnitudes_degenerate_time():
    with pytest.raises(DegenerateTimeError):
        estimate_direction_magnitudes(bellz([1, 0, 0, 0]))


def test_magnitudes_require_bellz_record():
    with pytest.raises(ParameterError):
        estimate_direction_magnitudes(MeasurementRecord(PreparationConfig("NonMaxZ"), 1.0, np.array([1.0, 0, 0, 0])))


def test_sampled_magnitudes_stderr_covers_truth():
    ch, rec = single((0.3, 0.4, -0.5), 1.1)
    s = sample_outcomes(rec, 200_000, 3)
    est = estimate_direction_magnitudes(s)
    truth = np.abs(np.array(SingleQubitHamiltonian((0.3, 0.4, -0.5)).direction))
    assert np.all(np.abs(est.magnitudes - truth) < 5 * est.stderr)
    assert np.all(est.stderr > 0)


# --- off-diagonal elements ------------------------------------------------


def test_offdiagonal_identity_channel():
    sol = solve_offdiagonal(normalizer_statistics(PreparationConfig("NonMaxZ"), identity_channel(), 0.0), np.array([1.0, 0, 0, 0]))
    assert sol.im_0k == pytest.approx(0, abs=1e-14)
    assert sol.chi_diagonal[0] - sol.chi_diagonal[3] == pytest.approx(1)


def test_offdiagonal_z_rotation_frozen():
    ch, rec = single((0, 0, 1), math.pi / 4)
    (sol,) = solutions(ch, math.pi / 4, ("NonMaxZ",), rec)
    assert sol.im_0k == pytest.approx(0.5, abs=1e-12)


def test_offdiagonal_tilted_axis_frozen():
    ch, rec = single((1 / 3, 2 / 3, 2 / 3), math.pi / 3)
    (sol,) = solutions(ch, math.pi / 3, ("NonMaxZ",), rec)
    assert sol.pair == (1, 2)
    assert sol.re_pair == pytest.approx(1 / 6, abs=1e-12)


def test_offdiagonal_works_when_a_vanishes():
    cfg = PreparationConfig("NonMaxZ", math.sqrt(0.7), 1j * math.sqrt(0.3))
    ch, rec = single((0.2, 0.5, -0.7), 0.8)
    sol = solve_offdiagonal(normalizer_statistics(cfg, ch, 0.8), rec)
    chi = chi_from_unitary(ch.kraus[0])
    assert sol.im_0k == pytest.approx(chi[0, 3].imag, abs=1e-12)
    assert sol.re_pair == pytest.approx(chi[1, 2].real, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 3))
def test_offdiagonal_matches_chi_for_every_layout(x, y, z, t):
    ch, rec = single((x, y, z), t)
    chi = chi_from_unitary(ch.kraus[0])
    for sol in solutions(ch, t, diag=rec):
        j, l = sol.pair
        assert sol.im_0k == pytest.approx(chi[0, sol.axis].imag, abs=1e-10)
        assert sol.re_pair == pytest.approx(chi[j, l].real, abs=1e-10)
        assert sol.residual < 1e-10


def test_offdiagonal_conditioning_error_when_b_vanishes():
    ch, rec = single((0, 0, 1), 0.3)
    st_ = normalizer_statistics(PreparationConfig("NonMaxZ"), ch, 0.3)
    from dataclasses import replace

    with pytest.raises(ConditioningError):
        solve_offdiagonal(replace(st_, b=0.0), rec)


# --- signs ----------------------------------------------------------------


def test_sign_read_for_z_axis():
    ch, rec = single((0, 0, 1), math.pi / 4)
    mags = estimate_direction_magnitudes(rec)
    d = reconstruct_direction_signs(mags, solutions(ch, math.pi / 4, diag=rec), math.pi / 4, 1.0)
    assert d.signs[2] == 1


def test_sign_recovery_mixed_signs():
    t = 0.9
    ch, rec = single((1 / 3, -2 / 3, 2 / 3), t)
    chi = chi_from_unitary(ch.kraus[0])
    assert chi[1, 2].real < 0 and chi[2, 3].real < 0 and chi[0, 3].imag > 0
    mags = estimate_direction_magnitudes(rec)
    d = reconstruct_direction_signs(mags, solutions(ch, t, diag=rec), t, 1.0)
    assert d.signs == (1, -1, 1) and d.global_sign_fixed


def test_two_configurations_leave_global_sign_open():
    t = 0.9
    ch, rec = single((1 / 3, -2 / 3, 2 / 3), t)
    d = reconstruct_direction_signs(estimate_direction_magnitudes(rec), solutions(ch, t, ("NonMaxZ", "NonMaxX"), rec), t, 1.0)
    assert np.allclose(d.vector, [1 / 3, -2 / 3, 2 / 3], atol=1e-12)
    assert d.global_sign_fixed is False


def test_sign_recovery_needs_valid_window():
    ch, rec = single((0, 0, 1), 1.0)
    with pytest.raises(ParameterError):
        reconstruct_direction_signs(estimate_direction_magnitudes(rec), solutions(ch, 1.0, diag=rec), 1.0, 2.0)


def test_sign_recovery_without_bound_returns_magnitudes():
    ch, rec = single((0, 0, 1), 1.0)
    mags = estimate_direction_magnitudes(rec)
    assert reconstruct_direction_signs(mags, [], 1.0, None) is mags


def test_contradictory_constraints_raise():
    t = 0.9
    ch, rec = single((1 / 3, -2 / 3, 2 / 3), t)
    sols = solutions(ch, t, diag=rec)
    z = sols[0]
    flipped = OffDiagonalSolution(z.kind, z.chi_diagonal, z.im_0k, -z.re_pair, z.axis, z.pair, z.condition_number, z.stderr)
    with pytest.raises(InconsistencyError):
        reconstruct_direction_signs(estimate_direction_magnitudes(rec), [flipped, *sols[1:]], t, 1.0)


# --- relaxation -----------------------------------------------------------


def relax_record(t1, t2, a, t):
    return outcome_probabilities(BELLZ, relaxation_channel(RelaxationParams(t1, t2, a), t), t)


def test_relaxation_frozen_example():
    rec = relax_record(2, 1, 0.5, 0.5)
    f = rec.probabilities
    assert f[1] + f[2] == pytest.approx((1 - math.exp(-0.25)) / 2, abs=1e-14)
    assert f[0] - f[3] == pytest.approx(math.exp(-0.5), abs=1e-14)
    est = estimate_relaxation(rec)
    assert est.T1 == pytest.approx(2, rel=1e-9) and est.T2 == pytest.approx(1, rel=1e-9)
    assert not est.flagged


def test_relaxation_small_time_limit():
    est = estimate_relaxation(relax_record(2, 1, 0.5, 1e-6))
    assert est.T1 == pytest.approx(2, rel=1e-4) and est.T2 == pytest.approx(1, rel=1e-6)


def test_relaxation_zero_time_rejected():
    with pytest.raises(ParameterError):
        estimate_relaxation(relax_record(2, 1, 0.5, 0.1), t=0.0)


def test_pure_dephasing_recovers_infinite_t1():
    est = estimate_relaxation(relax_record(math.inf, 0.7, 0.5, 0.4))
    assert est.rate1 == 0 and est.T1 == math.inf
    assert est.T2 == pytest.approx(0.7, rel=1e-12)


def test_relaxation_out_of_range_argument():
    with pytest.raises(OutOfRangeError, match="smaller t or more shots"):
        estimate_relaxation(bellz([0.2, 0.3, 0.3, 0.2], 1.0))


def test_sampled_relaxation_within_error_bars():
    rec = sample_outcomes(relax_record(2, 1, 0.3, 0.6), 10**6, 11)
    est = estimate_relaxation(rec)
    assert abs(est.T1 - 2) < 5 * est.stderr_T1
    assert abs(est.T2 - 1) < 5 * est.stderr_T2


# --- exchange -------------------------------------------------------------


def test_isotropic_frozen_example():
    est = estimate_isotropic_coupling(double(ExchangeHamiltonian(1, 1, 1), math.pi / 8))
    assert est.sin_2Jt == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert est.abs_J == pytest.approx(1, abs=1e-12)
    assert any(a == pytest.approx(1) for a in est.aliases)


def test_isotropic_zero_coupling():
    est = estimate_isotropic_coupling(double(ExchangeHamiltonian(0, 0, 0), 0.5))
    assert est.abs_J == 0


def test_isotropic_model_violation():
    with pytest.raises(ModelViolationError):
        estimate_isotropic_coupling(double(ExchangeHamiltonian(1, 1, 0), 0.3))


def test_aliases_contain_all_branches():
    t = 0.2
    est = estimate_isotropic_coupling(double(ExchangeHamiltonian(0.7, 0.7, 0.7), t))
    for k in range(3):
        for s in (1, -1):
            v = (k * math.pi + s * 2 * 0.7 * t) / (2 * t)
            if v >= 0:
                assert any(abs(a - v) < 1e-9 for a in est.aliases)


def test_xy_coupling_frozen():
    est = estimate_anisotropic_couplings(double(ExchangeHamiltonian(1, 1, 0), math.pi / 8))
    assert np.allclose(est.abs_J, [1, 1, 0], atol=1e-9)


@pytest.mark.parametrize("j", [0.3, 1.0, 1.7])
def test_anisotropic_agrees_with_isotropic(j):
    rec = double(ExchangeHamiltonian(j, j, j), 0.25)
    iso = estimate_isotropic_coupling(rec)
    an = estimate_anisotropic_couplings(rec)
    assert np.allclose(an.abs_J, iso.abs_J, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(-2.5, 2.5), st.floats(0.05, 0.5))
def test_xxz_round_trip(jxy, jz, t):
    if abs(jxy * t - math.pi / 4) < 0.05:
        return
    est = estimate_anisotropic_couplings(double(ExchangeHamiltonian(jxy, jxy, jz), t))
    assert est.abs_J[0] == pytest.approx(jxy, abs=1e-7)
    assert est.abs_J[2] == pytest.approx(abs(jz), abs=1e-6)


def test_degenerate_time_at_quarter_period():
    with pytest.raises(DegenerateTimeError):
        estimate_anisotropic_couplings(double(ExchangeHamiltonian(1, 1, 0.3), math.pi / 4))


def test_xyz_refused():
    with pytest.raises(ModelViolationError):
        estimate_anisotropic_couplings(double(ExchangeHamiltonian(0.4, 0.9, 0.2), 0.3))
    with pytest.raises(ModelViolationError):
        estimate_anisotropic_couplings(double(ExchangeHamiltonian(0.4, 0.4, 0.2), 0.3), kind="XYZ")


def test_spectrum_of_zero_couplings():
    assert exchange_spectrum(np.zeros(3)) == [(0.0, 0.0, 0.0, 0.0)]


def test_spectrum_with_signs_matches_hamiltonian():
    h = ExchangeHamiltonian(0.8, 0.8, -1.3)
    assert np.allclose(exchange_spectrum([0.8, 0.8, 1.3], signs=(1, 1, -1))[0], h.bell_energies())
    assert bell_energies(0.8, 0.8, -1.3) == h.bell_energies()


def test_relative_signs_narrow_candidates():
    h, t = ExchangeHamiltonian(0.8, 0.8, -1.3), 0.3
    chi = process_oracle(hamiltonian_channel(h, t))
    rel, absolute = exchange_relative_signs(chi, t, j_max=1.4)
    assert rel == {"yz": -1, "xz": -1, "xy": 1}
    assert absolute == {"x": 1}
    cands = exchange_spectrum([0.8, 0.8, 1.3], relative=rel)
    assert len(cands) == 2
    assert any(np.allclose(c, h.bell_energies()) for c in cands)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
    st.floats(0.1, 1.4), st.integers(200, 5000), st.integers(2, 50), st.integers(0, 2**32),
)
def test_sign_recovery_is_invariant_under_count_scaling(x, y, z, t, shots, k, seed):
    from dataclasses import replace

    if x * x + y * y + z * z < 1e-4:
        return
    h = SingleQubitHamiltonian((x, y, z))
    j_max = min(1.5 * h.magnitude, (math.pi / 2 - 1e-3) / t)
    ch = hamiltonian_channel(h, t)

    def signs(scale):
        def rec(kind):
            r = sample_outcomes(outcome_probabilities(PreparationConfig(kind), ch, t), shots, seed)
            return replace(r, counts=r.counts * scale, shots=r.shots * scale)

        bell = rec("BellZ")
        try:
            mags = estimate_direction_magnitudes(bell)
        except DegenerateTimeError:
            return "degenerate"
        from bellprobe.dcqd import normalizer_statistics_from_record

        sols = [solve_offdiagonal(normalizer_statistics_from_record(rec(kd)), bell) for kd in ("NonMaxZ", "NonMaxX", "NonMaxY")]
        try:
            return reconstruct_direction_signs(mags, sols, t, j_max).signs
        except InconsistencyError:
            return "inconsistent"

    base, scaled = signs(1), signs(k)
    if not {"inconsistent", "degenerate"} & {base, scaled}:
        assert base == scaled


@settings(max_examples=30, deadline=None)
@given(st.one_of(st.just(0.0), st.floats(1e-3, 3)), st.floats(0.01, 1.0))
def test_three_isotropic_estimates_agree(j, t):
    # below ~1e-3 the pair probabilities are O(1e-16) and sqrt amplifies round-off
    est = estimate_isotropic_coupling(double(ExchangeHamiltonian(j, j, j), t))
    assert max(est.components) - min(est.components) < 1e-10


def test_spectrum_examples():
    j = 0.7
    (iso,) = exchange_spectrum([j, j, j], signs=(1, 1, 1))
    assert sorted(iso) == pytest.approx(sorted([j, j, j, -3 * j]))
    (xy,) = exchange_spectrum([j, j, 0], signs=(1, 1, 1))
    assert sorted(xy) == pytest.approx(sorted([0, 0, 2 * j, -2 * j]))
