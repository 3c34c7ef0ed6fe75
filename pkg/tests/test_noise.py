import math

import numpy as np
import pytest

from latticegate import (CalibrationModel, DomainError, IDEAL, NoiseModel,
                         apply_pulse_error, fit_sinusoid, ramsey_scan, run,
                         sample_vacancies)
from latticegate.noise import (Realization, draw_realization, ensemble_average,
                               make_rng, member_rngs, member_seed_sequences,
                               scale_rotations)
from latticegate.sequence import build_return_sequence

CAL = CalibrationModel(slope=1.0)
ALPHA = np.linspace(0.0, 2 * math.pi, 16, endpoint=False)


class TestNoiseModel:
    def test_validation(self):
        with pytest.raises(DomainError):
            NoiseModel(fill_probability=1.2)
        with pytest.raises(DomainError):
            NoiseModel(pulse_area_error=-1.0)
        with pytest.raises(DomainError):
            NoiseModel(dephasing_sigma=-0.1)
        with pytest.raises(DomainError):
            NoiseModel(ensemble_size=0)

    def test_round_trip_and_ideal_flag(self):
        m = NoiseModel(fill_probability=0.8, dephasing_sigma=0.3, ensemble_size=5,
                       seed=42)
        d = m.to_dict()
        assert d["rng"] == "numpy.random.Philox"
        assert NoiseModel.from_dict(d) == m
        assert not m.is_ideal
        assert IDEAL.is_ideal


class TestPulseError:
    def test_zero_is_identity(self):
        seq = build_return_sequence(1e-4, 0.3, 4)
        assert apply_pulse_error(seq, 0.0) == seq

    def test_areas_scaled_systematically(self):
        seq = build_return_sequence(1e-4, 0.3, 4)
        scaled = apply_pulse_error(seq, 0.05)
        for a, b in zip(seq.instructions, scaled.instructions):
            if a.kind == "rotate":
                assert b.area == pytest.approx(a.area * 1.05, rel=1e-15)
            else:
                assert a == b

    def test_invalid_epsilon(self):
        with pytest.raises(DomainError):
            apply_pulse_error(build_return_sequence(0.0, 0.0, 2), -1.0)

    def test_scale_rotations_count_mismatch(self):
        seq = build_return_sequence(1e-4, 0.3, 2)
        with pytest.raises(ValueError):
            scale_rotations(seq, [1.0])


class TestVacancies:
    def test_extremes(self):
        assert sample_vacancies(20, 1.0, 3).all()
        assert not sample_vacancies(20, 0.0, 3).any()

    def test_deterministic(self):
        a = sample_vacancies(50, 0.6, 123)
        b = sample_vacancies(50, 0.6, 123)
        assert np.array_equal(a, b)

    def test_isolated_atom_fraction_matches_combinatorics(self):
        # interior sites of a chain are occupied-and-isolated w.p. p(1-p)^2
        p = 0.9
        n, trials = 200, 400
        count = 0
        for s in range(trials):
            mask = sample_vacancies(n, p, s)
            interior = mask[1:-1] & ~mask[:-2] & ~mask[2:]
            count += int(interior.sum())
        frac = count / (trials * (n - 2))
        expect = p * (1 - p) ** 2
        stderr = math.sqrt(expect * (1 - expect) / (trials * (n - 2)))
        assert abs(frac - expect) < 3 * stderr

    def test_no_bonds_across_vacancies(self):
        seq = build_return_sequence(1.0, 0.0, 8).with_fill_mask(
            [1, 1, 0, 1, 1, 1, 0, 1])
        st = run(seq, CAL)
        # occupied ranks: sites 0,1,3,4,5,7 -> bonds only between adjacent sites
        occupied = [0, 1, 3, 4, 5, 7]
        for x, y in st.bond_pairs():
            assert occupied[y] - occupied[x] == 1


class TestDephasing:
    def test_sigma_zero_leaves_visibility(self):
        noise = NoiseModel(dephasing_sigma=0.0, ensemble_size=4, seed=1)
        v = fit_sinusoid(ramsey_scan(3, 0.0, CAL, noise, ALPHA)).visibility
        assert v == pytest.approx(1.0, abs=1e-9)

    def test_gaussian_characteristic_function(self):
        # ensemble-mean fringe amplitude follows exp(-sigma^2/2)
        sigma = 0.8
        noise = NoiseModel(dephasing_sigma=sigma, ensemble_size=1000, seed=77)
        v = fit_sinusoid(ramsey_scan(4, 0.0, CAL, noise, ALPHA)).visibility
        assert v == pytest.approx(math.exp(-sigma**2 / 2), abs=0.02)

    def test_ceiling_at_55_percent(self):
        sigma = math.sqrt(-2 * math.log(0.55))
        noise = NoiseModel(dephasing_sigma=sigma, ensemble_size=600, seed=4)
        v = fit_sinusoid(ramsey_scan(4, 2 * math.pi, CAL, noise, ALPHA,
                                     boundary="ring")).visibility
        assert v == pytest.approx(0.55, abs=0.03)


class TestLoss:
    def test_offset_unchanged_and_visibility_scaled(self):
        loss = 0.08
        noise = NoiseModel(loss_per_atom=loss, ensemble_size=500, seed=9)
        fit = fit_sinusoid(ramsey_scan(6, 0.0, CAL, noise, ALPHA))
        # analytic mixture: kept atoms carry the full fringe, lost atoms 1/2
        assert fit.offset == pytest.approx(0.5, abs=5e-3)
        assert fit.visibility == pytest.approx(1.0 - loss, abs=0.02)


class TestEnsemble:
    def test_single_member_ideal_equals_noiseless(self):
        ideal = ramsey_scan(4, 1.1, CAL, None, ALPHA)
        one = ramsey_scan(4, 1.1, CAL, NoiseModel(ensemble_size=1, seed=0), ALPHA)
        assert np.array_equal(ideal.p_one, one.p_one)

    def test_seed_reproducibility_bit_for_bit(self):
        noise = NoiseModel(fill_probability=0.8, dephasing_sigma=0.4,
                           loss_per_atom=0.05, ensemble_size=20, seed=321)
        a = ramsey_scan(5, 0.9, CAL, noise, ALPHA)
        b = ramsey_scan(5, 0.9, CAL, noise, ALPHA)
        assert np.array_equal(a.p_one, b.p_one)

    def test_member_seed_splitting_stable(self):
        seqs1 = [ss.generate_state(2) for ss in member_seed_sequences(5, 3)]
        seqs2 = [ss.generate_state(2) for ss in member_seed_sequences(5, 3)]
        for a, b in zip(seqs1, seqs2):
            assert np.array_equal(a, b)

    def test_stderr_scales_inverse_sqrt(self):
        sigma = 0.6

        def member(real: Realization) -> np.ndarray:
            return np.array([math.cos(real.z_phases[0])])

        results = {}
        for m in (100, 400):
            model = NoiseModel(dephasing_sigma=sigma, ensemble_size=m, seed=13)
            _, stderr = ensemble_average(model, 1, 0.0, 0, member)
            results[m] = stderr[0]
        ratio = results[100] / results[400]
        assert abs(ratio - 2.0) < 0.4  # within 20%

    def test_draw_realization_structure(self):
        model = NoiseModel(fill_probability=0.5, loss_per_atom=0.3,
                           dephasing_sigma=0.2, pulse_area_error=0.04, seed=8)
        real = draw_realization(model, 10, 1e-4, 3, make_rng(8))
        assert len(real.fill_mask) == 10
        assert len(real.pulse_factors) == 3
        assert all(f == pytest.approx(1.04) for f in real.pulse_factors)
        # kept is a subset of filled
        assert all(not k or f for f, k in zip(real.fill_mask, real.kept_mask))
        assert len(real.z_phases) == sum(real.kept_mask)

    def test_dephasing_rate_adds_in_quadrature(self):
        model = NoiseModel(dephasing_sigma=0.3, dephasing_rate=1000.0, seed=2)
        t = 2e-3
        draws = [draw_realization(model, 1, t, 0, rng).z_phases[0]
                 for rng in member_rngs(NoiseModel(dephasing_sigma=0.3,
                                                   dephasing_rate=1000.0,
                                                   ensemble_size=4000, seed=2))]
        want = math.hypot(0.3, 1000.0 * t)
        assert np.std(draws) == pytest.approx(want, rel=0.05)


class TestVacancyVisibilityFloor:
    def test_isolated_atoms_restore_contrast_at_pi(self):
        noise = NoiseModel(fill_probability=0.9, ensemble_size=200, seed=6)
        fit = fit_sinusoid(ramsey_scan(12, math.pi, CAL, noise, ALPHA,
                                       boundary="ring"))
        # ideal chain gives zero; isolated atoms leave a nonzero floor ~ (1-p)^2
        assert fit.visibility > 0.002
        assert fit.visibility == pytest.approx(0.01, abs=0.012)
