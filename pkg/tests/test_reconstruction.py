import math

import numpy as np
import pytest

from bptem import (BandSpec, ClosedFormSystem, DivergenceError,
                   InsufficientFiringsError, IQPair, IterConfig,
                   MeasurementSequence, ParameterError, PiecewiseConstant,
                   RankCollapseError, Signal, SystemSizeError, TemParams,
                   TimeGrid, VectorState, apocs, build_closed_form, encode,
                   evaluate_coefficients, gen_test_signal, lowpass_filter,
                   measurements, modulate, neumann_solution, operator_probe,
                   pcw_approx, pocs_bandlimited, project_data_bl,
                   residual_iq, select_gain_convention, sndr_db,
                   solve_closed_form)
from bptem.quadrature import IntervalQuadrature

F0 = 50.0


def recompose(state: VectorState, f0: float) -> np.ndarray:
    arg = 2.0 * np.pi * f0 * state.grid.times()
    return state.u_i * np.cos(arg) - state.u_q * np.sin(arg)


def random_state(grid, seed):
    rng = np.random.default_rng(seed)
    return VectorState(grid, rng.standard_normal(grid.n),
                       rng.standard_normal(grid.n))


def pair_norm(a: VectorState, b: VectorState) -> float:
    return math.sqrt(np.sum((a.u_i - b.u_i) ** 2) +
                     np.sum((a.u_q - b.u_q) ** 2))


class TestPiecewiseConstant:
    def test_evaluation_semantics(self):
        pcw = PiecewiseConstant(np.array([0.0, 1.0, 2.0]),
                                np.array([3.0, -1.0]))
        t = np.array([-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5])
        np.testing.assert_array_equal(pcw.evaluate(t),
                                      [0.0, 3.0, 3.0, -1.0, -1.0, 0.0, 0.0])

    def test_length_validation(self):
        with pytest.raises(ParameterError):
            PiecewiseConstant(np.array([0.0, 1.0]), np.array([1.0, 2.0]))


class TestPcwApprox:
    def test_constant_signal_recovers_the_constant(self):
        grid = TimeGrid(0.0, 1e-3, 1001)
        s = Signal(grid, np.full(grid.n, 1.5))
        p = TemParams(kappa=1.0, delta=1.0 / 120.0, b=3.0, c=2.0)
        f = encode(s, p)
        pcw = pcw_approx(f, measurements(f))
        np.testing.assert_allclose(pcw.values, 1.5, rtol=1e-11)

    def test_zero_signal_gives_zeros(self):
        grid = TimeGrid(0.0, 1e-3, 1001)
        s = Signal(grid, np.zeros(grid.n))
        p = TemParams(kappa=1.0, delta=1.0 / 120.0, b=3.0, c=2.0)
        f = encode(s, p)
        pcw = pcw_approx(f, measurements(f))
        assert np.max(np.abs(pcw.values)) <= 1e-9

    def test_values_are_interval_means(self, small):
        pcw = pcw_approx(small.firing, small.y)
        quad = IntervalQuadrature(small.grid, small.firing.times)
        means = quad.measure(small.x.values) / quad.durations
        np.testing.assert_allclose(pcw.values, means, atol=1e-4)

    def test_length_mismatch_rejected(self, small):
        with pytest.raises(ParameterError):
            pcw_approx(small.firing, MeasurementSequence(small.y.y[:-1]))


class TestProjectDataBl:
    def test_interval_integrals_match_measurements(self, small):
        rng = np.random.default_rng(12)
        u = Signal(small.grid, rng.standard_normal(small.grid.n))
        out = project_data_bl(u, small.firing, small.y)
        quad = IntervalQuadrature(small.grid, small.firing.times)
        np.testing.assert_allclose(quad.measure(out.values), small.y.y,
                                   atol=1e-8)

    def test_consistent_input_unchanged(self, small):
        rng = np.random.default_rng(13)
        u = Signal(small.grid, rng.standard_normal(small.grid.n))
        once = project_data_bl(u, small.firing, small.y)
        twice = project_data_bl(once, small.firing, small.y)
        assert np.max(np.abs(twice.values - once.values)) \
            <= 1e-10 * np.max(np.abs(once.values))

    def test_zero_input_reduces_to_interval_means(self, small):
        # projecting zero yields the interval-mean expansion; the dual
        # basis differs from plain indicators only near the breakpoints,
        # so compare at midpoints of the wider intervals
        zero = Signal(small.grid, np.zeros(small.grid.n))
        out = project_data_bl(zero, small.firing, small.y)
        times = small.firing.times
        durations = np.diff(times)
        means = small.y.y / durations
        mids = 0.5 * (times[:-1] + times[1:])
        idx = np.round((mids - small.grid.t_start) / small.grid.dt).astype(int)
        wide = durations >= 6 * small.grid.dt
        np.testing.assert_allclose(out.values[idx[wide]], means[wide],
                                   rtol=0.1, atol=1e-4)


class TestResidualIq:
    def test_zero_state_gives_initialization_pair(self, small):
        zero = VectorState(small.grid, np.zeros(small.grid.n),
                           np.zeros(small.grid.n))
        out = residual_iq(zero, small.firing, small.y, F0)
        quad = IntervalQuadrature(small.grid, small.firing.times)
        spread = quad.spread(small.y.y)
        arg = 2.0 * np.pi * F0 * small.grid.times()
        np.testing.assert_allclose(out.u_i, spread * np.cos(arg), atol=1e-12)
        np.testing.assert_allclose(out.u_q, -spread * np.sin(arg), atol=1e-12)

    def test_consistent_state_has_zero_residual(self, small):
        state = operator_probe("data", random_state(small.grid, 14),
                               f=small.firing, y=small.y, f0=F0)
        out = residual_iq(state, small.firing, small.y, F0)
        assert np.max(np.abs(out.u_i)) <= 1e-10
        assert np.max(np.abs(out.u_q)) <= 1e-10

    def test_projected_state_reproduces_measurements(self, small):
        state = operator_probe("data", random_state(small.grid, 15),
                               f=small.firing, y=small.y, f0=F0)
        quad = IntervalQuadrature(small.grid, small.firing.times)
        np.testing.assert_allclose(quad.measure(recompose(state, F0)),
                                   small.y.y, atol=1e-8)


class TestOperatorProbe:
    def test_bandlimit_fixes_bandlimited_states(self, small):
        rng = np.random.default_rng(16)
        ui = lowpass_filter(Signal(small.grid, rng.standard_normal(small.grid.n)),
                            15.0).values
        uq = lowpass_filter(Signal(small.grid, rng.standard_normal(small.grid.n)),
                            15.0).values
        w = VectorState(small.grid, ui, uq)
        out = operator_probe("bandlimit", w, cutoff=15.0)
        assert pair_norm(out, w) <= 1e-10 * w.norm()

    def test_data_projector_idempotent(self, small):
        w = random_state(small.grid, 17)
        once = operator_probe("data", w, f=small.firing, y=small.y, f0=F0)
        twice = operator_probe("data", once, f=small.firing, y=small.y, f0=F0)
        denom = math.sqrt(np.sum(once.u_i ** 2) + np.sum(once.u_q ** 2))
        assert pair_norm(twice, once) <= 1e-8 * denom

    def test_reflections_are_nonexpansive(self, small):
        w1, w2 = random_state(small.grid, 18), random_state(small.grid, 19)
        for kind, kwargs in (("data", dict(f=small.firing, y=small.y, f0=F0)),
                             ("bandlimit", dict(cutoff=15.0))):
            r1 = operator_probe(kind, w1, **kwargs)
            r2 = operator_probe(kind, w2, **kwargs)
            lhs = math.sqrt(
                np.sum((2 * r1.u_i - w1.u_i - 2 * r2.u_i + w2.u_i) ** 2) +
                np.sum((2 * r1.u_q - w1.u_q - 2 * r2.u_q + w2.u_q) ** 2))
            rhs = pair_norm(w1, w2)
            assert lhs <= (1.0 + 1e-8) * rhs

    def test_unknown_kind_rejected(self, small):
        with pytest.raises(ParameterError):
            operator_probe("reflect", random_state(small.grid, 20))
        with pytest.raises(ParameterError):
            operator_probe("data", random_state(small.grid, 20))


class TestGainConvention:
    def test_probe_selects_unit_gain(self, small):
        gain, note = select_gain_convention(small.firing, small.y, F0,
                                            small.grid)
        assert gain == 1.0
        assert "idempotency" in note

    def test_doubled_gain_is_not_idempotent(self, small):
        w = random_state(small.grid, 22)
        once = operator_probe("data", w, f=small.firing, y=small.y, f0=F0,
                              gain=2.0)
        twice = operator_probe("data", once, f=small.firing, y=small.y,
                               f0=F0, gain=2.0)
        denom = math.sqrt(np.sum(once.u_i ** 2) + np.sum(once.u_q ** 2))
        assert pair_norm(twice, once) > 1e-3 * denom


class TestApocs:
    def test_zero_measurements_give_zero(self, small):
        zeros = MeasurementSequence(np.zeros(len(small.y)))
        pair, signal, diag = apocs(small.firing, zeros, small.band,
                                   small.grid, IterConfig(max_iter=5))
        assert np.max(np.abs(signal.values)) <= 1e-12
        assert np.max(np.abs(pair.xi)) <= 1e-12

    def test_reconstructs_reference_signal(self, small):
        pair, signal, diag = apocs(small.firing, small.y, small.band,
                                   small.grid,
                                   IterConfig(max_iter=500, rel_tol=1e-9))
        assert diag.converged
        assert diag.gain == 1.0
        assert sndr_db(small.x, signal).sndr_db >= 40.0
        assert sndr_db(Signal(small.grid, small.iq.xi),
                       Signal(small.grid, pair.xi)).sndr_db >= 40.0
        assert sndr_db(Signal(small.grid, small.iq.xq),
                       Signal(small.grid, pair.xq)).sndr_db >= 40.0
        assert diag.monotone_after_first

    def test_round_trip_of_random_bandpass_signal(self, small):
        rng = np.random.default_rng(23)
        xi = lowpass_filter(
            Signal(small.grid, rng.standard_normal(small.grid.n)), 14.0).values
        xq = lowpass_filter(
            Signal(small.grid, rng.standard_normal(small.grid.n)), 14.0).values
        x = modulate(IQPair(small.grid, xi, xq), F0)
        scale = 1.9 / np.max(np.abs(x.values))
        x = Signal(small.grid, scale * x.values)
        f = encode(x, small.params)
        pair, signal, diag = apocs(f, measurements(f), small.band, small.grid,
                                   IterConfig(max_iter=500, rel_tol=1e-9))
        assert sndr_db(x, signal).sndr_db >= 30.0

    @pytest.mark.parametrize("f0", [15.0, 150.0])
    def test_recovers_across_carrier_frequencies(self, f0):
        band = BandSpec(f0, 30.0)
        grid = TimeGrid.for_band(band, -1.0, 1.0)
        x, _ = gen_test_signal(f0, 10.0, 2.5, grid)
        params = TemParams(kappa=1.0, delta=1.0 / 120.0, b=3.0, c=2.0)
        f = encode(x, params)
        _, signal, _ = apocs(f, measurements(f), band, grid,
                             IterConfig(max_iter=500, rel_tol=1e-9), gain=1.0)
        assert sndr_db(x, signal).sndr_db >= 30.0

    def test_unstable_gain_raises_divergence(self, small):
        with pytest.raises(DivergenceError, match="gain"):
            apocs(small.firing, small.y, small.band, small.grid,
                  IterConfig(max_iter=200), gain=5.0)

    def test_trajectory_recorded_on_request(self, small):
        _, _, diag = apocs(small.firing, small.y, small.band, small.grid,
                           IterConfig(max_iter=30, rel_tol=1e-12,
                                      record_trajectory=True))
        assert len(diag.residual_norms) == diag.iterations
        assert "operator_gain" in diag.as_dict()


class TestPocsBandlimited:
    def test_zero_measurements_give_zero(self, small):
        zeros = MeasurementSequence(np.zeros(len(small.y)))
        signal, diag = pocs_bandlimited(small.firing, zeros, 25.0, small.grid,
                                        IterConfig(max_iter=5))
        assert np.max(np.abs(signal.values)) == 0.0
        assert diag.iterations == 1

    def test_dense_encoding_of_a_tone(self):
        grid = TimeGrid(0.0, 1e-3, 4001)
        s = Signal(grid, 1.9 * np.cos(2 * np.pi * 10.0 * grid.times()))
        p = TemParams(kappa=1.0, delta=1.0 / 600.0, b=3.0, c=2.0)
        f = encode(s, p)
        out, diag = pocs_bandlimited(f, measurements(f), 15.0, grid,
                                     IterConfig(max_iter=500, rel_tol=1e-10))
        assert sndr_db(s, out).sndr_db >= 60.0

    def test_reference_signal_as_bandlimited(self, small):
        delta_bl = 1.0 / 260.0
        p = TemParams(kappa=1.0, delta=delta_bl, b=3.0, c=2.0)
        f = encode(small.x, p)
        out, diag = pocs_bandlimited(f, measurements(f), 65.0, small.grid,
                                     IterConfig(max_iter=500, rel_tol=1e-9))
        assert sndr_db(small.x, out).sndr_db >= 40.0
        assert diag.monotone_after_first

    def test_warns_when_bandwidth_exceeds_rate(self, small):
        with pytest.warns(UserWarning, match="not guaranteed"):
            pocs_bandlimited(small.firing, small.y, 40.0, small.grid,
                             IterConfig(max_iter=2))


class TestClosedForm:
    def test_empty_and_oversized_systems_rejected(self, small):
        empty = MeasurementSequence(np.zeros(0))
        with pytest.raises(InsufficientFiringsError):
            build_closed_form(small.firing, empty, small.band, small.grid)
        with pytest.raises(SystemSizeError):
            build_closed_form(small.firing, small.y, small.band, small.grid,
                              size_cap=10)

    def test_single_interval_entry_matches_direct_quadrature(self, small):
        two = small.firing.times[:2]
        from bptem import FiringSequence
        f2 = FiringSequence(two, small.params, small.firing.window)
        y2 = MeasurementSequence(small.y.y[:1])
        system = build_closed_form(f2, y2, small.band, small.grid)
        xi, xq = system.kernel(0)
        arg = 2.0 * np.pi * F0 * small.grid.times()
        integrand = xi * np.cos(arg) - xq * np.sin(arg)
        quad = IntervalQuadrature(small.grid, two)
        assert system.matrix[0, 0] == pytest.approx(
            quad.measure(integrand)[0], rel=1e-9)

    def test_spectrum_is_contractive_on_the_signal_subspace(self, small):
        system = build_closed_form(small.firing, small.y, small.band,
                                   small.grid)
        eigenvalues = np.linalg.eigvals(system.matrix)
        assert np.max(np.abs(eigenvalues.imag)) <= 1e-8
        significant = eigenvalues[np.abs(eigenvalues) > 1e-8].real
        assert np.max(np.abs(1.0 - significant)) < 1.0
        assert np.max(significant) <= 1.0 + 1e-9

    def test_zero_measurements_solve_to_zero(self, small):
        zeros = MeasurementSequence(np.zeros(len(small.y)))
        system = build_closed_form(small.firing, zeros, small.band,
                                   small.grid)
        pair = solve_closed_form(system)
        assert np.max(np.abs(pair.xi)) <= 1e-12
        assert np.max(np.abs(pair.xq)) <= 1e-12

    def test_rank_collapse_detected(self, small):
        system = build_closed_form(small.firing, small.y, small.band,
                                   small.grid)
        dead = ClosedFormSystem(grid=system.grid, band=system.band,
                                times=system.times,
                                matrix=np.zeros_like(system.matrix),
                                rhs=system.rhs)
        with pytest.raises(RankCollapseError):
            solve_closed_form(dead)

    def test_agrees_with_alternating_decoder(self, small):
        system = build_closed_form(small.firing, small.y, small.band,
                                   small.grid)
        direct = modulate(solve_closed_form(system), F0)
        _, iterated, _ = apocs(small.firing, small.y, small.band, small.grid,
                               IterConfig(max_iter=2000, rel_tol=1e-12))
        sel = slice(small.grid.n // 20, -small.grid.n // 20)
        rel = np.linalg.norm((direct.values - iterated.values)[sel]) / \
            np.linalg.norm(small.x.values[sel])
        assert rel <= 1e-3

    def test_truncated_series_approaches_the_pseudoinverse(self, small):
        system = build_closed_form(small.firing, small.y, small.band,
                                   small.grid)
        target = solve_closed_form(system)
        distances = []
        for order in (10, 50, 200):
            approx = neumann_solution(system, order)
            distances.append(math.sqrt(
                np.sum((approx.xi - target.xi) ** 2) +
                np.sum((approx.xq - target.xq) ** 2)))
        assert distances[0] > distances[1] > distances[2]

    def test_coefficient_evaluation_matches_kernel_columns(self, small):
        system = build_closed_form(small.firing, small.y, small.band,
                                   small.grid)
        k = len(small.y) // 2
        unit = np.zeros(system.size)
        unit[k] = 1.0
        pair = evaluate_coefficients(system, unit)
        xi, xq = system.kernel(k)
        np.testing.assert_allclose(pair.xi, xi, atol=1e-12)
        np.testing.assert_allclose(pair.xq, xq, atol=1e-12)


class TestVectorState:
    def test_validation(self):
        grid = TimeGrid(0.0, 1e-3, 10)
        with pytest.raises(ParameterError):
            VectorState(grid, np.zeros(9), np.zeros(10))
        with pytest.raises(ParameterError):
            VectorState(grid, np.full(10, np.inf), np.zeros(10))

    def test_norm_is_dt_weighted(self):
        grid = TimeGrid(0.0, 0.25, 4)
        w = VectorState(grid, np.ones(4), np.zeros(4))
        assert w.norm() == pytest.approx(1.0)
