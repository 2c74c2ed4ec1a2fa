use facilitrans::dynamics::{evolve_lindblad, run_schedule, RunOptions};
use facilitrans::hilbert::{
    basis_index, partial_trace, DensityMatrix, OccupationPattern, PureState, QuantumState,
};
use facilitrans::model::{
    build_pulse_hamiltonian, frame_switch_phase, ideal_nnn, plan_route, ChainGeometry, ModelParams,
    PulseSchedule,
};
use facilitrans::observables::{bell_fidelity_sequence, truth_table_fidelity};
use facilitrans::Complex;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn random_density(n: usize, seed: &[f64]) -> DensityMatrix<f64> {
    let d = 1 << n;
    let a = DMatrix::from_fn(d, d, |i, j| {
        let k = (i * d + j) % seed.len();
        Complex::new(seed[k] * ((i + 2 * j) as f64).sin(), seed[(k + 1) % seed.len()] * ((3 * i + j) as f64).cos())
    });
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    let m = m.map(|z| z / tr);
    let m = (&m + m.adjoint()).map(|z| z * 0.5);
    DensityMatrix::new(n, m).unwrap()
}

fn random_pure(n: usize, re: &[f64], im: &[f64]) -> PureState<f64> {
    let d = 1 << n;
    let v = DVector::from_fn(d, |i, _| Complex::new(re[i % re.len()] + 0.01, im[i % im.len()]));
    let v = &v / Complex::new(v.norm(), 0.0);
    PureState::new(n, v).unwrap()
}

fn params_strategy() -> impl Strategy<Value = ModelParams<f64>> {
    (4.0f64..30.0, 0.3f64..0.9, -0.4f64..0.4, -0.4f64..0.4, any::<bool>()).prop_map(|(v1, frac, d1, d2, nnn)| {
        ModelParams::new(v1, v1 * frac, d1, d2).with_nnn(nnn)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn basis_index_round_trips(n in 1usize..=10, idx in 0usize..1024) {
        let idx = idx % (1 << n);
        prop_assert_eq!(basis_index(&OccupationPattern::from_index(idx, n)), idx);
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(
        n in 2usize..=4,
        seed in prop::collection::vec(-1.0f64..1.0, 7),
        a in 1usize..=4,
        gap in 1usize..=3,
    ) {
        prop_assume!(a + gap <= n);
        let rho = random_density(n, &seed);
        let red = rho.partial_trace(a, a + gap).unwrap();
        prop_assert!((red.trace() - 1.0).abs() < 1e-12);
        prop_assert!(red.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn product_state_reduces_to_factor(bits in prop::collection::vec(0u8..=1, 2..=6), a in 1usize..=6, b in 1usize..=6) {
        let n = bits.len();
        prop_assume!(a < b && b <= n);
        let p = OccupationPattern::new(bits.clone()).unwrap();
        let red = partial_trace(&QuantumState::Pure(PureState::<f64>::basis(&p)), a, b).unwrap();
        let k = (bits[a - 1] as usize) * 2 + bits[b - 1] as usize;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == k && j == k { 1.0 } else { 0.0 };
                prop_assert!((red.matrix()[(i, j)] - Complex::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian(params in params_strategy(), n in 2usize..=6, which in 1u8..=2) {
        let g = ChainGeometry::matched(n, params.v1, params.v2).unwrap();
        let h = build_pulse_hamiltonian(&g, &params, which).unwrap();
        let m = h.matrix();
        prop_assert!((m - m.adjoint()).iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn undriven_hamiltonian_conserves_excitation_number(params in params_strategy(), n in 2usize..=6) {
        let g = ChainGeometry::matched(n, params.v1, params.v2).unwrap();
        let mut p = params.clone();
        p.omega = 0.0;
        // Ω = 0 is rejected by validation; build through the raw constructor
        let couplings = facilitrans::model::chain_couplings(&g, &params).unwrap();
        let h = facilitrans::model::hamiltonian_with_detuning(n, &p, &couplings, params.detuning(1));
        let m = h.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i.count_ones() != j.count_ones() {
                    prop_assert_eq!(m[(i, j)], Complex::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn frame_phase_is_unitary_and_keeps_populations(
        n in 1usize..=5,
        d1 in -30.0f64..30.0,
        d2 in -30.0f64..30.0,
        t in 0.0f64..100.0,
        re in prop::collection::vec(-1.0f64..1.0, 5),
        im in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let phase = frame_switch_phase(n, d1, d2, t);
        prop_assert!(phase.phases().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let psi = random_pure(n, &re, &im);
        let out = phase.apply_pure(&psi);
        for (a, b) in psi.site_populations().iter().zip(out.site_populations()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_routes_alternate(n in 2usize..=12, start in 1usize..=12, end in 1usize..=12) {
        prop_assume!(start <= n && end <= n && start != end);
        let g = ChainGeometry::<f64>::new(n, 1.0, 1.2).unwrap();
        let s = plan_route(&g, start, &[end]).unwrap();
        let idx = s.indices();
        prop_assert_eq!(idx.len(), start.abs_diff(end));
        prop_assert!(idx.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn reversals_repeat_one_token(n in 4usize..=10, start in 1usize..=10, out in 1usize..=4, back in 1usize..=4) {
        prop_assume!(start + out <= n && start + out > back);
        let g = ChainGeometry::<f64>::new(n, 1.0, 1.2).unwrap();
        let s = plan_route(&g, start, &[start + out, start + out - back]).unwrap();
        let idx = s.indices();
        let repeats = idx.windows(2).filter(|w| w[0] == w[1]).count();
        prop_assert_eq!(repeats, 1);
        prop_assert_eq!(idx[out - 1], idx[out]);
    }

    #[test]
    fn nnn_respects_suppression_bound(r1 in 0.5f64..3.0, frac in 1.001f64..2.0, c6 in 0.1f64..100.0) {
        let r2 = r1 * frac;
        let v1 = c6 / r1.powi(6);
        let v2 = c6 / r2.powi(6);
        let nnn = ideal_nnn(r1, r2, c6);
        prop_assert!(nnn / v2 <= v1 / (64.0 * v2) + 1e-15);
    }

    #[test]
    fn unitary_norm_drift_is_negligible(params in params_strategy(), tokens in prop::collection::vec(1u8..=2, 10)) {
        let g = ChainGeometry::matched(5, params.v1, params.v2).unwrap();
        let s = PulseSchedule::from_indices(&tokens).unwrap();
        let input: QuantumState<f64> = PureState::basis(&OccupationPattern::single_excitation(5, 2).unwrap()).into();
        let tr = run_schedule(&input, &s, &g, &params, &RunOptions::default().with_samples(1)).unwrap();
        for state in &tr.boundary_states {
            if let QuantumState::Pure(p) = state {
                prop_assert!((p.norm() - 1.0).abs() < 1e-10);
            }
        }
        prop_assert!(tr.populations.iter().flatten().all(|x| (-1e-12..=1.0 + 1e-12).contains(x)));
    }

    #[test]
    fn truth_table_in_unit_interval(params in params_strategy()) {
        let g = ChainGeometry::matched(5, params.v1, params.v2).unwrap();
        let s = PulseSchedule::from_indices(&[1, 2, 1]).unwrap();
        let f = truth_table_fidelity(&g, &params, &s, 1, 4, &RunOptions::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn truth_table_is_mirror_symmetric(params in params_strategy(), out in 2usize..=6) {
        // even N: the gap pattern r1 r2 … r1 is its own mirror image
        let n = 6;
        let g = ChainGeometry::matched(n, params.v1, params.v2).unwrap();
        let fwd = plan_route(&g, 1, &[out]).unwrap();
        let back = plan_route(&g, n, &[n + 1 - out]).unwrap();
        let a = truth_table_fidelity(&g, &params, &fwd, 1, out, &RunOptions::default()).unwrap();
        let b = truth_table_fidelity(&g, &params, &back, n, n + 1 - out, &RunOptions::default()).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn bell_fidelities_bounded(params in params_strategy()) {
        let g = ChainGeometry::matched(6, params.v1, params.v2).unwrap();
        let s = PulseSchedule::from_indices(&[1, 2]).unwrap();
        let f = bell_fidelity_sequence(3, &s, &g, &params, &RunOptions::default().with_samples(1)).unwrap();
        prop_assert_eq!(f.len(), 2);
        prop_assert!(f.iter().all(|x| x.fidelity <= 1.0 + 1e-9 && x.fidelity >= -1e-9));
    }

    #[test]
    fn lindblad_keeps_density_valid(params in params_strategy(), gd in 0.0f64..0.05, gp in 0.0f64..0.05) {
        let g = ChainGeometry::matched(3, params.v1, params.v2).unwrap();
        let h = build_pulse_hamiltonian(&g, &params, 1).unwrap();
        let rho = PureState::<f64>::basis(&OccupationPattern::parse("100").unwrap()).to_density();
        let out = evolve_lindblad(&rho, &h, gd, gp, params.pulse_period(), 1e-8).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-8);
        prop_assert!(out.hermiticity_error() < 1e-9);
        prop_assert!(out.min_eigenvalue() > -1e-7);
    }
}

#[test]
fn undriven_populations_stay_constant() {
    let g = ChainGeometry::matched(5, 20.0, 10.0).unwrap();
    let mut p = ModelParams::new(20.0, 10.0, -0.133, -0.033);
    p.omega = 1e-300;
    let s = PulseSchedule::from_indices(&[1, 2, 1, 2]).unwrap();
    let input: QuantumState<f64> = PureState::basis(&OccupationPattern::parse("10110").unwrap()).into();
    let tr = run_schedule(&input, &s, &g, &p, &RunOptions::default().with_samples(5)).unwrap();
    for pops in &tr.populations {
        for (a, b) in pops.iter().zip(&tr.populations[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn lindblad_tolerance_halving_converges() {
    let g = ChainGeometry::matched(4, 20.0, 10.0).unwrap();
    let p = ModelParams::new(20.0, 10.0, -0.133, -0.033).with_rates(0.002, 0.004);
    let s = PulseSchedule::from_indices(&[1, 2, 1]).unwrap();
    let input: QuantumState<f64> = PureState::basis(&OccupationPattern::single_excitation(4, 1).unwrap()).into();
    let tol = 1e-8;
    let run = |tol: f64| {
        let opts = RunOptions { samples_per_pulse: 1, lindblad_tol: tol, frame_correction: true };
        run_schedule(&input, &s, &g, &p, &opts).unwrap().populations.last().unwrap().clone()
    };
    let a = run(tol);
    let b = run(tol / 2.0);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 10.0 * tol, "{x} vs {y}");
    }
}

#[test]
fn vacuum_response_matches_reference() {
    // pair creation from |0…0⟩ is two-photon resonant during type-2 pulses
    // (−2Δ₂ + V₁ ≈ 0); reference values from an independent expm-based run
    let g = ChainGeometry::matched(7, 20.0, 10.0).unwrap();
    let p = ModelParams::new(20.0, 10.0, -0.133, -0.033);
    let s = PulseSchedule::from_indices(&[1, 2, 1, 2, 1]).unwrap();
    let input: QuantumState<f64> = PureState::basis(&OccupationPattern::vacuum(7).unwrap()).into();
    let tr = run_schedule(&input, &s, &g, &p, &RunOptions::default().with_samples(200)).unwrap();
    let reference = [0.060995, 0.097697, 0.100651, 0.108257, 0.068739, 0.051125, 0.031083];
    for (a, b) in tr.populations.last().unwrap().iter().zip(reference) {
        assert!((a - b).abs() < 2e-6, "{a} vs {b}");
    }
    let max_site = tr.populations.iter().flatten().fold(0.0f64, |m, x| m.max(*x));
    let max_total = tr.populations.iter().map(|v| v.iter().sum::<f64>()).fold(0.0f64, f64::max);
    assert!((max_site - 0.111897).abs() < 1e-5, "{max_site}");
    assert!((max_total - 0.529374).abs() < 1e-5, "{max_total}");
}
