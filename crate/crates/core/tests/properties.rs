//! Property tests for the invariants that hold over random inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use qwitness::bounds::{chi_theta, mub_uncertainty_lhs, separable_bound_m, unitary_amplitude_pair, DEFAULT_TOL};
use qwitness::linalg::{operator_norm, ComplexMatrix};
use qwitness::measure::{estimate_c, sample_joint_basis};
use qwitness::multipartite::{cluster_pair_test, ghz_pair_test};
use qwitness::noise::{noisy_state, NoiseFamily};
use qwitness::qudit::{bell_vector, mes, pauli_x, pauli_z, root_of_unity};
use qwitness::witness::{evaluate_witnesses, WitnessOperators};
use qwitness::{BasisLabel, QuditState, C64};

fn unit_vector(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..len)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn product_state(d: usize, n: usize, rng: &mut ChaCha8Rng) -> QuditState {
    let factors: Vec<QuditState> = (0..n)
        .map(|_| QuditState::pure(d, 1, unit_vector(d, rng)).unwrap())
        .collect();
    QuditState::product(&factors).unwrap()
}

fn random_mixture(states: &[QuditState], rng: &mut ChaCha8Rng) -> QuditState {
    let raw: Vec<f64> = states.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let comps: Vec<(f64, &QuditState)> = raw.iter().map(|w| w / total).zip(states).collect();
    QuditState::mixture(&comps).unwrap()
}

fn bound(d: usize) -> f64 {
    separable_bound_m(d, DEFAULT_TOL).unwrap().m_value
}

/// Random mixed state of rank up to `dim`.
fn random_density(d: usize, parties: usize, rng: &mut ChaCha8Rng) -> QuditState {
    let dim = d.pow(parties as u32);
    let rank = rng.random_range(1..=dim);
    let pures: Vec<QuditState> = (0..rank)
        .map(|_| QuditState::pure(d, parties, unit_vector(dim, rng)).unwrap())
        .collect();
    random_mixture(&pures, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weyl_commutation(d in 2usize..=12, l in 0usize..12, m in 0usize..12) {
        let (l, m) = (l % d, m % d);
        let zm = pauli_z(d).unwrap().pow(m);
        let xl = pauli_x(d).unwrap().pow(l);
        let lhs = &zm * &xl;
        let rhs = (&xl * &zm).scale(root_of_unity(d, (l * m) as i64));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn uncertainty_relation_holds(seed in any::<u64>(), d in 2usize..=9, theta in 0.0f64..=std::f64::consts::FRAC_PI_2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = QuditState::pure(d, 1, unit_vector(d, &mut rng)).unwrap();
        let (z, x) = unitary_amplitude_pair(&state).unwrap();
        let lhs = z.norm() * theta.cos() + x.norm() * theta.sin();
        let norm = operator_norm(&chi_theta(d, theta, None).unwrap()).unwrap();
        prop_assert!(lhs <= norm + 1e-9);
        prop_assert!(z.norm_sqr() + x.norm_sqr() <= bound(d) + 1e-9);
        prop_assert!(mub_uncertainty_lhs(&state).unwrap() <= 1.0 + 1.0 / d as f64 + 1e-9);
    }

    #[test]
    fn swapping_z_and_x_mirrors_theta(d in 2usize..=10, theta in 0.0f64..=std::f64::consts::FRAC_PI_2) {
        let z = pauli_z(d).unwrap();
        let x = pauli_x(d).unwrap();
        let swapped = &(&x + &x.adjoint()).scale_real(0.5 * theta.cos())
            + &(&z + &z.adjoint()).scale_real(0.5 * theta.sin());
        let mirrored = chi_theta(d, std::f64::consts::FRAC_PI_2 - theta, None).unwrap();
        let diff = operator_norm(&swapped).unwrap() - operator_norm(&mirrored).unwrap();
        prop_assert!(diff.abs() < 1e-9);
    }

    #[test]
    fn separable_states_never_violate(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=2 * d);
        let parts: Vec<QuditState> = (0..k).map(|_| product_state(d, 2, &mut rng)).collect();
        let rho = random_mixture(&parts, &mut rng);
        let report = WitnessOperators::new(d).unwrap().evaluate(&rho, bound(d)).unwrap();
        prop_assert!(report.c_margin <= 1e-9, "c margin {}", report.c_margin);
        prop_assert!(report.r_margin <= 1e-9, "r margin {}", report.r_margin);
        prop_assert!(!report.entangled());
    }

    #[test]
    fn witness_expectations_are_real(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(d, 2, &mut rng);
        let ops = WitnessOperators::new(d).unwrap();
        prop_assert!(rho.expectation(&ops.c).im.abs() < 1e-10);
        prop_assert!(rho.expectation(&ops.r).im.abs() < 1e-10);
    }

    #[test]
    fn fraction_bound_is_sound_on_bell_diagonal_states(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Dirichlet-like weights, sometimes concentrated on the MES
        let mut w: Vec<f64> = (0..d * d).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
        w[0] *= rng.random_range(1.0..(4.0 * (d * d) as f64));
        let total: f64 = w.iter().sum();
        let pures: Vec<QuditState> = (0..d * d)
            .map(|i| QuditState::pure(d, 2, bell_vector(d, i / d, i % d).unwrap()).unwrap())
            .collect();
        let comps: Vec<(f64, &QuditState)> = w.iter().map(|x| x / total).zip(&pures).collect();
        let rho = QuditState::mixture(&comps).unwrap();
        let fidelity = rho.expectation(&ComplexMatrix::outer(&bell_vector(d, 0, 0).unwrap())).re;
        let report = evaluate_witnesses(&rho, &separable_bound_m(d, DEFAULT_TOL).unwrap()).unwrap();
        prop_assert!(fidelity >= report.mes_fraction_lb - 1e-9, "{fidelity} < {}", report.mes_fraction_lb);
        // Schmidt certificate never overshoots what the true fraction allows
        let allowed = (1..=d).filter(|&k| fidelity > (k as f64 - 1.0) / d as f64 - 1e-9).max().unwrap();
        prop_assert!(report.schmidt_lb <= allowed);
    }

    #[test]
    fn family_expectations_rise_with_p(d in 2usize..=6, p in 0.0f64..0.99, dp in 0.001f64..0.01) {
        let ops = WitnessOperators::new(d).unwrap();
        for family in NoiseFamily::ALL {
            let lo = ops.values(&noisy_state(d, family, p).unwrap()).unwrap();
            let hi = ops.values(&noisy_state(d, family, (p + dp).min(1.0)).unwrap()).unwrap();
            prop_assert!(hi.0 >= lo.0 - 1e-12 && hi.1 >= lo.1 - 1e-12);
        }
    }

    #[test]
    fn product_and_mixture_pair_tests_stay_below_bound(seed in any::<u64>(), d in 2usize..=5, n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = bound(d);
        let parts: Vec<QuditState> = (0..3).map(|_| product_state(d, n, &mut rng)).collect();
        let mix = random_mixture(&parts, &mut rng);
        for state in parts.iter().chain(std::iter::once(&mix)) {
            for site in 2..=n {
                let (wg, vg) = ghz_pair_test(state, site, m).unwrap();
                let (wc, vc) = cluster_pair_test(state, site, m).unwrap();
                prop_assert!(wg <= m + 1e-9 && !vg, "ghz {wg} > {m}");
                prop_assert!(wc <= m + 1e-9 && !vc, "cluster {wc} > {m}");
            }
        }
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), d in 2usize..=5, shots in 1u64..5000) {
        let rho = noisy_state(d, NoiseFamily::Isotropic, 0.6).unwrap();
        for basis in [BasisLabel::ZBasis, BasisLabel::XBasis] {
            let a = sample_joint_basis(&rho, basis, shots, seed).unwrap();
            let b = sample_joint_basis(&rho, basis, shots, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.counts.iter().sum::<u64>(), shots);
        }
    }
}

#[test]
fn qubit_pair_test_is_zz_plus_xx() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = pauli_z(2).unwrap();
    let x = pauli_x(2).unwrap();
    let w = &qwitness::linalg::tensor(&z, &z).unwrap() + &qwitness::linalg::tensor(&x, &x).unwrap();
    assert!((bound(2) - 1.0).abs() < 1e-9);
    for _ in 0..50 {
        let rho = random_density(2, 2, &mut rng);
        let (value, _) = ghz_pair_test(&rho, 2, 1.0).unwrap();
        assert!((value - rho.expectation(&w).re.abs()).abs() < 1e-12);
    }
}

/// ĉ converges to the exact value, staying within 5 SE at every size.
#[test]
fn c_estimator_is_consistent() {
    let d = 3;
    let rho = noisy_state(d, NoiseFamily::PsiHalfShift, 0.7).unwrap();
    let exact = WitnessOperators::new(d).unwrap().values(&rho).unwrap().0;
    let mut mean_errors = Vec::new();
    for shots in [1_000u64, 10_000, 100_000, 1_000_000] {
        let reps = if shots == 1_000_000 { 20 } else { 100 };
        let mut inside = 0;
        let mut err_sum = 0.0;
        for rep in 0..reps {
            let z = sample_joint_basis(&rho, BasisLabel::ZBasis, shots, 7_000 + rep).unwrap();
            let x = sample_joint_basis(&rho, BasisLabel::XBasis, shots, 7_000 + rep).unwrap();
            let (c, se) = estimate_c(&z, &x).unwrap();
            inside += ((c - exact).abs() <= 5.0 * se) as u32;
            err_sum += (c - exact).abs();
        }
        assert!(inside as f64 >= 0.95 * reps as f64, "{shots} shots: {inside}/{reps} within 5 SE");
        mean_errors.push(err_sum / reps as f64);
    }
    for w in mean_errors.windows(2) {
        assert!(w[1] < w[0], "mean error did not shrink: {mean_errors:?}");
    }
}

#[test]
fn c_estimator_is_unbiased() {
    let d = 4;
    let rho = noisy_state(d, NoiseFamily::PhiUnitShift, 0.55).unwrap();
    let exact = WitnessOperators::new(d).unwrap().values(&rho).unwrap().0;
    let reps = 1000;
    let values: Vec<f64> = (0..reps)
        .map(|rep| {
            let z = sample_joint_basis(&rho, BasisLabel::ZBasis, 1000, rep).unwrap();
            let x = sample_joint_basis(&rho, BasisLabel::XBasis, 1000, rep).unwrap();
            estimate_c(&z, &x).unwrap().0
        })
        .collect();
    let mean = values.iter().sum::<f64>() / reps as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let sem = (var / reps as f64).sqrt();
    assert!((mean - exact).abs() <= 5.0 * sem, "mean {mean} vs exact {exact} (sem {sem})");
}

#[test]
fn mes_sampling_hits_only_correlated_cells() {
    for d in 2..=6 {
        let phi = mes(d).unwrap();
        let z = sample_joint_basis(&phi, BasisLabel::ZBasis, 3000, 11).unwrap();
        let x = sample_joint_basis(&phi, BasisLabel::XBasis, 3000, 11).unwrap();
        for j in 0..d {
            for k in 0..d {
                if j != k {
                    assert_eq!(z.count(j, k), 0);
                }
                if (j + k) % d != 0 {
                    assert_eq!(x.count(j, k), 0);
                }
            }
        }
    }
}
