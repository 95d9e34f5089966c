//! Independent re-derivations of library results by different routes.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use bellswitch_core::interference::{bsm_signature, BeamSplitterKind, BeamSplitterModel};
use bellswitch_core::linalg::{self, c, Mat4, C64};
use bellswitch_core::measurement::counts::{sample_coincidences, CountingParams};
use bellswitch_core::metrics::{chsh_max, spin_flip};
use bellswitch_core::{concurrence, fidelity, BellState, DensityMatrix};

fn assert_matches_enumerator(rho: &DensityMatrix, bs: &BeamSplitterModel) {
    let d = common::fock::max_deviation(rho, bs);
    assert!(d < 1e-10, "{:?}: deviation {d:e}", bs.kind);
}

#[test]
fn bsm_matches_fock_enumerator_on_bell_states() {
    for kind in BeamSplitterKind::ALL {
        let bs = BeamSplitterModel::of_kind(kind);
        for bell in BellState::ALL {
            assert_matches_enumerator(&bell.state().into(), &bs);
        }
    }
}

#[test]
fn bsm_matches_fock_enumerator_on_random_states() {
    let skewed = BeamSplitterModel { kind: BeamSplitterKind::PmFiber, phase_h: 0.3, phase_v: -1.1, ratio: 0.37 };
    for seed in 0..50 {
        let rho = common::random_density(1000 + seed, 1 + (seed as usize % 4));
        for bs in [BeamSplitterModel::of_kind(BeamSplitterKind::IdealSymmetric), BeamSplitterModel::of_kind(BeamSplitterKind::Dielectric), skewed] {
            assert_matches_enumerator(&rho, &bs);
        }
    }
}

#[test]
fn bell_signatures_on_symmetric_splitter() {
    let bs = BeamSplitterModel::default();
    let psi_minus = bsm_signature(&BellState::PsiMinus.state().into(), &bs).unwrap();
    assert!((psi_minus.cross_port() - 1.0).abs() < 1e-12);
    let psi_plus = bsm_signature(&BellState::PsiPlus.state().into(), &bs).unwrap();
    assert!((psi_plus.same_port() - 1.0).abs() < 1e-12);
    for kind in [BellState::PhiPlus, BellState::PhiMinus] {
        let s = bsm_signature(&kind.state().into(), &bs).unwrap();
        assert!(s.same_port() + s.cross_port() < 1e-12, "{kind}: {s:?}");
    }
}

#[test]
fn uniform_bell_mixture_gives_quarter_cross_port_signature() {
    let mut m = Mat4::zeros();
    for kind in BellState::ALL {
        m += DensityMatrix::from(kind.state()).matrix() * c(0.25, 0.0);
    }
    let rho = DensityMatrix::new(m).unwrap();
    let s = bsm_signature(&rho, &BeamSplitterModel::default()).unwrap();
    assert!((s.cross_port() - 0.25).abs() < 1e-12);
    assert!((s.same_port() - 0.25).abs() < 1e-12);
}

// ---------------------------------------------------------------------------
// Concurrence from the roots of the characteristic polynomial of ρρ̃.

/// Coefficients c₀..c₄ of det(λI − M) = Σ c_k λ^k by Faddeev–LeVerrier.
fn characteristic_polynomial(m: &Mat4) -> [C64; 5] {
    let mut coeffs = [C64::new(0.0, 0.0); 5];
    coeffs[4] = c(1.0, 0.0);
    let mut mk = Mat4::zeros();
    for k in 1..=4 {
        mk = m * (mk + Mat4::identity() * coeffs[5 - k]);
        coeffs[4 - k] = -mk.trace() / c(k as f64, 0.0);
    }
    coeffs
}

/// All roots of a monic quartic by Durand–Kerner iteration.
fn quartic_roots(coeffs: &[C64; 5]) -> [C64; 4] {
    let eval = |z: C64| coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a);
    let seed = c(0.4, 0.9);
    let mut roots: [C64; 4] = std::array::from_fn(|k| seed.powu(k as u32));
    for _ in 0..500 {
        let prev = roots;
        for i in 0..4 {
            let mut denom = c(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            roots[i] -= eval(roots[i]) / denom;
        }
        if roots.iter().zip(&prev).all(|(a, b)| (a - b).norm() < 1e-15) {
            break;
        }
    }
    roots
}

fn concurrence_oracle(rho: &DensityMatrix) -> f64 {
    let r = rho.matrix() * spin_flip(rho.matrix());
    let roots = quartic_roots(&characteristic_polynomial(&r));
    let mut l: Vec<f64> = roots.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

#[test]
fn concurrence_matches_polynomial_root_oracle() {
    // Full-rank states keep the four roots distinct, where Durand–Kerner
    // converges quadratically.
    for seed in 0..40 {
        let rho = common::random_density(2000 + seed, 4);
        let (a, b) = (concurrence(&rho), concurrence_oracle(&rho));
        assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn concurrence_of_pure_states_is_twice_the_determinant() {
    for seed in 0..40 {
        let rho = common::random_density(2500 + seed, 1);
        let (_, vectors) = linalg::eigh(rho.matrix());
        let v: [C64; 4] = std::array::from_fn(|r| vectors[(r, 3)]);
        let closed = 2.0 * (v[0] * v[3] - v[1] * v[2]).norm();
        assert!((concurrence(&rho) - closed).abs() < 1e-7, "seed {seed}");
    }
    for p in [0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
        let rho = DensityMatrix::werner(&BellState::PsiMinus.state(), p).unwrap();
        let closed = ((3.0 * p - 1.0) / 2.0).max(0.0);
        assert!((concurrence(&rho) - closed).abs() < 1e-7, "p {p}");
    }
}

// ---------------------------------------------------------------------------
// Maximal CHSH value: closed form versus a search over linear analyzers.

/// E(α, β) for linear polarizers from the four coincidence projections.
fn correlation_by_projection(rho: &DensityMatrix, alpha: f64, beta: f64) -> f64 {
    let projector = |deg: f64| {
        let v = bellswitch_core::jones::linear_polarization(deg);
        bellswitch_core::linalg::Mat2::new(v[0] * v[0].conj(), v[0] * v[1].conj(), v[1] * v[0].conj(), v[1] * v[1].conj())
    };
    let p = |a: f64, b: f64| linalg::trace_product_re(rho.matrix(), &linalg::kron(&projector(a), &projector(b)));
    p(alpha, beta) + p(alpha + 90.0, beta + 90.0) - p(alpha, beta + 90.0) - p(alpha + 90.0, beta)
}

/// max over linear settings: the signal angles on a 1° grid; for each pair
/// the best idler angles follow from E being sinusoidal in 2β.
fn chsh_linear_grid(rho: &DensityMatrix) -> f64 {
    let fringe: Vec<[f64; 2]> = (0..180)
        .map(|a| {
            let a = a as f64;
            [correlation_by_projection(rho, a, 0.0), correlation_by_projection(rho, a, 45.0)]
        })
        .collect();
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let mut best = 0.0_f64;
    for u in &fringe {
        for w in &fringe {
            let s = norm([u[0] + w[0], u[1] + w[1]]) + norm([u[0] - w[0], u[1] - w[1]]);
            best = best.max(s);
        }
    }
    best
}

#[test]
fn horodecki_bound_dominates_linear_search() {
    for seed in 0..10 {
        let rho = common::random_density(3000 + seed, 2);
        assert!(chsh_linear_grid(&rho) <= chsh_max(&rho) + 1e-9, "seed {seed}");
    }
}

#[test]
fn horodecki_bound_is_reached_by_linear_analyzers_for_emitted_states() {
    use bellswitch_core::{emit_state, NoiseParams, SourceConfig};
    for kind in BellState::ALL {
        let mut config = SourceConfig::default().tuned_to(kind);
        config.noise = NoiseParams { werner_p: 0.93, dephasing: 0.05 };
        let rho = emit_state(&config);
        let (grid, closed) = (chsh_linear_grid(&rho), chsh_max(&rho));
        assert!((grid - closed).abs() < 2e-3, "{kind}: grid {grid} closed {closed}");
    }
    let bell: DensityMatrix = BellState::PhiPlus.state().into();
    assert!((chsh_linear_grid(&bell) - 2.0 * 2.0_f64.sqrt()).abs() < 1e-9);
}

// ---------------------------------------------------------------------------
// Projection probabilities by explicit amplitude overlap.

#[test]
fn diagonal_projection_follows_phase() {
    use bellswitch_core::measurement::{coincidence_probability, MeasurementSetting};
    for k in 0..=24 {
        let phi = k as f64 * PI / 12.0;
        let psi = [c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(FRAC_1_SQRT_2, phi)];
        let plus = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
        let mut overlap = c(0.0, 0.0);
        for j in 0..2 {
            for l in 0..2 {
                overlap += (plus[j] * plus[l]).conj() * psi[j * 2 + l];
            }
        }
        let rho = bellswitch_core::PureState::new(psi).unwrap().density_matrix();
        let p = coincidence_probability(&rho, &MeasurementSetting::diagonal());
        assert!((p - overlap.norm_sqr()).abs() < 1e-12);
        assert!((p - (1.0 + phi.cos()) / 4.0).abs() < 1e-12);
    }
}

#[test]
fn fidelity_is_the_projection_onto_target() {
    let rho = common::random_density(77, 3);
    for kind in BellState::ALL {
        let v = kind.state();
        let direct = (v.amplitudes().adjoint() * rho.matrix() * v.amplitudes())[(0, 0)].re;
        assert!((fidelity(&rho, &v) - direct).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Poisson sampler moments.

#[test]
fn poisson_mean_over_seeds() {
    let counting = CountingParams { pair_rate_hz: 10_000.0, integration_time_s: 1.0, accidental_rate_hz: 0.0 };
    let samples: Vec<f64> =
        (0..1000).map(|s| sample_coincidences(0.5, &counting, s).unwrap().coincidences as f64).collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    let sigma_mean = (5000.0_f64 / 1000.0).sqrt();
    assert!((mean - 5000.0).abs() < 3.0 * sigma_mean, "mean {mean}");
    // Variance of a Poisson variable equals its mean; 1000 samples pin it to ±10%.
    assert!((var / 5000.0 - 1.0).abs() < 0.15, "variance {var}");
    assert_eq!(sample_coincidences(0.0, &counting, 9).unwrap().coincidences, 0);
}
