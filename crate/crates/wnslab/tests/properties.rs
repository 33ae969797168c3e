//! Randomized invariant checks over the public API. Fields are built from
//! seeds (not from generated vectors) so shrinking stays cheap; grids are
//! kept small since every case pays for full transforms.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use wnslab::config::RunConfig;
use wnslab::fft::{self, C64};
use wnslab::field::{ScalarField, VectorField};
use wnslab::grid::Grid;
use wnslab::mollifier::{mollify, phi_lq_norm, theta_profile, MollifierSpec};
use wnslab::par;
use wnslab::snapshot::{read_snapshot, write_snapshot};
use wnslab::spectral::{
    divergence_field, divergence_rel, gradient, heat_semigroup_scalar, laplacian, leray_project,
    riesz,
};
use wnslab::split::{split_divergence_free, SplitConfig};
use wnslab::testfields::heavy_tail;
use wnslab::weights::{weighted_lp_norm, weighted_lp_norm_scalar};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (prop_oneof![Just(8usize), Just(12), Just(16)], 8.0f64..32.0)
        .prop_map(|(n, l)| Grid::new(n, l).unwrap())
}

/// Seeded scalar with spectral content limited to `|m| < n/2 - 1`, so every
/// derivative identity below is exact mode by mode.
fn banded_scalar(grid: Grid, seed: u64) -> ScalarField {
    let band = (grid.n() / 2 - 2) as i64;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..grid.cells())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut spec = fft::to_complex(&data);
    fft::forward(grid, &mut spec);
    par::update_indexed(&mut spec, |idx, v| {
        let m = grid.modes(idx);
        if m.iter().all(|c| c.abs() <= band) {
            v
        } else {
            C64::ZERO
        }
    });
    fft::inverse(grid, &mut spec);
    ScalarField::from_vec(grid, fft::real_part(&spec))
}

fn banded_vector(grid: Grid, seed: u64) -> VectorField {
    let comps =
        [0u64, 1, 2].map(|a| banded_scalar(grid, seed.wrapping_mul(3).wrapping_add(a)).into_data());
    VectorField::from_components(grid, comps)
}

fn dot(a: &ScalarField, b: &ScalarField) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn l2(f: &ScalarField) -> f64 {
    dot(f, f).sqrt()
}

fn rel_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let diff: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    let scale = l2(a).max(l2(b)).max(f64::MIN_POSITIVE);
    diff.iter().map(|v| v * v).sum::<f64>().sqrt() / scale
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    })]

    #[test]
    fn grid_index_unravel_roundtrip(grid in grid_strategy(), raw in any::<u64>()) {
        let idx = (raw % grid.cells() as u64) as usize;
        let (ix, iy, iz) = grid.unravel(idx);
        prop_assert_eq!(grid.index(ix, iy, iz), idx);
        let half = grid.box_length() / 2.0;
        for c in grid.position(idx) {
            prop_assert!((-half..half).contains(&c));
        }
    }

    #[test]
    fn fft_roundtrip_recovers_field(grid in grid_strategy(), seed in any::<u64>()) {
        let f = banded_scalar(grid, seed);
        let mut spec = fft::to_complex(f.data());
        fft::forward(grid, &mut spec);
        fft::inverse(grid, &mut spec);
        let back = ScalarField::from_vec(grid, fft::real_part(&spec));
        prop_assert!(rel_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn leray_projects_idempotently(grid in grid_strategy(), seed in any::<u64>()) {
        let u = banded_vector(grid, seed);
        let p1 = leray_project(&u);
        let p2 = leray_project(&p1);
        prop_assert!(divergence_rel(&p1) < 1e-11);
        let mut diff = p2.clone();
        diff.axpy(-1.0, &p1);
        prop_assert!(diff.max_abs() <= 1e-12 * p1.max_abs().max(1e-300));
    }

    #[test]
    fn projection_kills_gradients(grid in grid_strategy(), seed in any::<u64>()) {
        let q = banded_scalar(grid, seed);
        let g = gradient(&q);
        let killed = leray_project(&g);
        prop_assert!(killed.max_abs() <= 1e-11 * g.max_abs().max(1e-300));
    }

    #[test]
    fn div_grad_matches_laplacian_on_banded_input(
        grid in grid_strategy(),
        seed in any::<u64>(),
    ) {
        // away from the Nyquist ring the odd-operator wavevector agrees
        // with the nominal one, so the composition collapses exactly
        let q = banded_scalar(grid, seed);
        let via_ops = divergence_field(&gradient(&q));
        let direct = laplacian(&q);
        prop_assert!(rel_diff(&via_ops, &direct) < 1e-11);
    }

    #[test]
    fn riesz_is_skew_adjoint(
        grid in grid_strategy(),
        seed in any::<u64>(),
        axis in 0usize..3,
    ) {
        let f = banded_scalar(grid, seed);
        let g = banded_scalar(grid, seed.wrapping_add(1).wrapping_mul(7));
        let lhs = dot(&riesz(&f, axis), &g);
        let rhs = -dot(&f, &riesz(&g, axis));
        let scale = l2(&f) * l2(&g);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale.max(1e-300));
    }

    #[test]
    fn heat_flow_composes_and_contracts(
        grid in grid_strategy(),
        seed in any::<u64>(),
        t in 1e-3f64..0.5,
        s in 1e-3f64..0.5,
    ) {
        let f = banded_scalar(grid, seed);
        let two_step = heat_semigroup_scalar(&heat_semigroup_scalar(&f, t).unwrap(), s).unwrap();
        let one_step = heat_semigroup_scalar(&f, t + s).unwrap();
        prop_assert!(rel_diff(&two_step, &one_step) < 1e-12);
        prop_assert!(l2(&one_step) <= l2(&f) * (1.0 + 1e-12));
    }

    #[test]
    fn weighted_norm_is_homogeneous_and_subadditive(
        grid in grid_strategy(),
        seed in any::<u64>(),
        c in -4.0f64..4.0,
        p in prop_oneof![Just(2.0f64), Just(4.0), Just(6.0)],
        gamma in 0.0f64..8.0,
    ) {
        let f = banded_scalar(grid, seed);
        let g = banded_scalar(grid, seed ^ 0x9e37_79b9_7f4a_7c15);
        let norm = |x: &ScalarField| weighted_lp_norm_scalar(x, p, gamma).unwrap().value;
        let mut scaled = f.clone();
        scaled.scale(c);
        prop_assert!((norm(&scaled) - c.abs() * norm(&f)).abs() <= 1e-10 * norm(&f).max(1e-300));
        let mut sum = f.clone();
        sum.axpy(1.0, &g);
        prop_assert!(norm(&sum) <= norm(&f) + norm(&g) + 1e-10);
    }

    #[test]
    fn weighted_norm_shrinks_as_weight_sharpens(
        grid in grid_strategy(),
        seed in any::<u64>(),
        gamma in 0.0f64..6.0,
        extra in 0.1f64..2.0, // gamma + extra stays within the weight cap
    ) {
        let f = banded_scalar(grid, seed);
        let lo = weighted_lp_norm_scalar(&f, 2.0, gamma).unwrap().value;
        let hi = weighted_lp_norm_scalar(&f, 2.0, gamma + extra).unwrap().value;
        prop_assert!(hi <= lo * (1.0 + 1e-12));
    }

    #[test]
    fn theta_profile_is_a_monotone_plateau(a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for r in [lo, hi] {
            let v = theta_profile(r);
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(theta_profile(lo) >= theta_profile(hi));
        prop_assert_eq!(theta_profile(lo.min(1.0)), 1.0);
        prop_assert_eq!(theta_profile(hi.max(2.0)), 0.0);
    }
}

proptest! {
    // the cases below run full mollifier or split pipelines; keep the count
    // low so the suite stays in test-time budget
    #![proptest_config(ProptestConfig {
        cases: 8,
        ..ProptestConfig::default()
    })]

    #[test]
    fn mollifier_bound_and_linearity(
        seed in any::<u64>(),
        eps in 0.1f64..0.5,
        alpha in 0.3f64..1.0,
        c in -2.0f64..2.0,
    ) {
        let grid = Grid::new(16, 16.0).unwrap();
        let spec = MollifierSpec::new(eps, alpha).unwrap();
        let u = banded_vector(grid, seed);
        let smooth = mollify(&u, &spec).unwrap();

        // sup bound with p = 4, gamma = 1
        let input = weighted_lp_norm(&u, 4.0, 1.0).unwrap().value;
        let bound = phi_lq_norm(4.0 / 3.0)
            * eps.powf(-0.75)
            * (1.0 + 2.0 / alpha).powf(0.25)
            * input;
        prop_assert!(smooth.max_abs() <= bound * (1.0 + 1e-12));

        // linearity in the input
        let mut scaled_in = u.clone();
        scaled_in.scale(c);
        let smooth_scaled = mollify(&scaled_in, &spec).unwrap();
        let mut expect = smooth.clone();
        expect.scale(c);
        let mut diff = smooth_scaled;
        diff.axpy(-1.0, &expect);
        prop_assert!(diff.max_abs() <= 1e-11 * smooth.max_abs().max(1e-300));
    }

    #[test]
    fn split_partitions_and_meets_threshold(
        amplitude in 0.5f64..3.0,
        decay in 1.0f64..2.0,
        eta in 0.05f64..0.4,
        // the compatibility threshold for p = 4, gamma = 1 pins r >= 6
        r in 6.0f64..9.0,
    ) {
        let grid = Grid::new(24, 16.0).unwrap();
        let u0 = heavy_tail(grid, amplitude, decay);
        let cfg = SplitConfig::new(4.0, 1.0, r, eta).unwrap();
        let split = split_divergence_free(&u0, &cfg, 1e-8).unwrap();
        prop_assert!(split.achieved < eta);
        let mut sum = split.b0.clone();
        sum.axpy(1.0, &split.v0);
        sum.axpy(-1.0, &u0);
        prop_assert!(sum.max_abs() <= 1e-11 * u0.max_abs());
        // measure each part's divergence against the input scale: a lenient
        // threshold can leave one part as pure round-off dust, whose
        // self-relative divergence is noise over noise
        let scale = (0..3)
            .map(|a| u0.comp(a).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        for part in [&split.b0, &split.v0] {
            let div = divergence_field(part);
            prop_assert!(l2(&div) <= 1e-9 * scale);
        }
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact(seed in any::<u64>(), time in 0.0f64..1e3) {
        let grid = Grid::new(8, 16.0).unwrap();
        let mut u = banded_vector(grid, seed);
        // pepper in exact specials that a lossy codec would disturb
        u.comp_mut(0)[0] = 0.0;
        u.comp_mut(1)[1] = -0.0;
        u.comp_mut(2)[2] = f64::MIN_POSITIVE;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        write_snapshot(&path, &u, time).unwrap();
        let snap = read_snapshot(&path).unwrap();
        prop_assert_eq!(snap.time.to_bits(), time.to_bits());
        for a in 0..3 {
            let (orig, read) = (u.comp(a), snap.field.comp(a));
            prop_assert_eq!(orig.len(), read.len());
            for (x, y) in orig.iter().zip(read) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn config_render_parse_roundtrip(
        n in prop_oneof![Just(8usize), Just(16), Just(32)],
        box_length in 8.0f64..64.0,
        amplitude in 0.1f64..4.0,
        dt in 1e-4f64..1e-2,
        steps in 1usize..500,
        eta in 0.01f64..0.5,
        seed in any::<u64>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.n = n;
        cfg.box_length = box_length;
        cfg.amplitude = amplitude;
        cfg.dt = dt;
        cfg.steps = steps;
        cfg.eta = eta;
        cfg.seed = seed;
        let text = cfg.to_file_string();
        let parsed = RunConfig::parse_str(&text, "roundtrip").unwrap();
        prop_assert_eq!(parsed, cfg);
    }
}
