//! Acceptance suite: one test per criterion, named `criterion_NN_*` so the
//! harness prints one pass/fail line each. Every tolerance was fixed before
//! the checks were run; each test also prints its measured numbers (visible
//! with `--nocapture` or on failure).

use std::f64::consts::PI;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use wnslab::estimates::{calibrate_c1_star, calibrate_c2_star, energy_budget, star_norms};
use wnslab::fft::{self, C64};
use wnslab::field::{ScalarField, VectorField};
use wnslab::grid::Grid;
use wnslab::mollifier::{mollify, phi_lq_norm, MollifierSpec};
use wnslab::par;
use wnslab::pipeline::convergence_study;
use wnslab::config::{FieldKind, RunConfig};
use wnslab::rescale::rescale_consistency;
use wnslab::solver::{
    ifrk4_step, projected_advection, solve_coupled, solve_mollified, CoupledConfig,
    CoupledHistory, SolverConfig,
};
use wnslab::spectral::{
    divergence_field, divergence_rel, gradient, heat_semigroup, heat_semigroup_scalar,
    leray_project, riesz,
};
use wnslab::split::{split_divergence_free, SplitConfig};
use wnslab::testfields::{gaussian_curl, heavy_tail};
use wnslab::weights::{weighted_lp_norm, weighted_lp_norm_scalar};

/// The criteria saturate all cores through the data-parallel kernels, and
/// one of them asserts a wall-clock budget; running their bodies one at a
/// time keeps that measurement free of harness-level contention.
fn serial() -> MutexGuard<'static, ()> {
    static GATE: Mutex<()> = Mutex::new(());
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn g32() -> Grid {
    Grid::new(32, 16.0).unwrap()
}

/// Band-limited random scalar with no content at or beyond `max_mode`.
fn random_scalar(grid: Grid, max_mode: i64, seed: u64) -> ScalarField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..grid.cells())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut spec = fft::to_complex(&data);
    fft::forward(grid, &mut spec);
    par::update_indexed(&mut spec, |idx, v| {
        let m = grid.modes(idx);
        if m.iter().all(|c| c.abs() <= max_mode) {
            v
        } else {
            C64::ZERO
        }
    });
    fft::inverse(grid, &mut spec);
    ScalarField::from_vec(grid, fft::real_part(&spec))
}

/// Unprojected random vector field (generally not divergence free).
fn random_vector(grid: Grid, max_mode: i64, seed: u64) -> VectorField {
    let comps = [0u64, 1, 2].map(|a| random_scalar(grid, max_mode, seed * 3 + a).into_data());
    VectorField::from_components(grid, comps)
}

fn l2(data: &[f64]) -> f64 {
    data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_l2_scalar(a: &ScalarField, b: &ScalarField) -> f64 {
    let diff: Vec<f64> = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x - y)
        .collect();
    l2(&diff) / l2(b.data())
}

fn vec_l2(u: &VectorField) -> f64 {
    (0..3).map(|a| l2(u.comp(a)).powi(2)).sum::<f64>().sqrt()
}

fn rel_l2_vec(a: &VectorField, b: &VectorField) -> f64 {
    let mut diff = a.clone();
    diff.axpy(-1.0, b);
    vec_l2(&diff) / vec_l2(b)
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

#[test]
fn criterion_01_spectral_identities() {
    let _gate = serial();
    let g = g32();
    let fields = 100;
    let tol = 1e-10;
    let started = Instant::now();
    let mut worst = [0.0f64; 4];
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    for i in 0..fields {
        // projection is idempotent
        let w = random_vector(g, 10, 1000 + i);
        let p1 = leray_project(&w);
        let p2 = leray_project(&p1);
        worst[0] = worst[0].max(rel_l2_vec(&p2, &p1));

        // projection annihilates gradients
        let q = random_scalar(g, 10, 2000 + i);
        let gq = gradient(&q);
        let pgq = leray_project(&gq);
        worst[1] = worst[1].max(vec_l2(&pgq) / vec_l2(&gq));

        // Riesz symbol: sum_i R_i R_i = -(Id - mean)
        let f = random_scalar(g, 10, 3000 + i);
        let mean = f.data().iter().sum::<f64>() / g.cells() as f64;
        let mut acc = vec![0.0; g.cells()];
        for axis in 0..3 {
            let rr = riesz(&riesz(&f, axis), axis);
            for (a, v) in acc.iter_mut().zip(rr.data()) {
                *a += v;
            }
        }
        let err: Vec<f64> = acc
            .iter()
            .zip(f.data())
            .map(|(a, v)| a + (v - mean))
            .collect();
        worst[2] = worst[2].max(l2(&err) / l2(f.data()));

        // heat flow scales an eigenmode by exp(-|k|^2 t)
        let m = [0; 3].map(|_| rng.random_range(-10i64..=10));
        let m = if m == [0, 0, 0] { [1, 0, 0] } else { m };
        let t: f64 = rng.random_range(0.01..1.0);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let k = m.map(|c| 2.0 * PI * c as f64 / g.box_length());
        let u = VectorField::from_fn(g, |x| {
            let c = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + phase).cos();
            [c, 0.5 * c, -0.25 * c]
        });
        let flowed = heat_semigroup(&u, t).unwrap();
        let k2 = k.iter().map(|c| c * c).sum::<f64>();
        let mut expect = u.clone();
        expect.scale((-k2 * t).exp());
        // relative to the input scale: the flow is a contraction, and the
        // decayed reference can sit below round-off
        let mut diff = flowed;
        diff.axpy(-1.0, &expect);
        worst[3] = worst[3].max(vec_l2(&diff) / vec_l2(&u));
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 1: idempotency {:.2e}, grad annihilation {:.2e}, riesz {:.2e}, \
         heat decay {:.2e} over {fields} fields in {elapsed:.2} s",
        worst[0], worst[1], worst[2], worst[3]
    );
    for (name, w) in ["idempotency", "grad", "riesz", "heat"].iter().zip(worst) {
        assert!(w <= tol, "{name} identity error {w:.3e} exceeds {tol:.0e}");
    }
    assert!(elapsed < 10.0, "runtime {elapsed:.2} s exceeds 10 s");
}

#[test]
fn criterion_02_weighted_norm_richardson() {
    let _gate = serial();
    // matched spacing h = 0.5 keeps the lattice quadrature error fixed while
    // the box grows, so Richardson in 1/L removes the leading tail error
    let value = |n: usize, l: f64| {
        let g = Grid::new(n, l).unwrap();
        let ones = ScalarField::from_fn(g, |_| 1.0);
        let v = weighted_lp_norm_scalar(&ones, 2.0, 4.0).unwrap().value;
        v * v
    };
    let i32_ = value(64, 32.0);
    let i64_ = value(128, 64.0);
    let richardson = 2.0 * i64_ - i32_;
    let target = PI * PI;
    let rel = (richardson - target).abs() / target;
    println!(
        "criterion 2: I(32) = {i32_:.6}, I(64) = {i64_:.6}, extrapolated {richardson:.6}, \
         target {target:.6}, rel err {rel:.3e}"
    );
    assert!(rel < 0.01, "extrapolated value off by {rel:.3e} (> 1%)");
}

/// Cell averages of `1/(sqrt(t)+|z|)^4` on the doubled grid, with signed
/// offsets from the origin. Midpoint subdivision resolves the near-singular
/// peak: the central cells need a fine rule (the point value at z = 0
/// overshoots the cell mean by more than 10x at t = 1/16).
fn averaged_kernel(gp: Grid, h: f64, t: f64) -> Vec<C64> {
    let m = gp.n() as i64;
    let kval = |z: [f64; 3]| {
        let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        (t.sqrt() + r).powi(-4)
    };
    let average = |z: [f64; 3], sub: usize| {
        let mut acc = 0.0;
        for a in 0..sub {
            for b in 0..sub {
                for c in 0..sub {
                    let mid = |k: usize| -0.5 * h + (k as f64 + 0.5) * h / sub as f64;
                    acc += kval([z[0] + mid(a), z[1] + mid(b), z[2] + mid(c)]);
                }
            }
        }
        acc / (sub * sub * sub) as f64
    };
    let mut ker = vec![C64::ZERO; gp.cells()];
    par::fill_indexed(&mut ker, |idx| {
        let (ix, iy, iz) = gp.unravel(idx);
        let off = |i: usize| {
            let s = if (i as i64) < m / 2 {
                i as i64
            } else {
                i as i64 - m
            };
            s as f64 * h
        };
        let z = [off(ix), off(iy), off(iz)];
        let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        let v = if r <= 2.0 * h {
            average(z, 32)
        } else if r <= 4.0 * (t.sqrt() + h) {
            average(z, 8)
        } else {
            kval(z)
        };
        C64::new(v, 0.0)
    });
    ker
}

/// Convolution with the cell-averaged kernel on a doubled (zero-padded)
/// grid, cropped back to the source box.
fn kernel_convolve(f: &ScalarField, t: f64) -> ScalarField {
    let g = f.grid();
    let (n, l, h) = (g.n(), g.box_length(), g.spacing());
    let gp = Grid::new(2 * n, 2.0 * l).unwrap();

    let mut ker = averaged_kernel(gp, h, t);
    fft::forward(gp, &mut ker);

    let mut fp = vec![C64::ZERO; gp.cells()];
    for idx in 0..g.cells() {
        let (ix, iy, iz) = g.unravel(idx);
        fp[gp.index(ix + n / 2, iy + n / 2, iz + n / 2)] = C64::new(f.data()[idx], 0.0);
    }
    fft::forward(gp, &mut fp);
    for (a, b) in fp.iter_mut().zip(&ker) {
        *a *= *b;
    }
    fft::inverse(gp, &mut fp);

    let h3 = g.cell_volume();
    let mut out = vec![0.0; g.cells()];
    for idx in 0..g.cells() {
        let (ix, iy, iz) = g.unravel(idx);
        out[idx] = fp[gp.index(ix + n / 2, iy + n / 2, iz + n / 2)].re * h3;
    }
    ScalarField::from_vec(g, out)
}

#[test]
fn criterion_03_kernel_uniformity() {
    let _gate = serial();
    let g = g32();
    let times = [1.0, 0.25, 0.0625];
    let fields = 20;

    // mass sanity at the sharpest kernel: sqrt(t) * int K = 4 pi / 3 up to
    // the truncated far tail
    {
        let t: f64 = 0.0625;
        let gp = Grid::new(64, 32.0).unwrap();
        let ker = averaged_kernel(gp, g.spacing(), t);
        let mass: f64 = ker.iter().map(|c| c.re).sum::<f64>() * gp.cell_volume();
        let scaled = t.sqrt() * mass;
        let target = 4.0 * PI / 3.0;
        println!(
            "criterion 3: kernel mass sqrt(t)*int K = {scaled:.4} vs {target:.4} (t = {t})"
        );
        assert!((scaled - target).abs() < 0.1 * target);
    }

    // the uniform constant is a bound over all inputs, so the measured
    // statistic is the family maximum of the normalized ratio at each t;
    // the family spans smooth through rough content (band limits 1..10),
    // since a single rough field alone always sees extra damping at large t
    let mut by_time = vec![Vec::new(); times.len()];
    for i in 0..fields {
        let band = 1 + (i as i64) % 10;
        let f = random_scalar(g, band, 4000 + i);
        let fnorm = weighted_lp_norm_scalar(&f, 2.0, 4.0).unwrap().value;
        for (slot, &t) in by_time.iter_mut().zip(&times) {
            let conv = kernel_convolve(&f, t);
            let cnorm = weighted_lp_norm_scalar(&conv, 2.0, 4.0).unwrap().value;
            slot.push(cnorm * t.sqrt() / fnorm);
        }
    }
    let norms: Vec<f64> = by_time
        .iter()
        .map(|r| r.iter().cloned().fold(0.0f64, f64::max))
        .collect();
    let spread = norms.iter().cloned().fold(0.0f64, f64::max)
        / norms.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "criterion 3: operator-norm proxies {} at t = {times:?} over {fields} fields, \
         spread {spread:.3}",
        sci(&norms)
    );
    assert!(norms.iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(
        spread < 2.0,
        "normalized operator norm varies by {spread:.3} (>= 2x)"
    );
}

#[test]
fn criterion_04_mollifier_sup_bound() {
    let _gate = serial();
    // box large enough that the widest plateau (alpha = 0.25) fits
    let g = Grid::new(48, 24.0).unwrap();
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for (ci, &eps) in [0.25, 0.5].iter().enumerate() {
        for (cj, &alpha) in [0.25, 0.5].iter().enumerate() {
            let spec = MollifierSpec::new(eps, alpha).unwrap();
            for i in 0..25 {
                let seed = 5000 + 100 * (2 * ci + cj) as u64 + i;
                let u = random_vector(g, 8, seed);
                let smoothed = mollify(&u, &spec).unwrap();
                let observed = smoothed.max_abs();
                let input = weighted_lp_norm(&u, 4.0, 1.0).unwrap().value;
                let bound = phi_lq_norm(4.0 / 3.0)
                    * eps.powf(-0.75)
                    * (1.0 + 2.0 / alpha).powf(0.25)
                    * input;
                assert!(
                    observed <= bound,
                    "sup bound violated at eps {eps}, alpha {alpha}, seed {seed}: \
                     {observed:.6e} > {bound:.6e}"
                );
                tightest = tightest.min(bound / observed);
                checked += 1;
            }
        }
    }
    println!(
        "criterion 4: {checked} fields, zero violations, smallest bound/observed \
         margin {tightest:.3}"
    );
    assert_eq!(checked, 100);
}

#[test]
fn criterion_05_calderon_split() {
    let _gate = serial();
    let g = g32();
    let u0 = heavy_tail(g, 2.0, 1.2);
    let mut previous_v = 0.0;
    let mut report = Vec::new();
    for &eta in &[0.2, 0.1, 0.05] {
        let cfg = SplitConfig::new(4.0, 1.0, 6.0, eta).unwrap();
        let split = split_divergence_free(&u0, &cfg, 1e-8).unwrap();
        assert!(
            split.achieved < eta,
            "tail norm {:.3e} not below eta {eta}",
            split.achieved
        );
        // partition is exact by construction; verify to round-off
        let mut sum = split.b0.clone();
        sum.axpy(1.0, &split.v0);
        sum.axpy(-1.0, &u0);
        assert!(sum.max_abs() <= 1e-12 * u0.max_abs());
        assert!(divergence_rel(&split.b0) <= 1e-10);
        assert!(divergence_rel(&split.v0) <= 1e-10);
        let v_norm = weighted_lp_norm(&split.v0, 2.0, 2.0).unwrap().value;
        assert!(v_norm.is_finite());
        assert!(
            v_norm >= previous_v,
            "remainder norm {v_norm:.6e} decreased as eta fell"
        );
        previous_v = v_norm;
        report.push((eta, split.achieved, v_norm));
    }
    println!("criterion 5: (eta, tail, remainder) = {report:?}");
}

#[test]
fn criterion_06_duhamel_residual() {
    let _gate = serial();
    let g = g32();
    let u0 = gaussian_curl(g, 0.8, 2.0);
    let moll = MollifierSpec::new(0.5, 0.5).unwrap();
    let horizon = 0.1;
    let dts = [1e-3, 5e-4, 2.5e-4];
    let mut ratios = Vec::new();
    for &dt in &dts {
        let mut cfg = SolverConfig::new(dt, (horizon / dt).round() as usize, moll);
        cfg.save_every = cfg.steps;
        cfg.track_residual = true;
        cfg.residual_gamma = 4.0;
        let traj = solve_mollified(&u0, &cfg).unwrap();
        assert!(traj.blowup.is_none());
        ratios.push(traj.residual.unwrap().ratio());
    }
    // least-squares slope of log(ratio) against log(dt)
    let logs: Vec<(f64, f64)> = dts
        .iter()
        .zip(&ratios)
        .map(|(&dt, &r)| (dt.ln(), r.ln()))
        .collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!(
        "criterion 6: residual ratios {} at dt {dts:?}, order {slope:.2}",
        sci(&ratios)
    );
    assert!(
        ratios[0] <= 1e-4,
        "residual {:.3e} at dt = 1e-3 exceeds 1e-4",
        ratios[0]
    );
    assert!(slope >= 1.9, "refinement order {slope:.2} below 1.9");
}

#[test]
fn criterion_07_energy_identity() {
    let _gate = serial();
    let g = Grid::new(48, 16.0).unwrap();
    // smooth data (so the cubic account terms stay resolved on the grid)
    // with mass on the cutoff ramp |x| in [2, 4], keeping every account
    // term active; the tail/remainder pair comes from a heat split
    let raw = VectorField::from_fn(g, |x| {
        let r2 = x.iter().map(|c| c * c).sum::<f64>();
        let w = (-r2 / 9.0).exp();
        [
            2.0 * w * (0.6 * x[1]).sin(),
            2.0 * w * (0.5 * x[2]).cos(),
            -w * (0.4 * x[0]).sin(),
        ]
    });
    let u0 = leray_project(&raw);
    let b0 = heat_semigroup(&u0, 0.3).unwrap();
    let v0 = u0.lin_comb(1.0, -1.0, &b0);
    let moll = MollifierSpec::new(0.5, 0.5).unwrap();

    let run = |dt: f64, steps: usize| {
        let mut base = SolverConfig::new(dt, steps, moll);
        base.save_every = 10;
        let ccfg = CoupledConfig {
            base,
            tail_exponent: 6.0,
        };
        let traj = solve_coupled(&b0, &v0, &ccfg).unwrap();
        assert!(traj.blowup.is_none());
        let rows = energy_budget(&traj, &moll, dt, true).unwrap();
        rows.iter().map(|r| r.defect_rel).fold(0.0f64, f64::max)
    };

    let coarse = run(1e-3, 50);
    let fine = run(5e-4, 100);
    println!(
        "criterion 7: worst relative budget defect {fine:.3e} at dt = 5e-4 \
         ({coarse:.3e} at dt = 1e-3)"
    );
    assert!(fine < 0.01, "budget defect {fine:.3e} not below 1%");
    assert!(
        fine < coarse,
        "defect did not shrink under refinement ({fine:.3e} vs {coarse:.3e})"
    );
}

/// Coupled runs shared by the two calibrated-bound criteria: the heavy-tail
/// field split at descending smallness targets, each evolved to T = 0.1.
struct StarRun {
    eta: f64,
    history: CoupledHistory,
}

fn star_runs() -> &'static Vec<StarRun> {
    static RUNS: OnceLock<Vec<StarRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let g = g32();
        let u0 = heavy_tail(g, 2.0, 1.2);
        let moll = MollifierSpec::new(0.5, 0.5).unwrap();
        [0.3, 0.2, 0.15, 0.1]
            .iter()
            .map(|&eta| {
                let cfg = SplitConfig::new(4.0, 1.0, 6.0, eta).unwrap();
                let split = split_divergence_free(&u0, &cfg, 1e-8).unwrap();
                let mut base = SolverConfig::new(2e-3, 50, moll);
                base.save_every = 50;
                base.residual_gamma = 2.0;
                let ccfg = CoupledConfig {
                    base,
                    tail_exponent: 6.0,
                };
                let traj = solve_coupled(&split.b0, &split.v0, &ccfg).unwrap();
                assert!(traj.blowup.is_none());
                StarRun {
                    eta,
                    history: traj.history,
                }
            })
            .collect()
    })
}

fn truncated(history: &CoupledHistory, horizon: f64) -> CoupledHistory {
    let keep = history.times.iter().filter(|&&t| t <= horizon).count();
    CoupledHistory {
        times: history.times[..keep].to_vec(),
        v_l2: history.v_l2[..keep].to_vec(),
        b_lr: history.b_lr[..keep].to_vec(),
        b_grad_lr: history.b_grad_lr[..keep].to_vec(),
        b_sup: history.b_sup[..keep].to_vec(),
    }
}

#[test]
fn criterion_08_star_bounds_calibrated() {
    let _gate = serial();
    let runs = star_runs();
    let r = 6.0;
    // calibrate the tail-horizon constant on the largest-eta run only
    let c1 = calibrate_c1_star(&[(&runs[0].history, runs[0].eta)], r).unwrap();
    let mut lines = Vec::new();
    for run in &runs[1..] {
        let t_tail = (c1 * run.eta).powf(-2.0 * r / (r - 3.0));
        let window = truncated(&run.history, t_tail);
        assert!(!window.times.is_empty());
        let star = star_norms(&window, run.eta, r).unwrap();
        lines.push((
            run.eta,
            star.tail_lr.observed / star.tail_lr.ceiling,
            star.tail_grad.observed / star.tail_grad.ceiling,
            star.tail_sup.observed / star.tail_sup.ceiling,
        ));
        assert!(
            star.all_ok(),
            "star flags failed at eta {}: lr {:?} grad {:?} sup {:?}",
            run.eta,
            star.tail_lr,
            star.tail_grad,
            star.tail_sup
        );
    }
    println!(
        "criterion 8: c1 = {c1:.3}, held-out (eta, lr, grad, sup fill fractions) = \
         {lines:.3?}"
    );
}

#[test]
fn criterion_09_energy_bound_calibrated() {
    let _gate = serial();
    let runs = star_runs();
    let alpha = 0.5;
    let pairs: Vec<(&CoupledHistory, f64)> =
        runs.iter().map(|r| (&r.history, alpha)).collect();
    let c2 = calibrate_c2_star(&pairs).unwrap();
    let mut lines = Vec::new();
    for run in runs {
        let v0 = run.history.v_l2[0];
        let t_energy = (1.0 / c2) / (1.0 + alpha.max(1.0).powi(6) * v0.powi(4));
        let window = truncated(&run.history, t_energy);
        assert!(!window.times.is_empty());
        let sup = window.v_l2.iter().cloned().fold(0.0f64, f64::max);
        lines.push((run.eta, t_energy.min(*run.history.times.last().unwrap()), sup / v0));
        assert!(
            sup <= 2.0 * v0,
            "remainder norm grew past 2x at eta {}: sup {sup:.6e} vs v0 {v0:.6e}",
            run.eta
        );
    }
    println!("criterion 9: c2 = {c2:.3}, (eta, window, sup/v0) = {lines:.3?}");
}

#[test]
fn criterion_10_scaling_identity() {
    let _gate = serial();
    let moll = MollifierSpec::new(0.25, 0.5).unwrap();
    let mut mismatches = Vec::new();
    for &n in &[32usize, 48, 64] {
        let g = Grid::new(n, 16.0).unwrap();
        let u0 = gaussian_curl(g, 0.3, 2.0);
        let report = rescale_consistency(&u0, &moll, 4e-3, 10, 1).unwrap();
        assert!(report.dropped_energy < 1e-6);
        mismatches.push(report.mismatch);
    }
    println!("criterion 10: mismatches {} at N = [32, 48, 64]", sci(&mismatches));
    assert!(
        mismatches[0] > mismatches[1] && mismatches[1] > mismatches[2],
        "mismatch not monotone under resolution refinement: {mismatches:?}"
    );
    assert!(
        mismatches[2] <= 1e-3,
        "mismatch {:.3e} at N = 64 exceeds 1e-3",
        mismatches[2]
    );
}

#[test]
fn criterion_11_parameter_convergence() {
    let _gate = serial();
    let mut cfg = RunConfig::default();
    cfg.n = 32;
    cfg.box_length = 16.0;
    cfg.field = FieldKind::Bump;
    cfg.amplitude = 0.8;
    // narrow vortex: its mass sits inside even the tightest cutoff radius,
    // so each halving of (epsilon, alpha) perturbs the dynamics less than
    // the one before
    cfg.sigma = 0.8;
    cfg.epsilon = 0.4;
    cfg.alpha = 2.5;
    cfg.dt = 2e-3;
    cfg.steps = 250; // T = 0.5
    cfg.save_every = 10;
    let report = convergence_study(&cfg, 4).unwrap();
    let adj = report.adjacent_distances();
    let gain = report.residuals[0] / report.residuals[3];
    println!(
        "criterion 11: adjacent distances {}, weak-norm defects {}, \
         coarsest/finest defect {gain:.2}",
        sci(&adj),
        sci(&report.residuals)
    );
    for i in 1..adj.len() {
        assert!(
            adj[i] < adj[i - 1],
            "distances not strictly decreasing: {adj:?}"
        );
    }
    assert!(
        gain >= 4.0,
        "finest defect only {gain:.2}x below coarsest (need >= 4x)"
    );
}

#[test]
fn criterion_12_divergence_propagation() {
    let _gate = serial();
    let g = g32();
    let moll = MollifierSpec::new(0.5, 0.5).unwrap();
    let dt = 2e-3;
    let steps = 50;

    // branch 1: divergence-free data stays divergence free
    let u0 = gaussian_curl(g, 0.8, 2.0);
    let cfg = SolverConfig::new(dt, steps, moll);
    let traj = solve_mollified(&u0, &cfg).unwrap();
    let clean = divergence_rel(traj.final_state());
    assert!(clean <= 1e-8, "solenoidal branch divergence {clean:.3e}");

    // branch 2: nonzero divergence rides the heat flow untouched, because
    // every stage increment of the scheme is projected
    let mut w = u0.clone();
    let q = random_scalar(g, 6, 9000);
    w.axpy(0.4, &gradient(&q));
    let div0 = divergence_field(&w);
    assert!(l2(div0.data()) > 1e-3, "test data should have real divergence");
    let nonlinear = |u: &VectorField| {
        let m = mollify(u, &moll).unwrap();
        let mut n = projected_advection(&m, u);
        n.scale(-1.0);
        n
    };
    for _ in 0..steps {
        let (next, _) = ifrk4_step(&w, dt, &nonlinear);
        w = next;
    }
    let observed = divergence_field(&w);
    let expected = heat_semigroup_scalar(&div0, dt * steps as f64).unwrap();
    let rel = rel_l2_scalar(&observed, &expected);
    println!(
        "criterion 12: solenoidal branch {clean:.3e}, transported-divergence \
         branch {rel:.3e}"
    );
    assert!(rel <= 1e-8, "divergence did not follow the heat flow: {rel:.3e}");
}
