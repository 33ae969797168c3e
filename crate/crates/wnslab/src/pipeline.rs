//! End-to-end runs: generate an initial field, split it, evolve the coupled
//! tail/remainder system, measure the tracked bounds and predicted horizons,
//! and leave a reproducible artifact trail (snapshots, CSV diagnostics, and
//! a digest manifest).
//!
//! Also hosts the refinement study: solve the same data under successively
//! sharper smoothing/cutoff pairs `(epsilon0 / 2^n, alpha0 / 2^n)` and report
//! pairwise trajectory distances plus, per level, the time-integrated
//! residual the trajectory leaves in the unmodified advection equation,
//! measured in a weak weighted norm.

use std::path::Path;
use std::time::Instant;

use crate::config::{FieldKind, RunConfig};
use crate::diagnostics::{self, coupled_rows};
use crate::error::{Error, Result};
use crate::estimates::{existence_horizons, star_norms, HorizonInputs, HorizonReport, StarReport};
use crate::field::VectorField;
use crate::manifest::Manifest;
use crate::mollifier::MollifierSpec;
use crate::snapshot::write_snapshot;
use crate::solver::{
    projected_advection, solve_coupled, solve_mollified, CoupledConfig, Trajectory,
};
use crate::spectral;
use crate::split::split_divergence_free;
use crate::testfields;
use crate::weights::{weighted_hs_norm, weighted_lp_norm};

/// Divergence gate applied to generated fields before splitting.
pub const DIV_TOL: f64 = 1e-8;

/// Builds the initial field the config asks for.
pub fn initial_field(cfg: &RunConfig) -> Result<VectorField> {
    let grid = cfg.grid()?;
    Ok(match cfg.field {
        FieldKind::TaylorGreen => {
            testfields::windowed_taylor_green(grid, cfg.amplitude, cfg.sigma)
        }
        FieldKind::Bump => testfields::gaussian_curl(grid, cfg.amplitude, cfg.sigma),
        FieldKind::HeavyTail => testfields::heavy_tail(grid, cfg.amplitude, cfg.decay),
        FieldKind::Random => {
            testfields::random_band(grid, cfg.amplitude, cfg.max_mode, cfg.seed)
        }
    })
}

/// Key numbers of one pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineSummary {
    /// Selected threshold amplitude of the split.
    pub threshold: f64,
    /// `||tail||_{L^r}` at the selected threshold.
    pub achieved: f64,
    /// `||u0||_{L^p(Phi^gamma)}`.
    pub input_norm: f64,
    /// `||v0||_{L^2(Phi^2)}`.
    pub v_norm: f64,
    /// Tracked tail bounds over the run.
    pub star: StarReport,
    /// Predicted existence horizons for the configure constants.
    pub horizons: HorizonReport,
    /// `max_t ||R_v|| / max_t ||v||` of the remainder integration residual.
    pub residual_ratio: f64,
    /// Set when the solve was cut short by an amplitude blowup.
    pub blowup: Option<(usize, f64)>,
    /// Last time reached.
    pub final_time: f64,
}

impl PipelineSummary {
    /// Stable plain-text rendering (also written as `summary.txt`).
    pub fn render_text(&self) -> String {
        let b = |t: &crate::estimates::TrackedBound| {
            format!(
                "{:.6e} vs ceiling {:.6e} ({})",
                t.observed,
                t.ceiling,
                if t.ok { "ok" } else { "VIOLATED" }
            )
        };
        let mut out = String::new();
        out.push_str(&format!("threshold       {:.6e}\n", self.threshold));
        out.push_str(&format!("tail_norm       {:.6e}\n", self.achieved));
        out.push_str(&format!("input_norm      {:.6e}\n", self.input_norm));
        out.push_str(&format!("remainder_norm  {:.6e}\n", self.v_norm));
        out.push_str(&format!("tail_lr         {}\n", b(&self.star.tail_lr)));
        out.push_str(&format!("tail_grad       {}\n", b(&self.star.tail_grad)));
        out.push_str(&format!("tail_sup        {}\n", b(&self.star.tail_sup)));
        out.push_str(&format!("t_scales        {:.6e}\n", self.horizons.t_scales));
        out.push_str(&format!("t_tail          {:.6e}\n", self.horizons.t_tail));
        out.push_str(&format!("t_energy        {:.6e}\n", self.horizons.t_energy));
        out.push_str(&format!("t_combined      {:.6e}\n", self.horizons.t_combined));
        out.push_str(&format!("residual_ratio  {:.6e}\n", self.residual_ratio));
        out.push_str(&format!("final_time      {:.6e}\n", self.final_time));
        match self.blowup {
            Some((step, time)) => {
                out.push_str(&format!("blowup          step {step} time {time:.6e}\n"))
            }
            None => out.push_str("blowup          none\n"),
        }
        out
    }
}

/// Runs the full pipeline and writes artifacts into `outdir` (which must
/// exist): `u0.field`, `tail0.field`, `remainder0.field`, `tail_end.field`,
/// `remainder_end.field`, `diagnostics.csv`, `summary.txt`, `manifest.txt`.
pub fn run_pipeline(cfg: &RunConfig, outdir: impl AsRef<Path>) -> Result<PipelineSummary> {
    let outdir = outdir.as_ref();
    let started = Instant::now();

    let u0 = initial_field(cfg)?;
    let scfg = cfg.split_config()?;
    let split = split_divergence_free(&u0, &scfg, DIV_TOL)?;
    let v_norm = weighted_lp_norm(&split.v0, 2.0, 2.0)?.value;

    let mut base = cfg.solver_config()?;
    base.residual_gamma = 2.0; // remainder residual lives in L^2(Phi^2)
    let ccfg = CoupledConfig {
        base,
        tail_exponent: cfg.r,
    };
    let traj = solve_coupled(&split.b0, &split.v0, &ccfg)?;

    let star = star_norms(&traj.history, cfg.eta, cfg.r)?;
    let horizons = existence_horizons(&HorizonInputs {
        p: cfg.p,
        gamma: cfg.gamma,
        r: cfg.r,
        eta: cfg.eta,
        epsilon: cfg.epsilon,
        alpha: cfg.alpha,
        input_norm: split.input_norm,
        v_norm,
        c0: cfg.c0,
        c1: cfg.c1,
        c2: cfg.c2,
    })?;
    let residual_ratio = traj.v_residual.as_ref().map_or(0.0, |t| t.ratio());

    let summary = PipelineSummary {
        threshold: split.threshold,
        achieved: split.achieved,
        input_norm: split.input_norm,
        v_norm,
        star,
        horizons,
        residual_ratio,
        blowup: traj.blowup.as_ref().map(|b| (b.step, b.time)),
        final_time: *traj.times.last().expect("at least the initial time"),
    };

    let config_text = cfg.to_file_string();
    let mut manifest = Manifest::new(&config_text);
    let final_time = summary.final_time;
    let snapshots: [(&str, &VectorField, f64); 5] = [
        ("u0.field", &u0, 0.0),
        ("tail0.field", &split.b0, 0.0),
        ("remainder0.field", &split.v0, 0.0),
        ("tail_end.field", traj.b_states.last().unwrap(), final_time),
        (
            "remainder_end.field",
            traj.v_states.last().unwrap(),
            final_time,
        ),
    ];
    for (name, field, time) in snapshots {
        let path = outdir.join(name);
        write_snapshot(&path, field, time)?;
        manifest.add_file(&path)?;
    }
    let csv = outdir.join("diagnostics.csv");
    diagnostics::write_csv(&csv, &coupled_rows(&traj, cfg.r))?;
    manifest.add_file(&csv)?;
    let sum_path = outdir.join("summary.txt");
    std::fs::write(&sum_path, summary.render_text())
        .map_err(|e| Error::io(sum_path.display().to_string(), e))?;
    manifest.add_file(&sum_path)?;

    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.write(outdir.join("manifest.txt"))?;
    Ok(summary)
}

/// Result of the smoothing/cutoff refinement study.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// Smoothing scale per level.
    pub epsilons: Vec<f64>,
    /// Cutoff parameter per level.
    pub alphas: Vec<f64>,
    /// Shared save times.
    pub times: Vec<f64>,
    /// `d(m, n)`: distance in `L^2((0,T); L^2(Phi^4))` between levels.
    pub distances: Vec<Vec<f64>>,
    /// Per level, `sqrt(int ||R||_{H^{-4}(Phi^8)}^2 dt)` over the interior
    /// save times, where `R` is the defect in the unmodified advection
    /// equation.
    pub residuals: Vec<f64>,
}

impl ConvergenceReport {
    /// Distances between consecutive refinement levels.
    pub fn adjacent_distances(&self) -> Vec<f64> {
        (1..self.distances.len())
            .map(|n| self.distances[n - 1][n])
            .collect()
    }
}

/// Solves the configured data under `levels` sharpenings of the
/// smoothing/cutoff pair and compares the trajectories.
pub fn convergence_study(cfg: &RunConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::InvalidParameter(
            "refinement study needs at least two levels".into(),
        ));
    }
    if cfg.steps % cfg.save_every != 0 {
        return Err(Error::InvalidParameter(
            "refinement study needs steps divisible by save_every \
             (uniform save times for time differencing)"
                .into(),
        ));
    }
    let u0 = initial_field(cfg)?;
    let mut trajectories: Vec<Trajectory> = Vec::with_capacity(levels);
    let mut epsilons = Vec::with_capacity(levels);
    let mut alphas = Vec::with_capacity(levels);
    for n in 0..levels {
        let scale = 2f64.powi(n as i32);
        let eps = cfg.epsilon / scale;
        let alpha = cfg.alpha / scale;
        let mut run = cfg.solver_config()?;
        run.mollifier = MollifierSpec::new(eps, alpha)?;
        run.track_residual = false;
        let traj = solve_mollified(&u0, &run)?;
        if let Some(b) = &traj.blowup {
            return Err(Error::InvalidParameter(format!(
                "level {n} blew up at step {} (time {:.3e})",
                b.step, b.time
            )));
        }
        epsilons.push(eps);
        alphas.push(alpha);
        trajectories.push(traj);
    }

    let times = trajectories[0].times.clone();
    let mut distances = vec![vec![0.0; levels]; levels];
    for m in 0..levels {
        for n in (m + 1)..levels {
            let d = trajectory_distance(&trajectories[m], &trajectories[n], 4.0)?;
            distances[m][n] = d;
            distances[n][m] = d;
        }
    }
    let mut residuals = Vec::with_capacity(levels);
    for traj in &trajectories {
        residuals.push(advection_defect(traj)?);
    }
    Ok(ConvergenceReport {
        epsilons,
        alphas,
        times,
        distances,
        residuals,
    })
}

/// `sqrt(int_0^T ||a(t) - b(t)||_{L^2(Phi^gamma)}^2 dt)` by the trapezoid
/// rule on the shared save times.
pub fn trajectory_distance(a: &Trajectory, b: &Trajectory, gamma: f64) -> Result<f64> {
    if a.times.len() != b.times.len() || a.times != b.times {
        return Err(Error::InvalidParameter(
            "trajectories must share their save times".into(),
        ));
    }
    let mut sq = Vec::with_capacity(a.times.len());
    for (ua, ub) in a.states.iter().zip(&b.states) {
        let mut diff = ua.clone();
        diff.axpy(-1.0, ub);
        let n = weighted_lp_norm(&diff, 2.0, gamma)?.value;
        sq.push(n * n);
    }
    Ok(trapezoid(&a.times, &sq).sqrt())
}

/// Time-integrated weak-norm defect of a trajectory in the unmodified
/// advection equation: centered time differences of the stored states give
/// `d_t u`, and `R = d_t u - Lap u + P Div(u (x) u)` is measured in
/// `H^{-4}(Phi^8)` on the interior save times.
pub fn advection_defect(traj: &Trajectory) -> Result<f64> {
    let k = traj.states.len();
    if k < 3 {
        return Err(Error::InvalidParameter(
            "defect needs at least three stored states".into(),
        ));
    }
    let dt = traj.times[1] - traj.times[0];
    let mut times = Vec::with_capacity(k - 2);
    let mut sq = Vec::with_capacity(k - 2);
    for i in 1..k - 1 {
        let u = &traj.states[i];
        let mut r = traj.states[i + 1].clone();
        r.axpy(-1.0, &traj.states[i - 1]);
        r.scale(1.0 / (2.0 * dt));
        for axis in 0..3 {
            let lap = spectral::laplacian(&crate::field::ScalarField::from_vec(
                u.grid(),
                u.comp(axis).to_vec(),
            ));
            for (out, l) in r.comp_mut(axis).iter_mut().zip(lap.data()) {
                *out -= l;
            }
        }
        r.axpy(1.0, &projected_advection(u, u));
        times.push(traj.times[i]);
        let n = weighted_hs_norm(&r, -4.0, 8.0)?.value;
        sq.push(n * n);
    }
    Ok(trapezoid(&times, &sq).sqrt())
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::sha256_file;

    fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.n = 16;
        cfg.box_length = 16.0;
        cfg.field = FieldKind::Bump;
        cfg.amplitude = 0.6;
        cfg.sigma = 2.0;
        cfg.eta = 0.3;
        cfg.dt = 5e-3;
        cfg.steps = 6;
        cfg.save_every = 2;
        cfg
    }

    #[test]
    fn pipeline_writes_consistent_artifacts() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_pipeline(&cfg, dir.path()).unwrap();
        assert!(summary.final_time > 0.0);
        assert!(summary.blowup.is_none());
        assert!(summary.residual_ratio < 1e-3);
        assert!(summary.horizons.t_combined > 0.0);

        let names = [
            "u0.field",
            "tail0.field",
            "remainder0.field",
            "tail_end.field",
            "remainder_end.field",
            "diagnostics.csv",
            "summary.txt",
            "manifest.txt",
        ];
        for name in names {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        for name in &names[..names.len() - 1] {
            assert!(manifest.contains(&format!("artifact {name} sha256 ")));
        }

        // a second run reproduces the data artifacts bit for bit
        let dir2 = tempfile::tempdir().unwrap();
        run_pipeline(&cfg, dir2.path()).unwrap();
        for name in ["u0.field", "remainder_end.field", "diagnostics.csv", "summary.txt"] {
            assert_eq!(
                sha256_file(dir.path().join(name)).unwrap(),
                sha256_file(dir2.path().join(name)).unwrap(),
                "{name} differs between identical runs"
            );
        }
    }

    #[test]
    fn refinement_study_reports_symmetric_distances() {
        let mut cfg = tiny_config();
        // the plateau radius grows like 1/alpha under refinement, so the
        // starting cutoff must be large enough for every level to fit
        cfg.epsilon = 0.5;
        cfg.alpha = 2.5;
        let report = convergence_study(&cfg, 3).unwrap();
        assert_eq!(report.epsilons, vec![0.5, 0.25, 0.125]);
        assert_eq!(report.alphas, vec![2.5, 1.25, 0.625]);
        for m in 0..3 {
            assert_eq!(report.distances[m][m], 0.0);
            for n in 0..3 {
                assert_eq!(report.distances[m][n], report.distances[n][m]);
                if m != n {
                    assert!(report.distances[m][n] > 0.0);
                }
            }
        }
        assert_eq!(report.adjacent_distances().len(), 2);
        assert!(report.residuals.iter().all(|r| r.is_finite() && *r > 0.0));
    }

    #[test]
    fn refinement_study_validates_inputs() {
        let cfg = tiny_config();
        assert!(matches!(
            convergence_study(&cfg, 1),
            Err(Error::InvalidParameter(_))
        ));
        let mut bad = tiny_config();
        bad.save_every = 4; // 6 % 4 != 0
        assert!(matches!(
            convergence_study(&bad, 2),
            Err(Error::InvalidParameter(_))
        ));
    }
}
