//! Power-of-two scaling symmetry and its consistency check.
//!
//! The equation's scaling map is `u_lambda(t, x) = (1/lambda) u(t/lambda^2,
//! x/lambda)` with the parameter map `(eps, alpha) -> (lambda eps,
//! alpha/lambda)`. For `lambda = 2^{-j}` (`j >= 1`) the spatial map sends
//! grid points to grid points modulo the box, so the field map is exact in
//! spectral space: mode `m` goes to `2^j m` with amplitude `2^j`, and modes
//! pushed beyond the band are dropped (the dropped energy fraction is
//! reported — spectrally concentrated data loses nothing).
//!
//! [`choose_lambda`] picks the largest `lambda = 2^{-j}` that makes the
//! energy-horizon criterion `lambda^2 (1 + ||u_lambda||^4) < 1/(C2 T)` pass,
//! and [`rescale_consistency`] compares "solve, then rescale" against
//! "rescale, then solve with mapped parameters and step" at matched times.

use crate::error::{Error, Result};
use crate::fft::{self, C64};
use crate::field::VectorField;
use crate::mollifier::MollifierSpec;
use crate::solver::{solve_mollified, SolverConfig};
use crate::weights::weighted_lp_norm;

/// Result of the exact spectral zoom.
#[derive(Clone, Debug)]
pub struct RescaleOutcome {
    pub field: VectorField,
    /// Fraction of the spectral energy carried by modes pushed out of the
    /// band (0 for band-concentrated data).
    pub dropped_energy: f64,
    pub lambda: f64,
}

/// Applies `u -> (1/lambda) u(x/lambda)` for `lambda = 2^{-j}`, `j >= 1`.
pub fn rescale_field(u: &VectorField, j: u32) -> Result<RescaleOutcome> {
    if j == 0 {
        return Err(Error::Rescale("zoom level j must be at least 1".into()));
    }
    if j > 16 {
        return Err(Error::Rescale(format!("zoom level j = {j} out of range")));
    }
    let grid = u.grid();
    let n = grid.n() as i64;
    let factor = 1_i64 << j;
    let half = n / 2;
    let amp = factor as f64;

    let mut total = 0.0;
    let mut kept = 0.0;
    let comps = [0, 1, 2].map(|a| {
        let mut spec = fft::to_complex(u.comp(a));
        fft::forward(grid, &mut spec);
        let mut out = vec![C64::ZERO; grid.cells()];
        // sequential scatter: each target bin written at most once
        for idx in 0..spec.len() {
            let m = grid.modes(idx);
            let v = spec[idx];
            total += v.norm_sqr();
            let t = [m[0] * factor, m[1] * factor, m[2] * factor];
            // keep only targets with a paired mode on the grid
            if t.iter().any(|&c| !(-half + 1..half).contains(&c)) {
                continue;
            }
            kept += v.norm_sqr();
            let wrap = |c: i64| if c < 0 { (c + n) as usize } else { c as usize };
            let tidx = wrap(t[0]) + grid.n() * (wrap(t[1]) + grid.n() * wrap(t[2]));
            // raw bins carry the (-1)^(sum m) phase of the -L/2 offset;
            // the target phase is +1 since 2^j m is even in every entry
            let sign = if (m[0] + m[1] + m[2]).rem_euclid(2) == 1 {
                -1.0
            } else {
                1.0
            };
            out[tidx] = sign * amp * v;
        }
        fft::inverse(grid, &mut out);
        fft::real_part(&out)
    });
    let dropped_energy = if total == 0.0 { 0.0 } else { 1.0 - kept / total };
    Ok(RescaleOutcome {
        field: VectorField::from_components(grid, comps),
        dropped_energy,
        lambda: 0.5_f64.powi(j as i32),
    })
}

/// Outcome of the zoom-level search.
#[derive(Clone, Debug)]
pub struct LambdaChoice {
    pub j: u32,
    pub lambda: f64,
    /// Cutoff scale `1/lambda` after the zoom.
    pub alpha_out: f64,
    /// `||u_lambda||_{L^2(Phi^2)}` at the accepted level.
    pub rescaled_norm: f64,
    pub outcome: RescaleOutcome,
}

const DROP_BUDGET: f64 = 1e-6;
const MAX_ZOOM: u32 = 8;

/// Finds the smallest `j >= 1` with `lambda^2 (1 + ||rescale(v0)||^4) <
/// 1/(C2 T)` for `lambda = 2^{-j}`. Fails when the zoom would drop more
/// than a 1e-6 energy fraction or no level up to `2^-8` works.
pub fn choose_lambda(v0: &VectorField, c2: f64, horizon: f64) -> Result<LambdaChoice> {
    if !c2.is_finite() || c2 <= 0.0 || !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(
            "energy constant and horizon must be positive".into(),
        ));
    }
    let target = 1.0 / (c2 * horizon);
    for j in 1..=MAX_ZOOM {
        let out = rescale_field(v0, j)?;
        if out.dropped_energy > DROP_BUDGET {
            return Err(Error::Rescale(format!(
                "zoom level {j} drops energy fraction {:.3e} (> {DROP_BUDGET:.0e})",
                out.dropped_energy
            )));
        }
        let lambda = out.lambda;
        let norm = weighted_lp_norm(&out.field, 2.0, 2.0)?.value;
        if lambda * lambda * (1.0 + norm.powi(4)) < target {
            return Ok(LambdaChoice {
                j,
                lambda,
                alpha_out: 1.0 / lambda,
                rescaled_norm: norm,
                outcome: out,
            });
        }
    }
    Err(Error::Rescale(format!(
        "no zoom level up to 2^-{MAX_ZOOM} satisfies the energy-horizon criterion"
    )))
}

/// Relative mismatch of the two routes around the scaling square.
#[derive(Clone, Debug)]
pub struct RescaleReport {
    /// `||rescale(solve(u0)) - solve(rescale(u0))|| / ||rescale(solve(u0))||`
    /// in `L^2(Phi^4)` at the matched final time.
    pub mismatch: f64,
    pub dropped_energy: f64,
    pub lambda: f64,
}

/// Runs both routes around the scaling square with `lambda = 2^{-j}`:
/// route a solves with `(eps, alpha)` for `steps` steps of `dt` and then
/// rescales; route b rescales first and solves with `(lambda eps,
/// alpha/lambda)` for the same number of steps of `lambda^2 dt`.
pub fn rescale_consistency(
    u0: &VectorField,
    moll: &MollifierSpec,
    dt: f64,
    steps: usize,
    j: u32,
) -> Result<RescaleReport> {
    let grid = u0.grid();
    let lambda = 0.5_f64.powi(j as i32);

    let mut cfg_a = SolverConfig::new(dt, steps, *moll);
    cfg_a.save_every = steps;
    let traj_a = solve_mollified(u0, &cfg_a)?;
    if traj_a.blowup.is_some() {
        return Err(Error::Rescale("route a flagged a blowup".into()));
    }
    let out_a = rescale_field(traj_a.final_state(), j)?;

    let start_b = rescale_field(u0, j)?;
    let moll_b = moll.rescaled(lambda)?;
    moll_b.check_fits(grid)?;
    let mut cfg_b = SolverConfig::new(lambda * lambda * dt, steps, moll_b);
    cfg_b.save_every = steps;
    let traj_b = solve_mollified(&start_b.field, &cfg_b)?;
    if traj_b.blowup.is_some() {
        return Err(Error::Rescale("route b flagged a blowup".into()));
    }

    let diff = out_a.field.lin_comb(1.0, -1.0, traj_b.final_state());
    let num = weighted_lp_norm(&diff, 2.0, 4.0)?.value;
    let den = weighted_lp_norm(&out_a.field, 2.0, 4.0)?.value;
    if den == 0.0 {
        return Err(Error::Rescale("route a ends at the zero field".into()));
    }
    Ok(RescaleReport {
        mismatch: num / den,
        dropped_energy: out_a.dropped_energy.max(start_b.dropped_energy),
        lambda,
    })
}
