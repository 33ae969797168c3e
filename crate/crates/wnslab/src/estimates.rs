//! Norm tracking, the weighted energy account, and continuation-time
//! predictors with their calibration helpers.
//!
//! Three groups of functionality:
//!
//! * **Tail norm tracking.** The heat-flow comparison bounds for the tail
//!   part `b` use constants of the `t = 1` heat kernel `W(x) =
//!   (4 pi)^{-3/2} e^{-|x|^2/4}` (computed by radial quadrature, cached):
//!   `sup_t ||b||_r <= 2 eta`, `sup_t sqrt(t) ||grad b||_r <= 2 ||grad W||_1
//!   eta`, and `sup_t t^{3/(2r)} ||b||_inf <= 2 ||W||_{r'} eta` with
//!   `r' = r/(r-1)`.
//!
//! * **Energy account.** For the remainder `v` of a coupled solve, the rate
//!   of `E(t) = ||v||^2_{L^2(Phi^2)}` decomposes as
//!   `dE/dt + 2 ||grad (x) v||^2_{L^2(Phi^2)} = sum_k A_k` with six terms
//!   built from pointwise product rules and the projection split (exact on
//!   the periodic box for any sampled weight; the discrete defect comes from
//!   aliasing, time differentiation, and the integrator). The cutoff
//!   commutator enters as `A_6 = -int Phi^2 |v|^2 (phi_eps * (v . grad
//!   theta_alpha))`; a unit test cross-checks the coefficient numerically
//!   against the closure defect.
//!
//! * **Continuation horizons.** Three predicted time scales and their
//!   combination, each with a calibration routine that fits the single
//!   unknown constant from measured runs by a log-space intercept fit.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::fft::{self, C64};
use crate::grid::Grid;
use crate::mollifier::{self, mollify, MollifierSpec};
use crate::par;
use crate::solver::{projected_advection, CoupledHistory, CoupledTrajectory};
use crate::spectral::{self, grad_tensor};
use crate::weights::weight_samples;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

// ---------------------------------------------------------------------------
// heat-kernel constants by radial quadrature

fn simpson_radial(f: impl Fn(f64) -> f64, upper: f64, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0);
    let h = upper / intervals as f64;
    let mut acc = f(0.0) + f(upper);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

const KERNEL_CUTOFF: f64 = 40.0;
const KERNEL_INTERVALS: usize = 4000;

/// `||grad W||_{L^1}` of the unit-time heat kernel.
pub fn heat_kernel_grad_l1() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        let c = (4.0 * std::f64::consts::PI).powf(-1.5);
        4.0 * std::f64::consts::PI
            * simpson_radial(
                |r| r * r * c * (0.5 * r) * (-r * r / 4.0).exp(),
                KERNEL_CUTOFF,
                KERNEL_INTERVALS,
            )
    })
}

/// `||W||_{L^q}` of the unit-time heat kernel.
pub fn heat_kernel_lq(q: f64) -> f64 {
    assert!(q.is_finite() && q >= 1.0, "q must be >= 1");
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    *guard.entry(q.to_bits()).or_insert_with(|| {
        let c = (4.0 * std::f64::consts::PI).powf(-1.5);
        let int = 4.0
            * std::f64::consts::PI
            * simpson_radial(
                |r| r * r * (c * (-r * r / 4.0).exp()).powf(q),
                KERNEL_CUTOFF,
                KERNEL_INTERVALS,
            );
        int.powf(1.0 / q)
    })
}

// ---------------------------------------------------------------------------
// tail norm tracking

/// One tracked bound: the observed supremum, the ceiling it must stay
/// under, and the verdict.
#[derive(Clone, Copy, Debug)]
pub struct TrackedBound {
    pub observed: f64,
    pub ceiling: f64,
    pub ok: bool,
}

/// The three tail bounds over a run.
#[derive(Clone, Copy, Debug)]
pub struct StarReport {
    /// `sup_t ||b||_r` against `2 eta`.
    pub tail_lr: TrackedBound,
    /// `sup_t sqrt(t) ||grad (x) b||_r` against `2 ||grad W||_1 eta`.
    pub tail_grad: TrackedBound,
    /// `sup_t t^{3/(2r)} ||b||_inf` against `2 ||W||_{r/(r-1)} eta`.
    pub tail_sup: TrackedBound,
}

impl StarReport {
    pub fn all_ok(&self) -> bool {
        self.tail_lr.ok && self.tail_grad.ok && self.tail_sup.ok
    }
}

fn check_eta_r(eta: f64, r: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "smallness level eta must be positive, got {eta}"
        )));
    }
    if !r.is_finite() || r <= 3.0 {
        return Err(Error::InvalidParameter(format!(
            "tail exponent r must exceed 3, got {r}"
        )));
    }
    Ok(())
}

/// Evaluates the three tail bounds on a per-step history.
pub fn star_norms(history: &CoupledHistory, eta: f64, r: f64) -> Result<StarReport> {
    check_eta_r(eta, r)?;
    if history.times.is_empty() {
        return Err(Error::InvalidParameter("empty history".into()));
    }
    let sup = |vals: &[f64], weight: &dyn Fn(f64) -> f64| {
        history
            .times
            .iter()
            .zip(vals)
            .map(|(&t, &v)| weight(t) * v)
            .fold(0.0_f64, f64::max)
    };
    let make = |observed: f64, ceiling: f64| TrackedBound {
        observed,
        ceiling,
        ok: observed <= ceiling,
    };
    let tail_lr = make(sup(&history.b_lr, &|_| 1.0), 2.0 * eta);
    let tail_grad = make(
        sup(&history.b_grad_lr, &|t: f64| t.sqrt()),
        2.0 * heat_kernel_grad_l1() * eta,
    );
    let dual = r / (r - 1.0);
    let tail_sup = make(
        sup(&history.b_sup, &|t: f64| t.powf(1.5 / r)),
        2.0 * heat_kernel_lq(dual) * eta,
    );
    Ok(StarReport {
        tail_lr,
        tail_grad,
        tail_sup,
    })
}

/// First time one of the tail bounds is violated; the final time when the
/// whole run stays within them (then a lower bound on the true horizon).
pub fn star_horizon(history: &CoupledHistory, eta: f64, r: f64) -> Result<f64> {
    check_eta_r(eta, r)?;
    let n = history.times.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty history".into()));
    }
    let grad_ceiling = 2.0 * heat_kernel_grad_l1() * eta;
    let sup_ceiling = 2.0 * heat_kernel_lq(r / (r - 1.0)) * eta;
    for i in 0..n {
        let t = history.times[i];
        let bad = history.b_lr[i] > 2.0 * eta
            || t.sqrt() * history.b_grad_lr[i] > grad_ceiling
            || t.powf(1.5 / r) * history.b_sup[i] > sup_ceiling;
        if bad {
            return Ok(t);
        }
    }
    Ok(history.times[n - 1])
}

/// First time `||v(t)||_{L^2(Phi^2)}` exceeds twice its initial value; the
/// final time when it never does.
pub fn energy_horizon(history: &CoupledHistory) -> f64 {
    let v0 = history.v_l2.first().copied().unwrap_or(0.0);
    for (&t, &v) in history.times.iter().zip(&history.v_l2) {
        if v > 2.0 * v0 {
            return t;
        }
    }
    history.times.last().copied().unwrap_or(0.0)
}

// ---------------------------------------------------------------------------
// energy account

/// Pressure-type scalar `q = sum_{ij} R_i R_j (m_i v_j)` (double Riesz of
/// the dealiased advection products; matches the projection split of
/// `Div(m (x) v)` mode by mode).
pub fn pressure_q(m: &VectorField, v: &VectorField) -> ScalarField {
    assert_eq!(m.grid(), v.grid(), "grid mismatch");
    let grid = m.grid();
    let cells = grid.cells();
    let mut acc = vec![C64::ZERO; cells];
    let mut work = vec![C64::ZERO; cells];
    for i in 0..3 {
        let mi = m.comp(i);
        for j in 0..3 {
            let vj = v.comp(j);
            par::fill_indexed(&mut work, |idx| C64::new(mi[idx] * vj[idx], 0.0));
            fft::forward(grid, &mut work);
            par::update_indexed(&mut acc, |idx, a| {
                if !grid.keep_index(idx) {
                    return a;
                }
                let k = grid.deriv_wavevector(idx);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 {
                    a
                } else {
                    a - (k[i] * k[j] / k2) * work[idx]
                }
            });
        }
    }
    spectral::inverse_scalar(grid, acc)
}

/// One evaluated row of the energy account.
#[derive(Clone, Copy, Debug)]
pub struct BudgetRow {
    pub time: f64,
    /// `dE/dt` by centered differences of the per-step energy history.
    pub lhs_rate: f64,
    /// `2 ||grad (x) v||^2_{L^2(Phi^2)}`.
    pub dissipation: f64,
    /// The six account terms.
    pub terms: [f64; 6],
    /// `|lhs + dissipation - sum terms|` over the largest term magnitude.
    pub defect_rel: f64,
}

fn weighted_sum(grid: Grid, w: &[f64], f: impl Fn(usize) -> f64 + Sync) -> f64 {
    grid.cell_volume() * par::sum_indexed(w.len(), |i| w[i] * f(i))
}

/// Evaluates the energy account of a coupled solve at every stored interior
/// state. `advection = false` restricts the account to the heat term.
pub fn energy_budget(
    traj: &CoupledTrajectory,
    moll: &MollifierSpec,
    dt: f64,
    advection: bool,
) -> Result<Vec<BudgetRow>> {
    if traj.times.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three stored states for interior rows".into(),
        ));
    }
    let grid = traj.v_states[0].grid();
    let w2 = weight_samples(grid, 2.0);
    let hist = &traj.history;
    let energy: Vec<f64> = hist.v_l2.iter().map(|x| x * x).collect();

    let mut rows = Vec::new();
    for s in 1..traj.times.len() - 1 {
        let t = traj.times[s];
        let m = (t / dt).round() as usize;
        if m == 0 || m + 1 >= energy.len() {
            continue;
        }
        debug_assert!((hist.times[m] - t).abs() < 1e-9 * dt.max(1.0));
        let lhs_rate = (energy[m + 1] - energy[m - 1]) / (2.0 * dt);

        let v = &traj.v_states[s];
        let b = &traj.b_states[s];
        let grad_v = grad_tensor(v);
        let mut dissipation = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let g = grad_v.comp(i, j);
                dissipation += weighted_sum(grid, &w2, |idx| g[idx] * g[idx]);
            }
        }
        dissipation *= 2.0;

        let [vx, vy, vz] = v.components();
        let mut vmag2 = vec![0.0; grid.cells()];
        par::fill_indexed(&mut vmag2, |i| vx[i] * vx[i] + vy[i] * vy[i] + vz[i] * vz[i]);

        // heat term: int Phi^2 Lap(|v|^2)
        let lap_v2 = spectral::laplacian(&ScalarField::from_vec(grid, vmag2.clone()));
        let a1 = {
            let d = lap_v2.data();
            weighted_sum(grid, &w2, |i| d[i])
        };

        let mut terms = [a1, 0.0, 0.0, 0.0, 0.0, 0.0];
        if advection {
            let m_b = mollify(b, moll)?;
            let m_v = mollify(v, moll)?;

            // cross advection terms
            let dot_w = |w: &VectorField| {
                let [wx, wy, wz] = w.components();
                weighted_sum(grid, &w2, |i| vx[i] * wx[i] + vy[i] * wy[i] + vz[i] * wz[i])
            };
            terms[1] = -2.0 * dot_w(&projected_advection(&m_v, b));
            terms[2] = -2.0 * dot_w(&projected_advection(&m_b, v));

            // transport of |v|^2 by the mollified remainder
            let flux = VectorField::from_components(
                grid,
                [0, 1, 2].map(|a| {
                    let ma = m_v.comp(a);
                    let mut f = vec![0.0; grid.cells()];
                    par::fill_indexed(&mut f, |i| vmag2[i] * ma[i]);
                    f
                }),
            );
            let div_flux = spectral::divergence_field(&flux);
            terms[3] = -{
                let d = div_flux.data();
                weighted_sum(grid, &w2, |i| d[i])
            };

            // pressure flux
            let q = pressure_q(&m_v, v);
            let qd = q.data();
            let qv = VectorField::from_components(
                grid,
                [0, 1, 2].map(|a| {
                    let va = v.comp(a);
                    let mut f = vec![0.0; grid.cells()];
                    par::fill_indexed(&mut f, |i| qd[i] * va[i]);
                    f
                }),
            );
            let div_qv = spectral::divergence_field(&qv);
            terms[4] = -2.0 * {
                let d = div_qv.data();
                weighted_sum(grid, &w2, |i| d[i])
            };

            // cutoff commutator
            let conv = mollifier::phi_convolve_u_dot_grad_theta(v, moll)?;
            let cd = conv.data();
            terms[5] = -weighted_sum(grid, &w2, |i| vmag2[i] * cd[i]);
        }

        let rhs: f64 = terms.iter().sum();
        let scale = terms
            .iter()
            .map(|x| x.abs())
            .fold(lhs_rate.abs().max(dissipation), f64::max)
            .max(f64::MIN_POSITIVE);
        let defect_rel = (lhs_rate + dissipation - rhs).abs() / scale;
        rows.push(BudgetRow {
            time: t,
            lhs_rate,
            dissipation,
            terms,
            defect_rel,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter(
            "no interior rows with both neighbors in the step history".into(),
        ));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// continuation horizons

/// Everything the horizon formulas need.
#[derive(Clone, Copy, Debug)]
pub struct HorizonInputs {
    pub p: f64,
    pub gamma: f64,
    pub r: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    /// `||u0||_{L^p(Phi^gamma)}`.
    pub input_norm: f64,
    /// `||v0||_{L^2(Phi^2)}`.
    pub v_norm: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// The predicted time scales.
#[derive(Clone, Copy, Debug)]
pub struct HorizonReport {
    /// Scale-dependent horizon `min(1, eps^3 alpha^4 / (C0 ||u0||^2 (2+alpha)^4))`.
    pub t_scales: f64,
    /// Tail horizon `(C1 eta)^{-2r/(r-3)}`.
    pub t_tail: f64,
    /// Energy horizon `(1/C2) / (1 + max(1,alpha)^6 ||v0||^4)`.
    pub t_energy: f64,
    /// `min(t_scales, t_tail/C2, t_energy)`.
    pub t_combined: f64,
}

pub fn existence_horizons(inp: &HorizonInputs) -> Result<HorizonReport> {
    check_eta_r(inp.eta, inp.r)?;
    for (name, v) in [
        ("epsilon", inp.epsilon),
        ("alpha", inp.alpha),
        ("c0", inp.c0),
        ("c1", inp.c1),
        ("c2", inp.c2),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    for (name, v) in [("input_norm", inp.input_norm), ("v_norm", inp.v_norm)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let t_scales = if inp.input_norm == 0.0 {
        1.0
    } else {
        let denom = inp.c0 * inp.input_norm * inp.input_norm * (2.0 + inp.alpha).powi(4);
        (inp.epsilon.powi(3) * inp.alpha.powi(4) / denom).min(1.0)
    };
    let t_tail = (inp.c1 * inp.eta).powf(-2.0 * inp.r / (inp.r - 3.0));
    let amp = inp.alpha.max(1.0).powi(6) * inp.v_norm.powi(4);
    let t_energy = (1.0 / inp.c2) / (1.0 + amp);
    let t_combined = t_scales.min(t_tail / inp.c2).min(t_energy);
    Ok(HorizonReport {
        t_scales,
        t_tail,
        t_energy,
        t_combined,
    })
}

// ---------------------------------------------------------------------------
// calibration

/// One run for the scale-horizon fit.
#[derive(Clone, Copy, Debug)]
pub struct ScaleSample {
    pub epsilon: f64,
    pub alpha: f64,
    pub input_norm: f64,
    /// Measured continuation time.
    pub measured: f64,
}

/// One run for the tail-horizon fit.
#[derive(Clone, Copy, Debug)]
pub struct TailSample {
    pub eta: f64,
    pub measured: f64,
}

/// One run for the energy-horizon fit.
#[derive(Clone, Copy, Debug)]
pub struct EnergySample {
    pub alpha: f64,
    pub v_norm: f64,
    pub measured: f64,
}

fn intercept_fit(logs: Vec<f64>, what: &str) -> Result<f64> {
    if logs.is_empty() {
        return Err(Error::Calibration(format!(
            "no usable samples for the {what} fit"
        )));
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    if !mean.is_finite() {
        return Err(Error::Calibration(format!(
            "degenerate samples for the {what} fit"
        )));
    }
    Ok(mean.exp())
}

/// Fits `C0` from runs with `measured ~ eps^3 alpha^4 / (C0 ||u0||^2
/// (2+alpha)^4)`; samples capped at the unit horizon are excluded.
pub fn calibrate_c0(samples: &[ScaleSample]) -> Result<f64> {
    let logs = samples
        .iter()
        .filter(|s| {
            s.measured.is_finite()
                && s.measured > 0.0
                && s.measured < 1.0
                && s.epsilon > 0.0
                && s.alpha > 0.0
                && s.input_norm > 0.0
        })
        .map(|s| {
            let x = s.epsilon.powi(3) * s.alpha.powi(4)
                / (s.input_norm * s.input_norm * (2.0 + s.alpha).powi(4));
            x.ln() - s.measured.ln()
        })
        .collect();
    intercept_fit(logs, "scale-horizon")
}

/// Fits `C1` from runs with `measured ~ (C1 eta)^{-2r/(r-3)}` (fixed
/// slope; intercept only).
pub fn calibrate_c1(samples: &[TailSample], r: f64) -> Result<f64> {
    if !r.is_finite() || r <= 3.0 {
        return Err(Error::InvalidParameter(format!(
            "tail exponent r must exceed 3, got {r}"
        )));
    }
    let expo = (r - 3.0) / (2.0 * r);
    let logs = samples
        .iter()
        .filter(|s| s.measured.is_finite() && s.measured > 0.0 && s.eta > 0.0)
        .map(|s| -expo * s.measured.ln() - s.eta.ln())
        .collect();
    intercept_fit(logs, "tail-horizon")
}

/// Fits `C2` from runs with `measured ~ (1/C2)/(1 + max(1,alpha)^6
/// ||v0||^4)`.
pub fn calibrate_c2(samples: &[EnergySample]) -> Result<f64> {
    let logs = samples
        .iter()
        .filter(|s| s.measured.is_finite() && s.measured > 0.0 && s.alpha > 0.0)
        .map(|s| {
            let amp = 1.0 + s.alpha.max(1.0).powi(6) * s.v_norm.powi(4);
            -(s.measured * amp).ln()
        })
        .collect();
    intercept_fit(logs, "energy-horizon")
}

/// Fits `C1` directly from run histories: the measured time is the first
/// tail-bound violation (or the run horizon as a lower bound).
pub fn calibrate_c1_star(runs: &[(&CoupledHistory, f64)], r: f64) -> Result<f64> {
    let samples: Result<Vec<TailSample>> = runs
        .iter()
        .map(|&(h, eta)| {
            Ok(TailSample {
                eta,
                measured: star_horizon(h, eta, r)?,
            })
        })
        .collect();
    calibrate_c1(&samples?, r)
}

/// Fits `C2` directly from run histories: the measured time is the first
/// energy doubling (or the run horizon as a lower bound).
pub fn calibrate_c2_star(runs: &[(&CoupledHistory, f64)]) -> Result<f64> {
    let samples: Vec<EnergySample> = runs
        .iter()
        .map(|&(h, alpha)| EnergySample {
            alpha,
            v_norm: h.v_l2.first().copied().unwrap_or(0.0),
            measured: energy_horizon(h),
        })
        .collect();
    calibrate_c2(&samples)
}
