//! Time integration of the mollified advection equation
//!
//! ```text
//! d_t u = Lap u - P Div( (phi_eps * (theta_alpha u)) (x) u ),
//! ```
//!
//! and of the coupled tail/remainder system obtained by splitting
//! `u = b + v` (the advecting field is linear in `u`, so the coupled solve
//! reproduces the plain one exactly):
//!
//! ```text
//! d_t b = Lap b - P Div(m_b (x) b),
//! d_t v = Lap v - P Div(m_b (x) v) - P Div(m_v (x) u),    m_w = phi_eps * (theta_alpha w).
//! ```
//!
//! The scheme is a fourth-order integrating-factor Runge-Kutta step: with
//! `E = e^{(dt/2) Lap}` applied spectrally (exact heat flow) and `N` the
//! projected advection term,
//!
//! ```text
//! k1 = N(u)                       k3 = N(E u + (dt/2) k2)
//! k2 = N(E (u + (dt/2) k1))       k4 = N(E^2 u + dt E k3)
//! u' = E^2 u + (dt/6) (E^2 k1 + 2 E k2 + 2 E k3 + k4)
//! ```
//!
//! With advection disabled the step reduces to the exact heat semigroup.
//! Divergence-free data stays divergence-free to roundoff: every `N` output
//! is Leray-projected and all other operations are diagonal in Fourier
//! space.
//!
//! The solver can track the mild-form defect online: with
//! `G(t) = P Div(m (x) u) = -N(u)` the exact solution satisfies
//! `u(t) = e^{t Lap} u0 - int_0^t e^{(t-s) Lap} G(s) ds`, and the residual
//! `R(t) = u(t) - e^{t Lap} u0 + I(t)` is accumulated with a trapezoid rule
//! compounded step by step (`I_{m+1} = e^{dt Lap} I_m + (dt/2)(e^{dt Lap}
//! G_m + G_{m+1})`), reusing the `k1` evaluation of each step for `G`.

use crate::error::{Error, Result};
use crate::fft::{self, C64};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::Grid;
use crate::mollifier::{mollify, MollifierSpec};
use crate::par;
use crate::spectral::{self, heat_semigroup, inverse_vector};
use crate::weights::weighted_lp_norm;

/// Amplitude growth factor over the initial state that flags a blowup.
pub const BLOWUP_FACTOR: f64 = 1e8;

/// Step size, horizon, and bookkeeping options for a solve.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Time step.
    pub dt: f64,
    /// Number of steps to take.
    pub steps: usize,
    /// Mollifier/cutoff pair for the advecting field.
    pub mollifier: MollifierSpec,
    /// Store the state every this many steps (the initial and final states
    /// are always stored).
    pub save_every: usize,
    /// When false, drop the advection term entirely (pure heat flow).
    pub advection: bool,
    /// Track the mild-form residual online.
    pub track_residual: bool,
    /// Weight exponent of the `L^2` norm used for the residual report.
    pub residual_gamma: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, steps: usize, mollifier: MollifierSpec) -> Self {
        Self {
            dt,
            steps,
            mollifier,
            save_every: 1,
            advection: true,
            track_residual: false,
            residual_gamma: 4.0,
        }
    }

    /// Checks the step size and the mollifier support against the grid.
    pub fn validate(&self, grid: Grid) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        let h = grid.spacing();
        let dt_max = 0.9 * h * h / 6.0;
        if self.dt > dt_max {
            return Err(Error::InvalidParameter(format!(
                "time step {} exceeds the stability budget {dt_max:.3e} for spacing {h:.3e}",
                self.dt
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("step count must be positive".into()));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidParameter("save stride must be positive".into()));
        }
        self.mollifier.check_fits(grid)
    }
}

/// Where and how large the state was when a solve was cut short.
#[derive(Clone, Copy, Debug)]
pub struct BlowupReport {
    pub step: usize,
    pub time: f64,
    pub amplitude: f64,
}

/// Mild-form residual history: `||R(t)||` and `||u(t)||` in the configured
/// weighted `L^2` norm at every step.
#[derive(Clone, Debug, Default)]
pub struct ResidualTrack {
    pub times: Vec<f64>,
    pub residual_norm: Vec<f64>,
    pub state_norm: Vec<f64>,
}

impl ResidualTrack {
    /// `max_t ||R|| / max_t ||u||` (0 for an empty or zero track).
    pub fn ratio(&self) -> f64 {
        let max = |v: &[f64]| v.iter().cloned().fold(0.0_f64, f64::max);
        let num = max(&self.residual_norm);
        let den = max(&self.state_norm);
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Output of a plain mollified solve.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Times of the stored states.
    pub times: Vec<f64>,
    /// Stored states (stride `save_every`, plus the final state).
    pub states: Vec<VectorField>,
    /// Time and max-amplitude after every step.
    pub amp_times: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Mild-form residual history when tracking was requested.
    pub residual: Option<ResidualTrack>,
    /// Set when the solve was cut short.
    pub blowup: Option<BlowupReport>,
}

impl Trajectory {
    pub fn final_state(&self) -> &VectorField {
        self.states.last().expect("trajectory stores at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory stores at least the initial state")
    }
}

/// Dealiased projected advection `P Div(m (x) u)` in one fused spectral
/// pass (the advecting slot `m` is contracted by the divergence).
pub fn projected_advection(m: &VectorField, u: &VectorField) -> VectorField {
    assert_eq!(m.grid(), u.grid(), "grid mismatch");
    let grid = m.grid();
    let cells = grid.cells();
    let mut spec: [Vec<C64>; 3] = [(); 3].map(|_| vec![C64::ZERO; cells]);
    let mut work = vec![C64::ZERO; cells];
    for j in 0..3 {
        let uj = u.comp(j);
        for i in 0..3 {
            let mi = m.comp(i);
            par::fill_indexed(&mut work, |idx| C64::new(mi[idx] * uj[idx], 0.0));
            fft::forward(grid, &mut work);
            let out = &mut spec[j];
            par::update_indexed(out, |idx, v| {
                if grid.keep_index(idx) {
                    let k = grid.deriv_wavevector(idx)[i];
                    v + C64::new(0.0, k) * work[idx]
                } else {
                    C64::ZERO
                }
            });
        }
    }
    spectral::leray_in_spec(grid, &mut spec);
    inverse_vector(grid, spec)
}

/// Half-step heat propagator applied spectrally.
fn half_heat(u: &VectorField, dt: f64) -> VectorField {
    heat_semigroup(u, 0.5 * dt).expect("nonnegative half step")
}

/// One integrating-factor RK4 step; returns the new state and the `k1`
/// evaluation (the advection term at the step's start, for residual reuse).
///
/// Public as a building block for consistency checks that need to drive the
/// scheme outside [`solve_mollified`] (for example on data that would not
/// pass its divergence gate).
pub fn ifrk4_step<N>(u: &VectorField, dt: f64, nonlinear: &N) -> (VectorField, VectorField)
where
    N: Fn(&VectorField) -> VectorField,
{
    let k1 = nonlinear(u);
    let eu = half_heat(u, dt);
    let e2u = half_heat(&eu, dt);
    let k2 = nonlinear(&half_heat(&u.lin_comb(1.0, 0.5 * dt, &k1), dt));
    let k3 = nonlinear(&eu.lin_comb(1.0, 0.5 * dt, &k2));
    let ek3 = half_heat(&k3, dt);
    let k4 = nonlinear(&e2u.lin_comb(1.0, dt, &ek3));
    let e2k1 = half_heat(&half_heat(&k1, dt), dt);
    let ek2 = half_heat(&k2, dt);
    let mut next = e2u;
    next.axpy(dt / 6.0, &e2k1);
    next.axpy(dt / 3.0, &ek2);
    next.axpy(dt / 3.0, &ek3);
    next.axpy(dt / 6.0, &k4);
    (next, k1)
}

struct ResidualState {
    accum: VectorField,
    heat_u0: VectorField,
    prev_g: VectorField,
    gamma: f64,
    track: ResidualTrack,
}

impl ResidualState {
    fn new(u0: &VectorField, g0: VectorField, gamma: f64) -> Result<Self> {
        let mut track = ResidualTrack::default();
        track.times.push(0.0);
        track.residual_norm.push(0.0);
        track
            .state_norm
            .push(weighted_lp_norm(u0, 2.0, gamma)?.value);
        Ok(Self {
            accum: VectorField::zeros(u0.grid()),
            heat_u0: u0.clone(),
            prev_g: g0,
            gamma,
            track,
        })
    }

    /// Advances the accumulated integral by one step and records the
    /// residual at time `t` for state `u` with `g = G(t)`.
    fn advance(&mut self, dt: f64, t: f64, u: &VectorField, g: VectorField) -> Result<()> {
        let mut accum = heat_semigroup(&self.accum, dt)?;
        let heat_prev = heat_semigroup(&self.prev_g, dt)?;
        accum.axpy(0.5 * dt, &heat_prev);
        accum.axpy(0.5 * dt, &g);
        self.accum = accum;
        self.heat_u0 = heat_semigroup(&self.heat_u0, dt)?;
        self.prev_g = g;
        let residual = u
            .lin_comb(1.0, -1.0, &self.heat_u0)
            .lin_comb(1.0, 1.0, &self.accum);
        self.track.times.push(t);
        self.track
            .residual_norm
            .push(weighted_lp_norm(&residual, 2.0, self.gamma)?.value);
        self.track
            .state_norm
            .push(weighted_lp_norm(u, 2.0, self.gamma)?.value);
        Ok(())
    }
}

fn check_divergence_free(u: &VectorField, what: &str) -> Result<()> {
    let rel = spectral::divergence_rel(u);
    if rel > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "{what} has relative divergence {rel:.3e} (must be divergence-free)"
        )));
    }
    Ok(())
}

/// Integrates the mollified advection equation from `u0`.
pub fn solve_mollified(u0: &VectorField, cfg: &SolverConfig) -> Result<Trajectory> {
    let grid = u0.grid();
    cfg.validate(grid)?;
    check_divergence_free(u0, "initial state")?;
    let moll = cfg.mollifier;
    let advection = cfg.advection;
    let nonlinear = move |u: &VectorField| -> VectorField {
        if !advection {
            return VectorField::zeros(u.grid());
        }
        let m = mollify(u, &moll).expect("mollifier fit checked by validate");
        let mut n = projected_advection(&m, u);
        n.scale(-1.0);
        n
    };

    let amp0 = u0.max_abs().max(f64::MIN_POSITIVE);
    let mut u = u0.clone();
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut amp_times = vec![0.0];
    let mut amplitudes = vec![u0.max_abs()];
    let mut residual: Option<ResidualState> = None;
    let mut blowup = None;

    for step in 0..cfg.steps {
        let (next, k1) = ifrk4_step(&u, cfg.dt, &nonlinear);
        if cfg.track_residual {
            let mut g = k1;
            g.scale(-1.0);
            match residual.as_mut() {
                None => residual = Some(ResidualState::new(u0, g, cfg.residual_gamma)?),
                Some(state) => {
                    let t_now = step as f64 * cfg.dt;
                    // interval [t_{step-1}, t_step] closes with G at t_step
                    state.advance(cfg.dt, t_now, &u, g)?;
                }
            }
        }
        u = next;
        let t = (step + 1) as f64 * cfg.dt;
        let amp = u.max_abs();
        amp_times.push(t);
        amplitudes.push(amp);
        if !u.is_finite() || amp > BLOWUP_FACTOR * amp0 {
            blowup = Some(BlowupReport {
                step: step + 1,
                time: t,
                amplitude: amp,
            });
            times.push(t);
            states.push(u.clone());
            break;
        }
        if (step + 1) % cfg.save_every == 0 || step + 1 == cfg.steps {
            times.push(t);
            states.push(u.clone());
        }
    }

    let residual = match residual {
        Some(mut state) if blowup.is_none() => {
            // close the last interval with G at the final time
            let mut g = nonlinear(&u);
            g.scale(-1.0);
            let t_end = cfg.steps as f64 * cfg.dt;
            state.advance(cfg.dt, t_end, &u, g)?;
            Some(state.track)
        }
        Some(state) => Some(state.track),
        None => None,
    };

    Ok(Trajectory {
        times,
        states,
        amp_times,
        amplitudes,
        residual,
        blowup,
    })
}

/// Scalar histories tracked at every step of a coupled solve.
#[derive(Clone, Debug, Default)]
pub struct CoupledHistory {
    pub times: Vec<f64>,
    /// `||v||_{L^2(Phi^2)}`.
    pub v_l2: Vec<f64>,
    /// `||b||_{L^r}` (plain).
    pub b_lr: Vec<f64>,
    /// `||grad (x) b||_{L^r}` (plain, Frobenius magnitude).
    pub b_grad_lr: Vec<f64>,
    /// `||b||_inf`.
    pub b_sup: Vec<f64>,
}

/// Output of a coupled tail/remainder solve.
#[derive(Clone, Debug)]
pub struct CoupledTrajectory {
    pub times: Vec<f64>,
    pub b_states: Vec<VectorField>,
    pub v_states: Vec<VectorField>,
    pub history: CoupledHistory,
    /// Mild-form residual of the `v` equation (`L^2(Phi^2)` by default).
    pub v_residual: Option<ResidualTrack>,
    pub blowup: Option<BlowupReport>,
}

impl CoupledTrajectory {
    pub fn final_b(&self) -> &VectorField {
        self.b_states.last().expect("at least the initial state")
    }

    pub fn final_v(&self) -> &VectorField {
        self.v_states.last().expect("at least the initial state")
    }
}

/// Configuration for the coupled solve: base solver options plus the tail
/// exponent used for the per-step norm histories.
#[derive(Clone, Copy, Debug)]
pub struct CoupledConfig {
    pub base: SolverConfig,
    pub tail_exponent: f64,
}

fn tensor_lr_norm(g: &TensorField, r: f64) -> Result<f64> {
    // Frobenius magnitude of the 3x3 gradient, plain L^r quadrature
    let grid = g.grid();
    let mut mag2 = vec![0.0; grid.cells()];
    par::fill_indexed(&mut mag2, |idx| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let v = g.comp(i, j)[idx];
                s += v * v;
            }
        }
        s
    });
    let f = ScalarField::from_vec(grid, mag2);
    // ||sqrt(mag2)||_r = (sum mag2^{r/2} h^3)^{1/r}
    let grid_h3 = grid.cell_volume();
    let data = f.data();
    let sum = par::sum_indexed(data.len(), |i| data[i].powf(0.5 * r) * grid_h3);
    Ok(sum.powf(1.0 / r))
}

/// Integrates the coupled tail/remainder system from `(b0, v0)`.
pub fn solve_coupled(
    b0: &VectorField,
    v0: &VectorField,
    cfg: &CoupledConfig,
) -> Result<CoupledTrajectory> {
    let grid = b0.grid();
    if v0.grid() != grid {
        return Err(Error::GridMismatch("tail and remainder grids differ".into()));
    }
    let base = &cfg.base;
    base.validate(grid)?;
    if !cfg.tail_exponent.is_finite() || cfg.tail_exponent < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "tail exponent must be >= 1, got {}",
            cfg.tail_exponent
        )));
    }
    check_divergence_free(b0, "tail part")?;
    check_divergence_free(v0, "remainder part")?;

    let moll = base.mollifier;
    // coupled advection: d_t b picks up -P Div(m_b (x) b);
    // d_t v picks up -P Div(m_b (x) v) - P Div(m_v (x) (b+v))
    let nonlinear_b = move |b: &VectorField| -> VectorField {
        let m_b = mollify(b, &moll).expect("fit checked");
        let mut n = projected_advection(&m_b, b);
        n.scale(-1.0);
        n
    };
    let nonlinear_v = move |b: &VectorField, v: &VectorField| -> VectorField {
        let m_b = mollify(b, &moll).expect("fit checked");
        let m_v = mollify(v, &moll).expect("fit checked");
        let u = b.lin_comb(1.0, 1.0, v);
        let mut n = projected_advection(&m_b, v);
        let n2 = projected_advection(&m_v, &u);
        n.axpy(1.0, &n2);
        n.scale(-1.0);
        n
    };

    let record = |hist: &mut CoupledHistory, t: f64, b: &VectorField, v: &VectorField| -> Result<()> {
        hist.times.push(t);
        hist.v_l2.push(weighted_lp_norm(v, 2.0, 2.0)?.value);
        hist.b_lr
            .push(weighted_lp_norm(b, cfg.tail_exponent, 0.0)?.value);
        hist.b_grad_lr
            .push(tensor_lr_norm(&spectral::grad_tensor(b), cfg.tail_exponent)?);
        hist.b_sup.push(b.max_abs());
        Ok(())
    };

    let amp0 = (b0.max_abs() + v0.max_abs()).max(f64::MIN_POSITIVE);
    let mut b = b0.clone();
    let mut v = v0.clone();
    let mut times = vec![0.0];
    let mut b_states = vec![b0.clone()];
    let mut v_states = vec![v0.clone()];
    let mut history = CoupledHistory::default();
    record(&mut history, 0.0, &b, &v)?;
    let mut residual: Option<ResidualState> = None;
    let mut blowup = None;

    for step in 0..base.steps {
        // the two RK stages must advance together: evaluate the pair of
        // nonlinear terms on the synchronized stage states
        let dt = base.dt;
        let stage = |bs: &VectorField, vs: &VectorField| (nonlinear_b(bs), nonlinear_v(bs, vs));

        let (kb1, kv1) = stage(&b, &v);
        let eb = half_heat(&b, dt);
        let ev = half_heat(&v, dt);
        let e2b = half_heat(&eb, dt);
        let e2v = half_heat(&ev, dt);
        let (kb2, kv2) = stage(
            &half_heat(&b.lin_comb(1.0, 0.5 * dt, &kb1), dt),
            &half_heat(&v.lin_comb(1.0, 0.5 * dt, &kv1), dt),
        );
        let (kb3, kv3) = stage(
            &eb.lin_comb(1.0, 0.5 * dt, &kb2),
            &ev.lin_comb(1.0, 0.5 * dt, &kv2),
        );
        let ekb3 = half_heat(&kb3, dt);
        let ekv3 = half_heat(&kv3, dt);
        let (kb4, kv4) = stage(&e2b.lin_comb(1.0, dt, &ekb3), &e2v.lin_comb(1.0, dt, &ekv3));

        let combine = |e2w: VectorField,
                       k1: &VectorField,
                       k2: &VectorField,
                       ek3: &VectorField,
                       k4: &VectorField| {
            let mut next = e2w;
            next.axpy(dt / 6.0, &half_heat(&half_heat(k1, dt), dt));
            next.axpy(dt / 3.0, &half_heat(k2, dt));
            next.axpy(dt / 3.0, ek3);
            next.axpy(dt / 6.0, k4);
            next
        };
        let b_next = combine(e2b, &kb1, &kb2, &ekb3, &kb4);
        let v_next = combine(e2v, &kv1, &kv2, &ekv3, &kv4);

        if base.track_residual {
            let mut g = kv1;
            g.scale(-1.0);
            match residual.as_mut() {
                None => residual = Some(ResidualState::new(v0, g, base.residual_gamma)?),
                Some(state) => {
                    let t_now = step as f64 * dt;
                    state.advance(dt, t_now, &v, g)?;
                }
            }
        }

        b = b_next;
        v = v_next;
        let t = (step + 1) as f64 * dt;
        record(&mut history, t, &b, &v)?;
        let amp = b.max_abs() + v.max_abs();
        if !b.is_finite() || !v.is_finite() || amp > BLOWUP_FACTOR * amp0 {
            blowup = Some(BlowupReport {
                step: step + 1,
                time: t,
                amplitude: amp,
            });
            times.push(t);
            b_states.push(b.clone());
            v_states.push(v.clone());
            break;
        }
        if (step + 1) % base.save_every == 0 || step + 1 == base.steps {
            times.push(t);
            b_states.push(b.clone());
            v_states.push(v.clone());
        }
    }

    let v_residual = match residual {
        Some(mut state) if blowup.is_none() => {
            let mut g = nonlinear_v(&b, &v);
            g.scale(-1.0);
            let t_end = base.steps as f64 * base.dt;
            state.advance(base.dt, t_end, &v, g)?;
            Some(state.track)
        }
        Some(state) => Some(state.track),
        None => None,
    };

    Ok(CoupledTrajectory {
        times,
        b_states,
        v_states,
        history,
        v_residual,
        blowup,
    })
}
