//! Uniform periodic grid on the cube `[-L/2, L/2)^3`.

use crate::error::{Error, Result};

/// `N^3` grid on `[-L/2, L/2)^3` with spacing `h = L/N`.
///
/// Cell positions are `x_i = i*h - L/2`; flat storage is x-fastest,
/// `idx = ix + N*(iy + N*iz)`. Fourier bins use the standard FFT layout with
/// signed modes in `[-N/2, N/2)` and angular wavenumbers `k = 2*pi*m/L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and at least 4, got {n}"
            )));
        }
        if !box_length.is_finite() || box_length <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Grid spacing `h = L/N`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Quadrature weight of one cell, `h^3`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Total number of cells, `N^3`.
    #[inline]
    pub fn cells(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Coordinate of one-dimensional index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing() - 0.5 * self.box_length
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let ix = idx % self.n;
        let iy = (idx / self.n) % self.n;
        let iz = idx / (self.n * self.n);
        (ix, iy, iz)
    }

    /// Position of cell `idx`.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unravel(idx);
        [self.coord(ix), self.coord(iy), self.coord(iz)]
    }

    /// Signed integer mode of FFT bin `m in [0, N)`, in `[-N/2, N/2)`.
    #[inline]
    pub fn signed_mode(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Angular wavenumber of FFT bin `m`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length * self.signed_mode(m) as f64
    }

    /// Signed modes `(mx, my, mz)` of flat spectral index `idx`.
    #[inline]
    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let (bx, by, bz) = self.unravel(idx);
        [
            self.signed_mode(bx),
            self.signed_mode(by),
            self.signed_mode(bz),
        ]
    }

    /// Wavenumber vector of flat spectral index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (bx, by, bz) = self.unravel(idx);
        [
            self.wavenumber(bx),
            self.wavenumber(by),
            self.wavenumber(bz),
        ]
    }

    /// Wavevector as seen by odd-symbol operators (derivative, divergence,
    /// Riesz, Leray): components on the unpaired Nyquist plane are zero, so
    /// identities like `div` after projection hold exactly mode by mode.
    #[inline]
    pub fn deriv_wavevector(&self, idx: usize) -> [f64; 3] {
        let (bx, by, bz) = self.unravel(idx);
        let nyq = self.n / 2;
        let one = |b: usize| if b == nyq { 0.0 } else { self.wavenumber(b) };
        [one(bx), one(by), one(bz)]
    }

    /// Integer squared mode magnitude `|m|^2` of flat spectral index `idx`.
    #[inline]
    pub fn mode_m2(&self, idx: usize) -> i64 {
        let [mx, my, mz] = self.modes(idx);
        mx * mx + my * my + mz * mz
    }

    /// Largest possible `|m|^2` on this grid, `3*(N/2)^2`.
    #[inline]
    pub fn max_m2(&self) -> i64 {
        let half = (self.n / 2) as i64;
        3 * half * half
    }

    /// 2/3-rule dealiasing: `true` when signed mode `m` is kept.
    #[inline]
    pub fn keep_mode(&self, m: i64) -> bool {
        3 * m.unsigned_abs() as usize <= self.n
    }

    /// `true` when flat spectral index `idx` survives the 2/3 rule on all axes.
    #[inline]
    pub fn keep_index(&self, idx: usize) -> bool {
        let [mx, my, mz] = self.modes(idx);
        self.keep_mode(mx) && self.keep_mode(my) && self.keep_mode(mz)
    }
}
