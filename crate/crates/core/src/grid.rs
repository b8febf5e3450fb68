//! Uniform time and space grids.
//!
//! Fourier convention, used everywhere: time signals are analysed as
//! `e^{-i omega t}`, so `d/dt <-> -i omega`; spatial plane waves are
//! `e^{i q r}`, so `d/dr <-> i q`. FFT bin `j` of an `n`-point transform holds
//! the signed index `k = j` for `j < n/2` and `k = j - n` otherwise, i.e. the
//! half-open symmetric set `[-n/2, n/2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n: usize,
}

impl TimeGrid {
    /// `n` must be even and at least 2; powers of two are fastest.
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(invalid("t0", "must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        if n < 2 || !n.is_multiple_of(2) {
            return Err(invalid("n", format!("must be even and >= 2, got {n}")));
        }
        Ok(TimeGrid { t0, dt, n })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.time(i))
    }

    /// Period `n dt` of the periodic extension.
    pub fn duration(&self) -> f64 {
        self.n as f64 * self.dt
    }

    /// Frequency spacing `2 pi / (n dt)`.
    pub fn d_omega(&self) -> f64 {
        2.0 * PI / self.duration()
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    /// Signed frequency index held in FFT bin `j`.
    pub fn signed_index(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT bin holding signed index `k` (taken modulo `n`).
    pub fn bin_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn omega(&self, k: i64) -> f64 {
        k as f64 * self.d_omega()
    }

    pub fn omega_at_bin(&self, j: usize) -> f64 {
        self.omega(self.signed_index(j))
    }

    /// Signed index nearest to `omega`.
    pub fn index_of_omega(&self, omega: f64) -> i64 {
        (omega / self.d_omega()).round() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    length: f64,
    points: usize,
    periodic: bool,
}

impl SpaceGrid {
    pub fn new(length: f64, points: usize, periodic: bool) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("length", format!("must be finite and > 0, got {length}")));
        }
        if points < 4 {
            return Err(invalid("points", format!("need at least 4, got {points}")));
        }
        Ok(SpaceGrid {
            length,
            points,
            periodic,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    /// `L / M` on a periodic grid, `L / (M - 1)` on a bounded one.
    pub fn spacing(&self) -> f64 {
        if self.periodic {
            self.length / self.points as f64
        } else {
            self.length / (self.points - 1) as f64
        }
    }

    /// Grid points span `[-L/2, L/2)` (periodic) or `[-L/2, L/2]` (bounded).
    pub fn position(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.position(i)).collect()
    }

    /// Rectangle-rule integral, the finite-volume mass of a field.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing()
    }

    /// Wavenumber `2 pi k / L` of the `k`-th periodic Fourier mode.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn time_grid_frequencies() {
        let g = TimeGrid::new(0.0, 0.5, 8).unwrap();
        assert_eq!(g.signed_index(3), 3);
        assert_eq!(g.signed_index(4), -4);
        assert_eq!(g.signed_index(7), -1);
        assert!((g.omega(-4).abs() - g.nyquist()).abs() < 1e-15);
        assert!(TimeGrid::new(0.0, 0.5, 7).is_err());
        assert!(TimeGrid::new(0.0, 0.0, 8).is_err());
    }

    #[test]
    fn space_grid_spacing() {
        let p = SpaceGrid::new(2.0, 4, true).unwrap();
        assert_eq!(p.spacing(), 0.5);
        assert_eq!(p.position(0), -1.0);
        let b = SpaceGrid::new(2.0, 5, false).unwrap();
        assert_eq!(b.spacing(), 0.5);
        assert_eq!(b.position(4), 1.0);
        assert!(SpaceGrid::new(2.0, 3, false).is_err());
    }

    proptest! {
        #[test]
        fn index_omega_round_trip(log_n in 1u32..14, dt in 1e-4f64..10.0, raw in any::<u64>()) {
            let n = 1usize << log_n;
            let g = TimeGrid::new(0.0, dt, n).unwrap();
            let j = (raw % n as u64) as usize;
            let k = g.signed_index(j);
            prop_assert_eq!(g.index_of_omega(g.omega(k)), k);
            prop_assert_eq!(g.bin_of(k), j);
        }
    }
}
