//! Chaos and decomposition diagnostics: SALI, the non-sticking basin and its
//! entropy, and the Benettin Lyapunov pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{simulate_from, EventOptions, Params, State};
use crate::orbits::GridSpec;
use crate::strobomap::{jacobian_fd_with, period_trace, saltation_product, strobo_map_with, Jacobian2};

/// Cells with `log10 SALI` above this value are regular.
pub const SALI_THRESHOLD: f64 = -2.5;

/// Finite-difference step used for the per-period tangent map.
pub const SALI_FD_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SaliCategory {
    Regular,
    Chaotic,
    Sticking,
}

impl SaliCategory {
    pub fn name(&self) -> &'static str {
        match self {
            SaliCategory::Regular => "regular",
            SaliCategory::Chaotic => "chaotic",
            SaliCategory::Sticking => "sticking",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliResult {
    pub z0: (f64, f64),
    /// `None` when the window contains a turning or sticking event.
    pub log10_sali: Option<f64>,
    pub category: SaliCategory,
    pub history: Vec<f64>,
}

fn normalize(w: [f64; 2]) -> [f64; 2] {
    let n = w[0].hypot(w[1]);
    [w[0] / n, w[1] / n]
}

/// Tangent map of one period: itinerary-checked central differences, falling
/// back to a plain stencil when the itinerary changes inside it.
fn tangent_map(p: &Params, z: (f64, f64), opts: &EventOptions) -> Result<Jacobian2> {
    match jacobian_fd_with(p, z, SALI_FD_STEP, opts) {
        Ok((j, _)) => Ok(j),
        Err(Error::ItineraryMismatch { .. }) => {
            let h = SALI_FD_STEP;
            let f = |dx: f64, dv: f64| strobo_map_with(p, (z.0 + dx, z.1 + dv), opts);
            let (a, b, c, d) = (f(h, 0.0)?, f(-h, 0.0)?, f(0.0, h)?, f(0.0, -h)?);
            let s = 0.5 / h;
            Ok(Jacobian2::new((a.0 - b.0) * s, (c.0 - d.0) * s, (a.1 - b.1) * s, (c.1 - d.1) * s))
        }
        Err(e) => Err(e),
    }
}

/// SALI after `n` periods with deviation vectors drawn from `rng`.
pub fn sali_with_rng(p: &Params, z0: (f64, f64), n: usize, rng: &mut ChaCha8Rng) -> SaliResult {
    let angle = rng.gen::<f64>() * std::f64::consts::TAU;
    let (sa, ca) = angle.sin_cos();
    let mut w1 = [ca, sa];
    let mut w2 = [-sa, ca];
    let opts = EventOptions::default();
    let sticking = SaliResult { z0, log10_sali: None, category: SaliCategory::Sticking, history: Vec::new() };
    let mut z = z0;
    let mut history = Vec::with_capacity(n);
    for _ in 0..n.max(1) {
        let tr = match period_trace(p, z, &opts) {
            Ok(tr) if tr.is_non_sticking() => tr,
            _ => return SaliResult { history, ..sticking },
        };
        let j = match tangent_map(p, z, &opts) {
            Ok(j) => j,
            Err(_) => return SaliResult { history, ..sticking },
        };
        w1 = normalize(j.apply(w1));
        w2 = normalize(j.apply(w2));
        let plus = (w1[0] + w2[0]).hypot(w1[1] + w2[1]);
        let minus = (w1[0] - w2[0]).hypot(w1[1] - w2[1]);
        history.push(plus.min(minus));
        let fs = tr.final_state;
        z = (fs.x, fs.v);
    }
    let value = *history.last().unwrap_or(&1.0);
    let log10 = value.max(f64::MIN_POSITIVE).log10();
    let category = if log10 > SALI_THRESHOLD { SaliCategory::Regular } else { SaliCategory::Chaotic };
    SaliResult { z0, log10_sali: Some(log10), category, history }
}

/// Deterministic per-cell generator: one ChaCha stream per cell index.
pub fn cell_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sali(p: &Params, z0: (f64, f64), n: usize, rng_seed: u64) -> SaliResult {
    sali_with_rng(p, z0, n, &mut cell_rng(rng_seed, 0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaliCounts {
    pub regular: usize,
    pub chaotic: usize,
    pub sticking: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliMap {
    pub grid: GridSpec,
    /// Row-major over `v` (outer) and `x` (inner).
    pub cells: Vec<SaliResult>,
    pub counts: SaliCounts,
}

pub fn sali_map(p: &Params, grid: &GridSpec, n: usize, rng_seed: u64) -> SaliMap {
    let cells: Vec<SaliResult> = grid
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(i, z)| sali_with_rng(p, z, n, &mut cell_rng(rng_seed, i as u64)))
        .collect();
    let mut counts = SaliCounts::default();
    for c in &cells {
        match c.category {
            SaliCategory::Regular => counts.regular += 1,
            SaliCategory::Chaotic => counts.chaotic += 1,
            SaliCategory::Sticking => counts.sticking += 1,
        }
    }
    SaliMap { grid: *grid, cells, counts }
}

/// Best-fit exponential rate of a SALI history (slope of `ln SALI` per iterate).
pub fn sali_decay_rate(history: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(i, &s)| ((i + 1) as f64, s.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasinLabel {
    NonSticking,
    Dissipative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    pub grid: GridSpec,
    /// Row-major over `v` (outer) and `x` (inner).
    pub labels: Vec<BasinLabel>,
    pub box_size: usize,
    pub s_b: f64,
    pub s_bb: f64,
    pub boundary_boxes: usize,
    pub total_boxes: usize,
}

impl BasinGrid {
    pub fn non_sticking_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == BasinLabel::NonSticking).count()
    }

    pub fn non_sticking_fraction(&self) -> f64 {
        self.non_sticking_count() as f64 / self.labels.len().max(1) as f64
    }
}

/// `NonSticking` if `n_iter` periods from `z` contain only wall hits.
pub fn basin_label(p: &Params, z: (f64, f64), n_iter: usize) -> BasinLabel {
    let start = State::new(0.0, z.0.clamp(p.left, p.right), z.1);
    match simulate_from(p, start, n_iter as f64 * p.period(), None, &EventOptions::default()) {
        Ok(tr) if tr.is_non_sticking() => BasinLabel::NonSticking,
        _ => BasinLabel::Dissipative,
    }
}

/// Basin entropy `S_b` (mean Gibbs entropy over `box_size x box_size` tiles,
/// edge tiles included with their true sizes) and boundary entropy `S_bb`
/// (mean over tiles that contain both labels), natural logarithm.
pub fn entropies(labels: &[bool], nx: usize, nv: usize, box_size: usize) -> (f64, f64, usize, usize) {
    let b = box_size.max(1);
    let mut total = 0.0;
    let mut boundary = 0.0;
    let (mut n_boxes, mut n_boundary) = (0usize, 0usize);
    for by in (0..nv).step_by(b) {
        for bx in (0..nx).step_by(b) {
            let mut ones = 0usize;
            let mut cells = 0usize;
            for iy in by..(by + b).min(nv) {
                for ix in bx..(bx + b).min(nx) {
                    cells += 1;
                    ones += labels[iy * nx + ix] as usize;
                }
            }
            let s: f64 = [ones, cells - ones]
                .iter()
                .filter(|&&k| k > 0)
                .map(|&k| {
                    let q = k as f64 / cells as f64;
                    -q * q.ln()
                })
                .sum();
            total += s;
            n_boxes += 1;
            if ones > 0 && ones < cells {
                boundary += s;
                n_boundary += 1;
            }
        }
    }
    let s_b = if n_boxes > 0 { total / n_boxes as f64 } else { 0.0 };
    let s_bb = if n_boundary > 0 { boundary / n_boundary as f64 } else { 0.0 };
    (s_b, s_bb, n_boundary, n_boxes)
}

pub fn basin_entropy(p: &Params, grid: &GridSpec, n_iter: usize, box_size: usize) -> BasinGrid {
    let labels: Vec<BasinLabel> = grid.points().into_par_iter().map(|z| basin_label(p, z, n_iter)).collect();
    let flags: Vec<bool> = labels.iter().map(|l| *l == BasinLabel::NonSticking).collect();
    let (s_b, s_bb, boundary_boxes, total_boxes) = entropies(&flags, grid.nx, grid.nv, box_size);
    BasinGrid { grid: *grid, labels, box_size, s_b, s_bb, boundary_boxes, total_boxes }
}

/// Benettin estimates from a sequence of per-step Jacobians, with Gram-Schmidt
/// reorthonormalization after every step.
pub fn lyapunov_from_jacobians<I: IntoIterator<Item = Jacobian2>>(jacobians: I) -> (f64, f64) {
    let mut q1 = [1.0, 0.0];
    let mut q2 = [0.0, 1.0];
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut n = 0usize;
    for j in jacobians {
        let a = j.apply(q1);
        let b = j.apply(q2);
        let r11 = a[0].hypot(a[1]);
        q1 = [a[0] / r11, a[1] / r11];
        let proj = b[0] * q1[0] + b[1] * q1[1];
        let c = [b[0] - proj * q1[0], b[1] - proj * q1[1]];
        let r22 = c[0].hypot(c[1]);
        q2 = [c[0] / r22, c[1] / r22];
        s1 += r11.ln();
        s2 += r22.ln();
        n += 1;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    (s1 / n as f64, s2 / n as f64)
}

/// Lyapunov pair per stroboscopic iterate over `n` periods, using the exact
/// saltation-product Jacobian; fails if the window contains sticking.
pub fn lyapunov_pair(p: &Params, z0: (f64, f64), n: usize) -> Result<(f64, f64)> {
    let opts = EventOptions::default();
    let mut z = z0;
    let mut jacs = Vec::with_capacity(n);
    for _ in 0..n {
        let tr = period_trace(p, z, &opts)?;
        let (j, _) = saltation_product(p, &tr)?;
        jacs.push(j);
        z = (tr.final_state.x, tr.final_state.v);
    }
    Ok(lyapunov_from_jacobians(jacs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_has_zero_entropy() {
        let labels = vec![true; 36];
        assert_eq!(entropies(&labels, 6, 6, 3), (0.0, 0.0, 0, 4));
    }

    #[test]
    fn checkerboard_has_maximal_entropy() {
        let labels: Vec<bool> = (0..64).map(|i| (i % 8 + i / 8) % 2 == 0).collect();
        let (s_b, s_bb, nb, n) = entropies(&labels, 8, 8, 2);
        assert!((s_b - 2f64.ln()).abs() < 1e-15);
        assert!((s_bb - 2f64.ln()).abs() < 1e-15);
        assert_eq!((nb, n), (16, 16));
    }

    #[test]
    fn edge_tiles_use_true_sizes() {
        let labels: Vec<bool> = (0..25).map(|i| i % 5 == 4).collect();
        let (s_b, _, nb, n) = entropies(&labels, 5, 5, 2);
        assert_eq!(n, 9);
        assert_eq!(nb, 0);
        assert_eq!(s_b, 0.0);
    }

    #[test]
    fn shear_map_has_zero_exponents() {
        let (l1, l2) = lyapunov_from_jacobians(std::iter::repeat(Jacobian2::new(1.0, 1.0, 0.0, 1.0)).take(100_000));
        assert!(l1.abs() < 1e-3 && l2.abs() < 1e-3);
    }

    #[test]
    fn hyperbolic_map_exponents() {
        let (l1, l2) = lyapunov_from_jacobians(std::iter::repeat(Jacobian2::new(2.0, 1.0, 1.0, 1.0)).take(20_000));
        let expected = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((l1 - expected).abs() < 1e-3);
        assert!((l1 + l2).abs() < 1e-12);
    }

    #[test]
    fn cell_streams_are_independent_and_reproducible() {
        let a: f64 = cell_rng(7, 3).gen();
        let b: f64 = cell_rng(7, 3).gen();
        let c: f64 = cell_rng(7, 4).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn decay_rate_of_exponential_history() {
        let h: Vec<f64> = (1..=10).map(|k| (-0.5 * k as f64).exp()).collect();
        assert!((sali_decay_rate(&h) + 0.5).abs() < 1e-12);
    }
}
