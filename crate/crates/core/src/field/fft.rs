//! Normalized 3D transforms: `forward` maps samples to coefficients `c_n` with
//! `f(x) = Σ c_n e^{i n·x}`, `inverse` maps back.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, dir))
}

fn transform(grid: &Grid, data: &mut [C64], dir: FftDirection) {
    let n = grid.n();
    // Innermost axis is contiguous.
    let f2 = plan(n[2], dir);
    let mut scratch = vec![C64::new(0.0, 0.0); f2.get_inplace_scratch_len().max(1)];
    f2.process_with_scratch(data, &mut scratch);

    let mut line = Vec::new();
    for axis in [1usize, 0] {
        let fa = plan(n[axis], dir);
        let len = n[axis];
        let stride: usize = n[axis + 1..].iter().product();
        let block = len * stride;
        let mut scratch = vec![C64::new(0.0, 0.0); fa.get_inplace_scratch_len().max(1)];
        line.resize(len, C64::new(0.0, 0.0));
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fa.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

pub fn forward(grid: &Grid, data: &mut [C64]) {
    transform(grid, data, FftDirection::Forward);
    let s = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|x| *x *= s);
}

pub fn inverse(grid: &Grid, data: &mut [C64]) {
    transform(grid, data, FftDirection::Inverse);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_coefficient() {
        let g = Grid::new([4, 6, 8], [std::f64::consts::TAU; 3], (3, 2)).unwrap();
        let mut d: Vec<C64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                C64::from_polar(1.0, 1.0 * x[0] - 2.0 * x[1] + 3.0 * x[2])
            })
            .collect();
        let orig = d.clone();
        forward(&g, &mut d);
        let slot = g.index([g.slot(0, 1).unwrap(), g.slot(1, -2).unwrap(), g.slot(2, 3).unwrap()]);
        for (i, c) in d.iter().enumerate() {
            let want = if i == slot { 1.0 } else { 0.0 };
            assert!((c - want).norm() < 1e-13, "slot {i}: {c}");
        }
        inverse(&g, &mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
