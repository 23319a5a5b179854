//! Mandelbrot producer/consumer workload.
//!
//! The image is cut into square regions; producers compute the iteration counts of their
//! regions (rows of regions are dealt to producers in an interleaved way) and enqueue one
//! item per region, which consumers later turn into pixels. The work of a region is what
//! the queue sees as the producer's parallel section.

use std::sync::Arc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::WorkDistribution;
use crate::workload::{measure_work_distribution, LambdaUnit};

pub const REGION_EDGES: [u32; 4] = [2, 4, 8, 16];
pub const DEFAULT_MAX_ITER: u32 = 255;
/// Bin width for 2×2 regions, in bunches.
pub const BASE_BIN_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for View {
    fn default() -> Self {
        View { x_min: -2.0, x_max: 1.0, y_min: -1.5, y_max: 1.5 }
    }
}

/// Cost model turning iteration counts into cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationCost {
    pub cycles_per_iteration: f64,
    pub cycles_per_pixel: f64,
}

impl Default for IterationCost {
    fn default() -> Self {
        IterationCost { cycles_per_iteration: 10.0, cycles_per_pixel: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    /// Region column.
    pub col: u32,
    /// Region row.
    pub row: u32,
    /// Sum of the iteration counts of its pixels.
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MandelbrotWorkload {
    pub width: u32,
    pub height: u32,
    pub region_edge: u32,
    pub max_iter: u32,
    pub view: View,
    pub regions: Vec<Region>,
}

/// Iterations of `z ← z² + c` before `|z| > 2`, capped at `max_iter`.
pub fn pixel_iterations(cx: f64, cy: f64, max_iter: u32) -> u32 {
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for i in 1..=max_iter {
        let xt = x * x - y * y + cx;
        y = 2.0 * x * y + cy;
        x = xt;
        if x * x + y * y > 4.0 {
            return i;
        }
    }
    max_iter
}

fn region_iterations(w: &MandelbrotWorkload, col: u32, row: u32) -> u64 {
    let v = w.view;
    let dx = (v.x_max - v.x_min) / f64::from(w.width);
    let dy = (v.y_max - v.y_min) / f64::from(w.height);
    let e = w.region_edge;
    let mut total = 0u64;
    for py in row * e..(row + 1) * e {
        for px in col * e..(col + 1) * e {
            let cx = v.x_min + (f64::from(px) + 0.5) * dx;
            let cy = v.y_min + (f64::from(py) + 0.5) * dy;
            total += u64::from(pixel_iterations(cx, cy, w.max_iter));
        }
    }
    total
}

fn check_dims(width: u32, height: u32, region_edge: u32, max_iter: u32) -> Result<()> {
    if !REGION_EDGES.contains(&region_edge) {
        return Err(Error::Argument(format!("region edge must be one of {REGION_EDGES:?}")));
    }
    if width == 0 || height == 0 || width % region_edge != 0 || height % region_edge != 0 {
        return Err(Error::Argument(format!(
            "{width}×{height} is not divisible into {region_edge}×{region_edge} regions"
        )));
    }
    if max_iter == 0 {
        return Err(Error::Argument("max_iter must be > 0".into()));
    }
    Ok(())
}

/// Computes the iteration count of every region of a `width × height` image of `view`.
pub fn mandelbrot_workload_in(
    width: u32,
    height: u32,
    region_edge: u32,
    max_iter: u32,
    view: View,
) -> Result<MandelbrotWorkload> {
    check_dims(width, height, region_edge, max_iter)?;
    let mut w = MandelbrotWorkload {
        width,
        height,
        region_edge,
        max_iter,
        view,
        regions: Vec::new(),
    };
    let (cols, rows) = (width / region_edge, height / region_edge);
    w.regions.reserve((cols * rows) as usize);
    for row in 0..rows {
        for col in 0..cols {
            let iterations = region_iterations(&w, col, row);
            w.regions.push(Region { col, row, iterations });
        }
    }
    Ok(w)
}

/// [`mandelbrot_workload_in`] over the classic `[-2, 1] × [-1.5, 1.5]` view.
pub fn mandelbrot_workload(
    width: u32,
    height: u32,
    region_edge: u32,
    max_iter: u32,
) -> Result<MandelbrotWorkload> {
    mandelbrot_workload_in(width, height, region_edge, max_iter, View::default())
}

/// Bin width for a region edge: 10 bunches for 2×2, scaled with the region area.
pub fn bin_width(region_edge: u32) -> f64 {
    BASE_BIN_WIDTH * f64::from(region_edge * region_edge) / 4.0
}

impl MandelbrotWorkload {
    pub fn pixels_per_region(&self) -> u32 {
        self.region_edge * self.region_edge
    }

    /// Producer owning a region row when rows are dealt round-robin.
    pub fn producer_of(row: u32, producers: u32) -> u32 {
        row % producers.max(1)
    }

    /// Regions computed by `producer`, in its processing order.
    pub fn tasks_for(&self, producer: u32, producers: u32) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| Self::producer_of(r.row, producers) == producer)
    }

    /// Work of every region in bunches, under `cost`.
    pub fn work_bunches(&self, cost: IterationCost) -> Vec<f64> {
        let pixel = cost.cycles_per_pixel * f64::from(self.pixels_per_region());
        self.regions
            .iter()
            .map(|r| (pixel + cost.cycles_per_iteration * r.iterations as f64) / 1000.0)
            .collect()
    }

    /// Binned producer work with a constant consumer parallel section `pw_d`.
    pub fn distribution(&self, cost: IterationCost, pw_d: f64) -> Result<WorkDistribution> {
        let bins = measure_work_distribution(&self.work_bunches(cost), bin_width(self.region_edge))?;
        Ok(WorkDistribution { bins, pw_d, app_p_ps_cpu: None })
    }
}

/// Times the region computations on `producers` threads with interleaved rows and returns
/// each region's work in bunches (same order as `workload.regions`).
///
/// Portable wall-clock timers are used, so short regions are biased upward by the timer
/// overhead.
pub fn measure_region_work(
    workload: &MandelbrotWorkload,
    producers: u32,
    unit: &LambdaUnit,
) -> Result<Vec<f64>> {
    if producers == 0 {
        return Err(Error::Argument("need at least one producer".into()));
    }
    let shared = Arc::new(workload.clone());
    let handles: Vec<_> = (0..producers)
        .map(|p| {
            let w = Arc::clone(&shared);
            thread::spawn(move || {
                let mut out = Vec::new();
                for (idx, r) in w.regions.iter().enumerate() {
                    if MandelbrotWorkload::producer_of(r.row, producers) != p {
                        continue;
                    }
                    let t0 = Instant::now();
                    let it = region_iterations(&w, r.col, r.row);
                    let d = t0.elapsed();
                    std::hint::black_box(it);
                    out.push((idx, d));
                }
                out
            })
        })
        .collect();
    let mut work = vec![0.0; workload.regions.len()];
    for h in handles {
        let part = h.join().map_err(|_| Error::Benchmark("producer panicked".into()))?;
        for (idx, d) in part {
            work[idx] = unit.bunches(d);
        }
    }
    Ok(work)
}

/// Local maxima of a log-scale histogram of positive samples holding at least `min_share`
/// of them, as bin centres in increasing order.
pub fn work_modes(samples: &[f64], bins: usize, min_share: f64) -> Vec<f64> {
    let logs: Vec<f64> = samples.iter().filter(|s| **s > 0.0).map(|s| s.ln()).collect();
    if logs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        return vec![lo.exp()];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for l in &logs {
        counts[(((l - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let threshold = (min_share * logs.len() as f64).ceil() as usize;
    let mut modes = Vec::new();
    let mut i = 0;
    while i < bins {
        // Treat runs of equal counts as one plateau.
        let mut j = i;
        while j + 1 < bins && counts[j + 1] == counts[i] {
            j += 1;
        }
        let left = if i == 0 { 0 } else { counts[i - 1] };
        let right = if j + 1 == bins { 0 } else { counts[j + 1] };
        if counts[i] >= threshold.max(1) && counts[i] > left && counts[i] > right {
            let centre = lo + ((i + j) as f64 / 2.0 + 0.5) * width;
            modes.push(centre.exp());
        }
        i = j + 1;
    }
    modes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub modes: Vec<f64>,
    /// Largest ratio between two modes.
    pub separation: f64,
}

impl ModeSummary {
    pub fn of(samples: &[f64]) -> Self {
        let modes = work_modes(samples, 24, 0.01);
        let separation = match (modes.first(), modes.last()) {
            (Some(a), Some(b)) if *a > 0.0 => b / a,
            _ => 1.0,
        };
        ModeSummary { modes, separation }
    }
}
