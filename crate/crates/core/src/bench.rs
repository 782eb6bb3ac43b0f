//! Runtime scaling harness for the conditional gradient solver.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use crate::error::{param, Result};
use crate::graph::{gen_sbm, planted_partition};
use crate::solvers::{solve_srgw, InitStrategy, SolverConfig};

pub const CSV_HEADER: &str = "n,m,solver,phase,wall_ms,iterations,loss";
pub const PHASES: [&str; 4] = ["gradient", "direction", "linesearch", "total"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub n: usize,
    pub m: usize,
    pub solver: String,
    pub repeat: usize,
    pub gradient_ms: f64,
    pub direction_ms: f64,
    pub linesearch_ms: f64,
    pub total_ms: f64,
    pub iterations: usize,
    pub loss: f64,
}

impl BenchRecord {
    pub fn phase_ms(&self, phase: &str) -> Option<f64> {
        match phase {
            "gradient" => Some(self.gradient_ms),
            "direction" => Some(self.direction_ms),
            "linesearch" => Some(self.linesearch_ms),
            "total" => Some(self.total_ms),
            _ => None,
        }
    }

    /// Direction-phase time per iteration.
    pub fn direction_ms_per_iteration(&self) -> f64 {
        self.direction_ms / self.iterations.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    /// Least-squares slope of log(median direction time per iteration)
    /// against log(n).
    pub direction_slope: f64,
}

impl BenchReport {
    /// One row per record and phase.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            for phase in PHASES {
                let ms = r.phase_ms(phase).unwrap_or(0.0);
                let _ = writeln!(out, "{},{},{},{},{},{},{}", r.n, r.m, r.solver, phase, ms, r.iterations, r.loss);
            }
        }
        out
    }

    /// Median per-iteration direction time for each size, in input order.
    pub fn direction_medians(&self) -> Vec<(usize, f64)> {
        let mut sizes: Vec<usize> = self.records.iter().map(|r| r.n).collect();
        sizes.dedup();
        sizes
            .into_iter()
            .map(|n| {
                let v: Vec<f64> =
                    self.records.iter().filter(|r| r.n == n).map(BenchRecord::direction_ms_per_iteration).collect();
                (n, median(v))
            })
            .collect()
    }

    /// Ratio of the median direction time at the largest size to the smallest.
    pub fn direction_ratio(&self) -> f64 {
        let med = self.direction_medians();
        match (med.first(), med.last()) {
            (Some(a), Some(b)) if a.1 > 0.0 => b.1 / a.1,
            _ => f64::NAN,
        }
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn log_slope(points: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.1 > 0.0).map(|&(n, t)| ((n as f64).ln(), t.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Solves srGW from three-block SBM graphs of each size onto a fixed
/// two-block `m`-node target, `repeats` times per size, with the
/// conditional gradient solver at relative tolerance 1e-5.
pub fn bench_scaling(sizes: &[usize], m: usize, repeats: usize, seed: u64) -> Result<BenchReport> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(param("sizes", "must be non-empty and sorted ascending"));
    }
    if sizes[0] < 3 {
        return Err(param("sizes", "each size must be at least 3"));
    }
    if m < 2 {
        return Err(param("m", "must be at least 2"));
    }
    if repeats == 0 {
        return Err(param("repeats", "must be at least 1"));
    }
    let target = gen_sbm(&[m / 2, m - m / 2], planted_partition(2, 0.9, 0.1).view(), seed)?.graph;
    let config = SolverConfig {
        rel_tolerance: 1e-5,
        init: InitStrategy::OuterRandom(seed),
        seed,
        ..Default::default()
    };
    let mut records = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let blocks = [n / 3, n / 3, n - 2 * (n / 3)];
        let source = gen_sbm(&blocks, planted_partition(3, 0.5, 0.05).view(), seed.wrapping_add(1 + k as u64))?.graph;
        for repeat in 0..repeats {
            let r = solve_srgw(source.structure.view(), source.distribution.view(), target.structure.view(), &config)?;
            records.push(BenchRecord {
                n,
                m,
                solver: "cg".into(),
                repeat,
                gradient_ms: ms(r.timings.gradient),
                direction_ms: ms(r.timings.direction),
                linesearch_ms: ms(r.timings.linesearch),
                total_ms: ms(r.timings.total),
                iterations: r.iterations,
                loss: r.loss,
            });
        }
    }
    let report = BenchReport { direction_slope: f64::NAN, records };
    let direction_slope = log_slope(&report.direction_medians());
    Ok(BenchReport { direction_slope, ..report })
}
