//! Least-squares fit of generalized-Benford parameters by multi-start
//! downhill simplex (Nelder-Mead).

use serde::{Deserialize, Serialize};

use super::{BenfordError, DigitDistribution, GblParams};

/// Search configuration. Start points form a regular grid over the box,
/// endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_range: (f64, f64),
    pub q_range: (f64, f64),
    pub s_range: (f64, f64),
    pub grid: [usize; 3],
    /// Stop when `max(SSE) - min(SSE)` over the simplex falls below this.
    pub sse_tolerance: f64,
    pub max_iterations: usize,
    /// Initial simplex edge as a fraction of each box side.
    pub initial_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_range: (0.5, 2.0),
            q_range: (0.5, 3.0),
            s_range: (-0.5, 0.5),
            grid: [5, 5, 5],
            sse_tolerance: 1e-14,
            max_iterations: 2000,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: GblParams,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `Σx (empirical(x) − N log10(1 + 1/(s + x^q)))²`.
pub fn sse(empirical: &DigitDistribution, params: &GblParams) -> f64 {
    empirical
        .0
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let r = p - params.eval(i + 1);
            r * r
        })
        .sum()
}

fn objective(empirical: &DigitDistribution, x: &[f64; 3]) -> f64 {
    let params = GblParams::new(x[0], x[1], x[2]);
    if !params.is_valid() {
        return f64::INFINITY;
    }
    let v = sse(empirical, &params);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn grid_points(range: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (range.0 + range.1)],
        _ => (0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

struct Simplex {
    points: [[f64; 3]; 4],
    values: [f64; 4],
}

impl Simplex {
    fn new(start: [f64; 3], steps: [f64; 3], f: &impl Fn(&[f64; 3]) -> f64) -> Self {
        let mut points = [start; 4];
        for (k, step) in steps.iter().enumerate() {
            points[k + 1][k] += step;
        }
        let values = points.map(|p| f(&p));
        Self { points, values }
    }

    fn order(&mut self) {
        let mut idx = [0usize, 1, 2, 3];
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.map(|i| self.points[i]);
        self.values = idx.map(|i| self.values[i]);
    }

    fn spread(&self) -> f64 {
        self.values[3] - self.values[0]
    }
}

fn lerp(a: &[f64; 3], b: &[f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

const MAX_RESTARTS: usize = 8;

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction ½, shrink ½).
/// Returns `(best point, best value, iterations, converged)`.
fn nelder_mead(
    start: [f64; 3],
    steps: [f64; 3],
    tol: f64,
    max_iter: usize,
    f: &impl Fn(&[f64; 3]) -> f64,
) -> ([f64; 3], f64, usize, bool) {
    let mut s = Simplex::new(start, steps, f);
    s.order();
    let mut iter = 0;
    let mut converged = false;
    // A converged simplex is rebuilt around its best vertex; the fit is
    // accepted once a rebuild no longer improves the minimum.
    let mut last_restart_best = f64::INFINITY;
    let mut restarts = 0;
    while iter < max_iter {
        if s.values[0].is_finite() && s.spread() < tol {
            if s.values[0] >= last_restart_best || restarts == MAX_RESTARTS {
                converged = true;
                break;
            }
            last_restart_best = s.values[0];
            restarts += 1;
            let scale = steps.map(|v| v * 1e-3);
            s = Simplex::new(s.points[0], scale, f);
            s.order();
            continue;
        }
        iter += 1;

        let centroid = {
            let mut c = [0.0; 3];
            for p in &s.points[..3] {
                for k in 0..3 {
                    c[k] += p[k] / 3.0;
                }
            }
            c
        };
        let worst = s.points[3];
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);

        if fr < s.values[0] {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            if fe < fr {
                s.points[3] = expanded;
                s.values[3] = fe;
            } else {
                s.points[3] = reflected;
                s.values[3] = fr;
            }
        } else if fr < s.values[2] {
            s.points[3] = reflected;
            s.values[3] = fr;
        } else {
            // outside contraction if the reflection beat the worst point
            let (candidate, reference) = if fr < s.values[3] {
                (lerp(&centroid, &reflected, 0.5), fr)
            } else {
                (lerp(&centroid, &worst, 0.5), s.values[3])
            };
            let fc = f(&candidate);
            if fc < reference {
                s.points[3] = candidate;
                s.values[3] = fc;
            } else {
                let best = s.points[0];
                for i in 1..4 {
                    s.points[i] = lerp(&best, &s.points[i], 0.5);
                    s.values[i] = f(&s.points[i]);
                }
            }
        }
        s.order();
    }
    (s.points[0], s.values[0], iter, converged)
}

/// Fits `(N, q, s)` to an empirical distribution. Every grid start is run to
/// completion; the lowest SSE wins, ties going to the earlier start.
pub fn fit_gbl_params(
    empirical: &DigitDistribution,
    config: &FitConfig,
) -> Result<FitResult, BenfordError> {
    let f = |x: &[f64; 3]| objective(empirical, x);
    let steps = [
        config.initial_step * (config.n_range.1 - config.n_range.0),
        config.initial_step * (config.q_range.1 - config.q_range.0),
        config.initial_step * (config.s_range.1 - config.s_range.0),
    ];

    let mut best: Option<FitResult> = None;
    for n in grid_points(config.n_range, config.grid[0]) {
        for q in grid_points(config.q_range, config.grid[1]) {
            for s in grid_points(config.s_range, config.grid[2]) {
                let start = [n, q, s];
                if !f(&start).is_finite() {
                    continue;
                }
                let (x, value, iterations, converged) = nelder_mead(
                    start,
                    steps,
                    config.sse_tolerance,
                    config.max_iterations,
                    &f,
                );
                if best.as_ref().is_none_or(|b| value < b.sse) {
                    best = Some(FitResult {
                        params: GblParams::new(x[0], x[1], x[2]),
                        sse: value,
                        iterations,
                        converged,
                    });
                }
            }
        }
    }
    best.ok_or(BenfordError::NoValidStart)
}
