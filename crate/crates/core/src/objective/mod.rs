//! Objective functions, their smoothing families and the benchmark registry.

mod benchmarks;
mod certify;
mod simple;
mod smooth_abs;

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use benchmarks::{Benchmark, BenchmarkId};
pub use certify::{certify_constants, check_gradient, estimate_constants, CertReport, GradientCheck};
pub use simple::{Constant, Quadratic};
pub use smooth_abs::{smooth_abs_logexp, smooth_abs_sqrt, SmootherKind};

use crate::error::{Error, Result};

/// A nonsmooth objective `f` together with a smoothing family `f~(x, mu)`.
///
/// Implementations must be pure; the solver evaluates them from many threads.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// The raw objective `f(x)`.
    fn value(&self, x: &[f64]) -> f64;

    /// The smoothed objective `f~(x, mu)`.
    fn smoothed(&self, x: &[f64], mu: f64) -> f64;

    /// Writes `grad_x f~(x, mu)` into `out`.
    fn grad_x(&self, x: &[f64], mu: f64, out: &mut [f64]);

    /// `d/dmu f~(x, mu)`.
    fn dmu(&self, x: &[f64], mu: f64) -> f64;
}

/// Constants of the smoothing bounds
/// `|d/dmu f~| <= kappa mu^-q` and `||hess_x f~|| <= eta mu^(-q-1)` for `mu` in `(0, mu_bar]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConstants {
    pub kappa: f64,
    pub eta: f64,
    pub q: f64,
    pub mu_bar: f64,
}

/// Axis-aligned hypercube `[lo, hi]^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
}

impl SearchBox {
    pub fn new(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("box", format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if dim == 0 {
            return Err(Error::invalid("box", "dimension must be at least 1"));
        }
        Ok(SearchBox { lo, hi, dim })
    }

    pub fn symmetric(half_width: f64, dim: usize) -> Result<Self> {
        Self::new(-half_width, half_width, dim)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
    }

    pub fn contains_box(&self, other: &SearchBox) -> bool {
        other.dim == self.dim && other.lo >= self.lo && other.hi <= self.hi
    }

    /// The box grown by `fraction` of its width on each side.
    pub fn with_margin(&self, fraction: f64) -> SearchBox {
        let pad = fraction * self.width();
        SearchBox { lo: self.lo - pad, hi: self.hi + pad, dim: self.dim }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = rng.random_range(self.lo..=self.hi);
        }
    }

    /// Visits every point of the tensor grid with `per_axis` points per axis.
    pub fn for_each_grid_point(&self, per_axis: usize, mut visit: impl FnMut(&[f64])) {
        let per_axis = per_axis.max(2);
        let step = self.width() / (per_axis - 1) as f64;
        let coord = |i: usize| if i + 1 == per_axis { self.hi } else { self.lo + step * i as f64 };
        let mut idx = vec![0usize; self.dim];
        let mut x: Vec<f64> = vec![self.lo; self.dim];
        loop {
            visit(&x);
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return;
                }
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    x[axis] = coord(idx[axis]);
                    break;
                }
                idx[axis] = 0;
                x[axis] = self.lo;
                axis += 1;
            }
        }
    }
}

/// Grid points per axis for a dense scan that stays around `budget` points.
pub(crate) fn grid_per_axis(dim: usize, full: usize, budget: f64) -> usize {
    if dim <= 2 {
        return full;
    }
    let n = budget.powf(1.0 / dim as f64).floor() as usize;
    // odd, so the centre of a symmetric box is on the grid
    (n.max(3) - 1) | 1
}

/// A benchmark objective with its smoother, certified constants and reference values.
#[derive(Clone)]
pub struct ObjectiveSpec {
    pub id: String,
    pub objective: Arc<dyn Objective>,
    pub smoother: Option<SmootherKind>,
    pub constants: SmoothingConstants,
    pub bounds: SearchBox,
    pub x_star: Vec<f64>,
    pub f_min: f64,
    pub f_max: f64,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("id", &self.id)
            .field("smoother", &self.smoother)
            .field("constants", &self.constants)
            .field("bounds", &self.bounds)
            .field("f_min", &self.f_min)
            .field("f_max", &self.f_max)
            .finish()
    }
}

/// Summary of an [`ObjectiveSpec`] for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveInfo {
    pub id: String,
    pub dim: usize,
    pub smoother: Option<SmootherKind>,
    pub constants: SmoothingConstants,
    pub bounds: SearchBox,
    pub f_min: f64,
    pub f_max: f64,
}

pub const MU_BAR: f64 = 1.0;
const F_MAX_GRID: usize = 401;

impl ObjectiveSpec {
    /// Wraps an arbitrary objective. `f_max` is found by grid search over `bounds`.
    pub fn custom(
        id: impl Into<String>,
        objective: Arc<dyn Objective>,
        constants: SmoothingConstants,
        bounds: SearchBox,
        x_star: Vec<f64>,
    ) -> Result<Self> {
        let dim = objective.dim();
        if bounds.dim != dim || x_star.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: bounds.dim.min(x_star.len()) });
        }
        let f_min = objective.value(&x_star);
        let f_max = grid_max(objective.as_ref(), &bounds);
        Ok(ObjectiveSpec {
            id: id.into(),
            objective,
            smoother: None,
            constants,
            bounds,
            x_star,
            f_min,
            f_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn smoothed(&self, x: &[f64], mu: f64) -> f64 {
        self.objective.smoothed(x, mu)
    }

    /// `|f(x) - f_min| / (f_max - f_min)`.
    pub fn normalized_gap(&self, fx: f64) -> f64 {
        (fx - self.f_min).abs() / (self.f_max - self.f_min)
    }

    pub fn is_success(&self, fx: f64, threshold: f64) -> bool {
        self.normalized_gap(fx) < threshold
    }

    /// `f~_min = f_min - kappa mu_bar^(1-q)`, a lower bound of `f~` on `(0, mu_bar]`.
    pub fn smoothed_min_bound(&self, mu_bar: f64) -> f64 {
        self.f_min - self.constants.kappa * mu_bar.powf(1.0 - self.constants.q)
    }

    pub fn info(&self) -> ObjectiveInfo {
        ObjectiveInfo {
            id: self.id.clone(),
            dim: self.dim(),
            smoother: self.smoother,
            constants: self.constants,
            bounds: self.bounds,
            f_min: self.f_min,
            f_max: self.f_max,
        }
    }
}

fn grid_max(objective: &dyn Objective, bounds: &SearchBox) -> f64 {
    let per_axis = grid_per_axis(bounds.dim, F_MAX_GRID, 4.0e6);
    let mut best = f64::NEG_INFINITY;
    bounds.for_each_grid_point(per_axis, |x| best = best.max(objective.value(x)));
    best
}

/// Builds the `example1` objective `(1/10) sum(|x_l| - cos(pi x_l) + 1)` on `[-2, 2]^d`.
pub fn build_example1(dim: usize, smoother: SmootherKind) -> Result<ObjectiveSpec> {
    build_benchmark(BenchmarkId::Example1, dim, smoother)
}

/// Builds one of the registry objectives with the given smoother.
pub fn build_benchmark(id: BenchmarkId, dim: usize, smoother: SmootherKind) -> Result<ObjectiveSpec> {
    let bench = Benchmark::new(id, dim, smoother)?;
    let bounds = SearchBox::symmetric(id.half_width(), dim)?;
    let d = dim as f64;
    let (kp, ep) = (smoother.kappa(), smoother.eta());
    let constants = match id {
        BenchmarkId::Example1 => SmoothingConstants {
            kappa: 0.1 * d * kp,
            eta: 0.1 * (ep + PI * PI * MU_BAR),
            q: 0.0,
            mu_bar: MU_BAR,
        },
        BenchmarkId::F1 => SmoothingConstants {
            kappa: kp,
            eta: (ep + 40.0 * PI * PI * MU_BAR) / d,
            q: 0.0,
            mu_bar: MU_BAR,
        },
        BenchmarkId::F3 => {
            let harmonic: f64 = (1..=dim).map(|l| 1.0 / l as f64).sum();
            SmoothingConstants {
                kappa: d * kp / 4000.0,
                eta: ep / 4000.0 + harmonic * MU_BAR,
                q: 0.0,
                mu_bar: MU_BAR,
            }
        }
        // sqrt(mean |x_l|) is only Hoelder-1/2 at the origin
        BenchmarkId::F4 => estimate_constants(&bench, &bounds, 0.5, MU_BAR),
        BenchmarkId::F2 | BenchmarkId::F5 => estimate_constants(&bench, &bounds, 0.0, MU_BAR),
    };
    let mut spec = ObjectiveSpec::custom(id.as_str(), Arc::new(bench), constants, bounds, vec![0.0; dim])?;
    spec.smoother = Some(smoother);
    Ok(spec)
}

/// Looks up a registry objective by string id.
pub fn build_by_name(id: &str, dim: usize, smoother: SmootherKind) -> Result<ObjectiveSpec> {
    build_benchmark(id.parse()?, dim, smoother)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_visits_every_point_once() {
        let b = SearchBox::new(-1.0, 1.0, 3).unwrap();
        let mut n = 0;
        let mut saw_origin = false;
        b.for_each_grid_point(5, |x| {
            n += 1;
            saw_origin |= x.iter().all(|&v| v == 0.0);
            assert!(b.contains(x));
        });
        assert_eq!(n, 125);
        assert!(saw_origin);
    }

    #[test]
    fn reference_values_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in BenchmarkId::ALL {
            let spec = build_benchmark(id, 2, SmootherKind::LogExp).unwrap();
            assert_eq!(spec.value(&spec.x_star), spec.f_min);
            assert_eq!(spec.f_min, 0.0);
            assert!(spec.f_max > spec.f_min);
            let mut x = [0.0; 2];
            for _ in 0..2000 {
                spec.bounds.sample(&mut rng, &mut x);
                let fx = spec.value(&x);
                assert!(fx >= spec.f_min - 1e-12, "{id} {x:?}");
                assert!(fx <= spec.f_max + 1e-2 * spec.f_max, "{id} {x:?}");
            }
        }
    }

    #[test]
    fn example1_in_three_dims_has_separable_max() {
        let spec = build_example1(3, SmootherKind::LogExp).unwrap();
        let one = build_example1(1, SmootherKind::LogExp).unwrap();
        assert!((spec.f_max - 3.0 * one.f_max).abs() < 1e-3, "{} {}", spec.f_max, one.f_max);
    }

    #[test]
    fn success_is_scale_free() {
        let spec = build_benchmark(BenchmarkId::F1, 2, SmootherKind::LogExp).unwrap();
        let fx = 0.004 * spec.f_max;
        assert!(spec.is_success(fx, 0.005));
        assert!(!spec.is_success(0.006 * spec.f_max, 0.005));
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(build_by_name("rosenbrock", 2, SmootherKind::Sqrt), Err(Error::UnknownBenchmark(_))));
    }

    #[test]
    fn margin_and_containment() {
        let b = SearchBox::symmetric(5.0, 2).unwrap();
        let m = b.with_margin(0.1);
        assert_eq!((m.lo, m.hi), (-6.0, 6.0));
        assert!(m.contains_box(&b));
        assert!(!b.contains_box(&m));
        assert!(SearchBox::new(1.0, 1.0, 2).is_err());
    }
}
