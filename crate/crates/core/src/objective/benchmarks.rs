use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use super::{Objective, SmootherKind};
use crate::error::{Error, Result};

/// Registry of shipped objectives. All have the global minimizer at the origin
/// with minimum value zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkId {
    /// `(1/10) sum(|x_l| - cos(pi x_l) + 1)`
    Example1,
    /// `(1/d) sum(|x_l| - 10 cos(2 pi x_l) + 10)`
    F1,
    /// `sum |x_l| + prod |x_l|`
    F2,
    /// `(1/4000) sum |x_l| - prod cos(x_l / sqrt(l)) + 1`
    F3,
    /// `-10 exp(-0.2 sqrt(mean |x_l|)) - exp(mean cos(2 pi x_l)) + 10 + e`
    F4,
    /// `[sum sin^2 x_l - exp(-|x|^2)] exp(-sum sin^2 sqrt|x_l|) + 1`
    F5,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 6] = [
        BenchmarkId::Example1,
        BenchmarkId::F1,
        BenchmarkId::F2,
        BenchmarkId::F3,
        BenchmarkId::F4,
        BenchmarkId::F5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::Example1 => "example1",
            BenchmarkId::F1 => "f1",
            BenchmarkId::F2 => "f2",
            BenchmarkId::F3 => "f3",
            BenchmarkId::F4 => "f4",
            BenchmarkId::F5 => "f5",
        }
    }

    /// Search box half-width. `example1` uses `[-2, 2]^d`, the rest `[-5, 5]^d`.
    pub fn half_width(self) -> f64 {
        match self {
            BenchmarkId::Example1 => 2.0,
            _ => 5.0,
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownBenchmark(s.to_string()))
    }
}

/// One of the shipped benchmark functions with every `|x_l|` replaced by a
/// smooth-abs in the smoothed evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Benchmark {
    pub id: BenchmarkId,
    pub dim: usize,
    pub smoother: SmootherKind,
}

impl Benchmark {
    pub fn new(id: BenchmarkId, dim: usize, smoother: SmootherKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        Ok(Benchmark { id, dim, smoother })
    }

    // Shared evaluation: `abs` maps x_l to |x_l| or its smoothing.
    fn eval_with(&self, x: &[f64], abs: impl Fn(f64) -> f64) -> f64 {
        let d = self.dim as f64;
        match self.id {
            BenchmarkId::Example1 => {
                0.1 * x.iter().map(|&v| abs(v) - (PI * v).cos() + 1.0).sum::<f64>()
            }
            BenchmarkId::F1 => {
                x.iter().map(|&v| abs(v) - 10.0 * (2.0 * PI * v).cos() + 10.0).sum::<f64>() / d
            }
            BenchmarkId::F2 => {
                x.iter().map(|&v| abs(v)).sum::<f64>() + x.iter().map(|&v| abs(v)).product::<f64>()
            }
            BenchmarkId::F3 => {
                let s = x.iter().map(|&v| abs(v)).sum::<f64>() / 4000.0;
                let p = x
                    .iter()
                    .enumerate()
                    .map(|(l, &v)| (v / ((l + 1) as f64).sqrt()).cos())
                    .product::<f64>();
                s - p + 1.0
            }
            BenchmarkId::F4 => {
                let m = x.iter().map(|&v| abs(v)).sum::<f64>() / d;
                let c = x.iter().map(|&v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -10.0 * (-0.2 * m.sqrt()).exp_m1() + (E - c.exp())
            }
            BenchmarkId::F5 => {
                let sq: f64 = x.iter().map(|&v| v * v).sum();
                let a = x.iter().map(|&v| v.sin().powi(2)).sum::<f64>() - (-sq).exp();
                let b = (-x.iter().map(|&v| abs(v).sqrt().sin().powi(2)).sum::<f64>()).exp();
                a * b + 1.0
            }
        }
    }
}

impl Objective for Benchmark {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval_with(x, f64::abs)
    }

    fn smoothed(&self, x: &[f64], mu: f64) -> f64 {
        let k = self.smoother;
        self.eval_with(x, |v| k.value(v, mu))
    }

    fn grad_x(&self, x: &[f64], mu: f64, out: &mut [f64]) {
        let k = self.smoother;
        let d = self.dim as f64;
        match self.id {
            BenchmarkId::Example1 => {
                for (g, &v) in out.iter_mut().zip(x) {
                    *g = 0.1 * (k.ds(v, mu) + PI * (PI * v).sin());
                }
            }
            BenchmarkId::F1 => {
                for (g, &v) in out.iter_mut().zip(x) {
                    *g = (k.ds(v, mu) + 20.0 * PI * (2.0 * PI * v).sin()) / d;
                }
            }
            BenchmarkId::F2 => {
                let phi: Vec<f64> = x.iter().map(|&v| k.value(v, mu)).collect();
                for (l, g) in out.iter_mut().enumerate() {
                    let others: f64 =
                        phi.iter().enumerate().filter(|&(j, _)| j != l).map(|(_, p)| p).product();
                    *g = k.ds(x[l], mu) * (1.0 + others);
                }
            }
            BenchmarkId::F3 => {
                let args: Vec<f64> =
                    x.iter().enumerate().map(|(l, &v)| v / ((l + 1) as f64).sqrt()).collect();
                for (l, g) in out.iter_mut().enumerate() {
                    let others: f64 = args
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != l)
                        .map(|(_, a)| a.cos())
                        .product();
                    let r = ((l + 1) as f64).sqrt();
                    *g = k.ds(x[l], mu) / 4000.0 + args[l].sin() / r * others;
                }
            }
            BenchmarkId::F4 => {
                let m = x.iter().map(|&v| k.value(v, mu)).sum::<f64>() / d;
                let c = x.iter().map(|&v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                let root = m.sqrt();
                let outer = (-0.2 * root).exp() / root;
                let ec = c.exp();
                for (g, &v) in out.iter_mut().zip(x) {
                    *g = outer * k.ds(v, mu) / d + 2.0 * PI * ec * (2.0 * PI * v).sin() / d;
                }
            }
            BenchmarkId::F5 => {
                let sq: f64 = x.iter().map(|&v| v * v).sum();
                let gauss = (-sq).exp();
                let a = x.iter().map(|&v| v.sin().powi(2)).sum::<f64>() - gauss;
                let roots: Vec<f64> = x.iter().map(|&v| k.value(v, mu).sqrt()).collect();
                let b = (-roots.iter().map(|r| r.sin().powi(2)).sum::<f64>()).exp();
                for (l, g) in out.iter_mut().enumerate() {
                    let v = x[l];
                    let da = (2.0 * v).sin() + 2.0 * v * gauss;
                    let r = roots[l];
                    let db = -b * (2.0 * r).sin() / (2.0 * r) * k.ds(v, mu);
                    *g = da * b + a * db;
                }
            }
        }
    }

    fn dmu(&self, x: &[f64], mu: f64) -> f64 {
        let k = self.smoother;
        let d = self.dim as f64;
        match self.id {
            BenchmarkId::Example1 => 0.1 * x.iter().map(|&v| k.dmu(v, mu)).sum::<f64>(),
            BenchmarkId::F1 => x.iter().map(|&v| k.dmu(v, mu)).sum::<f64>() / d,
            BenchmarkId::F2 => {
                let phi: Vec<f64> = x.iter().map(|&v| k.value(v, mu)).collect();
                (0..x.len())
                    .map(|l| {
                        let others: f64 = phi
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != l)
                            .map(|(_, p)| p)
                            .product();
                        k.dmu(x[l], mu) * (1.0 + others)
                    })
                    .sum()
            }
            BenchmarkId::F3 => x.iter().map(|&v| k.dmu(v, mu)).sum::<f64>() / 4000.0,
            BenchmarkId::F4 => {
                let m = x.iter().map(|&v| k.value(v, mu)).sum::<f64>() / d;
                let root = m.sqrt();
                (-0.2 * root).exp() / root * x.iter().map(|&v| k.dmu(v, mu)).sum::<f64>() / d
            }
            BenchmarkId::F5 => {
                let sq: f64 = x.iter().map(|&v| v * v).sum();
                let a = x.iter().map(|&v| v.sin().powi(2)).sum::<f64>() - (-sq).exp();
                let roots: Vec<f64> = x.iter().map(|&v| k.value(v, mu).sqrt()).collect();
                let b = (-roots.iter().map(|r| r.sin().powi(2)).sum::<f64>()).exp();
                let inner: f64 = x
                    .iter()
                    .zip(&roots)
                    .map(|(&v, &r)| (2.0 * r).sin() / (2.0 * r) * k.dmu(v, mu))
                    .sum();
                -a * b * inner
            }
        }
    }
}
