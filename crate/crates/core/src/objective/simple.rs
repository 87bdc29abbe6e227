use super::Objective;

/// `f(x) = scale * |x - center|^2`. Already smooth, so `f~(x, mu) = f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl Quadratic {
    pub fn new(center: Vec<f64>, scale: f64) -> Self {
        Quadratic { center, scale }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.scale * x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
    }

    fn smoothed(&self, x: &[f64], _mu: f64) -> f64 {
        self.value(x)
    }

    fn grad_x(&self, x: &[f64], _mu: f64, out: &mut [f64]) {
        for ((g, a), c) in out.iter_mut().zip(x).zip(&self.center) {
            *g = 2.0 * self.scale * (a - c);
        }
    }

    fn dmu(&self, _x: &[f64], _mu: f64) -> f64 {
        0.0
    }
}

/// `f(x) = c` everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub level: f64,
}

impl Objective for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.level
    }

    fn smoothed(&self, _x: &[f64], _mu: f64) -> f64 {
        self.level
    }

    fn grad_x(&self, _x: &[f64], _mu: f64, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn dmu(&self, _x: &[f64], _mu: f64) -> f64 {
        0.0
    }
}
