use serde::{Deserialize, Serialize};

use super::{Ensemble, NoiseMode, NoiseSource, SolverConfig};
use crate::error::{Error, Result};
use crate::objective::Objective;

/// Which energy weights the consensus point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    /// Smoothed objective `f~(x, mu_t)`.
    #[default]
    Scbo,
    /// Raw objective `f(x)`; `mu_t` is ignored.
    Cbo,
}

impl Stepper {
    pub fn as_str(self) -> &'static str {
        match self {
            Stepper::Scbo => "scbo",
            Stepper::Cbo => "cbo",
        }
    }

    pub fn energies(self, ens: &Ensemble, objective: &dyn Objective, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Stepper::Scbo => out.extend(ens.particles().map(|x| objective.smoothed(x, ens.mu_t))),
            Stepper::Cbo => out.extend(ens.particles().map(|x| objective.value(x))),
        }
    }
}

/// Gibbs-weighted mean `sum x^i w_i / sum w_i` with `w_i = exp(-beta e_i)`.
///
/// The minimum energy is subtracted inside the exponent, so the largest weight
/// is exactly one and the normalizer never underflows.
pub fn consensus_from_energies(ens: &Ensemble, beta: f64, energies: &[f64]) -> Result<Vec<f64>> {
    if energies.len() != ens.n_particles() {
        return Err(Error::DimensionMismatch { expected: ens.n_particles(), got: energies.len() });
    }
    let mut floor = f64::INFINITY;
    for (i, &e) in energies.iter().enumerate() {
        if !e.is_finite() {
            return Err(Error::NonFiniteEnergy { particle: i, value: e });
        }
        floor = floor.min(e);
    }
    let mut acc = vec![0.0; ens.dim()];
    let mut total = 0.0;
    for (x, &e) in ens.particles().zip(energies) {
        let w = (-beta * (e - floor)).exp();
        total += w;
        for (a, v) in acc.iter_mut().zip(x) {
            *a += w * v;
        }
    }
    if !(total >= 1.0 && total.is_finite()) {
        return Err(Error::Invariant(format!("consensus weight sum is {total}")));
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(acc)
}

/// Consensus point weighted by `f~(x, mu_t)` at the ensemble's current `mu_t`.
pub fn consensus_point(ens: &Ensemble, beta: f64, objective: &dyn Objective) -> Result<Vec<f64>> {
    let mut energies = Vec::with_capacity(ens.n_particles());
    Stepper::Scbo.energies(ens, objective, &mut energies);
    consensus_from_energies(ens, beta, &energies)
}

/// Predictor `x^ = c + e^{-lambda h}(x - c)`, then corrector
/// `x_l <- x^_l - sigma sqrt(h) w_l (x^_l - c_l)`, for a fixed consensus point `c`.
pub fn two_step_update(
    ens: &mut Ensemble,
    cfg: &SolverConfig,
    consensus: &[f64],
    noise: &mut NoiseSource,
) -> Result<()> {
    let (n, d) = (ens.n_particles(), ens.dim());
    let decay = (-cfg.lambda * cfg.h).exp();
    let amp = cfg.sigma * cfg.h.sqrt();
    let mode = noise.mode();
    let w = noise.draw(n, d);
    let step = ens.step_index;
    for (i, x) in ens.positions_mut().chunks_exact_mut(d).enumerate() {
        for l in 0..d {
            let c = consensus[l];
            let wl = match mode {
                NoiseMode::Common => w[l],
                NoiseMode::Independent => w[i * d + l],
            };
            let hat = c + decay * (x[l] - c);
            let next = hat - (hat - c) * amp * wl;
            if !next.is_finite() {
                return Err(Error::NonFiniteStep { step });
            }
            x[l] = next;
        }
    }
    ens.step_index += 1;
    ens.t = ens.step_index as f64 * cfg.h;
    ens.mu_t = cfg.mu_at(ens.t);
    Ok(())
}

/// One step of the smoothing scheme. Returns the consensus point used.
pub fn dscbo_step(
    ens: &mut Ensemble,
    cfg: &SolverConfig,
    noise: &mut NoiseSource,
    objective: &dyn Objective,
) -> Result<Vec<f64>> {
    step_with(Stepper::Scbo, ens, cfg, noise, objective)
}

/// One step of the unsmoothed baseline: identical update, weights from `f`.
pub fn cbo_step(
    ens: &mut Ensemble,
    cfg: &SolverConfig,
    noise: &mut NoiseSource,
    objective: &dyn Objective,
) -> Result<Vec<f64>> {
    step_with(Stepper::Cbo, ens, cfg, noise, objective)
}

pub fn step_with(
    stepper: Stepper,
    ens: &mut Ensemble,
    cfg: &SolverConfig,
    noise: &mut NoiseSource,
    objective: &dyn Objective,
) -> Result<Vec<f64>> {
    if ens.dim() != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), got: ens.dim() });
    }
    let mut energies = Vec::with_capacity(ens.n_particles());
    stepper.energies(ens, objective, &mut energies);
    let consensus = consensus_from_energies(ens, cfg.beta, &energies)?;
    two_step_update(ens, cfg, &consensus, noise)?;
    Ok(consensus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Benchmark, BenchmarkId, Constant, Quadratic, SmootherKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Ensemble {
        Ensemble::new(xs.to_vec(), 1, 1.0).unwrap()
    }

    #[test]
    fn zero_beta_gives_arithmetic_mean() {
        let e = Ensemble::from_rows(&[vec![0.0, 1.0], vec![2.0, 5.0], vec![4.0, 0.0]], 1.0).unwrap();
        let c = consensus_from_energies(&e, 0.0, &[3.0, 1.0, 7.0]).unwrap();
        assert_eq!(c, e.mean());
    }

    #[test]
    fn identical_particles_give_that_point() {
        let e = Ensemble::from_rows(&vec![vec![0.3, -1.2]; 5], 1.0).unwrap();
        let c = consensus_from_energies(&e, 10.0, &[5.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c, vec![0.3, -1.2]);
    }

    #[test]
    fn three_point_weighted_mean() {
        let e = line(&[0.0, 1.0, 2.0]);
        let c = consensus_from_energies(&e, 1.0, &[0.0, 1.0, 2.0]).unwrap();
        let (w1, w2) = ((-1f64).exp(), (-2f64).exp());
        assert_relative_eq!(c[0], (w1 + 2.0 * w2) / (1.0 + w1 + w2), max_relative = 1e-15);
    }

    #[test]
    fn huge_energies_do_not_underflow() {
        let e = line(&[1.0, 3.0]);
        let c = consensus_from_energies(&e, 1e3, &[1e6, 1e6]).unwrap();
        assert_eq!(c, vec![2.0]);
    }

    #[test]
    fn large_beta_selects_best_particle() {
        let e = line(&[-1.0, 0.5, 2.0, 4.0]);
        let c = consensus_from_energies(&e, 1e6, &[0.3, 0.1, 0.2, 0.4]).unwrap();
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn non_finite_energy_names_particle() {
        let e = line(&[0.0, 1.0, 2.0]);
        match consensus_from_energies(&e, 1.0, &[0.0, f64::NAN, 1.0]) {
            Err(Error::NonFiniteEnergy { particle, .. }) => assert_eq!(particle, 1),
            other => panic!("{other:?}"),
        }
    }

    fn cfg(lambda: f64, sigma: f64, h: f64) -> SolverConfig {
        SolverConfig { lambda, sigma, h, beta: 3.0, dim: 1, n_particles: 2, ..Default::default() }
    }

    #[test]
    fn sigma_zero_is_pure_contraction() {
        let obj = Benchmark::new(BenchmarkId::F1, 2, SmootherKind::LogExp).unwrap();
        let c = SolverConfig { sigma: 0.0, dim: 2, n_particles: 4, ..cfg(1.3, 0.0, 0.01) };
        let mut e = Ensemble::from_rows(
            &[vec![0.1, 2.0], vec![-3.0, 1.0], vec![4.0, -0.5], vec![1.5, 1.5]],
            1.0,
        )
        .unwrap();
        let before = e.clone();
        let mut noise = NoiseSource::new(9, NoiseMode::Common);
        let cons = dscbo_step(&mut e, &c, &mut noise, &obj).unwrap();
        let decay = (-c.lambda * c.h).exp();
        for (x, x0) in e.particles().zip(before.particles()) {
            for l in 0..2 {
                assert_relative_eq!(x[l] - cons[l], decay * (x0[l] - cons[l]), max_relative = 1e-13);
            }
        }
        assert_eq!(e.step_index, 1);
        assert_relative_eq!(e.mu_t, c.mu_at(0.01));
    }

    #[test]
    fn single_particle_is_fixed_point() {
        let obj = Benchmark::new(BenchmarkId::Example1, 3, SmootherKind::LogExp).unwrap();
        let c = SolverConfig { dim: 3, n_particles: 1, ..cfg(1.0, 1.0, 0.01) };
        let mut e = Ensemble::new(vec![0.7, -0.2, 1.9], 3, 0.5).unwrap();
        let mut noise = NoiseSource::new(5, NoiseMode::Common);
        for _ in 0..20 {
            dscbo_step(&mut e, &c, &mut noise, &obj).unwrap();
        }
        assert_eq!(e.positions(), &[0.7, -0.2, 1.9]);
    }

    #[test]
    fn two_particle_difference_factor() {
        let c = cfg(1.0, 1.0, 0.01);
        let obj = Constant { dim: 1, level: 0.0 };
        let mut e = line(&[0.0, 1.0]);
        let mut noise = NoiseSource::new(77, NoiseMode::Common);
        let w = NoiseSource::new(77, NoiseMode::Common).draw(2, 1)[0];
        dscbo_step(&mut e, &c, &mut noise, &obj).unwrap();
        let expected = (-0.01f64).exp() * (1.0 - 0.1 * w);
        assert_relative_eq!(e.positions()[1] - e.positions()[0], expected, max_relative = 1e-13);
    }

    #[test]
    fn cbo_matches_scbo_on_smooth_objective() {
        let obj = Quadratic::new(vec![0.5, -0.25], 2.0);
        let c = SolverConfig { dim: 2, n_particles: 3, ..cfg(1.0, 0.7, 0.01) };
        let start =
            Ensemble::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]], 1.0).unwrap();
        let (mut a, mut b) = (start.clone(), start);
        let mut na = NoiseSource::new(3, NoiseMode::Common);
        let mut nb = NoiseSource::new(3, NoiseMode::Common);
        for _ in 0..200 {
            dscbo_step(&mut a, &c, &mut na, &obj).unwrap();
            cbo_step(&mut b, &c, &mut nb, &obj).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn independent_noise_moves_particles_differently() {
        let c = SolverConfig { noise_mode: NoiseMode::Independent, ..cfg(1.0, 1.0, 0.01) };
        let obj = Constant { dim: 1, level: 0.0 };
        let mut e = line(&[0.0, 1.0]);
        let mut noise = NoiseSource::new(1, NoiseMode::Independent);
        dscbo_step(&mut e, &c, &mut noise, &obj).unwrap();
        // both particles are 0.5 from the centre; distinct noise breaks the symmetry
        let (d0, d1) = (0.5 - e.positions()[0], e.positions()[1] - 0.5);
        assert!((d0 - d1).abs() > 1e-6);
    }

    fn points() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (prop::collection::vec(-10.0f64..10.0, n * 2), prop::collection::vec(-5.0f64..5.0, n))
        })
    }

    proptest! {
        #[test]
        fn consensus_in_hull_and_near_mean((pos, energies) in points(), beta in 0.0f64..100.0) {
            let e = Ensemble::new(pos, 2, 1.0).unwrap();
            let c = consensus_from_energies(&e, beta, &energies).unwrap();
            for l in 0..2 {
                let lo = e.particles().map(|x| x[l]).fold(f64::INFINITY, f64::min);
                let hi = e.particles().map(|x| x[l]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(c[l] >= lo - 1e-9 && c[l] <= hi + 1e-9);
            }
            let mean = e.mean();
            let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            let spread = e.particles().map(|x| dist(x, &mean)).fold(0.0, f64::max);
            prop_assert!(dist(&mean, &c) <= spread + 1e-9);
        }

        #[test]
        fn shift_invariance((pos, energies) in points(), beta in 0.0f64..50.0, shift in -100.0f64..100.0) {
            let e = Ensemble::new(pos, 2, 1.0).unwrap();
            let a = consensus_from_energies(&e, beta, &energies).unwrap();
            let shifted: Vec<f64> = energies.iter().map(|v| v + shift).collect();
            let b = consensus_from_energies(&e, beta, &shifted).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
            }
        }

        #[test]
        fn translation_equivariance((pos, energies) in points(), beta in 0.0f64..50.0, dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
            let e = Ensemble::new(pos.clone(), 2, 1.0).unwrap();
            let moved: Vec<f64> = pos.chunks(2).flat_map(|p| [p[0] + dx, p[1] + dy]).collect();
            let m = Ensemble::new(moved, 2, 1.0).unwrap();
            let a = consensus_from_energies(&e, beta, &energies).unwrap();
            let b = consensus_from_energies(&m, beta, &energies).unwrap();
            prop_assert!((b[0] - a[0] - dx).abs() < 1e-9);
            prop_assert!((b[1] - a[1] - dy).abs() < 1e-9);
        }
    }
}
