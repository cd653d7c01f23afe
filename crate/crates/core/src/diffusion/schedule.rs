use thiserror::Error;

use crate::numeric::{gaussian, Tensor};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule must have at least one step")]
    Empty,
    #[error("beta values must lie strictly inside (0, 1) and increase")]
    BadBetas,
    #[error("terminal signal level {0} is not below 1e-3")]
    WeakTerminalNoise(f64),
    #[error("timestep {t} outside [1, {max}]")]
    StepOutOfRange { t: usize, max: usize },
}

/// Variance schedule tables: `beta_t`, `alpha_t = 1 - beta_t`, and the
/// running product `alpha_bar_t`, indexed by timestep `1..=T`.
/// `alpha_bar(0)` is defined as 1 so the posterior is well-formed at `t = 1`.
#[derive(Clone, Debug)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Linear schedule with endpoints scaled inversely to the step count, so
    /// the total injected noise stays comparable when `T` shrinks from the
    /// reference 2000 steps to a desk-scale value.
    pub fn linear(steps: usize) -> Result<Self, ScheduleError> {
        if steps == 0 {
            return Err(ScheduleError::Empty);
        }
        let scale = 2000.0 / steps as f64;
        let beta_start = (1e-4 * scale).min(0.5);
        let beta_end = (0.02 * scale).min(0.999);
        let betas: Vec<f64> = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_end
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self, ScheduleError> {
        if betas.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for window in betas.windows(2) {
            if window[1] <= window[0] {
                return Err(ScheduleError::BadBetas);
            }
        }
        if betas.iter().any(|&b| b <= 0.0 || b >= 1.0) {
            return Err(ScheduleError::BadBetas);
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut product = 1.0;
        for &a in &alphas {
            product *= a;
            alpha_bars.push(product);
        }
        let terminal = *alpha_bars.last().unwrap();
        if terminal >= 1e-3 {
            return Err(ScheduleError::WeakTerminalNoise(terminal));
        }
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn check(&self, t: usize) -> Result<(), ScheduleError> {
        if t == 0 || t > self.steps() {
            return Err(ScheduleError::StepOutOfRange {
                t,
                max: self.steps(),
            });
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// Product of alphas up to `t`; `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Closed-form forward sample: `sqrt(abar_t) x0 + sqrt(1 - abar_t) z`.
    pub fn q_sample(&self, x0: &Tensor, t: usize, seed: u64) -> Result<Tensor, ScheduleError> {
        self.check(t)?;
        let abar = self.alpha_bar(t);
        let z = gaussian(x0.shape(), seed);
        Ok(x0
            .scale(abar.sqrt())
            .add(&z.scale((1.0 - abar).sqrt()))
            .expect("same shape"))
    }

    /// Posterior coefficients of the reverse transition at step `t`:
    /// (coefficient of the predicted clean sample, coefficient of `x_t`,
    /// noise variance).
    pub fn posterior_coefficients(&self, t: usize) -> Result<(f64, f64, f64), ScheduleError> {
        self.check(t)?;
        let beta = self.beta(t);
        let alpha = self.alpha(t);
        let abar_t = self.alpha_bar(t);
        let abar_prev = self.alpha_bar(t - 1);
        let denom = 1.0 - abar_t;
        let coef_x0 = abar_prev.sqrt() * beta / denom;
        let coef_xt = alpha.sqrt() * (1.0 - abar_prev) / denom;
        let variance = (1.0 - abar_prev) / denom * beta;
        Ok((coef_x0, coef_xt, variance))
    }

    /// One reverse transition: sample `x_{t-1}` around the posterior mean.
    /// The noise term is zeroed at the final step (`t = 1`).
    pub fn reverse_step(
        &self,
        x_t: &Tensor,
        t: usize,
        x0_hat: &Tensor,
        seed: u64,
    ) -> Result<Tensor, ScheduleError> {
        let (coef_x0, coef_xt, variance) = self.posterior_coefficients(t)?;
        let mean = x0_hat
            .scale(coef_x0)
            .add(&x_t.scale(coef_xt))
            .expect("same shape");
        if t == 1 {
            return Ok(mean);
        }
        let z = gaussian(x_t.shape(), seed);
        Ok(mean
            .add(&z.scale(variance.sqrt()))
            .expect("same shape"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_bar_is_the_running_product() {
        let schedule = NoiseSchedule::linear(200).unwrap();
        let mut product = 1.0;
        for t in 1..=schedule.steps() {
            product *= schedule.alpha(t);
            assert!((schedule.alpha_bar(t) - product).abs() <= 1e-12);
        }
        assert!(schedule.alpha_bar(schedule.steps()) < 1e-3);
        assert_eq!(schedule.alpha_bar(0), 1.0);
    }

    #[test]
    fn alpha_bar_strictly_decreases() {
        let schedule = NoiseSchedule::linear(120).unwrap();
        for t in 1..=schedule.steps() {
            assert!(schedule.alpha_bar(t) < schedule.alpha_bar(t - 1));
        }
    }

    #[test]
    fn three_step_product_matches_hand_arithmetic() {
        let schedule = NoiseSchedule::from_betas(vec![0.1, 0.2, 0.3]).unwrap_err();
        // 0.9 * 0.8 * 0.7 = 0.504 is far above the terminal-noise bound, so
        // the constructor refuses it; check the arithmetic through a manual
        // table instead.
        assert!(matches!(schedule, ScheduleError::WeakTerminalNoise(_)));
        let betas = [0.1, 0.2, 0.3];
        let product: f64 = betas.iter().map(|b| 1.0 - b).product();
        assert!((product - 0.504).abs() < 1e-12);
    }

    #[test]
    fn posterior_matches_hand_arithmetic_for_two_steps() {
        // beta = (0.1, 0.2): abar_1 = 0.9, abar_2 = 0.72
        // at t=2 with x0_hat = 1, x_2 = 0.5:
        //   mean = sqrt(0.9)*0.2/0.28 * 1 + sqrt(0.8)*0.1/0.28 * 0.5
        let betas = vec![0.1, 0.2];
        // bypass the terminal-noise guard: build tables directly
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let schedule = NoiseSchedule {
            betas,
            alpha_bars: vec![alphas[0], alphas[0] * alphas[1]],
            alphas,
        };
        let (c0, ct, var) = schedule.posterior_coefficients(2).unwrap();
        let expected_c0 = 0.9f64.sqrt() * 0.2 / (1.0 - 0.72);
        let expected_ct = 0.8f64.sqrt() * 0.1 / 0.28;
        assert!((c0 - expected_c0).abs() < 1e-15);
        assert!((ct - expected_ct).abs() < 1e-15);
        assert!((var - (1.0 - 0.9) / 0.28 * 0.2).abs() < 1e-15);
        let mean = c0 * 1.0 + ct * 0.5;
        let x = schedule
            .reverse_step(&Tensor::scalar(0.5), 2, &Tensor::scalar(1.0), 7)
            .unwrap();
        // t=2 adds noise; subtracting the mean leaves the noise term
        let residual = x.item().unwrap() - mean;
        assert!(residual.abs() < 5.0 * var.sqrt());
    }

    #[test]
    fn final_step_is_noiseless_with_unit_coefficient() {
        let schedule = NoiseSchedule::linear(50).unwrap();
        let (c0, ct, var) = schedule.posterior_coefficients(1).unwrap();
        assert!((c0 - 1.0).abs() < 1e-12);
        assert!(ct.abs() < 1e-12);
        assert_eq!(var, 0.0);
        let x0_hat = Tensor::scalar(0.37);
        let out = schedule
            .reverse_step(&Tensor::scalar(-2.0), 1, &x0_hat, 99)
            .unwrap();
        assert!((out.item().unwrap() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn q_sample_mean_tracks_signal() {
        let schedule = NoiseSchedule::linear(200).unwrap();
        let x0 = Tensor::scalar(1.0);
        let t = 50;
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|s| schedule.q_sample(&x0, t, s).unwrap().item().unwrap())
            .sum::<f64>()
            / draws as f64;
        let expected = schedule.alpha_bar(t).sqrt();
        let std_err = ((1.0 - schedule.alpha_bar(t)) / draws as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * std_err,
            "mean {mean} expected {expected} (3se {})",
            3.0 * std_err
        );
    }

    #[test]
    fn q_sample_with_saturated_signal_returns_input() {
        // a beta prefix of zeros is outside the schedule invariants, so form
        // the identity case directly: abar = 1 means no mixing
        let schedule = NoiseSchedule {
            betas: vec![0.5],
            alphas: vec![1.0],
            alpha_bars: vec![1.0],
        };
        let x0 = Tensor::new(vec![3], vec![0.1, -0.5, 2.0]).unwrap();
        let out = schedule.q_sample(&x0, 1, 4).unwrap();
        assert!(out.bit_eq(&x0));
    }
}
