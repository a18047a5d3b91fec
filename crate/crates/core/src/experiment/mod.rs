//! Heralded photon-counting Monte Carlo over the switch model.
//!
//! Every (setting, repetition) pair draws from its own ChaCha stream keyed by
//! the master seed, so results do not depend on thread scheduling.

mod estimators;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    applied_phases, detection_probabilities, DrivePulse, EngineError, JonesVector, PassPhases,
    SwitchConfig,
};

pub use estimators::{
    calibrate_dark_rate, expected_rate, extinction_ratio_db, fit_fringe, summarize, visibility,
    FringeFit, Summary,
};

/// Dark rate giving visibility 0.9763 at the constructive setting with every
/// other default in place (see [`calibrate_dark_rate`]).
pub const DEFAULT_DARK_RATE: f64 = 152.369_561_749_690_46;
pub const DEFAULT_SEED: u64 = 0x5A6_0AC;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid run plan: {0}")]
    InvalidPlan(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid detection probabilities ({0}, {1})")]
    Probability(f64, f64),
    #[error("visibility undefined: both counts are zero")]
    NoCounts,
    #[error("fringe fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Heralded photon source. Rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceModel {
    /// Photons reaching the switch input per second, conditioned on a D_t click.
    pub heralded_pair_rate: f64,
    /// D_t clicks per second.
    pub trigger_rate: f64,
}

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            heralded_pair_rate: 529.3,
            trigger_rate: 20_000.0,
        }
    }
}

impl SourceModel {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.heralded_pair_rate) || !ok(self.trigger_rate) {
            return Err(ExperimentError::InvalidModel(format!(
                "source rates must be finite and >= 0, got {} and {}",
                self.heralded_pair_rate, self.trigger_rate
            )));
        }
        if self.heralded_pair_rate > self.trigger_rate {
            return Err(ExperimentError::InvalidModel(format!(
                "heralded_pair_rate {} exceeds trigger_rate {}",
                self.heralded_pair_rate, self.trigger_rate
            )));
        }
        Ok(())
    }

    /// Probability that a herald carries a photon into the switch.
    pub fn herald_efficiency(&self) -> f64 {
        if self.trigger_rate == 0.0 {
            0.0
        } else {
            self.heralded_pair_rate / self.trigger_rate
        }
    }
}

/// Gated single-photon detector shared by D₁ and D₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark/accidental counts per second of open gate.
    pub dark_rate: f64,
    /// Seconds.
    pub gate_width: f64,
    /// Gated by D_t; otherwise darks accumulate over the whole window.
    pub paired_with_trigger: bool,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.15,
            dark_rate: DEFAULT_DARK_RATE,
            gate_width: 100e-9,
            paired_with_trigger: true,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(ExperimentError::InvalidModel(format!(
                "efficiency must be in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(ExperimentError::InvalidModel(format!(
                "dark_rate must be finite and >= 0, got {}",
                self.dark_rate
            )));
        }
        if !(self.gate_width.is_finite() && self.gate_width > 0.0) {
            return Err(ExperimentError::InvalidModel(format!(
                "gate_width must be > 0, got {}",
                self.gate_width
            )));
        }
        Ok(())
    }

    /// Expected dark counts in one detector.
    fn dark_mean(&self, heralds: u64, integration_time: f64) -> f64 {
        if self.paired_with_trigger {
            self.dark_rate * self.gate_width * heralds as f64
        } else {
            self.dark_rate * integration_time
        }
    }
}

fn default_voltages() -> Vec<f64> {
    (0..=16).map(|i| i as f64 * 0.5).collect()
}

/// Measurement schedule. Seconds and volts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunPlan {
    pub voltages: Vec<f64>,
    pub repetitions: usize,
    pub integration_time: f64,
    pub seed: u64,
    #[serde(skip, default = "JonesVector::horizontal")]
    pub input_state: JonesVector<f64>,
    /// Start of the drive pulse relative to the herald.
    pub pulse_delay: f64,
    /// Standard deviation of a per-repetition pulse timing offset.
    pub pulse_jitter: f64,
}

impl Default for RunPlan {
    fn default() -> Self {
        Self {
            voltages: default_voltages(),
            repetitions: 20,
            integration_time: 10.0,
            seed: DEFAULT_SEED,
            input_state: JonesVector::horizontal(),
            pulse_delay: 0.0,
            pulse_jitter: 0.0,
        }
    }
}

impl RunPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidPlan(m));
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if !(self.integration_time.is_finite() && self.integration_time > 0.0) {
            return bad(format!(
                "integration_time must be > 0, got {}",
                self.integration_time
            ));
        }
        if let Some(v) = self.voltages.iter().find(|v| !v.is_finite()) {
            return bad(format!("voltage {v} is not finite"));
        }
        if !self.pulse_delay.is_finite() {
            return bad("pulse_delay is not finite".into());
        }
        if !(self.pulse_jitter.is_finite() && self.pulse_jitter >= 0.0) {
            return bad(format!(
                "pulse_jitter must be >= 0, got {}",
                self.pulse_jitter
            ));
        }
        JonesVector::new(self.input_state.alpha, self.input_state.beta)?;
        Ok(())
    }
}

/// Statistics of one sweep point. Counts are per integration window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingStats {
    pub voltage: f64,
    pub delay: f64,
    /// Nominal pass phases (without jitter).
    pub phi_cw: f64,
    pub phi_ccw: f64,
    pub mean_c1: f64,
    pub std_c1: f64,
    pub mean_c2: f64,
    pub std_c2: f64,
    /// Lossless detection probabilities.
    pub p1_analytic: f64,
    pub p2_analytic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub settings: Vec<SettingStats>,
    pub repetitions: usize,
    pub integration_time: f64,
}

impl ExperimentResult {
    pub fn summary(&self) -> Result<Summary, ExperimentError> {
        summarize(&self.settings, self.repetitions)
    }
}

/// Counts from `heralds` gated windows.
pub fn simulate_heralds<R: Rng + ?Sized>(
    heralds: u64,
    probs: (f64, f64),
    source: &SourceModel,
    detector: &DetectorModel,
    integration_time: f64,
    rng: &mut R,
) -> Result<(u64, u64), ExperimentError> {
    let (p1, p2) = probs;
    if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0 + 1e-12) {
        return Err(ExperimentError::Probability(p1, p2));
    }
    let scale = source.herald_efficiency() * detector.efficiency;
    let q1 = (scale * p1).min(1.0);
    let q2 = (scale * p2).min(1.0 - q1);
    let c1 = binomial(heralds, q1, rng);
    let rest = if q1 < 1.0 {
        (q2 / (1.0 - q1)).min(1.0)
    } else {
        0.0
    };
    let c2 = binomial(heralds - c1, rest, rng);
    let dark = detector.dark_mean(heralds, integration_time);
    Ok((c1 + poisson(dark, rng), c2 + poisson(dark, rng)))
}

/// One integration window: Poisson number of heralds, then per-herald detection.
pub fn simulate_window<R: Rng + ?Sized>(
    probs: (f64, f64),
    source: &SourceModel,
    detector: &DetectorModel,
    integration_time: f64,
    rng: &mut R,
) -> Result<(u64, u64), ExperimentError> {
    let heralds = poisson(source.trigger_rate * integration_time, rng);
    simulate_heralds(heralds, probs, source, detector, integration_time, rng)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as u64
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("clamped probability")
        .sample(rng)
}

/// Independent stream for one (setting, repetition) pair.
pub fn stream_rng(seed: u64, setting: usize, repetition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((setting as u64) << 32) | repetition as u64);
    rng
}

fn validate_all(
    plan: &RunPlan,
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<(), ExperimentError> {
    plan.validate()?;
    source.validate()?;
    detector.validate()?;
    config.validate()?;
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// (voltage, pulse delay) pairs.
fn run_settings(
    points: &[(f64, f64)],
    plan: &RunPlan,
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<ExperimentResult, ExperimentError> {
    validate_all(plan, source, detector, config)?;
    let reps = plan.repetitions;
    let trial = |idx: usize| -> Result<(u64, u64), ExperimentError> {
        let (s, r) = (idx / reps, idx % reps);
        let (voltage, delay) = points[s];
        let mut rng = stream_rng(plan.seed, s, r);
        let mut cfg = *config;
        if config.redraw_kl_per_repetition {
            cfg.mzs_phase_kl = rng.random::<f64>() * std::f64::consts::TAU;
        }
        let jitter = if plan.pulse_jitter > 0.0 {
            Normal::new(0.0, plan.pulse_jitter)
                .expect("validated jitter")
                .sample(&mut rng)
        } else {
            0.0
        };
        let pulse = DrivePulse {
            voltage,
            delay: delay + jitter,
            width: config.pulse_width,
        };
        let phases = applied_phases(&pulse, &cfg)?;
        let probs = detection_probabilities(&plan.input_state, &phases, &cfg, true)?;
        simulate_window(probs, source, detector, plan.integration_time, &mut rng)
    };
    let counts = (0..points.len() * reps)
        .into_par_iter()
        .map(trial)
        .collect::<Result<Vec<_>, _>>()?;

    let mut settings = Vec::with_capacity(points.len());
    for (s, &(voltage, delay)) in points.iter().enumerate() {
        let chunk = &counts[s * reps..(s + 1) * reps];
        let c1: Vec<f64> = chunk.iter().map(|c| c.0 as f64).collect();
        let c2: Vec<f64> = chunk.iter().map(|c| c.1 as f64).collect();
        let (mean_c1, std_c1) = mean_std(&c1);
        let (mean_c2, std_c2) = mean_std(&c2);
        settings.push(stats_row(
            voltage,
            delay,
            plan,
            config,
            [mean_c1, std_c1, mean_c2, std_c2],
        )?);
    }
    Ok(ExperimentResult {
        settings,
        repetitions: reps,
        integration_time: plan.integration_time,
    })
}

fn nominal_phases(
    voltage: f64,
    delay: f64,
    config: &SwitchConfig<f64>,
) -> Result<PassPhases<f64>, ExperimentError> {
    Ok(applied_phases(
        &DrivePulse {
            voltage,
            delay,
            width: config.pulse_width,
        },
        config,
    )?)
}

fn stats_row(
    voltage: f64,
    delay: f64,
    plan: &RunPlan,
    config: &SwitchConfig<f64>,
    [mean_c1, std_c1, mean_c2, std_c2]: [f64; 4],
) -> Result<SettingStats, ExperimentError> {
    let phases = nominal_phases(voltage, delay, config)?;
    let (p1, p2) = detection_probabilities(&plan.input_state, &phases, config, false)?;
    Ok(SettingStats {
        voltage,
        delay,
        phi_cw: phases.phi_cw,
        phi_ccw: phases.phi_ccw,
        mean_c1,
        std_c1,
        mean_c2,
        std_c2,
        p1_analytic: p1,
        p2_analytic: p2,
    })
}

/// Monte Carlo sweep over `plan.voltages` at `plan.pulse_delay`.
pub fn run_voltage_sweep(
    plan: &RunPlan,
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<ExperimentResult, ExperimentError> {
    let points: Vec<_> = plan
        .voltages
        .iter()
        .map(|&v| (v, plan.pulse_delay))
        .collect();
    run_settings(&points, plan, source, detector, config)
}

/// Monte Carlo scan of the drive-pulse delay at a fixed voltage.
pub fn run_delay_scan(
    delays: &[f64],
    voltage: f64,
    plan: &RunPlan,
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<ExperimentResult, ExperimentError> {
    if let Some(d) = delays.iter().find(|d| !d.is_finite()) {
        return Err(ExperimentError::InvalidPlan(format!(
            "delay {d} is not finite"
        )));
    }
    let points: Vec<_> = delays.iter().map(|&d| (voltage, d)).collect();
    run_settings(&points, plan, source, detector, config)
}

/// Noise-free counterpart of [`run_voltage_sweep`]: expected counts per
/// window, zero spread.
pub fn expected_sweep(
    plan: &RunPlan,
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<ExperimentResult, ExperimentError> {
    validate_all(plan, source, detector, config)?;
    let heralds = source.trigger_rate * plan.integration_time;
    let scale = heralds * source.herald_efficiency() * detector.efficiency;
    let dark = if detector.paired_with_trigger {
        detector.dark_rate * detector.gate_width * heralds
    } else {
        detector.dark_rate * plan.integration_time
    };
    let settings = plan
        .voltages
        .iter()
        .map(|&v| {
            let phases = nominal_phases(v, plan.pulse_delay, config)?;
            let (p1, p2) = detection_probabilities(&plan.input_state, &phases, config, true)?;
            stats_row(
                v,
                plan.pulse_delay,
                plan,
                config,
                [scale * p1 + dark, 0.0, scale * p2 + dark, 0.0],
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult {
        settings,
        repetitions: plan.repetitions,
        integration_time: plan.integration_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_darks() -> DetectorModel {
        DetectorModel {
            dark_rate: 0.0,
            ..DetectorModel::default()
        }
    }

    #[test]
    fn zero_efficiency_and_no_darks_gives_nothing() {
        let det = DetectorModel {
            efficiency: 0.0,
            dark_rate: 0.0,
            ..DetectorModel::default()
        };
        let mut rng = stream_rng(1, 0, 0);
        let c = simulate_window((1.0, 0.0), &SourceModel::default(), &det, 10.0, &mut rng).unwrap();
        assert_eq!(c, (0, 0));
    }

    #[test]
    fn lossy_constructive_rate_matches_binomial() {
        let source = SourceModel {
            heralded_pair_rate: 1.0,
            trigger_rate: 1.0,
        };
        let t = 10f64.powf(-0.5);
        let n = 1_000_000u64;
        let mut rng = stream_rng(42, 0, 0);
        let (c1, c2) = simulate_heralds(n, (t, 0.0), &source, &no_darks(), 1.0, &mut rng).unwrap();
        let p = 0.15 * t;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c1 as f64 / n as f64 - p).abs() <= 4.0 * sigma);
        assert!((p - 0.04743).abs() < 1e-5);
        assert_eq!(c2, 0);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let run = || {
            let mut rng = stream_rng(9, 3, 4);
            simulate_window(
                (0.3, 0.2),
                &SourceModel::default(),
                &DetectorModel::default(),
                10.0,
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut rng = stream_rng(1, 0, 0);
        let r = simulate_heralds(
            10,
            (0.7, 0.6),
            &SourceModel::default(),
            &no_darks(),
            1.0,
            &mut rng,
        );
        assert_eq!(r, Err(ExperimentError::Probability(0.7, 0.6)));
    }

    #[test]
    fn sweep_endpoints() {
        let plan = RunPlan {
            voltages: vec![0.0, 4.0, 8.0],
            repetitions: 5,
            ..RunPlan::default()
        };
        let r = run_voltage_sweep(
            &plan,
            &SourceModel::default(),
            &DetectorModel::default(),
            &SwitchConfig::default(),
        )
        .unwrap();
        let s = &r.settings;
        assert!(s[0].mean_c1 > 200.0 && s[0].mean_c2 < 10.0);
        assert!(s[1].mean_c2 > 200.0 && s[1].mean_c1 < 10.0);
        assert!(s[2].mean_c1 > 200.0);
        assert!(s.iter().all(|x| x.std_c1 >= 0.0 && x.std_c2 >= 0.0));
    }

    #[test]
    fn parallel_order_does_not_matter() {
        let plan = RunPlan {
            repetitions: 3,
            integration_time: 1.0,
            ..RunPlan::default()
        };
        let run = || {
            run_voltage_sweep(
                &plan,
                &SourceModel::default(),
                &DetectorModel::default(),
                &SwitchConfig::default(),
            )
            .unwrap()
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(run);
        assert_eq!(serial, run());
    }

    #[test]
    fn plan_validation() {
        let bad = RunPlan {
            repetitions: 0,
            ..RunPlan::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunPlan {
            integration_time: 0.0,
            ..RunPlan::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(RunPlan::default().voltages.len(), 17);
    }
}
