//! Visibility, extinction ratio, fringe fitting and rate bookkeeping.

use super::{DetectorModel, ExperimentError, SettingStats, SourceModel};
use crate::components::attenuation_amplitude;
use crate::engine::SwitchConfig;
use crate::optimize::golden_section;

/// `(c1 − c2)/(c1 + c2)`.
pub fn visibility(c1: f64, c2: f64) -> Result<f64, ExperimentError> {
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(ExperimentError::InvalidModel(format!(
            "counts must be >= 0, got ({c1}, {c2})"
        )));
    }
    if c1 + c2 == 0.0 {
        return Err(ExperimentError::NoCounts);
    }
    Ok((c1 - c2) / (c1 + c2))
}

/// `10·log10((1+v)/(1−v))`; ±1 map to ±∞.
pub fn extinction_ratio_db(v: f64) -> Result<f64, ExperimentError> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(ExperimentError::InvalidModel(format!(
            "visibility must be in [-1, 1], got {v}"
        )));
    }
    if v == 1.0 {
        return Ok(f64::INFINITY);
    }
    if v == -1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * ((1.0 + v) / (1.0 - v)).log10())
}

/// Least-squares fit of `A·cos²(πv/(2·v_pi)) + B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub v_pi: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// `A/(A + 2B)`.
    pub visibility: f64,
    /// Root of the residual sum of squares.
    pub residual_norm: f64,
}

const V_PI_GRID: (f64, f64, f64) = (1.0, 10.0, 0.005);

/// Best (A, B, SSR) for a fixed `v_pi`; `None` if the regressor is constant.
fn linear_fit(voltages: &[f64], counts: &[f64], v_pi: f64) -> Option<(f64, f64, f64)> {
    let n = voltages.len() as f64;
    let x: Vec<f64> = voltages
        .iter()
        .map(|v| (std::f64::consts::FRAC_PI_2 * v / v_pi).cos().powi(2))
        .collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = counts.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx <= 1e-12 * n {
        return None;
    }
    let sxy: f64 = x
        .iter()
        .zip(counts)
        .map(|(xi, yi)| (xi - mx) * (yi - my))
        .sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ssr = x
        .iter()
        .zip(counts)
        .map(|(xi, yi)| (yi - a * xi - b).powi(2))
        .sum();
    Some((a, b, ssr))
}

/// Coarse grid over `v_pi ∈ [1, 10]` V, then golden-section refinement.
pub fn fit_fringe(voltages: &[f64], counts: &[f64]) -> Result<FringeFit, ExperimentError> {
    let fail = |m: String| Err(ExperimentError::Fit(m));
    if voltages.len() != counts.len() {
        return fail(format!(
            "{} voltages but {} counts",
            voltages.len(),
            counts.len()
        ));
    }
    if voltages.iter().chain(counts).any(|x| !x.is_finite()) {
        return fail("non-finite input".into());
    }
    let mut distinct = voltages.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 5 {
        return fail(format!(
            "need at least 5 distinct voltages, got {}",
            distinct.len()
        ));
    }
    let (lo, hi) = counts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &c| {
            (l.min(c), h.max(c))
        });
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return fail("degenerate data: counts are constant".into());
    }

    let ssr = |v_pi: f64| linear_fit(voltages, counts, v_pi).map_or(f64::INFINITY, |f| f.2);
    let (g0, g1, dg) = V_PI_GRID;
    let steps = ((g1 - g0) / dg).round() as usize;
    let (best, _) = (0..=steps)
        .map(|i| g0 + i as f64 * dg)
        .map(|v| (v, ssr(v)))
        .fold(
            (g0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    let (v_pi, _) = golden_section(ssr, (best - dg).max(g0), (best + dg).min(g1), 1e-9);
    let Some((amplitude, offset, rss)) = linear_fit(voltages, counts, v_pi) else {
        return fail("no fringe found".into());
    };
    let span = distinct[distinct.len() - 1] - distinct[0];
    if span < v_pi {
        return fail(format!(
            "voltages span {span} V, less than half a fringe period ({v_pi} V)"
        ));
    }
    Ok(FringeFit {
        v_pi,
        amplitude,
        offset,
        visibility: amplitude / (amplitude + 2.0 * offset),
        residual_norm: rss.sqrt(),
    })
}

/// Figures derived from a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Voltage of the row maximizing `mean_c1 − mean_c2`.
    pub voltage: f64,
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub extinction_db: f64,
    pub fit: Result<FringeFit, ExperimentError>,
}

/// Visibility at the D₁-constructive row, its standard error from the
/// repetition spread, the extinction ratio and a fringe fit of `mean_c1`.
pub fn summarize(rows: &[SettingStats], repetitions: usize) -> Result<Summary, ExperimentError> {
    let best = rows
        .iter()
        .fold(None::<&SettingStats>, |acc, r| match acc {
            Some(a) if a.mean_c1 - a.mean_c2 >= r.mean_c1 - r.mean_c2 => Some(a),
            _ => Some(r),
        })
        .ok_or_else(|| ExperimentError::InvalidPlan("no rows".into()))?;
    let (a, b) = (best.mean_c1, best.mean_c2);
    let v = visibility(a, b)?;
    let n = repetitions.max(1) as f64;
    let s = (a + b).powi(2);
    let visibility_stderr =
        ((2.0 * b / s * best.std_c1).powi(2) + (2.0 * a / s * best.std_c2).powi(2)).sqrt()
            / n.sqrt();
    let voltages: Vec<f64> = rows.iter().map(|r| r.voltage).collect();
    let counts: Vec<f64> = rows.iter().map(|r| r.mean_c1).collect();
    Ok(Summary {
        voltage: best.voltage,
        visibility: v,
        visibility_stderr,
        extinction_db: extinction_ratio_db(v)?,
        fit: fit_fringe(&voltages, &counts),
    })
}

fn signal_rate(source: &SourceModel, detector: &DetectorModel, loss_db: f64) -> f64 {
    source.heralded_pair_rate * attenuation_amplitude(loss_db).powi(2) * detector.efficiency
}

fn dark_count_rate(source: &SourceModel, detector: &DetectorModel) -> f64 {
    if detector.paired_with_trigger {
        source.trigger_rate * detector.gate_width * detector.dark_rate
    } else {
        detector.dark_rate
    }
}

/// D₁ detections per second at the constructive setting (φ = 0), darks included.
pub fn expected_rate(
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<f64, ExperimentError> {
    source.validate()?;
    detector.validate()?;
    config.validate()?;
    Ok(signal_rate(source, detector, config.d1_loss()) + dark_count_rate(source, detector))
}

/// Dark rate that makes the constructive-setting visibility equal `target`.
pub fn calibrate_dark_rate(
    target: f64,
    source: &SourceModel,
    detector: &DetectorModel,
    config: &SwitchConfig<f64>,
) -> Result<f64, ExperimentError> {
    source.validate()?;
    detector.validate()?;
    config.validate()?;
    if !(target > 0.0 && target <= 1.0) {
        return Err(ExperimentError::InvalidModel(format!(
            "target visibility must be in (0, 1], got {target}"
        )));
    }
    let s = signal_rate(source, detector, config.d1_loss());
    let per_dark = dark_count_rate(
        source,
        &DetectorModel {
            dark_rate: 1.0,
            ..*detector
        },
    );
    if per_dark == 0.0 {
        return Err(ExperimentError::InvalidModel(
            "darks cannot register".into(),
        ));
    }
    Ok(s * (1.0 - target) / (2.0 * target) / per_dark)
}
