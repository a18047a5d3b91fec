//! Single-photon propagation through the Sagnac switch.
//!
//! Two independent routes produce the output state:
//!
//! * [`output_state`] evaluates the closed-form result of the loop,
//!   `½[i(e^{iφ}+1)|D₁⟩ + (e^{iφ}−1)|D₂⟩] ⊗ [α|H⟩ + e^{iKl}β|V⟩]`
//!   with `φ = φ_cw − φ_ccw`;
//! * [`LoopModel::propagate`] lowers a netlist and multiplies the full chain
//!   of element operators built by [`crate::components`].
//!
//! The pulse-timing model ([`pass_times`], [`applied_phases`]) decides which
//! of the two counter-propagating passes meets the modulator drive pulse.

mod calibrate;
mod topology;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::{attenuation_amplitude, fiber_delay, ComponentError, SPEED_OF_LIGHT};
use crate::netlist::Diagnostic;
use crate::optics::{ModeBasis, ModeState, OpticsError};
use crate::scalar::{c, ci, cis, cone, wrap_phase, Scalar, C};

pub use calibrate::{calibrate_controllers, CalibrationOptions, ControllerCalibration};
pub use topology::{Arm, LoopModel, Stage};

/// Output basis label of the circulator / D₁ side.
pub const D1: &str = "D1";
pub const D2: &str = "D2";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("input Jones vector is not normalized (|α|²+|β|² = {0})")]
    NotNormalized(f64),
    #[error("invalid switch configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported topology: {}", .0.message)]
    UnsupportedTopology(Diagnostic),
    #[error("controller calibration did not converge (best fidelity {best_fidelity:.12})")]
    Calibration { best_fidelity: f64 },
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Component(#[from] ComponentError),
}

/// Physical parameters of the switch. Units: volts, seconds, meters, radians, dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchConfig<T: Scalar> {
    /// Drive voltage for a π phase shift.
    pub v_pi: T,
    pub pulse_width: T,
    pub delay_length: T,
    pub group_index: T,
    /// Relative phase Kl between the two MZ arms.
    pub mzs_phase_kl: T,
    /// Lumped loss from the loop input to each detector.
    pub loop_loss_db: T,
    /// BS → modulator propagation time along path A.
    pub short_arm_transit: T,
    /// Per-arm loss overrides; default to `loop_loss_db`.
    pub d1_loss_db: Option<T>,
    pub d2_loss_db: Option<T>,
    /// Redraw Kl uniformly on [0, 2π) for every repetition (thermal drift).
    pub redraw_kl_per_repetition: bool,
}

impl<T: Scalar> Default for SwitchConfig<T> {
    fn default() -> Self {
        Self {
            v_pi: T::lit(4.0),
            pulse_width: T::lit(32e-9),
            delay_length: T::lit(100.0),
            group_index: T::lit(crate::components::DEFAULT_GROUP_INDEX),
            mzs_phase_kl: T::zero(),
            loop_loss_db: T::lit(5.0),
            short_arm_transit: T::lit(10e-9),
            d1_loss_db: None,
            d2_loss_db: None,
            redraw_kl_per_repetition: false,
        }
    }
}

impl<T: Scalar> SwitchConfig<T> {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidConfig(msg));
        let all = [
            ("v_pi", self.v_pi),
            ("pulse_width", self.pulse_width),
            ("delay_length", self.delay_length),
            ("group_index", self.group_index),
            ("mzs_phase_kl", self.mzs_phase_kl),
            ("loop_loss_db", self.loop_loss_db),
            ("short_arm_transit", self.short_arm_transit),
            ("d1_loss_db", self.d1_loss()),
            ("d2_loss_db", self.d2_loss()),
        ];
        if let Some((k, _)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("`{k}` is not finite"));
        }
        if self.v_pi <= T::zero() {
            return bad(format!("v_pi must be > 0, got {}", self.v_pi));
        }
        if self.pulse_width <= T::zero() {
            return bad(format!("pulse_width must be > 0, got {}", self.pulse_width));
        }
        if self.delay_length < T::zero() {
            return bad(format!(
                "delay_length must be >= 0, got {}",
                self.delay_length
            ));
        }
        if self.group_index < T::one() {
            return bad(format!(
                "group_index must be >= 1, got {}",
                self.group_index
            ));
        }
        for (k, v) in [
            ("loop_loss_db", self.loop_loss_db),
            ("d1_loss_db", self.d1_loss()),
            ("d2_loss_db", self.d2_loss()),
        ] {
            if v < T::zero() {
                return bad(format!("{k} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }

    pub fn d1_loss(&self) -> T {
        self.d1_loss_db.unwrap_or(self.loop_loss_db)
    }

    pub fn d2_loss(&self) -> T {
        self.d2_loss_db.unwrap_or(self.loop_loss_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivePulse<T: Scalar> {
    pub voltage: T,
    /// Start of the pulse relative to the herald.
    pub delay: T,
    pub width: T,
}

/// Modulator phase seen by each counter-propagating pass, in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PassPhases<T: Scalar> {
    /// Path A → MZ pass (clockwise).
    pub phi_cw: T,
    /// Path B → MZ pass, after the delay fiber.
    pub phi_ccw: T,
}

impl<T: Scalar> PassPhases<T> {
    pub fn new(phi_cw: T, phi_ccw: T) -> Self {
        Self {
            phi_cw: wrap_phase(phi_cw),
            phi_ccw: wrap_phase(phi_ccw),
        }
    }

    /// Phases of a one-direction modulation by `phi`.
    pub fn clockwise(phi: T) -> Self {
        Self::new(phi, T::zero())
    }

    /// Net switching phase `φ_cw − φ_ccw`.
    pub fn net(&self) -> T {
        self.phi_cw - self.phi_ccw
    }
}

/// Normalized polarization state `α|H⟩ + β|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector<T: Scalar> {
    pub alpha: C<T>,
    pub beta: C<T>,
}

impl<T: Scalar> JonesVector<T> {
    pub fn new(alpha: C<T>, beta: C<T>) -> Result<Self, EngineError> {
        let j = Self { alpha, beta };
        j.check_normalized()?;
        Ok(j)
    }

    pub fn horizontal() -> Self {
        Self {
            alpha: cone(),
            beta: c(T::zero(), T::zero()),
        }
    }

    pub fn vertical() -> Self {
        Self {
            alpha: c(T::zero(), T::zero()),
            beta: cone(),
        }
    }

    /// (|H⟩ + |V⟩)/√2
    pub fn diagonal() -> Self {
        let k = c(T::FRAC_1_SQRT_2(), T::zero());
        Self { alpha: k, beta: k }
    }

    /// (|H⟩ − |V⟩)/√2
    pub fn antidiagonal() -> Self {
        let k = c(T::FRAC_1_SQRT_2(), T::zero());
        Self { alpha: k, beta: -k }
    }

    pub fn norm_sqr(&self) -> T {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    fn check_normalized(&self) -> Result<(), EngineError> {
        let n = self.norm_sqr();
        if (n - T::one()).abs() > T::ALGEBRA_TOL || !n.is_finite() {
            return Err(EngineError::NotNormalized(n.to_f64_lossy()));
        }
        Ok(())
    }
}

/// Linear electro-optic response: φ = π·V/V_π.
pub fn drive_phase<T: Scalar>(voltage: T, config: &SwitchConfig<T>) -> T {
    T::PI() * voltage / config.v_pi
}

/// Arrival times of the clockwise and counter-clockwise passes at the
/// modulators, relative to the herald.
pub fn pass_times<T: Scalar>(config: &SwitchConfig<T>) -> Result<(T, T), EngineError> {
    config.validate()?;
    let t_cw = config.short_arm_transit;
    let t_ccw = t_cw + fiber_delay(config.delay_length, config.group_index)?;
    Ok((t_cw, t_ccw))
}

/// A pass is modulated iff its arrival time is in `[delay, delay + width)`.
pub fn applied_phases<T: Scalar>(
    pulse: &DrivePulse<T>,
    config: &SwitchConfig<T>,
) -> Result<PassPhases<T>, EngineError> {
    if pulse.width.is_nan() || pulse.width <= T::zero() {
        return Err(EngineError::InvalidConfig(format!(
            "pulse width must be > 0, got {}",
            pulse.width
        )));
    }
    let (t_cw, t_ccw) = pass_times(config)?;
    let phi = drive_phase(pulse.voltage, config);
    let gate = |t: T| {
        if t >= pulse.delay && t < pulse.delay + pulse.width {
            phi
        } else {
            T::zero()
        }
    };
    Ok(PassPhases::new(gate(t_cw), gate(t_ccw)))
}

pub fn output_basis() -> ModeBasis {
    ModeBasis::new(&[D1, D2]).expect("static labels")
}

/// Closed-form output state over {D₁, D₂} × {H, V}, including the lumped
/// per-arm loss amplitude.
pub fn output_state<T: Scalar>(
    input: &JonesVector<T>,
    phases: &PassPhases<T>,
    config: &SwitchConfig<T>,
) -> Result<ModeState<T>, EngineError> {
    input.check_normalized()?;
    config.validate()?;
    let e = cis(phases.net());
    let half = c(T::lit(0.5), T::zero());
    let d1 = ci::<T>() * (e + cone()) * half * attenuation_amplitude(config.d1_loss());
    let d2 = (e - cone()) * half * attenuation_amplitude(config.d2_loss());
    let h = input.alpha;
    let v = cis(config.mzs_phase_kl) * input.beta;
    Ok(ModeState::new(
        output_basis(),
        vec![d1 * h, d1 * v, d2 * h, d2 * v],
    )?)
}

/// `(p₁, p₂)` = `(cos²(φ/2), sin²(φ/2))`, scaled by the arm transmissions
/// when `include_loss` is set.
pub fn detection_probabilities<T: Scalar>(
    input: &JonesVector<T>,
    phases: &PassPhases<T>,
    config: &SwitchConfig<T>,
    include_loss: bool,
) -> Result<(T, T), EngineError> {
    let state = if include_loss {
        output_state(input, phases, config)?
    } else {
        let lossless = SwitchConfig {
            loop_loss_db: T::zero(),
            d1_loss_db: None,
            d2_loss_db: None,
            ..*config
        };
        output_state(input, phases, &lossless)?
    };
    Ok((
        state.spatial_probability(D1)?,
        state.spatial_probability(D2)?,
    ))
}

/// Speed of light in vacuum, m/s, in the caller's scalar type.
pub fn speed_of_light<T: Scalar>() -> T {
    T::lit(SPEED_OF_LIGHT)
}
