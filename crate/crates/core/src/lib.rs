//! Simulator of a polarization-independent fiber Sagnac single-photon switch.
//!
//! * [`optics`]: labeled mode bases, states and linear operators.
//! * [`components`]: Jones/mode operators for every element of the switch.
//! * [`netlist`]: the `.sagnet` circuit format, validation and the built-in preset.
//! * [`engine`]: closed-form switch output, pulse timing, operator-chain lowering.
//! * [`experiment`]: heralded photon-counting Monte Carlo and estimators.
//!
//! The optical layers are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod components;
pub mod engine;
pub mod experiment;
pub mod netlist;
pub mod optics;
pub mod optimize;
pub mod scalar;

pub use scalar::Scalar;

pub type ModeState64 = optics::ModeState<f64>;
pub type ComponentOp64 = optics::ComponentOp<f64>;
pub type SwitchConfig64 = engine::SwitchConfig<f64>;
pub type JonesVector64 = engine::JonesVector<f64>;
pub type PassPhases64 = engine::PassPhases<f64>;
pub type DrivePulse64 = engine::DrivePulse<f64>;
pub type ElementParams64 = components::ElementParams<f64>;

pub type ModeState32 = optics::ModeState<f32>;
pub type ComponentOp32 = optics::ComponentOp<f32>;
pub type SwitchConfig32 = engine::SwitchConfig<f32>;
pub type JonesVector32 = engine::JonesVector<f32>;
pub type PassPhases32 = engine::PassPhases<f32>;
