//! Constructors for the optical elements of the switch.
//!
//! Polarization-only elements act on a single spatial label, [`POL_PORT`],
//! and are moved onto the label they need with [`on_port`]. Waveplates use the
//! fast-axis-referenced Jones forms `R(θ)·diag(1, e^{iδ})·R(−θ)`, so every
//! waveplate matrix is symmetric and the reverse traversal of a plate is the
//! plate itself.

use thiserror::Error;

use crate::optics::{ComponentOp, ModeBasis, OpKind, OpticsError, Polarization};
use crate::scalar::{c, ci, cis, cone, czero, Scalar, C};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Standard single-mode fiber near 1550 nm.
pub const DEFAULT_GROUP_INDEX: f64 = 1.468;
/// Spatial label used by single-port polarization elements.
pub const POL_PORT: &str = "p";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("splitting ratio {0} outside (0, 1)")]
    Ratio(f64),
    #[error("attenuation {0} dB is negative")]
    NegativeLoss(f64),
    #[error("fiber length {0} m is negative")]
    NegativeLength(f64),
    #[error("group index {0} is below 1")]
    GroupIndex(f64),
    #[error("circulator port {0} has no onward port")]
    CirculatorPort(u8),
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

pub type Jones<T> = [[C<T>; 2]; 2];

/// Parameters of a single optical element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementParams<T: Scalar> {
    Beamsplitter {
        ratio: T,
    },
    Pbs,
    Hwp {
        angle: T,
    },
    PhaseModulator {
        phase: T,
        axis: Polarization,
    },
    PolarizationController {
        a: T,
        b: T,
        c: T,
    },
    Attenuator {
        loss_db: T,
    },
    Fiber {
        length_m: T,
        group_index: T,
        twist: [T; 3],
    },
}

impl<T: Scalar> ElementParams<T> {
    pub fn validate(&self) -> Result<(), ComponentError> {
        let finite = |x: T, name: &'static str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(ComponentError::NonFinite(name))
            }
        };
        match *self {
            ElementParams::Beamsplitter { ratio } => {
                finite(ratio, "ratio")?;
                if ratio <= T::zero() || ratio >= T::one() {
                    return Err(ComponentError::Ratio(ratio.to_f64_lossy()));
                }
            }
            ElementParams::Pbs => {}
            ElementParams::Hwp { angle } => finite(angle, "angle")?,
            ElementParams::PhaseModulator { phase, .. } => finite(phase, "phase")?,
            ElementParams::PolarizationController { a, b, c } => {
                finite(a, "a")?;
                finite(b, "b")?;
                finite(c, "c")?;
            }
            ElementParams::Attenuator { loss_db } => {
                finite(loss_db, "loss_db")?;
                if loss_db < T::zero() {
                    return Err(ComponentError::NegativeLoss(loss_db.to_f64_lossy()));
                }
            }
            ElementParams::Fiber {
                length_m,
                group_index,
                twist,
            } => {
                finite(length_m, "length_m")?;
                finite(group_index, "group_index")?;
                for t in twist {
                    finite(t, "twist")?;
                }
                if length_m < T::zero() {
                    return Err(ComponentError::NegativeLength(length_m.to_f64_lossy()));
                }
                if group_index < T::one() {
                    return Err(ComponentError::GroupIndex(group_index.to_f64_lossy()));
                }
            }
        }
        Ok(())
    }

    /// Polarization action of a two-port element on [`POL_PORT`]; `None` for
    /// the four-port splitters.
    pub fn two_port_op(&self) -> Result<Option<ComponentOp<T>>, ComponentError> {
        self.validate()?;
        Ok(match *self {
            ElementParams::Beamsplitter { .. } | ElementParams::Pbs => None,
            ElementParams::Hwp { angle } => Some(hwp(angle)),
            ElementParams::PhaseModulator { phase, axis } => Some(phase_modulator(phase, axis)),
            ElementParams::PolarizationController { a, b, c } => {
                Some(polarization_controller(a, b, c))
            }
            ElementParams::Attenuator { loss_db } => Some(attenuator(loss_db)?),
            ElementParams::Fiber { twist, .. } => Some(fiber_birefringence(twist)),
        })
    }
}

impl ElementParams<f64> {
    pub fn cast<T: Scalar>(&self) -> ElementParams<T> {
        let t = T::lit;
        match *self {
            ElementParams::Beamsplitter { ratio } => {
                ElementParams::Beamsplitter { ratio: t(ratio) }
            }
            ElementParams::Pbs => ElementParams::Pbs,
            ElementParams::Hwp { angle } => ElementParams::Hwp { angle: t(angle) },
            ElementParams::PhaseModulator { phase, axis } => ElementParams::PhaseModulator {
                phase: t(phase),
                axis,
            },
            ElementParams::PolarizationController { a, b, c } => {
                ElementParams::PolarizationController {
                    a: t(a),
                    b: t(b),
                    c: t(c),
                }
            }
            ElementParams::Attenuator { loss_db } => ElementParams::Attenuator {
                loss_db: t(loss_db),
            },
            ElementParams::Fiber {
                length_m,
                group_index,
                twist,
            } => ElementParams::Fiber {
                length_m: t(length_m),
                group_index: t(group_index),
                twist: twist.map(t),
            },
        }
    }
}

fn rot<T: Scalar>(theta: T) -> Jones<T> {
    let (s, co) = theta.sin_cos();
    [
        [c(co, T::zero()), c(-s, T::zero())],
        [c(s, T::zero()), c(co, T::zero())],
    ]
}

pub fn jones_mul<T: Scalar>(a: &Jones<T>, b: &Jones<T>) -> Jones<T> {
    let mut out = [[czero(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Linear retarder with fast axis at `theta` and retardance `delta`.
pub fn retarder_jones<T: Scalar>(theta: T, delta: T) -> Jones<T> {
    let d = [[cone(), czero()], [czero(), cis(delta)]];
    jones_mul(&jones_mul(&rot(theta), &d), &rot(-theta))
}

fn pol_op<T: Scalar>(j: Jones<T>, kind: OpKind) -> ComponentOp<T> {
    ComponentOp::jones(POL_PORT, j, kind).expect("2x2 Jones matrix on a valid basis")
}

/// Moves a single-port polarization operator onto another spatial label.
pub fn on_port<T: Scalar>(op: &ComponentOp<T>, label: &str) -> Result<ComponentOp<T>, OpticsError> {
    let b = ModeBasis::new(&[label])?;
    op.relabel(b.clone(), b)
}

/// 2×2 fiber coupler on loop paths {A, B}: transmission √ratio, reflection
/// i·√(1−ratio), polarization untouched.
pub fn beamsplitter<T: Scalar>(ratio: T) -> Result<ComponentOp<T>, ComponentError> {
    ElementParams::Beamsplitter { ratio }.validate()?;
    let t = c(ratio.sqrt(), T::zero());
    let r = ci::<T>() * (T::one() - ratio).sqrt();
    let z = czero();
    let basis = ModeBasis::new(&["A", "B"])?;
    // rows/cols: (A,H), (A,V), (B,H), (B,V)
    #[rustfmt::skip]
    let m = vec![
        t, z, r, z,
        z, t, z, r,
        r, z, t, z,
        z, r, z, t,
    ];
    Ok(ComponentOp::new(basis.clone(), basis, m, OpKind::Unitary)?)
}

/// Polarizing beam splitter from ports {p1, p2} to {p3, p4}.
///
/// H transmits straight through (p1→p3, p2→p4), V reflects to the cross
/// port (p1→p4, p2→p3). The reverse traversal is [`ComponentOp::reversed`].
pub fn pbs<T: Scalar>() -> ComponentOp<T> {
    let input = ModeBasis::new(&["p1", "p2"]).expect("static labels");
    let output = ModeBasis::new(&["p3", "p4"]).expect("static labels");
    let (o, z) = (cone::<T>(), czero::<T>());
    // cols: (p1,H), (p1,V), (p2,H), (p2,V); rows: (p3,H), (p3,V), (p4,H), (p4,V)
    #[rustfmt::skip]
    let m = vec![
        o, z, z, z,
        z, z, z, o,
        z, z, o, z,
        z, o, z, z,
    ];
    ComponentOp::new(input, output, m, OpKind::Unitary).expect("permutation is unitary")
}

pub fn hwp_jones<T: Scalar>(angle: T) -> Jones<T> {
    retarder_jones(angle, T::PI())
}

pub fn qwp_jones<T: Scalar>(angle: T) -> Jones<T> {
    retarder_jones(angle, T::FRAC_PI_2())
}

/// Half-wave plate, fast axis at `angle`. Real and involutive.
pub fn hwp<T: Scalar>(angle: T) -> ComponentOp<T> {
    pol_op(hwp_jones(angle), OpKind::Unitary)
}

pub fn qwp<T: Scalar>(angle: T) -> ComponentOp<T> {
    pol_op(qwp_jones(angle), OpKind::Unitary)
}

/// Single-axis electro-optic phase modulator.
pub fn phase_modulator<T: Scalar>(phase: T, axis: Polarization) -> ComponentOp<T> {
    let mut j = [[cone(), czero()], [czero(), cone()]];
    j[axis.index()][axis.index()] = cis(phase);
    pol_op(j, OpKind::Unitary)
}

/// Three-paddle controller: QWP(a), then HWP(b), then QWP(c) in the order
/// light meets them. `(0, 0, 0)` is the identity.
pub fn polarization_controller_jones<T: Scalar>(a: T, b: T, c: T) -> Jones<T> {
    jones_mul(&qwp_jones(c), &jones_mul(&hwp_jones(b), &qwp_jones(a)))
}

pub fn polarization_controller<T: Scalar>(a: T, b: T, c: T) -> ComponentOp<T> {
    pol_op(polarization_controller_jones(a, b, c), OpKind::Unitary)
}

/// Paddle angles whose controller is the exact inverse of `pc(a, b, c)`.
pub fn polarization_controller_inverse<T: Scalar>(a: T, b: T, c: T) -> (T, T, T) {
    let q = T::FRAC_PI_2();
    (c + q, b + q, a + q)
}

/// Fixed birefringence of a fiber span, parameterized like a controller.
pub fn fiber_birefringence<T: Scalar>(twist: [T; 3]) -> ComponentOp<T> {
    polarization_controller(twist[0], twist[1], twist[2])
}

pub fn attenuation_amplitude<T: Scalar>(loss_db: T) -> T {
    T::lit(10.0).powf(-loss_db / T::lit(20.0))
}

pub fn attenuator<T: Scalar>(loss_db: T) -> Result<ComponentOp<T>, ComponentError> {
    ElementParams::Attenuator { loss_db }.validate()?;
    let a = c(attenuation_amplitude(loss_db), T::zero());
    let kind = if loss_db == T::zero() {
        OpKind::Unitary
    } else {
        OpKind::PassiveLossy
    };
    Ok(ComponentOp::jones(
        POL_PORT,
        [[a, czero()], [czero(), a]],
        kind,
    )?)
}

/// Polarization-independent propagation phase e^{iφ}.
pub fn propagation_phase<T: Scalar>(phase: T) -> ComponentOp<T> {
    let z = cis(phase);
    pol_op([[z, czero()], [czero(), z]], OpKind::Unitary)
}

/// Group delay of a fiber span in seconds.
pub fn fiber_delay<T: Scalar>(length_m: T, group_index: T) -> Result<T, ComponentError> {
    ElementParams::Fiber {
        length_m,
        group_index,
        twist: [T::zero(); 3],
    }
    .validate()?;
    Ok(length_m * group_index / T::lit(SPEED_OF_LIGHT))
}

/// Three-port circulator: 1 → 2 → 3.
pub fn circulator_route(in_port: u8) -> Result<u8, ComponentError> {
    match in_port {
        1 => Ok(2),
        2 => Ok(3),
        p => Err(ComponentError::CirculatorPort(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{compose, Mode, ModeState};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    fn pol_state(h: C<f64>, v: C<f64>) -> ModeState<f64> {
        ModeState::from_jones(ModeBasis::new(&[POL_PORT]).unwrap(), POL_PORT, h, v).unwrap()
    }

    fn h() -> ModeState<f64> {
        pol_state(cone(), czero())
    }

    fn v() -> ModeState<f64> {
        pol_state(czero(), cone())
    }

    #[test]
    fn bs_post_state_matches_sagnac_convention() {
        let bs = beamsplitter(0.5).unwrap();
        let s = ModeState::basis_state(bs.input_basis().clone(), &Mode::new("A", Polarization::H))
            .unwrap();
        let out = bs.apply(&s).unwrap();
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let expect = ModeState::new(
            bs.output_basis().clone(),
            vec![c(k, 0.0), czero(), c(0.0, k), czero()],
        )
        .unwrap();
        assert!(out.max_abs_diff(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn bs_ratio_bounds() {
        assert!(matches!(beamsplitter(1.0), Err(ComponentError::Ratio(_))));
        assert!(beamsplitter(0.0).is_err());
        assert!(beamsplitter(f64::NAN).is_err());
        let bs = beamsplitter(0.3).unwrap();
        let twice = compose(&bs, &bs).unwrap();
        assert!(twice.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn pbs_routes_by_polarization() {
        let p = pbs::<f64>();
        let input = p.input_basis().clone();
        let hin = ModeState::basis_state(input.clone(), &Mode::new("p1", Polarization::H)).unwrap();
        let out = p.apply(&hin).unwrap();
        assert_eq!(out.spatial_probability("p3").unwrap(), 1.0);
        assert_eq!(
            out.amplitude(&Mode::new("p3", Polarization::H)).unwrap(),
            cone()
        );
        let vin = ModeState::basis_state(input.clone(), &Mode::new("p1", Polarization::V)).unwrap();
        let out = p.apply(&vin).unwrap();
        assert_eq!(
            out.amplitude(&Mode::new("p4", Polarization::V)).unwrap(),
            cone()
        );
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let d = ModeState::from_jones(input, "p1", c(k, 0.0), c(k, 0.0)).unwrap();
        let out = p.apply(&d).unwrap();
        assert_abs_diff_eq!(out.spatial_probability("p3").unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.spatial_probability("p4").unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn hwp_cases() {
        assert!(hwp(0.0)
            .apply(&h())
            .unwrap()
            .eq_up_to_global_phase(&h(), 1e-12));
        assert!(hwp(FRAC_PI_4)
            .apply(&h())
            .unwrap()
            .eq_up_to_global_phase(&v(), 1e-12));
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let d = pol_state(c(k, 0.0), c(k, 0.0));
        assert!(hwp(FRAC_PI_8)
            .apply(&h())
            .unwrap()
            .eq_up_to_global_phase(&d, 1e-12));
    }

    #[test]
    fn two_equal_hwps_cancel() {
        // Two half-wave plates at the same angle reflect the polarization twice.
        let a = PI / 8.0;
        let pair = compose(&hwp(a), &hwp(a)).unwrap();
        assert!(pair.apply(&h()).unwrap().eq_up_to_global_phase(&h(), 1e-12));
        // A 45° offset between the plates rotates by 90°.
        let rot90 = compose(&hwp(3.0 * PI / 8.0), &hwp(a)).unwrap();
        assert!(rot90
            .apply(&h())
            .unwrap()
            .eq_up_to_global_phase(&v(), 1e-12));
    }

    #[test]
    fn phase_modulator_cases() {
        assert!(phase_modulator(0.0, Polarization::V).is_proportional_to_identity(0.0));
        let out = phase_modulator(PI, Polarization::V).apply(&v()).unwrap();
        assert!(out.max_abs_diff(&v().scaled(c(-1.0, 0.0))).unwrap() < 1e-15);
        let out = phase_modulator(PI, Polarization::V).apply(&h()).unwrap();
        assert_eq!(out, h());
    }

    #[test]
    fn controller_identity_and_inverse() {
        let id = polarization_controller(0.0, 0.0, 0.0);
        assert!(
            id.max_abs_diff(&ComponentOp::identity(id.input_basis().clone()))
                .unwrap()
                < 1e-15
        );
        let (a, b, cc) = (0.3, 1.7, -2.2);
        let (ia, ib, ic) = polarization_controller_inverse(a, b, cc);
        let prod = compose(
            &polarization_controller(ia, ib, ic),
            &polarization_controller(a, b, cc),
        )
        .unwrap();
        assert!(
            prod.max_abs_diff(&ComponentOp::identity(prod.input_basis().clone()))
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn controller_swaps_h_to_v() {
        let pc = polarization_controller(0.0, FRAC_PI_4, 0.0);
        assert!(pc.apply(&h()).unwrap().eq_up_to_global_phase(&v(), 1e-12));
    }

    #[test]
    fn attenuator_cases() {
        assert!(attenuator(0.0).unwrap().is_proportional_to_identity(0.0));
        let a = attenuator(3.0103).unwrap();
        assert_eq!(a.kind(), OpKind::PassiveLossy);
        let out = a.apply(&h()).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 0.5, epsilon = 1e-5);
        let out = attenuator(5.0).unwrap().apply(&h()).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 0.316_227_766, epsilon = 1e-9);
        assert!(matches!(
            attenuator(-1.0),
            Err(ComponentError::NegativeLoss(_))
        ));
    }

    #[test]
    fn fiber_delay_cases() {
        assert_eq!(fiber_delay(0.0, 1.468).unwrap(), 0.0);
        // 100 * 1.468 / 299792458
        assert_abs_diff_eq!(
            fiber_delay(100.0, 1.468).unwrap() * 1e9,
            489.672_091_75,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            fiber_delay(1.0, 1.0).unwrap() * 1e9,
            3.335_640_952,
            epsilon = 1e-8
        );
        assert!(fiber_delay(-1.0, 1.468).is_err());
        assert!(fiber_delay(1.0, 0.9).is_err());
    }

    #[test]
    fn circulator_routes() {
        assert_eq!(circulator_route(1).unwrap(), 2);
        assert_eq!(circulator_route(2).unwrap(), 3);
        assert!(circulator_route(3).is_err());
        assert!(circulator_route(0).is_err());
    }

    #[test]
    fn single_precision_constructors() {
        let op = polarization_controller(0.2f32, 0.9, 1.4);
        assert!(op.unitarity_deviation() < f32::ALGEBRA_TOL);
        let bs = beamsplitter(0.5f32).unwrap();
        assert!(bs.unitarity_deviation() < f32::ALGEBRA_TOL);
    }
}
