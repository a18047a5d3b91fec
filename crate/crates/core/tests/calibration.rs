use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use sagnac_core::engine::{
    calibrate_controllers, detection_probabilities, CalibrationOptions, JonesVector, LoopModel,
    PassPhases, SwitchConfig, D1, D2,
};
use sagnac_core::netlist::{
    sagnac_preset, ComponentDecl, Endpoint, Kind, Netlist, PresetNames as P,
};
use sagnac_core::scalar::cis;

/// Preset with a birefringent fiber on each loop path: the delay fiber on
/// path B gets the `twist_b` angles, and a 1 m fiber with `twist_a` is
/// spliced in after `pc_a`.
fn twisted(cfg: &SwitchConfig<f64>, twist_a: [f64; 3], twist_b: [f64; 3]) -> Netlist {
    let mut n = sagnac_preset(cfg);
    for (key, v) in ["twist_a", "twist_b", "twist_c"].into_iter().zip(twist_b) {
        n = n.with_param(P::DELAY, key, v).unwrap();
    }
    let fiber = ComponentDecl::new("patch", Kind::Fiber)
        .with("length_m", 1.0)
        .with("twist_a", twist_a[0])
        .with("twist_b", twist_a[1])
        .with("twist_c", twist_a[2]);
    n.with_inserted(&Endpoint::new(P::PC_A, "p2"), fiber)
        .unwrap()
}

fn chain_probabilities(
    model: &LoopModel,
    input: &JonesVector<f64>,
    phases: &PassPhases<f64>,
    kl: f64,
) -> (f64, f64) {
    let out = model.propagate(input, phases, kl).unwrap();
    (
        out.spatial_probability(D1).unwrap(),
        out.spatial_probability(D2).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn search_compensates_fiber_birefringence(
        ta in prop::array::uniform3(0.0..TAU),
        tb in prop::array::uniform3(0.0..TAU),
        phi_a in 0.0..TAU,
        phi_b in 0.0..TAU,
        theta in 0.0..PI,
        pa in 0.0..TAU,
        kl in 0.0..TAU,
    ) {
        let cfg = SwitchConfig { mzs_phase_kl: kl, ..SwitchConfig::default() };
        let n = twisted(&cfg, ta, tb);
        let cal = calibrate_controllers(&n, &CalibrationOptions::default()).unwrap();
        prop_assert!(cal.fidelity() >= 1.0 - 1e-9, "{cal:?}");

        let model = LoopModel::from_netlist(&cal.apply(&n).unwrap()).unwrap();
        let input = JonesVector::new(cis(0.0) * theta.cos(), cis(pa) * theta.sin()).unwrap();
        let phases = PassPhases::new(phi_a, phi_b);
        let (c1, c2) = chain_probabilities(&model, &input, &phases, kl);
        let (e1, e2) = detection_probabilities(&input, &phases, &cfg, true).unwrap();
        prop_assert!((c1 - e1).abs() <= 1e-8, "D1 {c1} vs {e1}");
        prop_assert!((c2 - e2).abs() <= 1e-8, "D2 {c2} vs {e2}");
    }
}

#[test]
fn uncompensated_twist_breaks_the_switch() {
    let cfg = SwitchConfig::default();
    let n = twisted(&cfg, [0.3, 1.0, 0.2], [0.9, 0.4, 2.0]);
    let model = LoopModel::from_netlist(&n).unwrap();
    let phases = PassPhases::clockwise(PI);
    let (c1, c2) = chain_probabilities(&model, &JonesVector::diagonal(), &phases, 0.0);
    let (e1, e2) = detection_probabilities(&JonesVector::diagonal(), &phases, &cfg, true).unwrap();
    assert!((c1 - e1).abs() + (c2 - e2).abs() > 1e-3);
}

#[test]
fn identity_fibers_leave_the_preset_solution() {
    let cfg = SwitchConfig::default();
    let cal = calibrate_controllers(
        &twisted(&cfg, [0.0; 3], [0.0; 3]),
        &CalibrationOptions::default(),
    )
    .unwrap();
    assert_eq!(cal.correction, 0.0);
    assert_eq!(cal.angles_a, [0.0; 3]);
    assert_eq!(cal.angles_b, [0.0, std::f64::consts::FRAC_PI_4, 0.0]);
}
