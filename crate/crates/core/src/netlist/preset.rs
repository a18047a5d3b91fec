use std::f64::consts::FRAC_PI_4;

use super::{ComponentDecl, Connection, Endpoint, Kind, Netlist};
use crate::engine::SwitchConfig;

/// Component names used by [`sagnac_preset`].
pub struct PresetNames;

impl PresetNames {
    pub const SOURCE: &'static str = "src";
    pub const TRIGGER: &'static str = "dt";
    pub const INPUT_HWP: &'static str = "hwp_in";
    pub const CIRCULATOR: &'static str = "circ";
    pub const BS: &'static str = "bs";
    pub const PC_A: &'static str = "pc_a";
    pub const PC_B: &'static str = "pc_b";
    pub const DELAY: &'static str = "delay";
    pub const PBS_IN: &'static str = "pbs_in";
    pub const PBS_OUT: &'static str = "pbs_out";
    pub const MZS_HWP: &'static str = "hwp_mzs";
    pub const KEY_HWP: &'static str = "hwp_key";
    pub const PM1: &'static str = "pm1";
    pub const PM2: &'static str = "pm2";
    pub const ATT_D1: &'static str = "att_d1";
    pub const ATT_D2: &'static str = "att_d2";
    pub const D1: &'static str = "d1";
    pub const D2: &'static str = "d2";
}

/// The switch of the experiment as a netlist.
///
/// Path A runs BS → `pc_a` → `pbs_in`; path B runs BS → `pc_b` → 100 m delay
/// → `pbs_out`. Inside the polarization-diverse MZ structure the H arm passes
/// `hwp_mzs` (H→V) before `pm1` and enters `pbs_out` on its cross port; the V
/// arm passes `pm2` and the key-rotation plate `hwp_key` before the through
/// port. Both modulators act on V. `pc_b` swaps H and V so a given input
/// polarization uses the same arm in both directions.
pub fn sagnac_preset(config: &SwitchConfig<f64>) -> Netlist {
    use PresetNames as N;
    let decls = vec![
        ComponentDecl::new(N::SOURCE, Kind::Source),
        ComponentDecl::new(N::TRIGGER, Kind::Detector),
        ComponentDecl::new(N::INPUT_HWP, Kind::Hwp).with("angle", 0.0),
        ComponentDecl::new(N::CIRCULATOR, Kind::Circulator),
        ComponentDecl::new(N::BS, Kind::Bs).with("ratio", 0.5),
        ComponentDecl::new(N::PC_A, Kind::Pc)
            .with("a", 0.0)
            .with("b", 0.0)
            .with("c", 0.0),
        ComponentDecl::new(N::PC_B, Kind::Pc)
            .with("a", 0.0)
            .with("b", FRAC_PI_4)
            .with("c", 0.0),
        ComponentDecl::new(N::DELAY, Kind::Fiber)
            .with("length_m", config.delay_length)
            .with("group_index", config.group_index),
        ComponentDecl::new(N::PBS_IN, Kind::Pbs),
        ComponentDecl::new(N::PBS_OUT, Kind::Pbs),
        ComponentDecl::new(N::MZS_HWP, Kind::Hwp).with("angle", FRAC_PI_4),
        ComponentDecl::new(N::KEY_HWP, Kind::Hwp).with("angle", FRAC_PI_4),
        ComponentDecl::new(N::PM1, Kind::Pm).with("axis", 1.0),
        ComponentDecl::new(N::PM2, Kind::Pm).with("axis", 1.0),
        ComponentDecl::new(N::ATT_D1, Kind::Att).with("loss_db", config.d1_loss()),
        ComponentDecl::new(N::ATT_D2, Kind::Att).with("loss_db", config.d2_loss()),
        ComponentDecl::new(N::D1, Kind::Detector),
        ComponentDecl::new(N::D2, Kind::Detector),
    ];
    let wire = |a: &str, pa: &str, b: &str, pb: &str| {
        Connection::new(Endpoint::new(a, pa), Endpoint::new(b, pb))
    };
    let connections = vec![
        wire(N::SOURCE, "idler", N::TRIGGER, "in"),
        wire(N::SOURCE, "out", N::INPUT_HWP, "p1"),
        wire(N::INPUT_HWP, "p2", N::CIRCULATOR, "p1"),
        wire(N::CIRCULATOR, "p2", N::BS, "p1"),
        wire(N::CIRCULATOR, "p3", N::ATT_D1, "p1"),
        wire(N::ATT_D1, "p2", N::D1, "in"),
        wire(N::BS, "p2", N::ATT_D2, "p1"),
        wire(N::ATT_D2, "p2", N::D2, "in"),
        // path A
        wire(N::BS, "p3", N::PC_A, "p1"),
        wire(N::PC_A, "p2", N::PBS_IN, "p1"),
        // path B
        wire(N::BS, "p4", N::PC_B, "p1"),
        wire(N::PC_B, "p2", N::DELAY, "p1"),
        wire(N::DELAY, "p2", N::PBS_OUT, "p1"),
        // MZ structure
        wire(N::PBS_IN, "p3", N::MZS_HWP, "p1"),
        wire(N::MZS_HWP, "p2", N::PM1, "p1"),
        wire(N::PM1, "p2", N::PBS_OUT, "p4"),
        wire(N::PBS_IN, "p4", N::PM2, "p1"),
        wire(N::PM2, "p2", N::KEY_HWP, "p1"),
        wire(N::KEY_HWP, "p2", N::PBS_OUT, "p3"),
    ];
    Netlist::new(decls, connections).expect("preset netlist is valid")
}
