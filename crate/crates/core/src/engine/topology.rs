//! Lowering of preset-family netlists and full operator-chain propagation.

use std::collections::BTreeSet;

use super::{output_basis, EngineError, JonesVector, PassPhases, D1, D2};
use crate::components::{self, on_port, propagation_phase, ElementParams, POL_PORT};
use crate::netlist::{validate, ComponentDecl, Diagnostic, Endpoint, Kind, Netlist, Span};
use crate::optics::{compose, ComponentOp, ModeBasis, ModeState};
use crate::scalar::Scalar;

/// A two-port element on a propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: String,
    pub kind: Kind,
    pub params: ElementParams<f64>,
    /// Traversed p2 → p1 in the path's forward direction.
    pub reversed: bool,
}

/// One arm of the polarization-diverse MZ structure, walked from the input
/// PBS port toward the output PBS.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub stages: Vec<Stage>,
    /// Port (`p3` or `p4`) of the output PBS where the arm lands.
    pub end_port: String,
}

/// The Sagnac switch extracted from a netlist.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopModel {
    pub bs: String,
    pub bs_ratio: f64,
    /// BS p3 → input PBS p1.
    pub path_a: Vec<Stage>,
    /// BS p4 → output PBS p1.
    pub path_b: Vec<Stage>,
    pub pbs_in: String,
    pub pbs_out: String,
    /// Arm leaving the input PBS through port p3 (H, through).
    pub arm_through: Arm,
    /// Arm leaving the input PBS through port p4 (V, cross); carries e^{iKl}.
    pub arm_cross: Arm,
    /// BS p1 → circulator p2, then circulator p3 → D₁.
    pub d1_path: Vec<Stage>,
    pub d2_path: Vec<Stage>,
    pub d1: String,
    pub d2: String,
    pub trigger: String,
}

fn unsupported(span: Option<Span>, msg: impl Into<String>) -> EngineError {
    EngineError::UnsupportedTopology(Diagnostic::error(
        span,
        format!("unsupported topology: {}", msg.into()),
    ))
}

struct Walker<'a> {
    netlist: &'a Netlist,
    visited: BTreeSet<String>,
}

impl<'a> Walker<'a> {
    fn decl(&self, name: &str) -> &'a ComponentDecl {
        self.netlist
            .decl(name)
            .expect("validated netlist references declared components")
    }

    fn conn_span(&self, end: &Endpoint) -> Option<Span> {
        self.netlist.connection_at(end).and_then(|c| c.span)
    }

    /// Follows two-port elements from `start` until a multi-port component.
    fn walk(&mut self, start: &Endpoint) -> Result<(Vec<Stage>, Endpoint), EngineError> {
        let mut stages = Vec::new();
        let mut cur = start.clone();
        loop {
            let Some(peer) = self.netlist.peer(&cur).cloned() else {
                let span = self.decl(&cur.component).span;
                return Err(unsupported(span, format!("port {cur} is not connected")));
            };
            let decl = self.decl(&peer.component);
            if !decl.kind.is_two_port() {
                return Ok((stages, peer));
            }
            if !self.visited.insert(decl.name.clone()) {
                return Err(unsupported(
                    decl.span,
                    format!("`{}` is reached twice", decl.name),
                ));
            }
            let params = crate::netlist::validate_element(decl)
                .map_err(|m| unsupported(decl.span, m))?
                .expect("two-port kinds carry element parameters");
            let reversed = peer.port == "p2";
            stages.push(Stage {
                name: decl.name.clone(),
                kind: decl.kind,
                params,
                reversed,
            });
            cur = Endpoint::new(&decl.name, if reversed { "p1" } else { "p2" });
        }
    }

    fn expect_end(
        &mut self,
        end: &Endpoint,
        from: &Endpoint,
        kind: Kind,
        ports: &[&str],
    ) -> Result<(), EngineError> {
        let decl = self.decl(&end.component);
        if decl.kind != kind || !ports.contains(&end.port.as_str()) {
            let want = ports
                .iter()
                .map(|p| format!("{kind} port {p}"))
                .collect::<Vec<_>>()
                .join(" or ");
            return Err(unsupported(
                self.conn_span(end),
                format!(
                    "path from {from} must reach {want}, reached {} {end}",
                    decl.kind
                ),
            ));
        }
        self.visited.insert(end.component.clone());
        Ok(())
    }
}

fn no_modulators(stages: &[Stage], netlist: &Netlist) -> Result<(), EngineError> {
    if let Some(s) = stages.iter().find(|s| s.kind == Kind::Pm) {
        return Err(unsupported(
            netlist.decl(&s.name).and_then(|d| d.span),
            format!("phase modulator `{}` outside the MZ structure", s.name),
        ));
    }
    Ok(())
}

impl LoopModel {
    /// Recognizes the preset family: one BS whose loop ports reach two PBSs
    /// through two-port elements, two MZ arms between the PBSs, a circulator
    /// on BS p1 feeding D₁, a detector on BS p2 and a heralded source.
    pub fn from_netlist(netlist: &Netlist) -> Result<Self, EngineError> {
        if let Some(d) = validate(netlist).into_iter().next() {
            return Err(EngineError::UnsupportedTopology(d));
        }
        let mut w = Walker {
            netlist,
            visited: BTreeSet::new(),
        };
        let bss: Vec<_> = netlist.decls_of(Kind::Bs).collect();
        let [bs] = bss.as_slice() else {
            return Err(unsupported(
                bss.get(1).and_then(|d| d.span),
                format!("expected exactly one bs, found {}", bss.len()),
            ));
        };
        w.visited.insert(bs.name.clone());
        let ep = |c: &str, p: &str| Endpoint::new(c, p);

        let start_a = ep(&bs.name, "p3");
        let (path_a, end_a) = w.walk(&start_a)?;
        w.expect_end(&end_a, &start_a, Kind::Pbs, &["p1"])?;
        let start_b = ep(&bs.name, "p4");
        let (path_b, end_b) = w.walk(&start_b)?;
        if end_b.component == end_a.component {
            return Err(unsupported(
                w.conn_span(&end_b),
                "both loop paths reach the same pbs",
            ));
        }
        w.expect_end(&end_b, &start_b, Kind::Pbs, &["p1"])?;
        let (pbs_in, pbs_out) = (end_a.component.clone(), end_b.component.clone());

        let mut arm = |port: &str| -> Result<Arm, EngineError> {
            let start = ep(&pbs_in, port);
            let (stages, end) = w.walk(&start)?;
            if end.component != pbs_out {
                return Err(unsupported(
                    w.conn_span(&end),
                    format!("MZ arm from {start} must reach `{pbs_out}`, reached {end}"),
                ));
            }
            w.expect_end(&end, &start, Kind::Pbs, &["p3", "p4"])?;
            Ok(Arm {
                stages,
                end_port: end.port,
            })
        };
        let arm_through = arm("p3")?;
        let arm_cross = arm("p4")?;
        for pbs in [&pbs_in, &pbs_out] {
            let spare = ep(pbs, "p2");
            if netlist.peer(&spare).is_some() {
                return Err(unsupported(
                    w.conn_span(&spare),
                    format!("port {spare} must be left open"),
                ));
            }
        }

        let start = ep(&bs.name, "p1");
        let (mut d1_path, circ_in) = w.walk(&start)?;
        w.expect_end(&circ_in, &start, Kind::Circulator, &["p2"])?;
        let circ = circ_in.component.clone();
        let start = ep(&circ, "p3");
        let (tail, d1_end) = w.walk(&start)?;
        w.expect_end(&d1_end, &start, Kind::Detector, &["in"])?;
        d1_path.extend(tail);
        let start = ep(&bs.name, "p2");
        let (d2_path, d2_end) = w.walk(&start)?;
        w.expect_end(&d2_end, &start, Kind::Detector, &["in"])?;

        let start = ep(&circ, "p1");
        let (prep, src) = w.walk(&start)?;
        w.expect_end(&src, &start, Kind::Source, &["out"])?;
        let start = ep(&src.component, "idler");
        let (_, trig) = w.walk(&start)?;
        w.expect_end(&trig, &start, Kind::Detector, &["in"])?;

        for stages in [&path_a, &path_b, &d1_path, &d2_path, &prep] {
            no_modulators(stages, netlist)?;
        }
        if let Some(extra) = netlist
            .decls()
            .iter()
            .find(|d| !w.visited.contains(&d.name))
        {
            return Err(unsupported(
                extra.span,
                format!("`{}` is not part of the Sagnac switch", extra.name),
            ));
        }

        Ok(Self {
            bs: bs.name.clone(),
            bs_ratio: bs.param("ratio").expect("validated"),
            path_a,
            path_b,
            pbs_in,
            pbs_out,
            arm_through,
            arm_cross,
            d1_path,
            d2_path,
            d1: d1_end.component,
            d2: d2_end.component,
            trigger: trig.component,
        })
    }

    /// Extra group delay of path B over path A, seconds.
    pub fn delay_difference(&self) -> f64 {
        let delay = |stages: &[Stage]| -> f64 {
            stages
                .iter()
                .filter_map(|s| match s.params {
                    ElementParams::Fiber {
                        length_m,
                        group_index,
                        ..
                    } => Some(length_m * group_index / components::SPEED_OF_LIGHT),
                    _ => None,
                })
                .sum()
        };
        delay(&self.path_b) - delay(&self.path_a)
    }

    /// Full operator chain from the circulator-side BS port to {D₁, D₂}.
    pub fn chain<T: Scalar>(
        &self,
        phases: &PassPhases<T>,
        kl: T,
    ) -> Result<ComponentOp<T>, EngineError> {
        let p_a = path_op::<T>(&self.path_a, T::zero())?;
        let p_b = path_op::<T>(&self.path_b, T::zero())?;
        let t_cw = compose(
            &p_b.reversed(),
            &compose(&self.mz_forward(phases.phi_cw, kl)?, &p_a)?,
        )?;
        let t_ccw = compose(
            &p_a.reversed(),
            &compose(&self.mz_backward(phases.phi_ccw, kl)?, &p_b)?,
        )?;

        let a = basis(&["A"]);
        let b = basis(&["B"]);
        let loop_op = t_cw
            .relabel(a.clone(), b.clone())?
            .direct_sum(&t_ccw.relabel(b, a)?)?;
        let loop_op = loop_op.then(&ComponentOp::reorder(
            loop_op.output_basis(),
            &basis(&["A", "B"]),
        )?)?;

        let bs = components::beamsplitter(T::lit(self.bs_ratio))?
            .relabel(basis(&["P1", "P2"]), basis(&["A", "B"]))?;
        let out = path_op::<T>(&self.d1_path, T::zero())?
            .relabel(basis(&["P1"]), basis(&[D1]))?
            .direct_sum(
                &path_op::<T>(&self.d2_path, T::zero())?.relabel(basis(&["P2"]), basis(&[D2]))?,
            )?;
        debug_assert_eq!(out.output_basis(), &output_basis());
        Ok(bs.then(&loop_op)?.then(&bs.reversed())?.then(&out)?)
    }

    /// Propagates a photon entering the BS from the circulator.
    pub fn propagate<T: Scalar>(
        &self,
        input: &JonesVector<T>,
        phases: &PassPhases<T>,
        kl: T,
    ) -> Result<ModeState<T>, EngineError> {
        input.check_normalized()?;
        let chain = self.chain(phases, kl)?;
        let state =
            ModeState::from_jones(chain.input_basis().clone(), "P1", input.alpha, input.beta)?;
        Ok(chain.apply(&state)?)
    }

    fn arm_ops<T: Scalar>(
        &self,
        phase: T,
        kl: T,
    ) -> Result<(ComponentOp<T>, ComponentOp<T>), EngineError> {
        let through = path_op::<T>(&self.arm_through.stages, phase)?;
        let cross = path_op::<T>(&self.arm_cross.stages, phase)?.then(&propagation_phase(kl))?;
        Ok((through, cross))
    }

    /// Input PBS p1 → output PBS p1, clockwise.
    fn mz_forward<T: Scalar>(&self, phase: T, kl: T) -> Result<ComponentOp<T>, EngineError> {
        let (through, cross) = self.arm_ops(phase, kl)?;
        let arms = on_port(&through, "p3")?
            .relabel(basis(&["p3"]), basis(&[&self.arm_through.end_port]))?
            .direct_sum(
                &on_port(&cross, "p4")?
                    .relabel(basis(&["p4"]), basis(&[&self.arm_cross.end_port]))?,
            )?;
        let arms = arms.then(&ComponentOp::reorder(
            arms.output_basis(),
            &basis(&["p3", "p4"]),
        )?)?;
        Ok(embed_p1::<T>()?
            .then(&components::pbs())?
            .then(&arms)?
            .then(&components::pbs::<T>().reversed())?
            .then(&select_p1(&basis(&["p1", "p2"]))?)?)
    }

    /// Output PBS p1 → input PBS p1, counter-clockwise.
    fn mz_backward<T: Scalar>(&self, phase: T, kl: T) -> Result<ComponentOp<T>, EngineError> {
        let (through, cross) = self.arm_ops(phase, kl)?;
        let arms = on_port(&through.reversed(), "p3")?
            .relabel(basis(&[&self.arm_through.end_port]), basis(&["p3"]))?
            .direct_sum(
                &on_port(&cross.reversed(), "p4")?
                    .relabel(basis(&[&self.arm_cross.end_port]), basis(&["p4"]))?,
            )?;
        let arms = ComponentOp::reorder(&basis(&["p3", "p4"]), arms.input_basis())?.then(&arms)?;
        Ok(embed_p1::<T>()?
            .then(&components::pbs())?
            .then(&arms)?
            .then(&components::pbs::<T>().reversed())?
            .then(&select_p1(&basis(&["p1", "p2"]))?)?)
    }
}

fn basis(labels: &[&str]) -> ModeBasis {
    ModeBasis::new(labels).expect("distinct labels")
}

/// {p} → {p1, p2}, photon on p1.
fn embed_p1<T: Scalar>() -> Result<ComponentOp<T>, EngineError> {
    Ok(ComponentOp::<T>::projector(&basis(&["p1", "p2"]), &["p1"])?
        .reversed()
        .relabel(basis(&[POL_PORT]), basis(&["p1", "p2"]))?)
}

/// Keeps p1 and renames it to the single-port label.
fn select_p1<T: Scalar>(from: &ModeBasis) -> Result<ComponentOp<T>, EngineError> {
    Ok(ComponentOp::<T>::projector(from, &["p1"])?.relabel(from.clone(), basis(&[POL_PORT]))?)
}

/// Product of the stage operators in propagation order, on [`POL_PORT`].
/// Modulators get `pm_phase`.
pub(crate) fn path_op<T: Scalar>(
    stages: &[Stage],
    pm_phase: T,
) -> Result<ComponentOp<T>, EngineError> {
    let mut op = ComponentOp::identity(basis(&[POL_PORT]));
    for s in stages {
        let mut params = s.params.cast::<T>();
        if let ElementParams::PhaseModulator { ref mut phase, .. } = params {
            *phase = pm_phase;
        }
        let stage = params
            .two_port_op()?
            .expect("stages hold two-port elements");
        let stage = if s.reversed { stage.reversed() } else { stage };
        op = op.then(&stage)?;
    }
    Ok(op)
}
