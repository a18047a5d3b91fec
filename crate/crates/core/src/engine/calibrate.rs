//! Search for polarization-controller angles that route both loop directions
//! through the same MZ arm.

use super::topology::{path_op, LoopModel, Stage};
use super::EngineError;
use crate::components::ElementParams;
use crate::netlist::{Diagnostic, Kind, Netlist};
use crate::optics::Polarization;
use crate::optimize::nelder_mead;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Required `1 − fidelity` on each path.
    pub target_infidelity: f64,
    /// Grid points per angle for the coarse search; 0 skips the grid.
    pub grid_steps: usize,
    /// Number of best starting points refined with Nelder–Mead.
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target_infidelity: 1e-9,
            grid_steps: 8,
            restarts: 4,
            max_iter: 4000,
        }
    }
}

/// Controller settings found by [`calibrate_controllers`]. Angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerCalibration {
    pub pc_a: String,
    pub pc_b: String,
    pub angles_a: [f64; 3],
    pub angles_b: [f64; 3],
    pub fidelity_a: f64,
    pub fidelity_b: f64,
    /// Largest angle change relative to the netlist's settings, wrapped to [0, π].
    pub correction: f64,
}

impl ControllerCalibration {
    pub fn fidelity(&self) -> f64 {
        self.fidelity_a.min(self.fidelity_b)
    }

    /// The netlist with both controllers set to the found angles.
    pub fn apply(&self, netlist: &Netlist) -> Result<Netlist, Vec<Diagnostic>> {
        let mut n = netlist.clone();
        for (name, angles) in [(&self.pc_a, self.angles_a), (&self.pc_b, self.angles_b)] {
            for (key, v) in ["a", "b", "c"].into_iter().zip(angles) {
                n = n.with_param(name, key, v)?;
            }
        }
        Ok(n)
    }
}

struct Path<'a> {
    stages: &'a [Stage],
    pc: usize,
    target: Polarization,
}

impl Path<'_> {
    fn find<'a>(
        stages: &'a [Stage],
        netlist: &Netlist,
        what: &str,
        target: Polarization,
    ) -> Result<Path<'a>, EngineError> {
        let pcs: Vec<usize> = (0..stages.len())
            .filter(|&i| stages[i].kind == Kind::Pc)
            .collect();
        match pcs.as_slice() {
            [i] => Ok(Path {
                stages,
                pc: *i,
                target,
            }),
            _ => {
                let span = pcs
                    .get(1)
                    .and_then(|&i| netlist.decl(&stages[i].name))
                    .and_then(|d| d.span);
                Err(EngineError::UnsupportedTopology(Diagnostic::error(
                    span,
                    format!(
                        "unsupported topology: {what} needs exactly one polarization controller, found {}",
                        pcs.len()
                    ),
                )))
            }
        }
    }

    fn angles(&self) -> [f64; 3] {
        match self.stages[self.pc].params {
            ElementParams::PolarizationController { a, b, c } => [a, b, c],
            _ => unreachable!("index points at a controller"),
        }
    }

    fn fidelity(&self, angles: &[f64; 3]) -> f64 {
        let mut stages = self.stages.to_vec();
        stages[self.pc].params = ElementParams::PolarizationController {
            a: angles[0],
            b: angles[1],
            c: angles[2],
        };
        let j = path_op::<f64>(&stages, 0.0).expect("controller angles are always valid");
        let h = j.entry(0, 0).norm_sqr();
        let v = j.entry(1, 0).norm_sqr();
        if h + v == 0.0 {
            return 0.0;
        }
        let hit = if self.target == Polarization::H { h } else { v };
        hit / (h + v)
    }

    fn solve(&self, opts: &CalibrationOptions) -> ([f64; 3], f64) {
        let start = self.angles();
        let f0 = self.fidelity(&start);
        if 1.0 - f0 <= opts.target_infidelity {
            return (start, f0);
        }
        let n = opts.grid_steps;
        let step = std::f64::consts::PI / n.max(1) as f64;
        let mut grid = Vec::with_capacity(n * n * n + 1);
        grid.push((start, f0));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = [i as f64 * step, j as f64 * step, k as f64 * step];
                    grid.push((x, self.fidelity(&x)));
                }
            }
        }
        grid.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut best = grid[0];
        for &(x0, _) in grid.iter().take(opts.restarts) {
            let (x, f) = nelder_mead(
                |x| 1.0 - self.fidelity(x),
                x0,
                step / 2.0,
                1e-18,
                opts.max_iter,
            );
            if 1.0 - f > best.1 {
                best = (x, 1.0 - f);
            }
            if 1.0 - best.1 <= opts.target_infidelity {
                break;
            }
        }
        best
    }
}

fn angle_change(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let tau = std::f64::consts::TAU;
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(tau);
            d.min(tau - d)
        })
        .fold(0.0, f64::max)
}

/// Finds controller angles so that H leaving the BS on path A reaches the
/// input PBS as H (through arm), and H leaving on path B reaches the output
/// PBS in the polarization that the through arm accepts there.
pub fn calibrate_controllers(
    netlist: &Netlist,
    opts: &CalibrationOptions,
) -> Result<ControllerCalibration, EngineError> {
    let model = LoopModel::from_netlist(netlist)?;
    let target_b = if model.arm_through.end_port == "p3" {
        Polarization::H
    } else {
        Polarization::V
    };
    let a = Path::find(&model.path_a, netlist, "path A", Polarization::H)?;
    let b = Path::find(&model.path_b, netlist, "path B", target_b)?;
    let (angles_a, fidelity_a) = a.solve(opts);
    let (angles_b, fidelity_b) = b.solve(opts);
    let best = fidelity_a.min(fidelity_b);
    if 1.0 - best > opts.target_infidelity {
        return Err(EngineError::Calibration {
            best_fidelity: best,
        });
    }
    let correction = angle_change(&angles_a, &a.angles()).max(angle_change(&angles_b, &b.angles()));
    Ok(ControllerCalibration {
        pc_a: model.path_a[a.pc].name.clone(),
        pc_b: model.path_b[b.pc].name.clone(),
        angles_a,
        angles_b,
        fidelity_a,
        fidelity_b,
        correction,
    })
}
