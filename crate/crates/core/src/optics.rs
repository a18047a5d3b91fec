//! Complex linear algebra over labeled optical mode bases.
//!
//! A [`ModeBasis`] is an ordered list of (spatial label, polarization) pairs,
//! H before V within each spatial label. States and operators carry their
//! bases and every operation checks them, so a mis-wired composition fails
//! loudly instead of silently multiplying the wrong amplitudes.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{c, cis, cone, czero, Scalar, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub spatial: String,
    pub pol: Polarization,
}

impl Mode {
    pub fn new(spatial: impl Into<String>, pol: Polarization) -> Self {
        Self {
            spatial: spatial.into(),
            pol,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.spatial, self.pol)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("basis mismatch: expected {expected}, got {actual}")]
    BasisMismatch { expected: String, actual: String },
    #[error("duplicate mode {0} in basis")]
    DuplicateMode(String),
    #[error("spatial label `{0}` must carry both H and V")]
    IncompleteSpatial(String),
    #[error("unknown mode {0}")]
    UnknownMode(String),
    #[error("unknown spatial label `{0}`")]
    UnknownSpatial(String),
    #[error("expected {expected} amplitudes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("operator flagged {kind} violates its constraint (deviation {deviation:.3e})")]
    KindViolation { kind: OpKind, deviation: f64 },
}

/// Ordered, immutable list of optical modes. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModeBasis {
    modes: Arc<[Mode]>,
}

impl ModeBasis {
    /// Basis over the given spatial labels, H before V for each.
    pub fn new<S: AsRef<str>>(spatial: &[S]) -> Result<Self, OpticsError> {
        let modes = spatial
            .iter()
            .flat_map(|s| Polarization::BOTH.map(|p| Mode::new(s.as_ref(), p)))
            .collect();
        Self::from_modes(modes)
    }

    pub fn from_modes(modes: Vec<Mode>) -> Result<Self, OpticsError> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(OpticsError::DuplicateMode(m.to_string()));
            }
        }
        for m in &modes {
            let partner = Mode::new(m.spatial.clone(), m.pol.orthogonal());
            if !modes.contains(&partner) {
                return Err(OpticsError::IncompleteSpatial(m.spatial.clone()));
            }
        }
        Ok(Self {
            modes: modes.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn index_of(&self, mode: &Mode) -> Option<usize> {
        self.modes.iter().position(|m| m == mode)
    }

    /// Spatial labels in first-appearance order.
    pub fn spatial_labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for m in self.modes.iter() {
            if !out.contains(&m.spatial.as_str()) {
                out.push(&m.spatial);
            }
        }
        out
    }

    pub fn contains_spatial(&self, label: &str) -> bool {
        self.modes.iter().any(|m| m.spatial == label)
    }

    /// Concatenation; fails on overlapping labels.
    pub fn concat(&self, other: &ModeBasis) -> Result<Self, OpticsError> {
        let mut modes = self.modes.to_vec();
        modes.extend(other.modes.iter().cloned());
        Self::from_modes(modes)
    }
}

impl fmt::Debug for ModeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ModeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.modes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// Pure single-photon state: amplitudes over a mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState<T: Scalar> {
    basis: ModeBasis,
    amplitudes: Vec<C<T>>,
}

impl<T: Scalar> ModeState<T> {
    pub fn new(basis: ModeBasis, amplitudes: Vec<C<T>>) -> Result<Self, OpticsError> {
        if amplitudes.len() != basis.len() {
            return Err(OpticsError::LengthMismatch {
                expected: basis.len(),
                actual: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    /// All amplitude in one mode.
    pub fn basis_state(basis: ModeBasis, mode: &Mode) -> Result<Self, OpticsError> {
        let idx = basis
            .index_of(mode)
            .ok_or_else(|| OpticsError::UnknownMode(mode.to_string()))?;
        let mut amplitudes = vec![czero(); basis.len()];
        amplitudes[idx] = cone();
        Ok(Self { basis, amplitudes })
    }

    /// Places the Jones vector `(h, v)` on one spatial label, vacuum elsewhere.
    pub fn from_jones(
        basis: ModeBasis,
        spatial: &str,
        h: C<T>,
        v: C<T>,
    ) -> Result<Self, OpticsError> {
        let mut amplitudes = vec![czero(); basis.len()];
        let ih = basis
            .index_of(&Mode::new(spatial, Polarization::H))
            .ok_or_else(|| OpticsError::UnknownSpatial(spatial.to_string()))?;
        let iv = basis
            .index_of(&Mode::new(spatial, Polarization::V))
            .ok_or_else(|| OpticsError::UnknownSpatial(spatial.to_string()))?;
        amplitudes[ih] = h;
        amplitudes[iv] = v;
        Ok(Self { basis, amplitudes })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode: &Mode) -> Result<C<T>, OpticsError> {
        self.basis
            .index_of(mode)
            .map(|i| self.amplitudes[i])
            .ok_or_else(|| OpticsError::UnknownMode(mode.to_string()))
    }

    /// The (H, V) amplitudes on one spatial label.
    pub fn jones(&self, spatial: &str) -> Result<(C<T>, C<T>), OpticsError> {
        Ok((
            self.amplitude(&Mode::new(spatial, Polarization::H))
                .map_err(|_| OpticsError::UnknownSpatial(spatial.to_string()))?,
            self.amplitude(&Mode::new(spatial, Polarization::V))?,
        ))
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Sum of squared magnitudes over a subset of modes.
    pub fn probability<'a, I>(&self, subset: I) -> Result<T, OpticsError>
    where
        I: IntoIterator<Item = &'a Mode>,
    {
        let mut p = T::zero();
        for mode in subset {
            p = p + self.amplitude(mode)?.norm_sqr();
        }
        Ok(p)
    }

    /// Probability of finding the photon on a spatial label, either polarization.
    pub fn spatial_probability(&self, spatial: &str) -> Result<T, OpticsError> {
        if !self.basis.contains_spatial(spatial) {
            return Err(OpticsError::UnknownSpatial(spatial.to_string()));
        }
        Ok(self
            .basis
            .modes()
            .iter()
            .zip(&self.amplitudes)
            .filter(|(m, _)| m.spatial == spatial)
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()))
    }

    pub fn scaled(&self, factor: C<T>) -> Self {
        Self {
            basis: self.basis.clone(),
            amplitudes: self.amplitudes.iter().map(|a| *a * factor).collect(),
        }
    }

    /// Largest per-amplitude deviation, or `None` on basis mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.basis != other.basis {
            return None;
        }
        Some(
            self.amplitudes
                .iter()
                .zip(&other.amplitudes)
                .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm())),
        )
    }

    /// Equality after removing the best-fit global phase.
    pub fn eq_up_to_global_phase(&self, other: &Self, tol: T) -> bool {
        if self.basis != other.basis {
            return false;
        }
        let phase = best_global_phase(&self.amplitudes, &other.amplitudes);
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .all(|(a, b)| (*a * phase - *b).norm() <= tol)
    }
}

/// Unit phase `u` minimizing `|u·a − b|`; 1 when the overlap vanishes.
fn best_global_phase<T: Scalar>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    let overlap = a
        .iter()
        .zip(b)
        .fold(czero::<T>(), |acc, (x, y)| acc + x.conj() * y);
    let n = overlap.norm();
    if n <= T::min_positive_value() {
        cone()
    } else {
        overlap / n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    /// M†M = I.
    Unitary,
    /// All singular values ≤ 1.
    PassiveLossy,
    General,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Unitary => "unitary",
            OpKind::PassiveLossy => "passive-lossy",
            OpKind::General => "general",
        })
    }
}

/// Linear map between two mode bases, stored row-major (rows = output modes).
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentOp<T: Scalar> {
    input: ModeBasis,
    output: ModeBasis,
    matrix: Vec<C<T>>,
    kind: OpKind,
}

impl<T: Scalar> ComponentOp<T> {
    /// Builds an operator and checks the constraint implied by `kind`.
    pub fn new(
        input: ModeBasis,
        output: ModeBasis,
        matrix: Vec<C<T>>,
        kind: OpKind,
    ) -> Result<Self, OpticsError> {
        let expected = input.len() * output.len();
        if matrix.len() != expected {
            return Err(OpticsError::LengthMismatch {
                expected,
                actual: matrix.len(),
            });
        }
        let op = Self {
            input,
            output,
            matrix,
            kind,
        };
        let tol = T::ALGEBRA_TOL;
        match kind {
            OpKind::Unitary => {
                let dev = op.unitarity_deviation();
                if op.input.len() != op.output.len() || dev > tol {
                    return Err(OpticsError::KindViolation {
                        kind,
                        deviation: dev.to_f64_lossy(),
                    });
                }
            }
            OpKind::PassiveLossy => {
                let s = op.max_singular_value();
                if s > T::one() + tol {
                    return Err(OpticsError::KindViolation {
                        kind,
                        deviation: (s - T::one()).to_f64_lossy(),
                    });
                }
            }
            OpKind::General => {}
        }
        Ok(op)
    }

    pub fn identity(basis: ModeBasis) -> Self {
        let n = basis.len();
        let mut matrix = vec![czero(); n * n];
        for i in 0..n {
            matrix[i * n + i] = cone();
        }
        Self {
            input: basis.clone(),
            output: basis,
            matrix,
            kind: OpKind::Unitary,
        }
    }

    /// Polarization-only operator: the 2×2 Jones matrix `[[a, b], [c, d]]`
    /// on a single spatial label.
    pub fn jones(spatial: &str, j: [[C<T>; 2]; 2], kind: OpKind) -> Result<Self, OpticsError> {
        let basis = ModeBasis::new(&[spatial])?;
        Self::new(
            basis.clone(),
            basis,
            vec![j[0][0], j[0][1], j[1][0], j[1][1]],
            kind,
        )
    }

    pub fn input_basis(&self) -> &ModeBasis {
        &self.input
    }

    pub fn output_basis(&self) -> &ModeBasis {
        &self.output
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.output.len()
    }

    pub fn cols(&self) -> usize {
        self.input.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> C<T> {
        self.matrix[row * self.cols() + col]
    }

    pub fn matrix(&self) -> &[C<T>] {
        &self.matrix
    }

    /// Matrix element ⟨out|M|in⟩.
    pub fn element(&self, out: &Mode, inp: &Mode) -> Result<C<T>, OpticsError> {
        let r = self
            .output
            .index_of(out)
            .ok_or_else(|| OpticsError::UnknownMode(out.to_string()))?;
        let col = self
            .input
            .index_of(inp)
            .ok_or_else(|| OpticsError::UnknownMode(inp.to_string()))?;
        Ok(self.entry(r, col))
    }

    pub fn apply(&self, state: &ModeState<T>) -> Result<ModeState<T>, OpticsError> {
        if state.basis() != &self.input {
            return Err(OpticsError::BasisMismatch {
                expected: self.input.to_string(),
                actual: state.basis().to_string(),
            });
        }
        let cols = self.cols();
        let amplitudes = self
            .matrix
            .chunks_exact(cols)
            .map(|row| {
                row.iter()
                    .zip(state.amplitudes())
                    .fold(czero::<T>(), |acc, (m, a)| acc + *m * *a)
            })
            .collect();
        Ok(ModeState {
            basis: self.output.clone(),
            amplitudes,
        })
    }

    /// `second ∘ self`: apply `self` first.
    pub fn then(&self, second: &ComponentOp<T>) -> Result<ComponentOp<T>, OpticsError> {
        compose(second, self)
    }

    /// Transpose with bases swapped: the same reciprocal element traversed backwards.
    pub fn reversed(&self) -> Self {
        let (r, cl) = (self.rows(), self.cols());
        let mut matrix = vec![czero(); r * cl];
        for i in 0..r {
            for j in 0..cl {
                matrix[j * r + i] = self.entry(i, j);
            }
        }
        Self {
            input: self.output.clone(),
            output: self.input.clone(),
            matrix,
            kind: self.kind,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.reversed();
        for z in &mut t.matrix {
            *z = z.conj();
        }
        t
    }

    /// Same matrix on renamed bases of equal size.
    pub fn relabel(&self, input: ModeBasis, output: ModeBasis) -> Result<Self, OpticsError> {
        if input.len() != self.input.len() || output.len() != self.output.len() {
            return Err(OpticsError::LengthMismatch {
                expected: self.input.len(),
                actual: input.len(),
            });
        }
        Ok(Self {
            input,
            output,
            matrix: self.matrix.clone(),
            kind: self.kind,
        })
    }

    /// Block-diagonal combination acting independently on disjoint bases.
    pub fn direct_sum(&self, other: &ComponentOp<T>) -> Result<Self, OpticsError> {
        let input = self.input.concat(&other.input)?;
        let output = self.output.concat(&other.output)?;
        let (r1, c1) = (self.rows(), self.cols());
        let (r2, c2) = (other.rows(), other.cols());
        let cols = c1 + c2;
        let mut matrix = vec![czero(); (r1 + r2) * cols];
        for i in 0..r1 {
            for j in 0..c1 {
                matrix[i * cols + j] = self.entry(i, j);
            }
        }
        for i in 0..r2 {
            for j in 0..c2 {
                matrix[(r1 + i) * cols + c1 + j] = other.entry(i, j);
            }
        }
        let kind = weaker(self.kind, other.kind);
        Ok(Self {
            input,
            output,
            matrix,
            kind,
        })
    }

    /// Keeps the listed spatial labels and discards the rest (a lossy projection).
    pub fn projector<S: AsRef<str>>(input: &ModeBasis, keep: &[S]) -> Result<Self, OpticsError> {
        for k in keep {
            if !input.contains_spatial(k.as_ref()) {
                return Err(OpticsError::UnknownSpatial(k.as_ref().to_string()));
            }
        }
        let output = ModeBasis::new(keep)?;
        let cols = input.len();
        let mut matrix = vec![czero(); output.len() * cols];
        for (i, m) in output.modes().iter().enumerate() {
            let j = input.index_of(m).expect("checked above");
            matrix[i * cols + j] = cone();
        }
        let kind = if output.len() == input.len() {
            OpKind::Unitary
        } else {
            OpKind::PassiveLossy
        };
        Ok(Self {
            input: input.clone(),
            output,
            matrix,
            kind,
        })
    }

    /// Permutation taking amplitudes in `from` order to `to` order; both
    /// bases must hold the same modes.
    pub fn reorder(from: &ModeBasis, to: &ModeBasis) -> Result<Self, OpticsError> {
        if from.len() != to.len() {
            return Err(OpticsError::BasisMismatch {
                expected: to.to_string(),
                actual: from.to_string(),
            });
        }
        let n = from.len();
        let mut matrix = vec![czero(); n * n];
        for (i, m) in to.modes().iter().enumerate() {
            let j = from.index_of(m).ok_or_else(|| OpticsError::BasisMismatch {
                expected: to.to_string(),
                actual: from.to_string(),
            })?;
            matrix[i * n + j] = cone();
        }
        Ok(Self {
            input: from.clone(),
            output: to.clone(),
            matrix,
            kind: OpKind::Unitary,
        })
    }

    pub fn scaled(&self, factor: C<T>) -> Self {
        let kind = if self.kind == OpKind::General || factor.norm() > T::one() + T::ALGEBRA_TOL {
            OpKind::General
        } else if (factor.norm() - T::one()).abs() <= T::ALGEBRA_TOL {
            self.kind
        } else {
            OpKind::PassiveLossy
        };
        Self {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix: self.matrix.iter().map(|z| *z * factor).collect(),
            kind,
        }
    }

    /// max |(M†M − I)_ij|; infinite for non-square operators.
    pub fn unitarity_deviation(&self) -> T {
        let n = self.cols();
        if self.rows() != n {
            return T::infinity();
        }
        let mut dev = T::zero();
        for i in 0..n {
            for j in 0..n {
                let mut s = czero::<T>();
                for k in 0..self.rows() {
                    s = s + self.entry(k, i).conj() * self.entry(k, j);
                }
                if i == j {
                    s = s - cone();
                }
                dev = dev.max(s.norm());
            }
        }
        dev
    }

    /// Largest singular value, by power iteration on M†M.
    pub fn max_singular_value(&self) -> T {
        let n = self.cols();
        if n == 0 {
            return T::zero();
        }
        // Gram matrix G = M†M (Hermitian PSD).
        let mut g = vec![czero::<T>(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = czero::<T>();
                for k in 0..self.rows() {
                    s = s + self.entry(k, i).conj() * self.entry(k, j);
                }
                g[i * n + j] = s;
            }
        }
        // Deterministic start vector with no special alignment.
        let mut v: Vec<C<T>> = (0..n)
            .map(|i| c(T::one(), T::lit(0.37 * (i as f64 + 1.0)).sin()))
            .collect();
        let mut lambda = T::zero();
        for _ in 0..500 {
            let w: Vec<C<T>> = (0..n)
                .map(|i| (0..n).fold(czero::<T>(), |acc, j| acc + g[i * n + j] * v[j]))
                .collect();
            let norm = w.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
            if norm <= T::min_positive_value() {
                return T::zero();
            }
            let next = norm / v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
            v = w.into_iter().map(|z| z / c(norm, T::zero())).collect();
            if (next - lambda).abs() <= T::epsilon() * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.input != other.input || self.output != other.output {
            return None;
        }
        Some(
            self.matrix
                .iter()
                .zip(&other.matrix)
                .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm())),
        )
    }

    pub fn eq_up_to_global_phase(&self, other: &Self, tol: T) -> bool {
        if self.input != other.input || self.output != other.output {
            return false;
        }
        let phase = best_global_phase(&self.matrix, &other.matrix);
        self.matrix
            .iter()
            .zip(&other.matrix)
            .all(|(a, b)| (*a * phase - *b).norm() <= tol)
    }

    /// True when the operator is a scalar multiple of the identity.
    pub fn is_proportional_to_identity(&self, tol: T) -> bool {
        if self.input != self.output {
            return false;
        }
        let d = self.entry(0, 0);
        (0..self.rows()).all(|i| {
            (0..self.cols()).all(|j| {
                let expect = if i == j { d } else { czero() };
                (self.entry(i, j) - expect).norm() <= tol
            })
        })
    }
}

fn weaker(a: OpKind, b: OpKind) -> OpKind {
    match (a, b) {
        (OpKind::General, _) | (_, OpKind::General) => OpKind::General,
        (OpKind::PassiveLossy, _) | (_, OpKind::PassiveLossy) => OpKind::PassiveLossy,
        _ => OpKind::Unitary,
    }
}

pub fn apply<T: Scalar>(
    op: &ComponentOp<T>,
    state: &ModeState<T>,
) -> Result<ModeState<T>, OpticsError> {
    op.apply(state)
}

/// Matrix product `second · first`.
pub fn compose<T: Scalar>(
    second: &ComponentOp<T>,
    first: &ComponentOp<T>,
) -> Result<ComponentOp<T>, OpticsError> {
    if first.output != second.input {
        return Err(OpticsError::BasisMismatch {
            expected: second.input.to_string(),
            actual: first.output.to_string(),
        });
    }
    let (r, k, cl) = (second.rows(), second.cols(), first.cols());
    let mut matrix = vec![czero::<T>(); r * cl];
    for i in 0..r {
        for kk in 0..k {
            let a = second.entry(i, kk);
            if a == czero() {
                continue;
            }
            for j in 0..cl {
                matrix[i * cl + j] = matrix[i * cl + j] + a * first.entry(kk, j);
            }
        }
    }
    Ok(ComponentOp {
        input: first.input.clone(),
        output: second.output.clone(),
        matrix,
        kind: weaker(first.kind, second.kind),
    })
}

pub fn probability<'a, T: Scalar, I>(state: &ModeState<T>, subset: I) -> Result<T, OpticsError>
where
    I: IntoIterator<Item = &'a Mode>,
{
    state.probability(subset)
}

/// Uniform global phase factor, used by callers that need to move states
/// between phase conventions explicitly.
pub fn global_phase<T: Scalar>(theta: T) -> C<T> {
    cis(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ab() -> ModeBasis {
        ModeBasis::new(&["A", "B"]).unwrap()
    }

    #[test]
    fn basis_order_h_before_v() {
        let b = ab();
        let labels: Vec<String> = b.modes().iter().map(|m| m.to_string()).collect();
        assert_eq!(labels, ["(A,H)", "(A,V)", "(B,H)", "(B,V)"]);
    }

    #[test]
    fn basis_rejects_duplicates_and_odd() {
        assert!(matches!(
            ModeBasis::new(&["A", "A"]),
            Err(OpticsError::DuplicateMode(_))
        ));
        assert!(matches!(
            ModeBasis::from_modes(vec![Mode::new("A", Polarization::H)]),
            Err(OpticsError::IncompleteSpatial(_))
        ));
    }

    #[test]
    fn identity_apply_is_noop() {
        let b = ab();
        let s = ModeState::new(
            b.clone(),
            vec![c(0.5, 0.1), c(0.0, 0.3), c(-0.2, 0.0), c(0.1, 0.1)],
        )
        .unwrap();
        let out = ComponentOp::identity(b).apply(&s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn apply_basis_mismatch_names_both() {
        let op = ComponentOp::<f64>::identity(ab());
        let s = ModeState::basis_state(
            ModeBasis::new(&["D1"]).unwrap(),
            &Mode::new("D1", Polarization::H),
        )
        .unwrap();
        let err = op.apply(&s).unwrap_err().to_string();
        assert!(err.contains("(A,H)") && err.contains("(D1,H)"), "{err}");
    }

    #[test]
    fn compose_mismatch_errors() {
        let a = ComponentOp::<f64>::identity(ab());
        let b = ComponentOp::<f64>::identity(ModeBasis::new(&["X"]).unwrap());
        assert!(compose(&a, &b).is_err());
    }

    #[test]
    fn unitary_flag_is_checked() {
        let b = ModeBasis::new(&["p"]).unwrap();
        let m = vec![c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        assert!(ComponentOp::new(b.clone(), b.clone(), m.clone(), OpKind::Unitary).is_err());
        assert!(ComponentOp::new(b.clone(), b, m, OpKind::General).is_ok());
    }

    #[test]
    fn passive_lossy_flag_is_checked() {
        let b = ModeBasis::new(&["p"]).unwrap();
        let ok = vec![c(0.5, 0.0), czero(), czero(), c(0.0, 0.9)];
        assert!(ComponentOp::new(b.clone(), b.clone(), ok, OpKind::PassiveLossy).is_ok());
        let bad = vec![c(1.01, 0.0), czero(), czero(), c(0.2, 0.0)];
        assert!(ComponentOp::new(b.clone(), b, bad, OpKind::PassiveLossy).is_err());
    }

    #[test]
    fn max_singular_value_of_known_matrix() {
        // [[3, 0], [4, 5]] has singular values sqrt(45), sqrt(5).
        let b = ModeBasis::new(&["p"]).unwrap();
        let op = ComponentOp::new(
            b.clone(),
            b,
            vec![c(3.0, 0.0), czero(), c(4.0, 0.0), c(5.0, 0.0)],
            OpKind::General,
        )
        .unwrap();
        assert_abs_diff_eq!(op.max_singular_value(), 45f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn probability_edge_cases() {
        let b = ab();
        let s = ModeState::new(
            b.clone(),
            vec![c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(0.0, -0.5)],
        )
        .unwrap();
        assert_abs_diff_eq!(s.probability(b.modes()).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(s.probability(std::iter::empty()).unwrap(), 0.0);
        assert!(s.probability([&Mode::new("Z", Polarization::H)]).is_err());
        assert_abs_diff_eq!(s.spatial_probability("B").unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn global_phase_helper_is_explicit() {
        let b = ab();
        let s = ModeState::new(b, vec![c(0.6, 0.0), czero(), c(0.0, 0.8), czero()]).unwrap();
        let t = s.scaled(global_phase(1.2));
        assert_ne!(s, t);
        assert!(s.eq_up_to_global_phase(&t, 1e-12));
        let u = s.scaled(c(0.0, 1.0));
        let mut amps = u.amplitudes().to_vec();
        amps[2] = -amps[2];
        let w = ModeState::new(u.basis().clone(), amps).unwrap();
        assert!(!s.eq_up_to_global_phase(&w, 1e-6));
    }

    #[test]
    fn projector_and_direct_sum() {
        let pa = ComponentOp::<f64>::identity(ModeBasis::new(&["A"]).unwrap());
        let pb = ComponentOp::<f64>::identity(ModeBasis::new(&["B"]).unwrap());
        let sum = pa.direct_sum(&pb).unwrap();
        assert_eq!(sum.input_basis(), &ab());
        let proj = ComponentOp::<f64>::projector(&ab(), &["B"]).unwrap();
        assert_eq!(proj.kind(), OpKind::PassiveLossy);
        let s = ModeState::new(ab(), vec![c(0.6, 0.0), czero(), c(0.8, 0.0), czero()]).unwrap();
        let out = proj.apply(&s).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 0.64, epsilon = 1e-12);
    }
}
