//! Exact statevector simulation over named qubit registers.
//!
//! States are indexed big-endian in register declaration order: the first
//! declared register is the most significant bit. All operations are pure and
//! return fresh values; nothing here mutates in place.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Complex = Complex64;

/// Norm / orthogonality tolerance used when validating constructed objects.
const ORTHO_TOL: f64 = 1e-10;
/// Probability below which a projective branch is treated as vanishing.
const BRANCH_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("amplitude list has length {got}, expected {expected} for {registers} registers")]
    LengthMismatch {
        expected: usize,
        got: usize,
        registers: usize,
    },
    #[error("state vector has zero norm")]
    ZeroVector,
    #[error("non-finite amplitude encountered")]
    NonFinite,
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("duplicate register `{0}` in target list")]
    DuplicateTarget(String),
    #[error("unitary acts on {unitary} registers but {targets} targets were given")]
    ArityMismatch { unitary: usize, targets: usize },
    #[error("matrix is not unitary (max |U†U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("vectors are not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("dimension mismatch: object has dim {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis labels must be distinct")]
    DuplicateLabel,
}

pub type Result<T> = std::result::Result<T, QsimError>;

/// Outcome attached to a basis vector: a small integer value plus a display
/// name (`ok`, `fail`, `yes`, `no`, or just the digit).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub value: u8,
    pub name: String,
}

impl OutcomeLabel {
    pub fn bit(value: u8) -> Self {
        OutcomeLabel {
            value,
            name: value.to_string(),
        }
    }

    pub fn named(value: u8, name: &str) -> Self {
        OutcomeLabel {
            value,
            name: name.to_string(),
        }
    }
}

impl std::fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Normalized complex amplitude vector over an ordered list of qubit registers.
#[derive(Clone, Debug)]
pub struct StateVector {
    registers: Vec<String>,
    amps: Vec<Complex>,
}

impl StateVector {
    /// Build a normalized state from raw amplitudes.
    pub fn new<S: Into<String>>(registers: Vec<S>, amps: Vec<Complex>) -> Result<Self> {
        let registers: Vec<String> = registers.into_iter().map(Into::into).collect();
        let expected = 1usize << registers.len();
        if amps.len() != expected {
            return Err(QsimError::LengthMismatch {
                expected,
                got: amps.len(),
                registers: registers.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QsimError::NonFinite);
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= BRANCH_EPS {
            return Err(QsimError::ZeroVector);
        }
        // Rescaling by 1 + O(ulp) would only churn the last bit; skip it so
        // that parse/print round-trips reproduce amplitudes exactly.
        let scale = if (norm_sq - 1.0).abs() < 1e-14 {
            1.0
        } else {
            norm_sq.sqrt().recip()
        };
        Ok(StateVector {
            registers,
            amps: amps.into_iter().map(|a| a * scale).collect(),
        })
    }

    /// Basis state |0…0⟩ over the given registers.
    pub fn zeros<S: Into<String>>(registers: Vec<S>) -> Self {
        let registers: Vec<String> = registers.into_iter().map(Into::into).collect();
        let mut amps = vec![Complex::new(0.0, 0.0); 1 << registers.len()];
        amps[0] = Complex::new(1.0, 0.0);
        StateVector { registers, amps }
    }

    /// Real amplitude convenience constructor.
    pub fn from_reals<S: Into<String>>(registers: Vec<S>, amps: &[f64]) -> Result<Self> {
        Self::new(
            registers,
            amps.iter().map(|&re| Complex::new(re, 0.0)).collect(),
        )
    }

    pub fn registers(&self) -> &[String] {
        &self.registers
    }

    pub fn amps(&self) -> &[Complex] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tensor product; register names must not collide.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut registers = self.registers.clone();
        registers.extend(other.registers.iter().cloned());
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector { registers, amps }
    }

    /// Bit shift position of a register (big-endian: first register is MSB).
    fn bit_shift(&self, register: &str) -> Result<usize> {
        let pos = self
            .registers
            .iter()
            .position(|r| r == register)
            .ok_or_else(|| QsimError::UnknownRegister(register.to_string()))?;
        Ok(self.registers.len() - 1 - pos)
    }

    fn target_shifts(&self, targets: &[&str]) -> Result<Vec<usize>> {
        let mut shifts = Vec::with_capacity(targets.len());
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(QsimError::DuplicateTarget(t.to_string()));
            }
            shifts.push(self.bit_shift(t)?);
        }
        Ok(shifts)
    }

    /// Apply a unitary to the listed target registers (first target is the
    /// most significant sub-index bit), leaving all other registers untouched.
    pub fn apply_unitary(&self, unitary: &Unitary, targets: &[&str]) -> Result<StateVector> {
        let k = targets.len();
        if unitary.arity() != k {
            return Err(QsimError::ArityMismatch {
                unitary: unitary.arity(),
                targets: k,
            });
        }
        let shifts = self.target_shifts(targets)?;
        let sub_dim = 1usize << k;
        let mut out = vec![Complex::new(0.0, 0.0); self.dim()];
        let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        for base in 0..self.dim() {
            if base & target_mask != 0 {
                continue;
            }
            let group: Vec<usize> = (0..sub_dim).map(|s| base | spread(s, &shifts)).collect();
            for (row, slot) in group.iter().enumerate() {
                let mut acc = Complex::new(0.0, 0.0);
                for (col, src) in group.iter().enumerate() {
                    acc += unitary.entry(row, col) * self.amps[*src];
                }
                out[*slot] = acc;
            }
        }
        Ok(StateVector {
            registers: self.registers.clone(),
            amps: out,
        })
    }

    /// Probability of each basis outcome for a projective measurement of the
    /// target registers. The returned pairs follow basis vector order and sum
    /// to one for any complete basis.
    pub fn measure_distribution(
        &self,
        basis: &OrthonormalBasis,
        targets: &[&str],
    ) -> Result<Vec<(OutcomeLabel, f64)>> {
        let sub_dim = 1usize << targets.len();
        if basis.dim() != sub_dim {
            return Err(QsimError::DimensionMismatch {
                expected: sub_dim,
                got: basis.dim(),
            });
        }
        basis
            .vectors()
            .iter()
            .zip(basis.labels())
            .map(|(v, label)| Ok((label.clone(), self.projection_probability(v, targets)?)))
            .collect()
    }

    /// Probability of projecting the target registers onto `vector`, plus the
    /// normalized post-measurement state when the branch survives.
    pub fn project(
        &self,
        vector: &[Complex],
        targets: &[&str],
    ) -> Result<(f64, Option<StateVector>)> {
        let shifts = self.target_shifts(targets)?;
        let sub_dim = 1usize << targets.len();
        if vector.len() != sub_dim {
            return Err(QsimError::DimensionMismatch {
                expected: sub_dim,
                got: vector.len(),
            });
        }
        let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let mut probability = 0.0;
        let mut post = vec![Complex::new(0.0, 0.0); self.dim()];
        for base in 0..self.dim() {
            if base & target_mask != 0 {
                continue;
            }
            let mut coeff = Complex::new(0.0, 0.0);
            for s in 0..sub_dim {
                coeff += vector[s].conj() * self.amps[base | spread(s, &shifts)];
            }
            probability += coeff.norm_sqr();
            for s in 0..sub_dim {
                post[base | spread(s, &shifts)] = coeff * vector[s];
            }
        }
        if probability <= BRANCH_EPS {
            return Ok((probability, None));
        }
        let scale = probability.sqrt().recip();
        for a in &mut post {
            *a *= scale;
        }
        Ok((
            probability,
            Some(StateVector {
                registers: self.registers.clone(),
                amps: post,
            }),
        ))
    }

    /// Apply the rank-one projector |v⟩⟨v| on the targets without
    /// renormalising: the squared norm of the result is the branch
    /// probability. Used to build exact joint distributions.
    pub(crate) fn project_raw(&self, vector: &[Complex], targets: &[&str]) -> Result<StateVector> {
        let shifts = self.target_shifts(targets)?;
        let sub_dim = 1usize << targets.len();
        if vector.len() != sub_dim {
            return Err(QsimError::DimensionMismatch {
                expected: sub_dim,
                got: vector.len(),
            });
        }
        let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let mut post = vec![Complex::new(0.0, 0.0); self.dim()];
        for base in 0..self.dim() {
            if base & target_mask != 0 {
                continue;
            }
            let mut coeff = Complex::new(0.0, 0.0);
            for s in 0..sub_dim {
                coeff += vector[s].conj() * self.amps[base | spread(s, &shifts)];
            }
            for s in 0..sub_dim {
                post[base | spread(s, &shifts)] = coeff * vector[s];
            }
        }
        Ok(StateVector {
            registers: self.registers.clone(),
            amps: post,
        })
    }

    fn projection_probability(&self, vector: &[Complex], targets: &[&str]) -> Result<f64> {
        let shifts = self.target_shifts(targets)?;
        let sub_dim = 1usize << targets.len();
        if vector.len() != sub_dim {
            return Err(QsimError::DimensionMismatch {
                expected: sub_dim,
                got: vector.len(),
            });
        }
        let target_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
        let mut probability = 0.0;
        for base in 0..self.dim() {
            if base & target_mask != 0 {
                continue;
            }
            let mut coeff = Complex::new(0.0, 0.0);
            for s in 0..sub_dim {
                coeff += vector[s].conj() * self.amps[base | spread(s, &shifts)];
            }
            probability += coeff.norm_sqr();
        }
        Ok(probability)
    }

    /// Largest per-amplitude deviation from another state over the same
    /// registers.
    pub fn max_amp_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Scatter the dense sub-index `s` onto the bit positions in `shifts`
/// (first shift receives the most significant sub-bit).
fn spread(s: usize, shifts: &[usize]) -> usize {
    let k = shifts.len();
    shifts
        .iter()
        .enumerate()
        .filter(|(j, _)| s >> (k - 1 - j) & 1 == 1)
        .map(|(_, &shift)| 1usize << shift)
        .sum()
}

/// Square complex matrix validated to be unitary on construction.
#[derive(Clone, Debug)]
pub struct Unitary {
    arity: usize,
    entries: Vec<Complex>,
}

impl Unitary {
    /// Build from a row-major entry list of length `4^arity`; rejects matrices
    /// with `U†U` further than 1e-10 entrywise from the identity.
    pub fn new(arity: usize, entries: Vec<Complex>) -> Result<Self> {
        let dim = 1usize << arity;
        if entries.len() != dim * dim {
            return Err(QsimError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QsimError::NonFinite);
        }
        let u = Unitary { arity, entries };
        let deviation = u.unitarity_deviation();
        if deviation > ORTHO_TOL {
            return Err(QsimError::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.dim() + col]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Unitary {
        let dim = self.dim();
        let mut entries = vec![Complex::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[c * dim + r] = self.entry(r, c).conj();
            }
        }
        Unitary {
            arity: self.arity,
            entries,
        }
    }

    /// Max entrywise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex::new(0.0, 0.0);
                for k in 0..dim {
                    acc += self.entry(k, r).conj() * self.entry(k, c);
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc - Complex::new(expect, 0.0)).norm());
            }
        }
        worst
    }
}

/// Complete orthonormal basis with one outcome label per vector.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    vectors: Vec<Vec<Complex>>,
    labels: Vec<OutcomeLabel>,
}

impl OrthonormalBasis {
    pub fn new(vectors: Vec<Vec<Complex>>, labels: Vec<OutcomeLabel>) -> Result<Self> {
        let dim = vectors.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(QsimError::DimensionMismatch {
                expected: dim.max(2).next_power_of_two(),
                got: dim,
            });
        }
        if labels.len() != dim {
            return Err(QsimError::DimensionMismatch {
                expected: dim,
                got: labels.len(),
            });
        }
        if vectors
            .iter()
            .flatten()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(QsimError::NonFinite);
        }
        for i in 1..labels.len() {
            if labels[..i].iter().any(|l| l.value == labels[i].value) {
                return Err(QsimError::DuplicateLabel);
            }
        }
        let deviation = orthonormality_deviation(&vectors, dim)?;
        if deviation > ORTHO_TOL {
            return Err(QsimError::NotOrthonormal { deviation });
        }
        Ok(OrthonormalBasis { vectors, labels })
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[OutcomeLabel] {
        &self.labels
    }

    pub fn vector_for(&self, value: u8) -> Option<&[Complex]> {
        self.labels
            .iter()
            .position(|l| l.value == value)
            .map(|i| self.vectors[i].as_slice())
    }

    pub fn label_for(&self, value: u8) -> Option<&OutcomeLabel> {
        self.labels.iter().find(|l| l.value == value)
    }

    /// Computational (Z) basis: |0⟩ ↦ 0, |1⟩ ↦ 1.
    pub fn z() -> Self {
        OrthonormalBasis {
            vectors: vec![
                vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
                vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
            ],
            labels: vec![OutcomeLabel::bit(0), OutcomeLabel::bit(1)],
        }
    }

    /// X basis: |+⟩ ↦ 0, |−⟩ ↦ 1.
    pub fn x() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        OrthonormalBasis {
            vectors: vec![
                vec![Complex::new(h, 0.0), Complex::new(h, 0.0)],
                vec![Complex::new(h, 0.0), Complex::new(-h, 0.0)],
            ],
            labels: vec![OutcomeLabel::bit(0), OutcomeLabel::bit(1)],
        }
    }

    /// Y basis: |+i⟩ ↦ 0, |−i⟩ ↦ 1.
    pub fn y() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        OrthonormalBasis {
            vectors: vec![
                vec![Complex::new(h, 0.0), Complex::new(0.0, h)],
                vec![Complex::new(h, 0.0), Complex::new(0.0, -h)],
            ],
            labels: vec![OutcomeLabel::bit(0), OutcomeLabel::bit(1)],
        }
    }

    /// Single-qubit basis at angle `theta` from Z in the X–Z plane:
    /// the +1 eigenvector of sin θ·X + cos θ·Z maps to outcome 0.
    pub fn xz_plane(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        OrthonormalBasis {
            vectors: vec![
                vec![Complex::new(c, 0.0), Complex::new(s, 0.0)],
                vec![Complex::new(-s, 0.0), Complex::new(c, 0.0)],
            ],
            labels: vec![OutcomeLabel::bit(0), OutcomeLabel::bit(1)],
        }
    }

    /// Same vectors in reverse order, labels kept as 0,1 in listed order, so
    /// the second eigenvector now carries outcome 0.
    pub fn swapped(&self) -> Self {
        OrthonormalBasis {
            vectors: self.vectors.iter().rev().cloned().collect(),
            labels: self.labels.clone(),
        }
    }

    /// Rename outcome labels in vector order, keeping values.
    pub fn with_names(mut self, names: &[&str]) -> Self {
        for (label, name) in self.labels.iter_mut().zip(names) {
            label.name = (*name).to_string();
        }
        self
    }

    /// Tensor product basis; label values combine as `a * other.dim + b`.
    pub fn product(&self, other: &OrthonormalBasis) -> Self {
        let mut vectors = Vec::with_capacity(self.dim() * other.dim());
        let mut labels = Vec::with_capacity(self.dim() * other.dim());
        for (va, la) in self.vectors.iter().zip(&self.labels) {
            for (vb, lb) in other.vectors.iter().zip(&other.labels) {
                let mut v = Vec::with_capacity(va.len() * vb.len());
                for a in va {
                    for b in vb {
                        v.push(a * b);
                    }
                }
                vectors.push(v);
                labels.push(OutcomeLabel::named(
                    la.value * other.dim() as u8 + lb.value,
                    &format!("{},{}", la.name, lb.name),
                ));
            }
        }
        OrthonormalBasis { vectors, labels }
    }
}

fn orthonormality_deviation(vectors: &[Vec<Complex>], dim: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(QsimError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        for (j, w) in vectors.iter().enumerate() {
            let inner: Complex = v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner - Complex::new(expect, 0.0)).norm());
        }
    }
    Ok(worst)
}

/// Unitary model of a friend measuring in `basis` inside a sealed lab:
/// `U(|b_k⟩|m⟩) = |b_k⟩|m ⊕ k⟩` over the (system, memory) register pair.
/// The action on memory-|1⟩ inputs is the XOR extension; memories start in
/// |0⟩ so any unitary extension yields the same protocol statistics.
pub fn friend_unitary(basis: &OrthonormalBasis) -> Result<Unitary> {
    if basis.dim() != 2 {
        return Err(QsimError::DimensionMismatch {
            expected: 2,
            got: basis.dim(),
        });
    }
    let mut entries = vec![Complex::new(0.0, 0.0); 16];
    for (k, b_k) in basis.vectors().iter().enumerate() {
        for m in 0..2usize {
            // column |b_k⟩|m⟩ maps to |b_k⟩|m ⊕ k⟩
            for s_in in 0..2usize {
                for s_out in 0..2usize {
                    let row = (s_out << 1) | (m ^ k);
                    let col = (s_in << 1) | m;
                    entries[row * 4 + col] += b_k[s_out] * b_k[s_in].conj();
                }
            }
        }
    }
    Unitary::new(2, entries)
}

/// Extend pairwise-orthonormal vectors to a full basis by Gram–Schmidt over
/// canonical basis vectors in index order; added vectors receive the next
/// unused integer outcomes.
pub fn complete_basis(
    vectors: Vec<Vec<Complex>>,
    labels: Vec<OutcomeLabel>,
) -> Result<OrthonormalBasis> {
    if vectors.is_empty() {
        return Err(QsimError::ZeroVector);
    }
    let dim = vectors[0].len();
    if !dim.is_power_of_two() || labels.len() != vectors.len() {
        return Err(QsimError::DimensionMismatch {
            expected: dim,
            got: vectors.len(),
        });
    }
    let deviation = orthonormality_deviation(&vectors, dim)?;
    if deviation > ORTHO_TOL {
        return Err(QsimError::NotOrthonormal { deviation });
    }
    let mut out_vectors = vectors;
    let mut out_labels = labels;
    let mut next_value = out_labels.iter().map(|l| l.value + 1).max().unwrap_or(0);
    for j in 0..dim {
        if out_vectors.len() == dim {
            break;
        }
        let mut residual = vec![Complex::new(0.0, 0.0); dim];
        residual[j] = Complex::new(1.0, 0.0);
        for v in &out_vectors {
            let overlap: Complex = v.iter().zip(&residual).map(|(a, b)| a.conj() * b).sum();
            for (r, a) in residual.iter_mut().zip(v.iter()) {
                *r -= overlap * a;
            }
        }
        let norm = residual.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-7 {
            for r in &mut residual {
                *r /= norm;
            }
            out_vectors.push(residual);
            out_labels.push(OutcomeLabel::bit(next_value));
            next_value += 1;
        }
    }
    OrthonormalBasis::new(out_vectors, out_labels)
}
