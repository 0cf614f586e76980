use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HamiltonianVector, Pauli, PauliString};
use crate::error::{CartanError, Result};
use crate::matrix::{expm, ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    SingleX,
    TwoLocal,
    Ai,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::SingleX => "single_x",
            SplitKind::TwoLocal => "two_local",
            SplitKind::Ai => "ai",
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitKind {
    type Err = CartanError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "single_x" => Ok(SplitKind::SingleX),
            "two_local" => Ok(SplitKind::TwoLocal),
            "ai" => Ok(SplitKind::Ai),
            _ => Err(CartanError::Parse(format!("unknown split kind \"{s}\" (expected single_x, two_local or ai)"))),
        }
    }
}

/// Which subspace of the split a projection targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    L,
    P,
    Z,
}

/// A decomposition `su(2ⁿ) = 𝔩 ⊕ 𝔭` by Pauli strings, with a commuting
/// subspace `𝔷 ⊆ 𝔭` and the adapted frame `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanSplit {
    n: usize,
    name: String,
    l: Vec<PauliString>,
    p: Vec<PauliString>,
    z: Vec<PauliString>,
    q: ComplexMatrix,
    in_l: Vec<bool>,
    in_p: Vec<bool>,
    in_z: Vec<bool>,
}

fn membership(n: usize, strings: &[PauliString]) -> Vec<bool> {
    let mut mask = vec![false; (1usize << (2 * n)) - 1];
    for s in strings {
        if let Some(i) = s.basis_index() {
            mask[i] = true;
        }
    }
    mask
}

impl CartanSplit {
    /// Assemble a split from explicit string lists.
    ///
    /// Only structural problems are rejected here (identity strings, wrong
    /// widths, duplicates, a non-unitary `Q`). Whether the lists actually
    /// form a Cartan pair is left to [`verify_cartan_split`].
    pub fn new(
        n: usize,
        name: impl Into<String>,
        l: Vec<PauliString>,
        p: Vec<PauliString>,
        z: Vec<PauliString>,
        q: Option<ComplexMatrix>,
    ) -> Result<Self> {
        if n == 0 || n > 4 {
            return Err(CartanError::Unsupported(format!("splits are supported for 1 ≤ n ≤ 4, got {n}")));
        }
        for (label, list) in [("l", &l), ("p", &p), ("z", &z)] {
            let mut seen = HashSet::new();
            for s in list.iter() {
                if s.qubits() != n {
                    return Err(CartanError::DimensionMismatch { left: n, right: s.qubits() });
                }
                if s.is_identity() {
                    return Err(CartanError::Precondition(format!("identity string in {label}")));
                }
                if !seen.insert(s.clone()) {
                    return Err(CartanError::Precondition(format!("duplicate string {s} in {label}")));
                }
            }
        }
        let dim = 1usize << n;
        let q = q.unwrap_or_else(|| ComplexMatrix::identity(dim));
        if q.dim() != dim {
            return Err(CartanError::DimensionMismatch { left: dim, right: q.dim() });
        }
        if !q.is_unitary(1e-10) {
            return Err(CartanError::Precondition(format!(
                "adapted basis Q is not unitary (residual {:e})",
                q.unitarity_residual()
            )));
        }
        Ok(Self {
            in_l: membership(n, &l),
            in_p: membership(n, &p),
            in_z: membership(n, &z),
            n,
            name: name.into(),
            l,
            p,
            z,
            q,
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn l_basis(&self) -> &[PauliString] {
        &self.l
    }

    pub fn p_basis(&self) -> &[PauliString] {
        &self.p
    }

    pub fn z_basis(&self) -> &[PauliString] {
        &self.z
    }

    pub fn adapted_basis(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn basis(&self, which: Subspace) -> &[PauliString] {
        match which {
            Subspace::L => &self.l,
            Subspace::P => &self.p,
            Subspace::Z => &self.z,
        }
    }

    pub fn contains(&self, which: Subspace, s: &PauliString) -> bool {
        let mask = self.mask(which);
        s.basis_index().is_some_and(|i| mask[i])
    }

    fn mask(&self, which: Subspace) -> &[bool] {
        match which {
            Subspace::L => &self.in_l,
            Subspace::P => &self.in_p,
            Subspace::Z => &self.in_z,
        }
    }

    /// Coefficient-wise restriction of `h` to the chosen basis.
    pub fn project(&self, h: &HamiltonianVector, which: Subspace) -> Result<HamiltonianVector> {
        if h.qubits() != self.n {
            return Err(CartanError::DimensionMismatch { left: self.n, right: h.qubits() });
        }
        let mask = self.mask(which);
        let mut out = h.clone();
        for (c, &keep) in out.coeffs_mut().iter_mut().zip(mask) {
            if !keep {
                *c = 0.0;
            }
        }
        Ok(out)
    }

    /// Largest coefficient of `h` outside the chosen subspace.
    pub fn distance_outside(&self, h: &HamiltonianVector, which: Subspace) -> f64 {
        let mask = self.mask(which);
        h.coeffs()
            .iter()
            .zip(mask)
            .filter(|(_, &keep)| !keep)
            .fold(0.0f64, |m, (c, _)| m.max(c.abs()))
    }

    /// Random element of the chosen subspace with coefficients uniform in
    /// `[-scale, scale]`.
    pub fn random_element(&self, which: Subspace, scale: f64, rng: &mut impl Rng) -> HamiltonianVector {
        let mut h = HamiltonianVector::zeros(self.n);
        for s in self.basis(which) {
            h.set(s, rng.gen_range(-scale..=scale));
        }
        h
    }

    /// Rewrite a dense matrix into the adapted frame: `Q†·U·Q`.
    pub fn to_adapted(&self, u: &ComplexMatrix) -> ComplexMatrix {
        &(&self.q.adjoint() * u) * &self.q
    }

    /// Inverse of [`CartanSplit::to_adapted`].
    pub fn from_adapted(&self, v: &ComplexMatrix) -> ComplexMatrix {
        &(&self.q * v) * &self.q.adjoint()
    }
}

fn strings_where(n: usize, pred: impl Fn(&PauliString) -> bool) -> Vec<PauliString> {
    PauliString::all_non_identity(n).into_iter().filter(|s| pred(s)).collect()
}

/// Two-qubit magic basis; its columns are Bell-type states, so conjugation
/// sends local unitaries to SO(4) and `XX, YY, ZZ` to diagonal matrices.
pub fn magic_basis() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    let (o, r, i) = (C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(0.0, s));
    ComplexMatrix::from_vec(
        4,
        vec![
            r, o, o, i, //
            o, i, r, o, //
            o, i, -r, o, //
            r, o, o, -i,
        ],
    )
    .expect("4x4 literal")
}

/// `diag(e^{−iπ/4}, e^{iπ/4})`, which conjugates X to −Y.
pub fn single_x_frame() -> ComplexMatrix {
    ComplexMatrix::from_phases(&[-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4])
}

pub fn builtin_split(n: usize, kind: SplitKind) -> Result<CartanSplit> {
    let unsupported = || CartanError::Unsupported(format!("split {kind} is not available for n = {n}"));
    match kind {
        SplitKind::SingleX => {
            if n != 1 {
                return Err(unsupported());
            }
            let ps = |s: &str| s.parse::<PauliString>().expect("literal");
            CartanSplit::new(1, kind.name(), vec![ps("X")], vec![ps("Y"), ps("Z")], vec![ps("Z")], Some(single_x_frame()))
        }
        SplitKind::TwoLocal => {
            if n != 2 {
                return Err(unsupported());
            }
            let l = strings_where(2, |s| s.weight() == 1);
            let p = strings_where(2, |s| s.weight() == 2);
            let z = ["XX", "YY", "ZZ"].iter().map(|s| s.parse().expect("literal")).collect();
            CartanSplit::new(2, kind.name(), l, p, z, Some(magic_basis()))
        }
        SplitKind::Ai => {
            if !(1..=4).contains(&n) {
                return Err(unsupported());
            }
            let l = strings_where(n, |s| s.count(Pauli::Y) % 2 == 1);
            let p = strings_where(n, |s| s.count(Pauli::Y) % 2 == 0);
            let z = strings_where(n, PauliString::is_diagonal);
            CartanSplit::new(n, kind.name(), l, p, z, None)
        }
    }
}

/// One failed commutation relation: `[left, right] ∝ result`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitViolation {
    pub relation: String,
    pub left: String,
    pub right: String,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub ll_ok: bool,
    pub pl_ok: bool,
    pub pp_ok: bool,
    pub orthogonal_ok: bool,
    /// Commutators `[𝔭, 𝔩]` reach every `𝔭` string.
    pub spanning_ok: bool,
    /// `𝔷 ⊆ 𝔭` and its elements commute pairwise.
    pub z_ok: bool,
    pub violations: Vec<SplitViolation>,
}

impl SplitReport {
    pub fn is_valid(&self) -> bool {
        self.ll_ok && self.pl_ok && self.pp_ok && self.orthogonal_ok && self.z_ok
    }
}

/// Check `[𝔩,𝔩] ⊆ 𝔩`, `[𝔭,𝔩] ⊆ 𝔭`, `[𝔭,𝔭] ⊆ 𝔩` on every basis pair.
///
/// A Pauli commutator is either zero or `±2i` times a single string, so a
/// pair violates a relation when that string's coefficient (magnitude 2)
/// lands outside the target subspace by more than `tol`.
pub fn verify_cartan_split(split: &CartanSplit, tol: f64) -> SplitReport {
    let mut violations = Vec::new();
    let mut check = |relation: &str, a: &[PauliString], b: &[PauliString], target: Subspace, symmetric: bool| {
        let mut ok = true;
        for (i, x) in a.iter().enumerate() {
            let start = if symmetric { i + 1 } else { 0 };
            for y in &b[start..] {
                if let Some((coef, r)) = x.commutator(y) {
                    if coef.norm() > tol && !split.contains(target, &r) {
                        ok = false;
                        violations.push(SplitViolation {
                            relation: relation.into(),
                            left: x.to_string(),
                            right: y.to_string(),
                            result: r.to_string(),
                        });
                    }
                }
            }
        }
        ok
    };
    let ll_ok = check("[l,l] in l", &split.l, &split.l, Subspace::L, true);
    let pl_ok = check("[p,l] in p", &split.p, &split.l, Subspace::P, false);
    let pp_ok = check("[p,p] in l", &split.p, &split.p, Subspace::L, true);

    let total = (1usize << (2 * split.n)) - 1;
    let overlap = split.in_l.iter().zip(&split.in_p).filter(|(a, b)| **a && **b).count();
    let orthogonal_ok = overlap == 0 && split.l.len() + split.p.len() == total;
    if !orthogonal_ok {
        violations.push(SplitViolation {
            relation: "l and p partition the non-identity strings".into(),
            left: format!("|l| = {}", split.l.len()),
            right: format!("|p| = {}", split.p.len()),
            result: format!("{overlap} shared, {total} expected in total"),
        });
    }

    let mut reached = vec![false; total];
    for x in &split.p {
        for y in &split.l {
            if let Some((_, r)) = x.commutator(y) {
                reached[r.basis_index().expect("commutator is never the identity")] = true;
            }
        }
    }
    let spanning_ok = split.p.iter().all(|s| reached[s.basis_index().expect("non-identity")]);

    let mut z_ok = true;
    for (i, a) in split.z.iter().enumerate() {
        if !split.contains(Subspace::P, a) {
            z_ok = false;
            violations.push(SplitViolation {
                relation: "z in p".into(),
                left: a.to_string(),
                right: String::new(),
                result: String::new(),
            });
        }
        for b in &split.z[i + 1..] {
            if let Some((_, r)) = a.commutator(b) {
                z_ok = false;
                violations.push(SplitViolation {
                    relation: "[z,z] = 0".into(),
                    left: a.to_string(),
                    right: b.to_string(),
                    result: r.to_string(),
                });
            }
        }
    }

    SplitReport { ll_ok, pl_ok, pp_ok, orthogonal_ok, spanning_ok, z_ok, violations }
}

/// Rank of a real matrix by Gaussian elimination with partial pivoting.
fn real_rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[pivot][c].abs() <= tol {
            continue;
        }
        rows.swap(rank, pivot);
        let head = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[c] / head[c];
            if f != 0.0 {
                for (x, h) in row.iter_mut().zip(&head).skip(c) {
                    *x -= f * h;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// True iff `𝔷` is abelian and its commutant inside `𝔭` is exactly `span(𝔷)`.
///
/// The commutant is the kernel of `v ↦ ([z₁,v], …, [z_k,v])` on `𝔭`; its
/// dimension is `|𝔭| − rank`, which must equal `|𝔷|`.
pub fn verify_maximal_abelian(split: &CartanSplit) -> bool {
    let z = &split.z;
    if z.iter().any(|a| !split.contains(Subspace::P, a)) {
        return false;
    }
    if z.iter().enumerate().any(|(i, a)| z[i + 1..].iter().any(|b| !a.commutes_with(b))) {
        return false;
    }
    let total = (1usize << (2 * split.n)) - 1;
    // Row per (z_i, output string), column per p basis element. The
    // commutator coefficient is ±2i; its imaginary part carries the sign.
    let mut rows = vec![vec![0.0; split.p.len()]; z.len() * total];
    for (j, v) in split.p.iter().enumerate() {
        for (i, a) in z.iter().enumerate() {
            if let Some((coef, r)) = a.commutator(v) {
                rows[i * total + r.basis_index().expect("non-identity")][j] = coef.im;
            }
        }
    }
    rows.retain(|r| r.iter().any(|&x| x != 0.0));
    let rank = real_rank(rows, 1e-12);
    split.p.len() - rank == z.len()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedBasisReport {
    pub samples: usize,
    /// Largest `|Im|` entry of `Q†·e^{iK}·Q` over samples.
    pub max_imaginary: f64,
    /// Largest deviation of `Q†·e^{iK}·Q` from orthogonality.
    pub max_orthogonality_residual: f64,
    /// Largest off-diagonal entry of `Q†·Z·Q` over samples.
    pub max_off_diagonal: f64,
    pub passed: bool,
    pub violations: Vec<String>,
}

/// Sample random `K ∈ 𝔩` and `Z ∈ 𝔷` and check the adapted-frame properties:
/// `Q†e^{iK}Q` real orthogonal within 1e−8, `Q†ZQ` diagonal within 1e−10.
pub fn adapted_basis_properties(split: &CartanSplit, samples: usize, seed: u64) -> Result<AdaptedBasisReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AdaptedBasisReport {
        samples,
        max_imaginary: 0.0,
        max_orthogonality_residual: 0.0,
        max_off_diagonal: 0.0,
        passed: true,
        violations: Vec::new(),
    };
    for k in 0..samples {
        let gen = split.random_element(Subspace::L, 1.0, &mut rng);
        let u = expm(&gen.dense().scale(C64::new(0.0, 1.0)))?;
        let v = split.to_adapted(&u);
        let imag = v.imag_part().max_abs();
        let real = v.real_part();
        let ortho = (&(&real.transpose() * &real) - &ComplexMatrix::identity(split.dim())).max_abs();
        report.max_imaginary = report.max_imaginary.max(imag);
        report.max_orthogonality_residual = report.max_orthogonality_residual.max(ortho);
        if imag > 1e-8 || ortho > 1e-8 {
            report.violations.push(format!("sample {k}: exp(iK) not real orthogonal (imag {imag:e}, ortho {ortho:e})"));
        }

        let zgen = split.random_element(Subspace::Z, 1.0, &mut rng);
        let off = split.to_adapted(&zgen.dense()).max_off_diagonal();
        report.max_off_diagonal = report.max_off_diagonal.max(off);
        if off > 1e-10 {
            report.violations.push(format!("sample {k}: Z not diagonal in adapted frame (off-diagonal {off:e})"));
        }
    }
    report.passed = report.violations.is_empty();
    Ok(report)
}

#[derive(Serialize, Deserialize)]
struct SplitJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    l: Vec<PauliString>,
    p: Vec<PauliString>,
    z: Vec<PauliString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<ComplexMatrix>,
}

impl Serialize for CartanSplit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SplitJson {
            name: Some(self.name.clone()),
            l: self.l.clone(),
            p: self.p.clone(),
            z: self.z.clone(),
            q: Some(self.q.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CartanSplit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = SplitJson::deserialize(d)?;
        let n = raw
            .l
            .first()
            .or(raw.p.first())
            .map(PauliString::qubits)
            .ok_or_else(|| D::Error::custom("split needs at least one string in l or p"))?;
        CartanSplit::new(n, raw.name.unwrap_or_else(|| "custom".into()), raw.l, raw.p, raw.z, raw.q)
            .map_err(D::Error::custom)
    }
}
