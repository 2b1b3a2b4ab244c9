//! Outer nested `(θ, M)` MDS coset code.
//!
//! The generator `G` is `M x θ`; its top `M - R` rows (`G_K`) carry the
//! random keys and generate an MDS code on their own, the bottom `R` rows
//! (`G_S`) carry the secret. A codeword is `X = K·G_K + S·G_S`, so the
//! secret picks a coset of the key code.
//!
//! Symbol indices are 1-based throughout the public API.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Matrix, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("field too small: q = {q} but the code needs q >= {theta}")]
    FieldTooSmall { q: u64, theta: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient observations: {got} distinct symbols, need {need}")]
    InsufficientObservations { got: usize, need: usize },
    #[error("corrupt observation at symbol {0}")]
    CorruptObservation(usize),
    #[error("symbol index {index} out of range 1..={theta}")]
    IndexOutOfRange { index: usize, theta: usize },
    #[error("MDS property violated: columns {0:?} are dependent")]
    NotMds(Vec<usize>),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Sizes of the code for a `D(n, k)` system with `ℓ` compromised nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub theta: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub mu: usize,
}

impl CodeParams {
    pub fn new(n: usize, k: usize, ell: usize) -> Result<Self, CodeError> {
        if n < 2 || k == 0 || k > n {
            return Err(CodeError::ParameterViolation(format!(
                "need 1 <= k <= n and n >= 2, got n = {n}, k = {k}"
            )));
        }
        if ell >= k {
            return Err(CodeError::ParameterViolation(format!(
                "need ell < k, got ell = {ell}, k = {k}"
            )));
        }
        let theta = n * (n - 1) / 2;
        let m: usize = (1..=k).map(|i| n - i).sum();
        let r: usize = (ell + 1..=k).map(|i| n - i).sum();
        let mu: usize = (1..=ell).map(|i| n - i).sum();
        if r == 0 {
            return Err(CodeError::ParameterViolation(format!(
                "no secure capacity: R = 0 for n = {n}, k = {k}, ell = {ell}"
            )));
        }
        debug_assert_eq!(mu + r, m);
        debug_assert_eq!(m + (n - k) * (n - k).saturating_sub(1) / 2, theta);
        Ok(CodeParams {
            n,
            k,
            ell,
            theta,
            m,
            r,
            mu,
        })
    }

    pub fn key_len(&self) -> usize {
        self.m - self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `G[i][j] = a_j^i` over evaluation points `1..=θ`.
    Vandermonde,
    /// `G_K = [I | 1]`, `G_S = (0, .., 0, 1)`: one parity symbol
    /// `Z = S + ΣK_i`. Only defined when `θ = M` and `R = 1`.
    SystematicParity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretMessage(pub Vec<FieldElement>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyVector(pub Vec<FieldElement>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword(pub Vec<FieldElement>);

impl Codeword {
    /// Symbol at 1-based index.
    pub fn symbol(&self, index: usize) -> FieldElement {
        self.0[index - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedMdsCode {
    params: CodeParams,
    field: PrimeField,
    construction: Construction,
    generator: Matrix,
}

/// Builds the Vandermonde nested MDS code.
pub fn build_nested_mds(
    n: usize,
    k: usize,
    ell: usize,
    q: u64,
) -> Result<NestedMdsCode, CodeError> {
    NestedMdsCode::vandermonde(n, k, ell, q)
}

impl NestedMdsCode {
    pub fn vandermonde(n: usize, k: usize, ell: usize, q: u64) -> Result<Self, CodeError> {
        let params = CodeParams::new(n, k, ell)?;
        let field = PrimeField::new(q)?;
        if (q as usize) < params.theta {
            return Err(CodeError::FieldTooSmall {
                q,
                theta: params.theta,
            });
        }
        // points 1..=θ are distinct mod q whenever q >= θ
        let mut g = Matrix::zeros(field, params.m, params.theta);
        for j in 0..params.theta {
            let point = field.elem(j as u64 + 1);
            let mut p = field.one();
            for i in 0..params.m {
                g.set(i, j, p);
                p *= point;
            }
        }
        Ok(NestedMdsCode {
            params,
            field,
            construction: Construction::Vandermonde,
            generator: g,
        })
    }

    pub fn systematic_parity(n: usize, k: usize, ell: usize, q: u64) -> Result<Self, CodeError> {
        let params = CodeParams::new(n, k, ell)?;
        let field = PrimeField::new(q)?;
        if params.theta != params.m || params.r != 1 {
            return Err(CodeError::ParameterViolation(format!(
                "systematic parity code needs theta = M and R = 1, got theta = {}, M = {}, R = {}",
                params.theta, params.m, params.r
            )));
        }
        let keys = params.key_len();
        let mut g = Matrix::zeros(field, params.m, params.theta);
        for i in 0..keys {
            g.set(i, i, field.one());
            g.set(i, params.theta - 1, field.one());
        }
        g.set(params.m - 1, params.theta - 1, field.one());
        Ok(NestedMdsCode {
            params,
            field,
            construction: Construction::SystematicParity,
            generator: g,
        })
    }

    pub fn build(
        construction: Construction,
        n: usize,
        k: usize,
        ell: usize,
        q: u64,
    ) -> Result<Self, CodeError> {
        match construction {
            Construction::Vandermonde => Self::vandermonde(n, k, ell, q),
            Construction::SystematicParity => Self::systematic_parity(n, k, ell, q),
        }
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn key_rows(&self) -> Matrix {
        self.generator.select_rows(0, self.params.key_len())
    }

    pub fn secret_rows(&self) -> Matrix {
        self.generator
            .select_rows(self.params.key_len(), self.params.m)
    }

    pub fn encode(&self, s: &SecretMessage, keys: &KeyVector) -> Result<Codeword, CodeError> {
        if s.0.len() != self.params.r || keys.0.len() != self.params.key_len() {
            return Err(CodeError::DimensionMismatch(format!(
                "secret of length {} and {} keys, code wants R = {} and M - R = {}",
                s.0.len(),
                keys.0.len(),
                self.params.r,
                self.params.key_len()
            )));
        }
        if let Some(bad) = keys
            .0
            .iter()
            .chain(&s.0)
            .find(|e| e.modulus() != self.field.modulus())
        {
            return Err(FieldError::ModulusMismatch(self.field.modulus(), bad.modulus()).into());
        }
        // [K | S] · [G_K; G_S]
        let message: Vec<FieldElement> = keys.0.iter().chain(&s.0).copied().collect();
        Ok(Codeword(self.generator.left_mul_vec(&message)?))
    }

    /// Recovers `S` from at least `M` distinct observed coordinates.
    ///
    /// Duplicates with equal values are merged. Any observation beyond the
    /// `M` used for solving must agree with the re-encoded codeword.
    pub fn decode_collector(
        &self,
        observed: &[(usize, FieldElement)],
    ) -> Result<SecretMessage, CodeError> {
        let mut by_index: BTreeMap<usize, FieldElement> = BTreeMap::new();
        for &(idx, v) in observed {
            self.check_index(idx)?;
            if v.modulus() != self.field.modulus() {
                return Err(FieldError::ModulusMismatch(self.field.modulus(), v.modulus()).into());
            }
            match by_index.insert(idx, v) {
                Some(prev) if prev != v => return Err(CodeError::CorruptObservation(idx)),
                _ => {}
            }
        }
        let m = self.params.m;
        if by_index.len() < m {
            return Err(CodeError::InsufficientObservations {
                got: by_index.len(),
                need: m,
            });
        }
        let chosen: Vec<usize> = by_index.keys().take(m).map(|&i| i - 1).collect();
        let y: Vec<FieldElement> = by_index.values().take(m).copied().collect();
        // message · G[:, chosen] = y  <=>  G[:, chosen]^T · message^T = y^T
        let system = self.generator.select_columns(&chosen).transpose();
        let message = system.solve(&y)?;
        let codeword = self.generator.left_mul_vec(&message)?;
        for (&idx, &v) in by_index.iter().skip(m) {
            if codeword[idx - 1] != v {
                return Err(CodeError::CorruptObservation(idx));
            }
        }
        Ok(SecretMessage(message[self.params.key_len()..].to_vec()))
    }

    /// `rank(G|_I) - rank(G_K|_I)`: the mutual information between `S` and
    /// the observed coordinates `I`, in q-ary symbols. Zero means the
    /// observation is independent of the secret.
    pub fn leakage_rank(&self, indices: &BTreeSet<usize>) -> Result<usize, CodeError> {
        let cols = self.zero_based(indices)?;
        if cols.is_empty() {
            return Ok(0);
        }
        let full = self.generator.select_columns(&cols).rank();
        let keys = self.key_rows().select_columns(&cols).rank();
        Ok(full - keys)
    }

    /// Checks that every `M`-column submatrix of `G` and every
    /// `(M - R)`-column submatrix of `G_K` is invertible. Exhaustive when the
    /// number of subsets is at most `exhaustive_limit`, otherwise `samples`
    /// uniformly random subsets per level.
    pub fn verify_mds<R: Rng>(
        &self,
        exhaustive_limit: u64,
        samples: usize,
        rng: &mut R,
    ) -> Result<MdsReport, CodeError> {
        let theta = self.params.theta;
        let mut report = MdsReport::default();
        for (matrix, dim) in [
            (self.generator.clone(), self.params.m),
            (self.key_rows(), self.params.key_len()),
        ] {
            if dim == 0 {
                continue;
            }
            let check = |cols: &[usize]| -> Result<(), CodeError> {
                if matrix.select_columns(cols).rank() == dim {
                    Ok(())
                } else {
                    Err(CodeError::NotMds(cols.iter().map(|c| c + 1).collect()))
                }
            };
            if binomial(theta as u64, dim as u64) <= exhaustive_limit {
                for cols in (0..theta).combinations(dim) {
                    check(&cols)?;
                    report.subsets_checked += 1;
                }
            } else {
                report.sampled = true;
                for _ in 0..samples {
                    let mut cols = sample(rng, theta, dim).into_vec();
                    cols.sort_unstable();
                    check(&cols)?;
                    report.subsets_checked += 1;
                }
            }
        }
        Ok(report)
    }

    pub fn summary(&self) -> CodeSummary {
        CodeSummary {
            construction: self.construction,
            n: self.params.n,
            k: self.params.k,
            ell: self.params.ell,
            q: self.field.modulus(),
            theta: self.params.theta,
            m: self.params.m,
            r: self.params.r,
            mu: self.params.mu,
            generator: self.generator.to_values(),
        }
    }

    fn check_index(&self, idx: usize) -> Result<(), CodeError> {
        if idx == 0 || idx > self.params.theta {
            Err(CodeError::IndexOutOfRange {
                index: idx,
                theta: self.params.theta,
            })
        } else {
            Ok(())
        }
    }

    fn zero_based(&self, indices: &BTreeSet<usize>) -> Result<Vec<usize>, CodeError> {
        indices
            .iter()
            .map(|&i| self.check_index(i).map(|()| i - 1))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MdsReport {
    pub subsets_checked: u64,
    pub sampled: bool,
}

/// JSON form of a code.
#[derive(Debug, Clone, Serialize)]
pub struct CodeSummary {
    pub construction: Construction,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub q: u64,
    pub theta: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub mu: usize,
    /// Row-major `M x θ`.
    pub generator: Vec<u64>,
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u64::MAX,
        };
    }
    acc
}
