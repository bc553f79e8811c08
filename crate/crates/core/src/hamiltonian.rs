//! Counter-intuitive pulse schedule and the exchange Hamiltonian
//!
//! `H = Σ_i B J^z_i + [Ω_L J⁺_L J⁻_M + Ω_R Σ_j J⁺_M J⁻_{R_j} + h.c.]
//!      + α (J^z_L J^z_M + Σ_j J^z_M J^z_{R_j})`
//!
//! restricted to a [`Block`]. Every matrix element is real, so operators are
//! stored as real symmetric matrices.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DsapError, Result};
use crate::network::{Block, NetworkConfig, LEFT, MIDDLE};

/// Blocks up to this dimension are assembled densely.
pub const DENSE_LIMIT: usize = 256;

/// Largest product space `assemble_full` will build.
pub const FULL_SPACE_GUARD: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseAmplitudes {
    /// L–M coupling.
    pub left: f64,
    /// M–R_j coupling, shared by every leaf.
    pub right: f64,
}

impl PulseAmplitudes {
    pub const OFF: PulseAmplitudes = PulseAmplitudes {
        left: 0.0,
        right: 0.0,
    };

    pub fn scaled(self, a: f64) -> PulseAmplitudes {
        PulseAmplitudes {
            left: a * self.left,
            right: a * self.right,
        }
    }
}

fn check_time(config: &NetworkConfig, t: f64) -> Result<()> {
    if !(0.0..=config.t_max).contains(&t) {
        return Err(DsapError::TimeOutOfRange {
            t,
            t_max: config.t_max,
        });
    }
    Ok(())
}

/// `Ω_L = Ω_max sin(πt / 2t_max)`, `Ω_R = Ω_max cos(πt / 2t_max)`.
pub fn pulses(config: &NetworkConfig, t: f64) -> Result<PulseAmplitudes> {
    check_time(config, t)?;
    let (s, c) = (FRAC_PI_2 * t / config.t_max).sin_cos();
    Ok(PulseAmplitudes {
        left: config.omega_max * s,
        right: config.omega_max * c,
    })
}

/// Analytic time derivatives of [`pulses`].
pub fn pulse_rates(config: &NetworkConfig, t: f64) -> Result<PulseAmplitudes> {
    check_time(config, t)?;
    let k = FRAC_PI_2 / config.t_max;
    let (s, c) = (k * t).sin_cos();
    Ok(PulseAmplitudes {
        left: config.omega_max * k * c,
        right: -config.omega_max * k * s,
    })
}

/// Real symmetric sparse matrix in CSR form (both triangles stored).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseSymmetric {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseSymmetric {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }
}

/// Hermitian operator on a block. Hamiltonian entries are real, so storage is real.
#[derive(Clone, Debug, PartialEq)]
pub enum HermitianMatrix {
    Dense(DMatrix<f64>),
    Sparse(SparseSymmetric),
}

impl HermitianMatrix {
    pub fn dim(&self) -> usize {
        match self {
            HermitianMatrix::Dense(m) => m.nrows(),
            HermitianMatrix::Sparse(s) => s.dim,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self {
            HermitianMatrix::Dense(m) => m[(r, c)],
            HermitianMatrix::Sparse(s) => s.get(r, c),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            HermitianMatrix::Dense(m) => m.clone(),
            HermitianMatrix::Sparse(s) => {
                let mut m = DMatrix::zeros(s.dim, s.dim);
                for r in 0..s.dim {
                    for (c, v) in s.row(r) {
                        m[(r, c)] += v;
                    }
                }
                m
            }
        }
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        match self {
            HermitianMatrix::Dense(m) => {
                let mut out = Vec::new();
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        if m[(r, c)] != 0.0 {
                            out.push((r, c, m[(r, c)]));
                        }
                    }
                }
                out
            }
            HermitianMatrix::Sparse(s) => (0..s.dim)
                .flat_map(|r| s.row(r).map(move |(c, v)| (r, c, v)))
                .collect(),
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            HermitianMatrix::Dense(m) => {
                let re = m * v.map(|z| z.re);
                let im = m * v.map(|z| z.im);
                DVector::from_fn(v.len(), |i, _| Complex64::new(re[i], im[i]))
            }
            HermitianMatrix::Sparse(s) => DVector::from_fn(s.dim, |r, _| {
                s.row(r).map(|(c, val)| v[c] * val).sum()
            }),
        }
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.entries()
            .iter()
            .map(|&(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// `max |[H, D]_ij|` for a diagonal operator `D`.
    pub fn commutator_with_diagonal(&self, diag: &[f64]) -> f64 {
        self.entries()
            .iter()
            .map(|&(r, c, v)| (v * (diag[c] - diag[r])).abs())
            .fold(0.0, f64::max)
    }

    /// Matrix dump as `row,col,re,im` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "row,col,re,im")?;
        for (r, c, v) in self.entries() {
            writeln!(out, "{r},{c},{v:e},0")?;
        }
        Ok(())
    }
}

/// Time-independent pieces of `H(t)` on one block: `H = D + Ω_L(t) L + Ω_R(t) R`.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    block: Arc<Block>,
    diagonal: DVector<f64>,
    /// `(row, col, value)` of `J⁺_L J⁻_M`; the adjoint is implied.
    left: Vec<(usize, usize, f64)>,
    /// `(row, col, value)` of `Σ_j J⁺_M J⁻_{R_j}`; the adjoint is implied.
    right: Vec<(usize, usize, f64)>,
}

impl HamiltonianTerms {
    pub fn new(config: &NetworkConfig, block: Arc<Block>) -> Result<HamiltonianTerms> {
        if !block.matches(config) {
            return Err(DsapError::InvalidConfig(
                "block does not belong to this network".into(),
            ));
        }
        let spin = config.spin;
        let half = |p: i32| p as f64 / 2.0;
        let mut diagonal = DVector::zeros(block.len());
        let mut left = Vec::new();
        let mut right = Vec::new();

        for (k, state) in block.states().iter().enumerate() {
            let p = state.projections();
            let m_mid = half(p[MIDDLE]);
            let zeeman: f64 = p.iter().map(|&x| half(x)).sum();
            let zz: f64 = m_mid * p.iter().enumerate()
                .filter(|&(site, _)| site != MIDDLE)
                .map(|(_, &x)| half(x))
                .sum::<f64>();
            diagonal[k] = config.field * zeeman + config.alpha * zz;

            // J⁺_L J⁻_M
            if let (Some(up), Some(down)) =
                (spin.raising_element(p[LEFT]), spin.lowering_element(p[MIDDLE]))
            {
                let mut target = state.clone();
                target.0[LEFT] += 2;
                target.0[MIDDLE] -= 2;
                left.push((block.index_of(&target)?, k, up * down));
            }
            // J⁺_M J⁻_{R_j}
            if let Some(up) = spin.raising_element(p[MIDDLE]) {
                for (site, &two_m) in p.iter().enumerate().skip(2) {
                    if let Some(down) = spin.lowering_element(two_m) {
                        let mut target = state.clone();
                        target.0[MIDDLE] += 2;
                        target.0[site] -= 2;
                        right.push((block.index_of(&target)?, k, up * down));
                    }
                }
            }
        }
        Ok(HamiltonianTerms {
            block,
            diagonal,
            left,
            right,
        })
    }

    pub fn block(&self) -> &Arc<Block> {
        &self.block
    }

    pub fn dim(&self) -> usize {
        self.block.len()
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diagonal
    }

    fn triplets(&self, amps: PulseAmplitudes, with_diagonal: bool) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.dim() + 2 * (self.left.len() + self.right.len()));
        if with_diagonal {
            t.extend(self.diagonal.iter().enumerate().map(|(k, &d)| (k, k, d)));
        }
        for (list, w) in [(&self.left, amps.left), (&self.right, amps.right)] {
            if w == 0.0 {
                continue;
            }
            for &(r, c, v) in list {
                t.push((r, c, w * v));
                t.push((c, r, w * v));
            }
        }
        t
    }

    fn build(&self, amps: PulseAmplitudes, with_diagonal: bool) -> HermitianMatrix {
        let n = self.dim();
        if n <= DENSE_LIMIT {
            HermitianMatrix::Dense(self.dense(amps, with_diagonal))
        } else {
            HermitianMatrix::Sparse(SparseSymmetric::from_triplets(
                n,
                self.triplets(amps, with_diagonal),
            ))
        }
    }

    fn dense(&self, amps: PulseAmplitudes, with_diagonal: bool) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = if with_diagonal {
            DMatrix::from_diagonal(&self.diagonal)
        } else {
            DMatrix::zeros(n, n)
        };
        for (list, w) in [(&self.left, amps.left), (&self.right, amps.right)] {
            for &(r, c, v) in list {
                m[(r, c)] += w * v;
                m[(c, r)] += w * v;
            }
        }
        m
    }

    /// `H` at the given coupling strengths.
    pub fn at(&self, amps: PulseAmplitudes) -> HermitianMatrix {
        self.build(amps, true)
    }

    /// Always-dense `H`.
    pub fn dense_at(&self, amps: PulseAmplitudes) -> DMatrix<f64> {
        self.dense(amps, true)
    }

    /// `∂_t H`: only the exchange part depends on time.
    pub fn derivative(&self, rates: PulseAmplitudes) -> HermitianMatrix {
        self.build(rates, false)
    }

    /// `H ψ` without materializing `H`.
    pub fn apply(&self, amps: PulseAmplitudes, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::from_fn(psi.len(), |k, _| psi[k] * self.diagonal[k]);
        for (list, w) in [(&self.left, amps.left), (&self.right, amps.right)] {
            if w == 0.0 {
                continue;
            }
            for &(r, c, v) in list {
                out[r] += psi[c] * (w * v);
                out[c] += psi[r] * (w * v);
            }
        }
        out
    }

    /// Row-sum bound on `‖L + Lᵀ‖` and `‖R + Rᵀ‖`.
    pub fn coupling_norm_bounds(&self) -> (f64, f64) {
        let bound = |list: &[(usize, usize, f64)]| {
            let mut rows = vec![0.0; self.dim()];
            for &(r, c, v) in list {
                rows[r] += v.abs();
                rows[c] += v.abs();
            }
            rows.into_iter().fold(0.0, f64::max)
        };
        (bound(&self.left), bound(&self.right))
    }
}

/// `H` on `block` at the given coupling strengths.
pub fn assemble(
    config: &NetworkConfig,
    block: &Arc<Block>,
    amps: PulseAmplitudes,
) -> Result<HermitianMatrix> {
    Ok(HamiltonianTerms::new(config, block.clone())?.at(amps))
}

/// `H` on the full product space (no sector restriction).
pub fn assemble_full(config: &NetworkConfig, amps: PulseAmplitudes) -> Result<HermitianMatrix> {
    let block = Arc::new(Block::full_space(config, FULL_SPACE_GUARD)?);
    assemble(config, &block, amps)
}

/// Diagonal of `Σ_i J^z_i` in the block's basis.
pub fn total_jz(block: &Block) -> Vec<f64> {
    block
        .states()
        .iter()
        .map(|s| s.projections().iter().map(|&p| p as f64 / 2.0).sum())
        .collect()
}
