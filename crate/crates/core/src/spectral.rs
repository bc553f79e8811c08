//! Instantaneous eigenanalysis of `H(t)` and dark-state continuation.
//!
//! The dark eigenvalue is generally degenerate (leaf-antisymmetric and
//! leaf-only dark vectors share it), so the tracked state is continued by
//! projecting the previous vector onto the eigenspace it overlaps most and
//! renormalizing. This is a discrete parallel transport inside the dark
//! subspace.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{DsapError, Result};
use crate::hamiltonian::{pulse_rates, pulses, HamiltonianTerms, HermitianMatrix};
use crate::network::{NetworkConfig, StateVector};

/// Eigenvalues closer than this (energy units of `B`) are one eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Pairs closer than this count as degenerate in [`adiabaticity_ratio`].
pub const RATIO_DEGENERACY_TOL: f64 = 1e-12;

/// Consecutive tracked vectors must overlap by more than this.
pub const BROKEN_TRACK_OVERLAP: f64 = 0.5;

/// Residual allowed for the initial state as an eigenvector of `H(0)`.
pub const INITIAL_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct EigenSnapshot {
    pub time: f64,
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

impl EigenSnapshot {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `max_k ‖H v_k − E_k v_k‖`.
    pub fn residual(&self, h: &HermitianMatrix) -> f64 {
        let dense = h.to_dense();
        (0..self.dim())
            .map(|k| {
                let v = self.vectors.column(k);
                (&dense * v - v * self.values[k]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |Vᵀ V − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        (self.vectors.tr_mul(&self.vectors) - DMatrix::identity(n, n)).amax()
    }

    /// Index ranges of eigenvalues that agree within `tol`.
    pub fn clusters(&self, tol: f64) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            if k == self.dim() || self.values[k] - self.values[k - 1] > tol {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// `P ψ` for the eigenspace spanned by `range`.
    pub fn project(&self, range: Range<usize>, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let cols = self.vectors.columns(range.start, range.len());
        let re = psi.map(|z| z.re);
        let im = psi.map(|z| z.im);
        let pr = cols * cols.tr_mul(&re);
        let pi = cols * cols.tr_mul(&im);
        DVector::from_fn(psi.len(), |k, _| Complex64::new(pr[k], pi[k]))
    }
}

/// Full spectrum of `h`, ascending, with a deterministic sign per eigenvector
/// (largest-magnitude component positive).
pub fn eigen_snapshot(h: &HermitianMatrix, t: f64) -> Result<EigenSnapshot> {
    let eig = SymmetricEigen::try_new(h.to_dense(), f64::EPSILON, 0)
        .ok_or(DsapError::Eigensolver(t))?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(EigenSnapshot {
        time: t,
        values,
        vectors,
    })
}

/// `max_φ |⟨φ|∂_t H|ψ⟩| / |E_φ − E_ψ|` over eigenvectors `φ` of the snapshot.
///
/// Pairs closer than [`RATIO_DEGENERACY_TOL`] are skipped when the matrix
/// element vanishes and give `+∞` otherwise.
pub fn adiabaticity_ratio_for(
    snapshot: &EigenSnapshot,
    dh_dt: &HermitianMatrix,
    psi: &DVector<Complex64>,
    energy: f64,
) -> f64 {
    let driven = dh_dt.apply(psi);
    let scale = dh_dt.entries().iter().map(|e| e.2.abs()).fold(0.0, f64::max);
    let numerator_floor = 1e-9 * scale * psi.norm();
    let mut worst = 0.0f64;
    for k in 0..snapshot.dim() {
        let phi = snapshot.vectors.column(k);
        let element: Complex64 = phi.iter().zip(driven.iter()).map(|(a, b)| b * *a).sum();
        let num = element.norm();
        let gap = (snapshot.values[k] - energy).abs();
        if gap < RATIO_DEGENERACY_TOL {
            if num > numerator_floor {
                return f64::INFINITY;
            }
            continue;
        }
        worst = worst.max(num / gap);
    }
    worst
}

/// Eigenvector-index form of [`adiabaticity_ratio_for`].
pub fn adiabaticity_ratio(snapshot: &EigenSnapshot, dh_dt: &HermitianMatrix, tracked: usize) -> f64 {
    let psi = snapshot
        .vectors
        .column(tracked)
        .map(|x| Complex64::new(x, 0.0));
    adiabaticity_ratio_for(snapshot, dh_dt, &psi, snapshot.values[tracked])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackOptions {
    pub samples: usize,
    /// Continuation steps between consecutive reported samples.
    pub substeps: usize,
}

impl TrackOptions {
    pub fn new(samples: usize) -> Self {
        TrackOptions {
            samples,
            substeps: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DarkStateTrack {
    pub times: Vec<f64>,
    /// First eigen-index of the followed eigenspace.
    pub indices: Vec<usize>,
    pub energies: Vec<f64>,
    pub vectors: Vec<StateVector>,
    /// Distance to the nearest eigenvalue outside the followed eigenspace.
    pub min_gaps: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Smallest `|⟨previous|next⟩|` seen during continuation.
    pub min_overlap: f64,
    pub broken: bool,
}

impl DarkStateTrack {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gaps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn final_vector(&self) -> &StateVector {
        self.vectors.last().expect("track has samples")
    }
}

pub fn track_dark_state(
    config: &NetworkConfig,
    initial: &StateVector,
    samples: usize,
) -> Result<DarkStateTrack> {
    track_dark_state_with(config, initial, &TrackOptions::new(samples))
}

pub fn track_dark_state_with(
    config: &NetworkConfig,
    initial: &StateVector,
    options: &TrackOptions,
) -> Result<DarkStateTrack> {
    config.validate()?;
    if options.samples < 2 {
        return Err(DsapError::InvalidConfig("samples must be >= 2".into()));
    }
    let block = initial.block().clone();
    let terms = HamiltonianTerms::new(config, block.clone())?;

    let h0 = terms.at(pulses(config, 0.0)?);
    let mut psi = initial.amplitudes().unscale(initial.norm());
    let e0 = psi.dotc(&h0.apply(&psi)).re;
    let residual = (h0.apply(&psi) - psi.map(|z| z * e0)).norm();
    if residual > INITIAL_RESIDUAL_TOL {
        return Err(DsapError::NotAnEigenvector(residual));
    }

    let intervals = options.samples - 1;
    let substeps = options.substeps.max(1);
    let total = intervals * substeps;

    let mut track = DarkStateTrack {
        times: Vec::with_capacity(options.samples),
        indices: Vec::with_capacity(options.samples),
        energies: Vec::with_capacity(options.samples),
        vectors: Vec::with_capacity(options.samples),
        min_gaps: Vec::with_capacity(options.samples),
        ratios: Vec::with_capacity(options.samples),
        min_overlap: 1.0,
        broken: false,
    };

    for step in 0..=total {
        let t = if step == total {
            config.t_max
        } else {
            config.t_max * step as f64 / total as f64
        };
        let h = terms.at(pulses(config, t)?);
        let snap = eigen_snapshot(&h, t)?;
        let clusters = snap.clusters(DEGENERACY_TOL);
        let (best, projected, weight) = clusters
            .iter()
            .map(|c| {
                let p = snap.project(c.clone(), &psi);
                let w = p.norm_squared();
                (c.clone(), p, w)
            })
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .expect("nonempty spectrum");
        let overlap = weight.sqrt();
        track.min_overlap = track.min_overlap.min(overlap);
        if overlap <= BROKEN_TRACK_OVERLAP {
            track.broken = true;
        }
        psi = projected.unscale(overlap);

        if step % substeps == 0 {
            let energy = best.clone().map(|k| snap.values[k]).sum::<f64>() / best.len() as f64;
            let gap = snap
                .values
                .iter()
                .enumerate()
                .filter(|(k, _)| !best.contains(k))
                .map(|(_, e)| (e - energy).abs())
                .fold(f64::INFINITY, f64::min);
            let dh = terms.derivative(pulse_rates(config, t)?);
            track.times.push(t);
            track.indices.push(best.start);
            track.energies.push(energy);
            track.min_gaps.push(gap);
            track.ratios.push(adiabaticity_ratio_for(&snap, &dh, &psi, energy));
            track.vectors.push(StateVector::new(Arc::clone(&block), psi.clone()));
        }
    }
    Ok(track)
}
