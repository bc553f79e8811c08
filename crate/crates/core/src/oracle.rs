//! Brute-force cross-checks that share no code path with the fast routines
//! they verify.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::entanglement::{partial_trace, TableRow};
use crate::error::{DsapError, Result};
use crate::hamiltonian::{assemble_full, pulses, FULL_SPACE_GUARD};
use crate::network::{initial_state, Block, NetworkConfig, StateVector};
use crate::propagator::{evolve, evolve_full, DEFAULT_SAMPLES};

pub const OVERLAP_DEFICIT_BOUND: f64 = 1e-8;
pub const LEAKAGE_BOUND: f64 = 1e-10;
pub const HERMITICITY_BOUND: f64 = 1e-12;
pub const PARTIAL_TRACE_BOUND: f64 = 1e-12;
pub const NAIVE_TRACE_GUARD: usize = 4096;
pub const DEFAULT_SEED: u64 = 0x5eed_d5a9;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub deviation: f64,
    pub bound: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.deviation.is_finite() && self.deviation < self.bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub scenario: String,
    pub checks: Vec<OracleCheck>,
    pub seed: Option<u64>,
}

impl OracleReport {
    fn new(scenario: impl Into<String>) -> Self {
        OracleReport {
            scenario: scenario.into(),
            checks: Vec::new(),
            seed: None,
        }
    }

    fn push(&mut self, name: &str, deviation: f64, bound: f64) {
        self.checks.push(OracleCheck {
            name: name.to_string(),
            deviation: deviation.max(0.0),
            bound,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "oracle {}", self.scenario)?;
        if let Some(seed) = self.seed {
            write!(f, " seed={seed:#x}")?;
        }
        writeln!(f)?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<28} {:>10.3e} < {:.0e}  {}",
                c.name,
                c.deviation,
                c.bound,
                if c.passed() { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Block and full-space evolution of the same initial state.
pub fn check_block_vs_full(config: &NetworkConfig, left_projection: i32) -> Result<OracleReport> {
    let dim = config.full_dim();
    if dim > FULL_SPACE_GUARD {
        return Err(DsapError::DimensionGuard {
            dim,
            guard: FULL_SPACE_GUARD,
        });
    }
    let psi = initial_state(config, left_projection)?;
    let block = evolve(config, &psi, DEFAULT_SAMPLES)?;
    let space = Arc::new(Block::full_space(config, FULL_SPACE_GUARD)?);
    let full = evolve_full(config, &psi.embed(space)?, DEFAULT_SAMPLES)?;

    let embedded = block.final_state.embed(full.final_state.block().clone())?;
    let overlap = embedded.inner(&full.final_state)?.norm_sqr();

    let h = assemble_full(config, pulses(config, 0.5 * config.t_max)?)?;

    let mut report = OracleReport::new(format!(
        "2s={} n={} 2m_L={}",
        config.spin.twice_s(),
        config.leaves,
        left_projection
    ));
    report.push("overlap_deficit", 1.0 - overlap, OVERLAP_DEFICIT_BOUND);
    report.push("leakage", full.max_leakage(), LEAKAGE_BOUND);
    report.push("norm_drift_block", block.max_norm_drift(), 1e-9);
    report.push("norm_drift_full", full.max_norm_drift(), 1e-9);
    report.push("hermiticity", h.hermiticity_residual(), HERMITICITY_BOUND);
    Ok(report)
}

/// Every product-space index pair `(i, j)` with equal environment digits
/// contributes `ψ_i ψ_j*` to `ρ(a_i, a_j)`.
pub fn naive_partial_trace(
    state: &StateVector,
    keep: &[usize],
) -> Result<nalgebra::DMatrix<Complex64>> {
    let block = state.block();
    let spin = block.spin();
    let sites = block.sites();
    let full_dim = spin.dim().pow(sites as u32);
    if full_dim > NAIVE_TRACE_GUARD {
        return Err(DsapError::DimensionGuard {
            dim: full_dim,
            guard: NAIVE_TRACE_GUARD,
        });
    }
    let d = spin.dim();
    // Full product-space amplitudes, site 0 most significant.
    let mut full = vec![Complex64::default(); full_dim];
    for (basis, amp) in block.states().iter().zip(state.amplitudes().iter()) {
        let idx = (0..sites).fold(0, |acc, s| acc * d + spin.quanta(basis.projections()[s]));
        full[idx] = *amp;
    }
    let digits: Vec<Vec<usize>> = (0..full_dim)
        .map(|mut i| {
            let mut out = vec![0usize; sites];
            for s in (0..sites).rev() {
                out[s] = i % d;
                i /= d;
            }
            out
        })
        .collect();
    let kept = d.pow(keep.len() as u32);
    let mut rho = nalgebra::DMatrix::zeros(kept, kept);
    for i in 0..full_dim {
        let di = &digits[i];
        for j in 0..full_dim {
            let dj = &digits[j];
            if (0..sites).any(|s| !keep.contains(&s) && di[s] != dj[s]) {
                continue;
            }
            let a = keep.iter().fold(0, |acc, &s| acc * d + di[s]);
            let b = keep.iter().fold(0, |acc, &s| acc * d + dj[s]);
            rho[(a, b)] += full[i] * full[j].conj();
        }
    }
    Ok(rho)
}

pub fn check_naive_partial_trace(state: &StateVector, keep: &[usize]) -> Result<OracleReport> {
    let fast = partial_trace(state, keep)?;
    let slow = naive_partial_trace(state, keep)?;
    let deviation = (&fast.matrix - &slow)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let mut report = OracleReport::new(format!("partial trace keep={keep:?}"));
    report.push("partial_trace", deviation, PARTIAL_TRACE_BOUND);
    Ok(report)
}

/// Seeded random normalized vector in `block`.
pub fn random_state(block: Arc<Block>, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = DVector::from_fn(block.len(), |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    StateVector::new(block, amps).normalized()
}

pub fn check_random_partial_trace(
    config: &NetworkConfig,
    excitations: usize,
    keep: &[usize],
    seed: u64,
) -> Result<OracleReport> {
    let block = Arc::new(Block::sector(config, excitations)?);
    let psi = random_state(block, seed);
    let mut report = check_naive_partial_trace(&psi, keep)?;
    report.seed = Some(seed);
    Ok(report)
}

/// Sector sizes from exhaustive binning versus direct enumeration.
pub fn check_counts(config: &NetworkConfig) -> Result<OracleReport> {
    let spin = config.spin;
    let d = spin.dim();
    let sites = config.sites();
    let mut bins = vec![0usize; config.max_excitations() + 1];
    let total = d.pow(sites as u32);
    for mut i in 0..total {
        let mut n = 0;
        for _ in 0..sites {
            n += i % d;
            i /= d;
        }
        bins[n] += 1;
    }
    let mut worst = 0usize;
    let mut enumerated = 0usize;
    for (n, &count) in bins.iter().enumerate() {
        let size = Block::sector(config, n)?.len();
        enumerated += size;
        worst = worst.max(size.abs_diff(count));
    }
    let mut report = OracleReport::new(format!("counts 2s={} n={}", spin.twice_s(), config.leaves));
    report.push("sector_sizes", worst as f64, 0.5);
    report.push("partition", enumerated.abs_diff(total) as f64, 0.5);
    Ok(report)
}

/// All oracle checks for one tabulated scenario.
pub fn check_row(row: &TableRow, seed: u64) -> Result<Vec<OracleReport>> {
    let config = row.config();
    let mut out = vec![
        check_block_vs_full(&config, row.left_projection)?,
        check_counts(&config)?,
    ];
    let mut leaf = check_random_partial_trace(&config, row.excitations(), &[2], seed)?;
    leaf.scenario = format!("{} {}", row.id, leaf.scenario);
    out.push(leaf);
    for r in &mut out[..2] {
        r.scenario = format!("{} {}", row.id, r.scenario);
    }
    Ok(out)
}

/// [`check_row`] over many rows concurrently; output order follows `rows`.
pub fn check_rows(rows: &[&TableRow], seed: u64) -> Vec<Result<Vec<OracleReport>>> {
    rows.par_iter().map(|row| check_row(row, seed)).collect()
}
