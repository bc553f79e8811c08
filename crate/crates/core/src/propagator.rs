//! Time integration of `i dψ/dt = H(t) ψ` over the pulse window.
//!
//! Each step is the fourth-order commutator-free Magnus scheme
//!
//! `ψ(t+h) = exp(-i h/2 H(β)) exp(-i h/2 H(γ)) ψ(t)`
//!
//! where `γ` and `β` are fixed linear combinations of the pulse amplitudes at
//! the two Gauss points of the step. Both factors are unitary, so the norm is
//! conserved to rounding. In block mode the exponentials are applied through a
//! dense symmetric eigendecomposition; on the full product space they are
//! applied with a Lanczos (Krylov) exponential on the sparse operator.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{DsapError, Result};
use crate::hamiltonian::{pulses, HamiltonianTerms, PulseAmplitudes, FULL_SPACE_GUARD};
use crate::network::{Block, BasisState, NetworkConfig, StateVector};

pub const DEFAULT_SAMPLES: usize = 501;

/// Step-size target: `max‖∂_t H‖ · dt² ≤ tolerance`.
pub const DEFAULT_STEP_TOLERANCE: f64 = 1e-4;

/// Step-size target for full-space runs. The Krylov exponentials are far more
/// expensive than the dense block ones, so the oracle path uses coarser steps.
pub const FULL_SPACE_STEP_TOLERANCE: f64 = 1e-2;

/// Norm drift beyond this aborts the integration.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;

const SQRT3: f64 = 1.732_050_807_568_877_2;
// Gauss nodes and commutator-free weights.
const NODE_1: f64 = 0.5 - SQRT3 / 6.0;
const NODE_2: f64 = 0.5 + SQRT3 / 6.0;
const WEIGHT_A: f64 = 0.25 + SQRT3 / 6.0;
const WEIGHT_B: f64 = 0.25 - SQRT3 / 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorOptions {
    /// Number of equally spaced snapshots, including `t = 0` and `t = t_max`.
    pub samples: usize,
    pub step_tolerance: f64,
    /// Multiplies the step count chosen from `step_tolerance`.
    pub refinement: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            samples: DEFAULT_SAMPLES,
            step_tolerance: DEFAULT_STEP_TOLERANCE,
            refinement: 1,
        }
    }
}

impl PropagatorOptions {
    pub fn with_samples(samples: usize) -> Self {
        PropagatorOptions {
            samples,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `|amplitude|²` per basis state, per sample.
    pub populations: Vec<Vec<f64>>,
    /// `⟨J^z_i⟩` per site, per sample.
    pub site_projections: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// Population outside the initial excitation sector (always zero in block mode).
    pub leakage: Vec<f64>,
    pub final_state: StateVector,
    pub steps: usize,
}

impl Trajectory {
    pub fn block(&self) -> &Arc<Block> {
        self.final_state.block()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }

    /// Population on basis states matching `pred`, per sample.
    pub fn population_series(&self, pred: impl Fn(&BasisState) -> bool) -> Vec<f64> {
        let mask: Vec<bool> = self.block().states().iter().map(pred).collect();
        self.populations
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&mask)
                    .filter(|(_, m)| **m)
                    .map(|(p, _)| p)
                    .sum()
            })
            .collect()
    }

    /// Largest population ever found on states with M above its lowest level.
    pub fn max_middle_population(&self) -> f64 {
        let lowest = self.block().spin().lowest();
        self.population_series(|s| s.projections()[crate::network::MIDDLE] > lowest)
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Number of integration steps for a run; a multiple of `samples - 1`.
pub fn step_count(
    config: &NetworkConfig,
    terms: &HamiltonianTerms,
    options: &PropagatorOptions,
) -> usize {
    let intervals = options.samples.saturating_sub(1).max(1);
    let (bl, br) = terms.coupling_norm_bounds();
    let rate = config.omega_max * std::f64::consts::FRAC_PI_2 / config.t_max * (bl + br);
    let raw = if rate > 0.0 {
        let dt = (options.step_tolerance / rate).sqrt();
        (config.t_max / dt).ceil() as usize
    } else {
        1
    };
    let per_interval = raw.div_ceil(intervals).max(1) * options.refinement.max(1);
    per_interval * intervals
}

/// Effective couplings of the two exponentials of one step starting at `t`.
fn step_couplings(
    config: &NetworkConfig,
    t: f64,
    h: f64,
) -> Result<(PulseAmplitudes, PulseAmplitudes)> {
    let clamp = |x: f64| x.min(config.t_max);
    let a1 = pulses(config, clamp(t + NODE_1 * h))?;
    let a2 = pulses(config, clamp(t + NODE_2 * h))?;
    let mix = |wa: f64, wb: f64| PulseAmplitudes {
        left: 2.0 * (wa * a1.left + wb * a2.left),
        right: 2.0 * (wa * a1.right + wb * a2.right),
    };
    Ok((mix(WEIGHT_A, WEIGHT_B), mix(WEIGHT_B, WEIGHT_A)))
}

/// Applies `exp(-i τ H) ψ` for a dense real symmetric `H`.
fn apply_dense_exponential(
    h: DMatrix<f64>,
    tau: f64,
    psi: &mut DVector<Complex64>,
    t: f64,
) -> Result<()> {
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or(DsapError::Eigensolver(t))?;
    let v = &eig.eigenvectors;
    let re = v.tr_mul(&psi.map(|z| z.re));
    let im = v.tr_mul(&psi.map(|z| z.im));
    let mut y_re = DVector::zeros(re.len());
    let mut y_im = DVector::zeros(re.len());
    for k in 0..re.len() {
        let (s, c) = (-tau * eig.eigenvalues[k]).sin_cos();
        y_re[k] = c * re[k] - s * im[k];
        y_im[k] = s * re[k] + c * im[k];
    }
    let out_re = v * y_re;
    let out_im = v * y_im;
    for k in 0..psi.len() {
        psi[k] = Complex64::new(out_re[k], out_im[k]);
    }
    Ok(())
}

/// Largest Krylov dimension before the step is split.
const KRYLOV_MAX: usize = 60;
const KRYLOV_TOL: f64 = 1e-13;

/// Applies `exp(-i τ H) ψ` with a Lanczos approximation; splits τ when the
/// Krylov space would exceed [`KRYLOV_MAX`].
fn apply_krylov_exponential(
    terms: &HamiltonianTerms,
    amps: PulseAmplitudes,
    tau: f64,
    psi: &mut DVector<Complex64>,
    t: f64,
) -> Result<()> {
    let mut remaining = tau;
    let mut chunk = tau;
    while remaining > 0.0 {
        let step = chunk.min(remaining);
        match krylov_step(terms, amps, step, psi, t)? {
            Some(next) => {
                *psi = next;
                remaining -= step;
            }
            None => {
                chunk = step / 2.0;
                if chunk < tau * 1e-6 {
                    return Err(DsapError::Propagation {
                        t,
                        reason: "Krylov exponential did not converge".into(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn krylov_step(
    terms: &HamiltonianTerms,
    amps: PulseAmplitudes,
    tau: f64,
    psi: &DVector<Complex64>,
    t: f64,
) -> Result<Option<DVector<Complex64>>> {
    let beta0 = psi.norm();
    if beta0 == 0.0 {
        return Ok(Some(psi.clone()));
    }
    let mut basis: Vec<DVector<Complex64>> = vec![psi.unscale(beta0)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // Work with H - σ, σ the Rayleigh quotient, and restore the phase at the end.
    let shift = basis[0].dotc(&terms.apply(amps, &basis[0])).re;
    let one = Complex64::new(1.0, 0.0);

    for j in 0..KRYLOV_MAX {
        let mut w = terms.apply(amps, &basis[j]);
        w.axpy(Complex64::new(-shift, 0.0), &basis[j], one);
        let a = basis[j].dotc(&w).re;
        alpha.push(a);
        // full reorthogonalization
        for v in &basis {
            let c = v.dotc(&w);
            w.axpy(-c, v, one);
        }
        let b = w.norm();
        let m = alpha.len();

        // exp(-i τ T) e_1 on the current tridiagonal matrix
        let tri = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::try_new(tri, f64::EPSILON, 0).ok_or(DsapError::Eigensolver(t))?;
        let coeffs: Vec<Complex64> = (0..m)
            .map(|r| {
                (0..m)
                    .map(|k| {
                        let phase = Complex64::from_polar(1.0, -tau * eig.eigenvalues[k]);
                        phase * eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)]
                    })
                    .sum()
            })
            .collect();

        let breakdown = b < 1e-14 * beta0.max(1.0);
        if breakdown || b * coeffs[m - 1].norm() < KRYLOV_TOL {
            let global = Complex64::from_polar(beta0, -tau * shift);
            let mut out = DVector::zeros(psi.len());
            for (v, c) in basis.iter().zip(&coeffs) {
                out.axpy(*c * global, v, one);
            }
            return Ok(Some(out));
        }
        beta.push(b);
        basis.push(w.unscale(b));
    }
    Ok(None)
}

enum Mode {
    Dense,
    Krylov,
}

fn integrate(
    config: &NetworkConfig,
    initial: &StateVector,
    options: &PropagatorOptions,
    mode: Mode,
) -> Result<Trajectory> {
    config.validate()?;
    if options.samples < 2 {
        return Err(DsapError::InvalidConfig("samples must be >= 2".into()));
    }
    let norm0 = initial.norm();
    if (norm0 - 1.0).abs() > NORM_DRIFT_LIMIT {
        return Err(DsapError::InvalidConfig(format!(
            "initial state not normalized (norm {norm0})"
        )));
    }
    let block = initial.block().clone();
    let terms = HamiltonianTerms::new(config, block.clone())?;
    let steps = step_count(config, &terms, options);
    let intervals = options.samples - 1;
    let per_sample = steps / intervals;
    let h = config.t_max / steps as f64;

    // Excitation count of the initial support, for leakage bookkeeping.
    let spin = block.spin();
    let home_sector = match block.excitations() {
        Some(n) => Some(n),
        None => {
            let sectors: Vec<usize> = block
                .states()
                .iter()
                .zip(initial.amplitudes().iter())
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(s, _)| s.excitations(spin))
                .collect();
            match sectors.first() {
                Some(&n) if sectors.iter().all(|&m| m == n) => Some(n),
                _ => None,
            }
        }
    };
    let outside: Vec<bool> = match (block.excitations(), home_sector) {
        (None, Some(n)) => block.states().iter().map(|s| s.excitations(spin) != n).collect(),
        _ => vec![false; block.len()],
    };

    let mut psi = initial.amplitudes().clone();
    let mut traj = Trajectory {
        times: Vec::with_capacity(options.samples),
        populations: Vec::with_capacity(options.samples),
        site_projections: Vec::with_capacity(options.samples),
        norms: Vec::with_capacity(options.samples),
        leakage: Vec::with_capacity(options.samples),
        final_state: initial.clone(),
        steps,
    };

    let record = |t: f64, psi: &DVector<Complex64>, traj: &mut Trajectory| {
        let state = StateVector::new(block.clone(), psi.clone());
        let pops = state.populations();
        traj.leakage.push(
            pops.iter()
                .zip(&outside)
                .filter(|(_, o)| **o)
                .map(|(p, _)| p)
                .sum(),
        );
        traj.times.push(t);
        traj.norms.push(state.norm());
        traj.site_projections.push(state.site_projections());
        traj.populations.push(pops);
    };

    record(0.0, &psi, &mut traj);
    for sample in 1..=intervals {
        for sub in 0..per_sample {
            let step_index = (sample - 1) * per_sample + sub;
            let t = step_index as f64 * h;
            let (first, second) = step_couplings(config, t, h)?;
            match mode {
                Mode::Dense => {
                    apply_dense_exponential(terms.dense_at(first), h / 2.0, &mut psi, t)?;
                    apply_dense_exponential(terms.dense_at(second), h / 2.0, &mut psi, t)?;
                }
                Mode::Krylov => {
                    apply_krylov_exponential(&terms, first, h / 2.0, &mut psi, t)?;
                    apply_krylov_exponential(&terms, second, h / 2.0, &mut psi, t)?;
                }
            }
        }
        let t = if sample == intervals {
            config.t_max
        } else {
            sample as f64 * per_sample as f64 * h
        };
        let drift = (psi.norm() - 1.0).abs();
        if !drift.is_finite() || drift > NORM_DRIFT_LIMIT {
            return Err(DsapError::Propagation {
                t,
                reason: format!("norm drift {drift:e}"),
            });
        }
        record(t, &psi, &mut traj);
    }
    traj.final_state = StateVector::new(block, psi);
    Ok(traj)
}

/// Integrates from `t = 0` to `t_max` inside the initial state's block.
pub fn evolve(config: &NetworkConfig, initial: &StateVector, samples: usize) -> Result<Trajectory> {
    evolve_with(config, initial, &PropagatorOptions::with_samples(samples))
}

pub fn evolve_with(
    config: &NetworkConfig,
    initial: &StateVector,
    options: &PropagatorOptions,
) -> Result<Trajectory> {
    integrate(config, initial, options, Mode::Dense)
}

/// Same contract on the full product space, with no sector restriction.
/// `initial` must live in [`Block::full_space`].
pub fn evolve_full(
    config: &NetworkConfig,
    initial: &StateVector,
    samples: usize,
) -> Result<Trajectory> {
    let options = PropagatorOptions {
        step_tolerance: FULL_SPACE_STEP_TOLERANCE,
        ..PropagatorOptions::with_samples(samples)
    };
    evolve_full_with(config, initial, &options)
}

pub fn evolve_full_with(
    config: &NetworkConfig,
    initial: &StateVector,
    options: &PropagatorOptions,
) -> Result<Trajectory> {
    let dim = config.full_dim();
    if dim > FULL_SPACE_GUARD {
        return Err(DsapError::DimensionGuard {
            dim,
            guard: FULL_SPACE_GUARD,
        });
    }
    if initial.block().excitations().is_some() {
        return Err(DsapError::InvalidConfig(
            "evolve_full expects a full-space state".into(),
        ));
    }
    integrate(config, initial, options, Mode::Krylov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::initial_state;
    use crate::spin::SpinMagnitude;

    fn cfg(twice_s: u32, leaves: usize) -> NetworkConfig {
        NetworkConfig::new(SpinMagnitude::new(twice_s).unwrap(), leaves)
    }

    #[test]
    fn couplings_off_keeps_populations() {
        let mut c = cfg(2, 2);
        c.omega_max = 0.0;
        c.t_max = 5000.0;
        let block = Arc::new(Block::sector(&c, 2).unwrap());
        for k in 0..block.len() {
            let psi = StateVector::basis(block.clone(), k);
            let traj = evolve(&c, &psi, 11).unwrap();
            for row in &traj.populations {
                assert!((row[k] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_is_stationary_in_full_space() {
        let c = cfg(1, 2).with_tmax_product(50.0);
        let full = Arc::new(Block::full_space(&c, FULL_SPACE_GUARD).unwrap());
        let vac = full.index_of(&BasisState(vec![-1; 4])).unwrap();
        let psi = StateVector::basis(full, vac);
        let traj = evolve_full(&c, &psi, 5).unwrap();
        let overlap = psi.inner(&traj.final_state).unwrap().norm_sqr();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spin_half_two_leaves_splits_evenly() {
        let c = cfg(1, 2);
        let psi = initial_state(&c, 1).unwrap();
        let traj = evolve(&c, &psi, 101).unwrap();
        assert!(traj.max_norm_drift() < 1e-9);
        let fin = &traj.final_state;
        for (s, p) in fin.block().states().iter().zip(fin.populations()) {
            let on_leaf = s.projections()[2] == 1 || s.projections()[3] == 1;
            if on_leaf {
                assert!((p - 0.5).abs() < 1e-3, "{} -> {p}", s.label(c.spin));
            } else {
                assert!(p < 1e-3);
            }
        }
        for row in &traj.populations {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn spin_one_two_excitations_final_populations() {
        let c = cfg(2, 2);
        let psi = initial_state(&c, 2).unwrap();
        let traj = evolve(&c, &psi, 51).unwrap();
        let f = &traj.final_state;
        let pop = |l: &str| f.amplitude(&BasisState::parse(c.spin, l).unwrap()).norm_sqr();
        assert!((pop("-1,-1,0,0") - 2.0 / 3.0).abs() < 1e-3);
        assert!((pop("-1,-1,1,-1") - 1.0 / 6.0).abs() < 1e-3);
        assert!((pop("-1,-1,-1,1") - 1.0 / 6.0).abs() < 1e-3);
    }

    #[test]
    fn step_count_is_sample_aligned() {
        let c = cfg(3, 4);
        let block = Arc::new(Block::sector(&c, 3).unwrap());
        let terms = HamiltonianTerms::new(&c, block).unwrap();
        let opts = PropagatorOptions::with_samples(501);
        let n = step_count(&c, &terms, &opts);
        assert_eq!(n % 500, 0);
        let finer = PropagatorOptions { refinement: 2, ..opts };
        assert_eq!(step_count(&c, &terms, &finer), 2 * n);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = cfg(1, 2);
        let psi = initial_state(&c, 1).unwrap();
        assert!(evolve(&c, &psi, 1).is_err());
        let mut scaled = psi.clone();
        scaled.amplitudes_mut().scale_mut(2.0);
        assert!(evolve(&c, &scaled, 5).is_err());
        assert!(evolve_full(&c, &psi, 5).is_err());
        let big = cfg(6, 4);
        let psi = initial_state(&big, 6).unwrap();
        assert!(matches!(
            evolve_full(&big, &psi, 5),
            Err(DsapError::DimensionGuard { .. })
        ));
    }
}
