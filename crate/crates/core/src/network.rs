//! Branched network geometry, excitation-sector bases and state vectors.
//!
//! Sites are ordered `[L, M, R_1, ..., R_n]`. Excitations are counted as
//! quanta above the all-lowest product state, `N = Σ_i (m_i + s)`, which the
//! exchange Hamiltonian conserves.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{DsapError, Result};
use crate::spin::SpinMagnitude;

pub const LEFT: usize = 0;
pub const MIDDLE: usize = 1;

/// Site index of leaf `R_{j+1}` (zero-based `j`).
pub const fn leaf_site(j: usize) -> usize {
    2 + j
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkConfig {
    pub spin: SpinMagnitude,
    pub leaves: usize,
    /// Zeeman field `B`; the unit of energy.
    pub field: f64,
    /// Always-on ZZ coefficient.
    pub alpha: f64,
    pub omega_max: f64,
    pub t_max: f64,
}

impl NetworkConfig {
    pub const DEFAULT_FIELD: f64 = 1.0;
    pub const DEFAULT_ALPHA: f64 = 0.01;
    pub const DEFAULT_OMEGA_MAX: f64 = 0.01;
    pub const DEFAULT_TMAX_PRODUCT: f64 = 1000.0;

    pub fn new(spin: SpinMagnitude, leaves: usize) -> Self {
        NetworkConfig {
            spin,
            leaves,
            field: Self::DEFAULT_FIELD,
            alpha: Self::DEFAULT_ALPHA,
            omega_max: Self::DEFAULT_OMEGA_MAX,
            t_max: Self::DEFAULT_TMAX_PRODUCT / Self::DEFAULT_OMEGA_MAX,
        }
    }

    /// Sets `t_max` so that `omega_max * t_max == product`.
    pub fn with_tmax_product(mut self, product: f64) -> Self {
        self.t_max = product / self.omega_max;
        self
    }

    pub fn tmax_product(&self) -> f64 {
        self.omega_max * self.t_max
    }

    /// `omega_max == 0` is accepted (couplings switched off); everything else
    /// must be strictly positive except `alpha`, which may be zero.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DsapError::InvalidConfig(msg.to_string()));
        if self.leaves == 0 {
            return bad("leaf count must be >= 1");
        }
        if !self.field.is_finite() || self.field <= 0.0 {
            return bad("field B must be > 0");
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return bad("alpha must be >= 0");
        }
        if !self.omega_max.is_finite() || self.omega_max < 0.0 {
            return bad("omega_max must be >= 0");
        }
        if !self.t_max.is_finite() || self.t_max <= 0.0 {
            return bad("t_max must be > 0");
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.leaves + 2
    }

    pub fn max_excitations(&self) -> usize {
        self.sites() * self.spin.twice_s() as usize
    }

    /// `(2s+1)^(n+2)`, saturating.
    pub fn full_dim(&self) -> usize {
        let d = self.spin.dim();
        (0..self.sites()).fold(1usize, |acc, _| acc.saturating_mul(d))
    }
}

/// Product state given by the `2m` value of every site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState(pub Vec<i32>);

impl BasisState {
    pub fn projections(&self) -> &[i32] {
        &self.0
    }

    pub fn excitations(&self, spin: SpinMagnitude) -> usize {
        self.0.iter().map(|&p| spin.quanta(p)).sum()
    }

    /// Quanta on each site.
    pub fn quanta(&self, spin: SpinMagnitude) -> Vec<usize> {
        self.0.iter().map(|&p| spin.quanta(p)).collect()
    }

    pub fn flipped(&self) -> BasisState {
        BasisState(self.0.iter().map(|p| -p).collect())
    }

    /// Comma form, e.g. `1,-1,-1,-1`. Values are `m` for integer spin and `2m`
    /// for half-integer spin.
    pub fn label(&self, spin: SpinMagnitude) -> String {
        self.0
            .iter()
            .map(|&p| spin.label_value(p).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Ket form with overbars for negative labels, e.g. `|11̄1̄1̄⟩`.
    pub fn ket(&self, spin: SpinMagnitude) -> String {
        let mut out = String::from("|");
        for &p in &self.0 {
            let v = spin.label_value(p);
            out.push_str(&v.abs().to_string());
            if v < 0 {
                out.push('\u{0304}');
            }
        }
        out.push('⟩');
        out
    }

    /// Parses either the comma form or the ket form.
    pub fn parse(spin: SpinMagnitude, text: &str) -> Result<BasisState> {
        let text = text.trim();
        let bad = || DsapError::BadLabel(text.to_string());
        let labels: Vec<i32> = if text.starts_with('|') {
            let inner = text
                .strip_prefix('|')
                .and_then(|t| t.strip_suffix('⟩').or_else(|| t.strip_suffix('>')))
                .ok_or_else(bad)?;
            let mut labels = Vec::new();
            let mut chars = inner.chars().peekable();
            while let Some(c) = chars.next() {
                let digit = c.to_digit(10).ok_or_else(bad)? as i32;
                let negative = matches!(chars.peek(), Some('\u{0304}') | Some('\u{0305}'));
                if negative {
                    chars.next();
                }
                labels.push(if negative { -digit } else { digit });
            }
            labels
        } else {
            text.split(',')
                .map(|t| t.trim().parse::<i32>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        let projections = labels
            .into_iter()
            .map(|l| spin.from_label_value(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisState(projections))
    }
}

/// Ordered basis of product states.
///
/// Normally an excitation sector (`sector() == Some(N)`); the full product
/// space is represented as a block with `sector() == None`. Ordering is
/// lexicographic on the projection vector in both cases.
#[derive(Clone, Debug)]
pub struct Block {
    spin: SpinMagnitude,
    sites: usize,
    sector: Option<usize>,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.spin == other.spin
            && self.sites == other.sites
            && self.sector == other.sector
            && self.states == other.states
    }
}

impl Block {
    fn from_states(
        spin: SpinMagnitude,
        sites: usize,
        sector: Option<usize>,
        states: Vec<BasisState>,
    ) -> Block {
        let index = states
            .iter()
            .enumerate()
            .map(|(k, s)| (s.clone(), k))
            .collect();
        Block {
            spin,
            sites,
            sector,
            states,
            index,
        }
    }

    /// Every product state with exactly `excitations` quanta.
    pub fn sector(config: &NetworkConfig, excitations: usize) -> Result<Block> {
        let max = config.max_excitations();
        if excitations > max {
            return Err(DsapError::EmptySector {
                requested: excitations,
                max,
            });
        }
        let spin = config.spin;
        let cap = spin.twice_s() as usize;
        let sites = config.sites();
        let mut states = Vec::new();
        let mut current = Vec::with_capacity(sites);

        fn fill(
            spin: SpinMagnitude,
            cap: usize,
            sites: usize,
            remaining: usize,
            current: &mut Vec<i32>,
            out: &mut Vec<BasisState>,
        ) {
            let placed = current.len();
            if placed == sites {
                if remaining == 0 {
                    out.push(BasisState(current.clone()));
                }
                return;
            }
            let after = (sites - placed - 1) * cap;
            for q in 0..=cap.min(remaining) {
                if remaining - q > after {
                    continue;
                }
                current.push(spin.lowest() + 2 * q as i32);
                fill(spin, cap, sites, remaining - q, current, out);
                current.pop();
            }
        }

        fill(spin, cap, sites, excitations, &mut current, &mut states);
        Ok(Block::from_states(spin, sites, Some(excitations), states))
    }

    /// The whole `(2s+1)^(n+2)` product space.
    pub fn full_space(config: &NetworkConfig, guard: usize) -> Result<Block> {
        let dim = config.full_dim();
        if dim > guard {
            return Err(DsapError::DimensionGuard { dim, guard });
        }
        let spin = config.spin;
        let d = spin.dim();
        let sites = config.sites();
        let levels: Vec<i32> = spin.projections().collect();
        let states = (0..dim)
            .map(|mut k| {
                let mut p = vec![0; sites];
                for site in (0..sites).rev() {
                    p[site] = levels[k % d];
                    k /= d;
                }
                BasisState(p)
            })
            .collect();
        Ok(Block::from_states(spin, sites, None, states))
    }

    pub fn spin(&self) -> SpinMagnitude {
        self.spin
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn leaves(&self) -> usize {
        self.sites - 2
    }

    pub fn excitations(&self) -> Option<usize> {
        self.sector
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &BasisState {
        &self.states[k]
    }

    pub fn find(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn index_of(&self, state: &BasisState) -> Result<usize> {
        self.find(state)
            .ok_or_else(|| DsapError::StateNotInBlock(state.label(self.spin)))
    }

    pub fn matches(&self, config: &NetworkConfig) -> bool {
        self.spin == config.spin && self.sites == config.sites()
    }
}

/// Normalized complex amplitudes over a block's basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    block: Arc<Block>,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(block: Arc<Block>, amplitudes: DVector<Complex64>) -> StateVector {
        assert_eq!(block.len(), amplitudes.len(), "amplitude count != block size");
        StateVector { block, amplitudes }
    }

    pub fn basis(block: Arc<Block>, k: usize) -> StateVector {
        let mut amplitudes = DVector::zeros(block.len());
        amplitudes[k] = Complex64::new(1.0, 0.0);
        StateVector::new(block, amplitudes)
    }

    /// Builds a state from `(amplitude, basis state)` pairs; states must lie in the block.
    pub fn from_terms<'a, I>(block: Arc<Block>, terms: I) -> Result<StateVector>
    where
        I: IntoIterator<Item = (Complex64, &'a BasisState)>,
    {
        let mut amplitudes = DVector::zeros(block.len());
        for (amp, state) in terms {
            amplitudes[block.index_of(state)?] += amp;
        }
        Ok(StateVector::new(block, amplitudes))
    }

    pub fn block(&self) -> &Arc<Block> {
        &self.block
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<Complex64> {
        &mut self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, state: &BasisState) -> Complex64 {
        self.block
            .find(state)
            .map(|k| self.amplitudes[k])
            .unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> StateVector {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.unscale_mut(n);
        }
        self
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.block != other.block {
            return Err(DsapError::BlockMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `⟨J^z_i⟩` for every site.
    pub fn site_projections(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.block.sites()];
        for (state, amp) in self.block.states().iter().zip(self.amplitudes.iter()) {
            let p = amp.norm_sqr();
            for (acc, &two_m) in out.iter_mut().zip(state.projections()) {
                *acc += p * two_m as f64 / 2.0;
            }
        }
        out
    }

    /// Total population on basis states satisfying `pred`.
    pub fn population_where(&self, pred: impl Fn(&BasisState) -> bool) -> f64 {
        self.block
            .states()
            .iter()
            .zip(self.amplitudes.iter())
            .filter(|(s, _)| pred(s))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Re-expresses the state in another block containing all of its support.
    /// Amplitudes on states missing from `target` must be zero.
    pub fn embed(&self, target: Arc<Block>) -> Result<StateVector> {
        let mut amplitudes = DVector::zeros(target.len());
        for (state, amp) in self.block.states().iter().zip(self.amplitudes.iter()) {
            match target.find(state) {
                Some(k) => amplitudes[k] = *amp,
                None if amp.norm_sqr() == 0.0 => {}
                None => return Err(DsapError::StateNotInBlock(state.label(self.block.spin()))),
            }
        }
        Ok(StateVector::new(target, amplitudes))
    }

    /// Applies `2m -> -2m` on every site; the result lives in the mirrored sector.
    pub fn spin_flipped(&self, config: &NetworkConfig) -> Result<StateVector> {
        let target = match self.block.excitations() {
            Some(n) => Arc::new(Block::sector(config, config.max_excitations() - n)?),
            None => self.block.clone(),
        };
        let mut amplitudes = DVector::zeros(target.len());
        for (state, amp) in self.block.states().iter().zip(self.amplitudes.iter()) {
            amplitudes[target.index_of(&state.flipped())?] = *amp;
        }
        Ok(StateVector::new(target, amplitudes))
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spin = self.block.spin();
        let mut first = true;
        for (state, amp) in self.block.states().iter().zip(self.amplitudes.iter()) {
            if amp.norm_sqr() < 1e-12 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.4}{:+.4}i){}", amp.re, amp.im, state.ket(spin))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// The product state with `left_projection` on L and every other site lowest.
pub fn initial_state(config: &NetworkConfig, left_projection: i32) -> Result<StateVector> {
    let spin = config.spin;
    spin.level(left_projection)?;
    let mut p = vec![spin.lowest(); config.sites()];
    p[LEFT] = left_projection;
    let state = BasisState(p);
    let block = Arc::new(Block::sector(config, state.excitations(spin))?);
    let k = block.index_of(&state)?;
    Ok(StateVector::basis(block, k))
}
