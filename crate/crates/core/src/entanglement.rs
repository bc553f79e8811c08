//! Reduced density matrices, entanglement of formation and reference states.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{DsapError, Result};
use crate::hamiltonian::PulseAmplitudes;
use crate::network::{leaf_site, BasisState, Block, NetworkConfig, StateVector, LEFT, MIDDLE};
use crate::spin::SpinMagnitude;

#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    pub sites: Vec<usize>,
    /// Rows and columns are mixed-radix over `sites` (first site most
    /// significant), each digit the ascending local level.
    pub matrix: DMatrix<Complex64>,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }
}

fn check_sites(block: &Block, keep: &[usize]) -> Result<()> {
    if keep.is_empty() {
        return Err(DsapError::InvalidSites("keep list is empty".into()));
    }
    let mut seen = vec![false; block.sites()];
    for &s in keep {
        if s >= block.sites() {
            return Err(DsapError::InvalidSites(format!("site {s} out of range")));
        }
        if seen[s] {
            return Err(DsapError::InvalidSites(format!("site {s} repeated")));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Row index of `state` restricted to `keep`.
pub fn kept_index(spin: SpinMagnitude, state: &BasisState, keep: &[usize]) -> usize {
    keep.iter().fold(0, |acc, &s| {
        acc * spin.dim() + spin.quanta(state.projections()[s])
    })
}

/// `ρ_keep(a, b) = Σ_env ψ(a, env) ψ*(b, env)`.
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<ReducedDensityMatrix> {
    let block = state.block();
    check_sites(block, keep)?;
    let spin = block.spin();
    let dim = spin.dim().pow(keep.len() as u32);

    let mut env: HashMap<Vec<i32>, Vec<(usize, Complex64)>> = HashMap::new();
    for (basis, &amp) in block.states().iter().zip(state.amplitudes().iter()) {
        if amp == Complex64::default() {
            continue;
        }
        let rest: Vec<i32> = (0..block.sites())
            .filter(|s| !keep.contains(s))
            .map(|s| basis.projections()[s])
            .collect();
        env.entry(rest)
            .or_default()
            .push((kept_index(spin, basis, keep), amp));
    }

    let mut matrix = DMatrix::zeros(dim, dim);
    for group in env.values() {
        for &(a, pa) in group {
            for &(b, pb) in group {
                matrix[(a, b)] += pa * pb.conj();
            }
        }
    }
    Ok(ReducedDensityMatrix {
        sites: keep.to_vec(),
        matrix,
    })
}

/// `−Σ λ log₂ λ` with eigenvalues clamped to `[0, 1]`.
pub fn von_neumann_entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > 1e-6 {
        return Err(DsapError::TraceDeviation(trace));
    }
    Ok(entropy_of(&rho.eigenvalues()))
}

pub fn entropy_of(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy of leaf `leaf` (0-based) against everything else, in bits.
pub fn entanglement_of_formation(state: &StateVector, leaf: usize) -> Result<f64> {
    if leaf >= state.block().leaves() {
        return Err(DsapError::InvalidSites(format!("no leaf {leaf}")));
    }
    von_neumann_entropy(&partial_trace(state, &[leaf_site(leaf)])?)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Raw entropy and its ratio to a few plausible maxima.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSummary {
    pub raw: f64,
    pub eigenvalues: Vec<f64>,
    /// `raw / log₂(2s + 1)`.
    pub per_local_dim: f64,
    /// `raw / log₂(rank ρ)`, or 0 for a pure reduction.
    pub per_rank: f64,
}

pub fn entanglement_summary(state: &StateVector) -> Result<EntanglementSummary> {
    let rho = partial_trace(state, &[leaf_site(0)])?;
    let raw = von_neumann_entropy(&rho)?;
    let eigenvalues = rho.eigenvalues();
    let rank = eigenvalues.iter().filter(|&&v| v > 1e-10).count();
    let d = state.block().spin().dim() as f64;
    Ok(EntanglementSummary {
        raw,
        per_local_dim: raw / d.log2(),
        per_rank: if rank > 1 { raw / (rank as f64).log2() } else { 0.0 },
        eigenvalues,
    })
}

/// One row of the published summary of final states.
#[derive(Clone, Copy, Debug)]
pub struct TableRow {
    pub id: &'static str,
    pub twice_s: u32,
    pub leaves: usize,
    /// `2m` of L in the initial state.
    pub left_projection: i32,
    /// `(p, q, leaf labels)`: every listed leaf configuration has amplitude `√(p/q)`.
    pub terms: &'static [(u32, u32, &'static [&'static str])],
    pub printed_entanglement: f64,
}

impl TableRow {
    pub fn spin(&self) -> SpinMagnitude {
        SpinMagnitude::new(self.twice_s).expect("tabulated spin")
    }

    pub fn excitations(&self) -> usize {
        self.spin().quanta(self.left_projection)
    }

    pub fn config(&self) -> NetworkConfig {
        NetworkConfig::new(self.spin(), self.leaves)
    }

    /// `Σ p/q` over listed terms before renormalization.
    pub fn printed_norm_squared(&self) -> f64 {
        self.terms
            .iter()
            .map(|(p, q, labels)| *p as f64 / *q as f64 * labels.len() as f64)
            .sum()
    }
}

pub const TABLE: &[TableRow] = &[
    TableRow {
        id: "2a",
        twice_s: 1,
        leaves: 2,
        left_projection: 1,
        terms: &[(1, 2, &["-1,1", "1,-1"])],
        printed_entanglement: 1.0,
    },
    TableRow {
        id: "2b",
        twice_s: 1,
        leaves: 3,
        left_projection: 1,
        terms: &[(1, 3, &["-1,-1,1", "-1,1,-1", "1,-1,-1"])],
        printed_entanglement: 0.9183,
    },
    TableRow {
        id: "2c",
        twice_s: 1,
        leaves: 4,
        left_projection: 1,
        terms: &[(1, 4, &["1,-1,-1,-1", "-1,1,-1,-1", "-1,-1,1,-1", "-1,-1,-1,1"])],
        printed_entanglement: 0.8113,
    },
    TableRow {
        id: "3a",
        twice_s: 2,
        leaves: 2,
        left_projection: 0,
        terms: &[(1, 2, &["0,-1", "-1,0"])],
        printed_entanglement: 1.0,
    },
    TableRow {
        id: "3b",
        twice_s: 2,
        leaves: 3,
        left_projection: 0,
        terms: &[(1, 3, &["0,-1,-1", "-1,0,-1", "-1,-1,0"])],
        printed_entanglement: 0.9183,
    },
    TableRow {
        id: "3c",
        twice_s: 2,
        leaves: 4,
        left_projection: 0,
        terms: &[(1, 4, &["0,-1,-1,-1", "-1,0,-1,-1", "-1,-1,0,-1", "-1,-1,-1,0"])],
        printed_entanglement: 0.8113,
    },
    TableRow {
        id: "3d",
        twice_s: 2,
        leaves: 2,
        left_projection: 2,
        terms: &[(2, 3, &["0,0"]), (1, 6, &["-1,1", "1,-1"])],
        printed_entanglement: 0.8072,
    },
    TableRow {
        id: "3e",
        twice_s: 2,
        leaves: 3,
        left_projection: 2,
        terms: &[
            (4, 15, &["-1,0,0", "0,-1,0", "0,0,-1"]),
            (1, 15, &["1,-1,-1", "-1,1,-1", "-1,-1,1"]),
        ],
        printed_entanglement: 0.7264,
    },
    TableRow {
        id: "3f",
        twice_s: 2,
        leaves: 4,
        left_projection: 2,
        terms: &[
            (
                1,
                7,
                &["0,0,-1,-1", "0,-1,0,-1", "0,-1,-1,0", "-1,0,0,-1", "-1,0,-1,0", "-1,-1,0,0"],
            ),
            (1, 28, &["1,-1,-1,-1", "-1,1,-1,-1", "-1,-1,1,-1", "-1,-1,-1,1"]),
        ],
        printed_entanglement: 0.5152,
    },
    TableRow {
        id: "spin3half-n2",
        twice_s: 3,
        leaves: 2,
        left_projection: -1,
        terms: &[(1, 2, &["-1,-3", "-3,-1"])],
        printed_entanglement: 1.0,
    },
    TableRow {
        id: "spin3half-n3",
        twice_s: 3,
        leaves: 3,
        left_projection: -1,
        terms: &[(1, 3, &["-1,-3,-3", "-3,-1,-3", "-3,-3,-1"])],
        printed_entanglement: 0.9183,
    },
    TableRow {
        id: "spin3half-n4",
        twice_s: 3,
        leaves: 4,
        left_projection: -1,
        terms: &[(1, 4, &["-1,-3,-3,-3", "-3,-1,-3,-3", "-3,-3,-1,-3", "-3,-3,-3,-1"])],
        printed_entanglement: 0.8113,
    },
    TableRow {
        id: "4a",
        twice_s: 3,
        leaves: 2,
        left_projection: 1,
        terms: &[(3, 5, &["-1,-1"]), (1, 5, &["1,-3", "-3,1"])],
        printed_entanglement: 0.9021,
    },
    TableRow {
        id: "4b",
        twice_s: 3,
        leaves: 3,
        left_projection: 1,
        terms: &[
            (1, 4, &["-1,-1,-3", "-1,-3,-1", "-3,-1,-1"]),
            (1, 12, &["1,-3,-3", "-3,1,-3", "-3,-3,1"]),
        ],
        printed_entanglement: 0.7080,
    },
    TableRow {
        id: "4c",
        twice_s: 3,
        leaves: 4,
        left_projection: 1,
        terms: &[
            (
                3,
                22,
                &[
                    "-1,-1,-3,-3",
                    "-1,-3,-1,-3",
                    "-3,-3,-1,-1",
                    "-1,-3,-3,-1",
                    "-3,-1,-1,-3",
                    "-3,-1,-3,-1",
                ],
            ),
            (1, 22, &["1,-3,-3,-3", "-3,1,-3,-3", "-3,-3,1,-3", "-3,-3,-3,1"]),
        ],
        printed_entanglement: 0.4997,
    },
    TableRow {
        id: "4d",
        twice_s: 3,
        leaves: 2,
        left_projection: 3,
        terms: &[(9, 20, &["1,-1", "-1,1"]), (1, 20, &["3,-3", "-3,3"])],
        printed_entanglement: 0.9763,
    },
    TableRow {
        id: "4e",
        twice_s: 3,
        leaves: 3,
        left_projection: 3,
        terms: &[
            (27, 85, &["-1,-1,-1"]),
            (
                9,
                85,
                &["-3,-1,1", "1,-1,-3", "1,-3,-1", "-1,1,-3", "-1,-3,1", "-3,1,-1"],
            ),
            (1, 85, &["3,-3,-3", "-3,3,-3", "-3,-3,3"]),
        ],
        printed_entanglement: 0.6297,
    },
    TableRow {
        id: "4f",
        twice_s: 3,
        leaves: 4,
        left_projection: 3,
        terms: &[
            (27, 220, &["-1,-1,-1,-3", "-1,-1,-3,-1", "-1,-3,-1,-1", "-3,-1,-1,-1"]),
            (
                9,
                220,
                &[
                    "1,-1,-3,-3",
                    "1,-3,-1,-3",
                    "1,-3,-3,-1",
                    "-1,1,-3,-3",
                    "-1,-3,1,-3",
                    "-1,-3,-3,1",
                    "-3,1,-1,-3",
                    "-3,1,-3,-1",
                    "-3,-1,1,-3",
                    "-3,-1,-3,1",
                    "-3,-3,1,-1",
                    "-3,-3,-1,1",
                ],
            ),
            (1, 220, &["3,-3,-3,-3", "-3,3,-3,-3", "-3,-3,3,-3", "-3,-3,-3,3"]),
        ],
        printed_entanglement: 0.3889,
    },
];

pub fn table_row(id: &str) -> Option<&'static TableRow> {
    TABLE.iter().find(|r| r.id == id)
}

pub fn find_row(spin: SpinMagnitude, leaves: usize, excitations: usize) -> Option<&'static TableRow> {
    TABLE
        .iter()
        .find(|r| r.twice_s == spin.twice_s() && r.leaves == leaves && r.excitations() == excitations)
}

#[derive(Clone, Debug)]
pub struct ReferenceState {
    pub row: &'static TableRow,
    pub state: StateVector,
}

impl ReferenceState {
    pub fn label(&self) -> &'static str {
        self.row.id
    }

    pub fn block(&self) -> &Arc<Block> {
        self.state.block()
    }
}

/// Final state of a tabulated scenario, normalized to 1.
pub fn reference_final_state(
    spin: SpinMagnitude,
    leaves: usize,
    excitations: usize,
) -> Result<ReferenceState> {
    let row = find_row(spin, leaves, excitations).ok_or(DsapError::NotTabulated {
        twice_s: spin.twice_s(),
        leaves,
        excitations,
    })?;
    reference_for_row(row)
}

pub fn reference_for_row(row: &'static TableRow) -> Result<ReferenceState> {
    let spin = row.spin();
    let config = row.config();
    let block = Arc::new(Block::sector(&config, row.excitations())?);
    let low = spin.label_value(spin.lowest());
    let mut terms = Vec::new();
    for &(p, q, labels) in row.terms {
        let amp = Complex64::new((p as f64 / q as f64).sqrt(), 0.0);
        for leaves in labels {
            let state = BasisState::parse(spin, &format!("{low},{low},{leaves}"))?;
            terms.push((amp, state));
        }
    }
    let state = StateVector::from_terms(block, terms.iter().map(|(a, s)| (*a, s)))?.normalized();
    Ok(ReferenceState { row, state })
}

/// Spin-1/2 dark state `(nΩ_R|L⟩ − Ω_L Σ_j |R_j⟩) / √(n²Ω_R² + nΩ_L²)`.
pub fn spin_half_dark_state(config: &NetworkConfig, amps: PulseAmplitudes) -> Result<StateVector> {
    if config.spin != SpinMagnitude::HALF {
        return Err(DsapError::InvalidConfig("spin-1/2 dark state needs 2s = 1".into()));
    }
    let n = config.leaves;
    let block = Arc::new(Block::sector(config, 1)?);
    let excited = |site: usize| {
        let mut p = vec![-1; config.sites()];
        p[site] = 1;
        BasisState(p)
    };
    let norm = (n as f64 * n as f64 * amps.right.powi(2) + n as f64 * amps.left.powi(2)).sqrt();
    let mut terms = vec![(n as f64 * amps.right / norm, excited(LEFT))];
    for j in 0..n {
        terms.push((-amps.left / norm, excited(leaf_site(j))));
    }
    StateVector::from_terms(
        block,
        terms.iter().map(|(a, s)| (Complex64::new(*a, 0.0), s)),
    )
}

fn spin_one_two_leaf(
    config: &NetworkConfig,
    terms: &[(f64, [i32; 4])],
) -> Result<StateVector> {
    if config.spin != SpinMagnitude::ONE || config.leaves != 2 {
        return Err(DsapError::InvalidConfig(
            "this dark state is defined for 2s = 2 with two leaves".into(),
        ));
    }
    let block = Arc::new(Block::sector(config, 2)?);
    let states: Vec<(Complex64, BasisState)> = terms
        .iter()
        .map(|(a, m)| (Complex64::new(*a, 0.0), BasisState(m.iter().map(|x| 2 * x).collect())))
        .collect();
    Ok(StateVector::from_terms(block, states.iter().map(|(a, s)| (*a, s)))?.normalized())
}

/// The displayed two-excitation spin-1 dark-state formula for two leaves,
/// renormalized. It agrees with the true dark state only at the endpoints.
pub fn displayed_spin_one_dark_state(
    config: &NetworkConfig,
    amps: PulseAmplitudes,
) -> Result<StateVector> {
    let (l, r) = (amps.left, amps.right);
    spin_one_two_leaf(
        config,
        &[
            (2.0 * r * r, [1, -1, -1, -1]),
            (l * r, [0, -1, -1, 0]),
            (l * r, [0, -1, 0, -1]),
            (2.0 * l * l, [-1, -1, 0, 0]),
            (l * l, [-1, -1, 1, -1]),
            (l * l, [-1, -1, -1, 1]),
        ],
    )
}

/// Exact null vector of the exchange couplings in the spin-1, two-leaf,
/// two-excitation sector with M unexcited.
pub fn spin_one_dark_state(config: &NetworkConfig, amps: PulseAmplitudes) -> Result<StateVector> {
    let (l, r) = (amps.left, amps.right);
    spin_one_two_leaf(
        config,
        &[
            (6.0 * r * r, [1, -1, -1, -1]),
            (-3.0 * l * r, [0, -1, -1, 0]),
            (-3.0 * l * r, [0, -1, 0, -1]),
            (2.0 * l * l, [-1, -1, 0, 0]),
            (l * l, [-1, -1, 1, -1]),
            (l * l, [-1, -1, -1, 1]),
        ],
    )
}

/// Mean |amplitude| of the leaf configurations sharing one excitation pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SharingPattern {
    /// Per-leaf quanta, sorted descending.
    pub pattern: Vec<usize>,
    pub states: usize,
    pub mean_amplitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EgalitarianReport {
    /// Most even pattern first.
    pub patterns: Vec<SharingPattern>,
    /// Pairs `(more even, less even)` whose amplitudes are out of order.
    pub violations: Vec<(Vec<usize>, Vec<usize>)>,
}

impl EgalitarianReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `a` is at least as even as `b` (majorized by `b`).
pub fn more_even(a: &[usize], b: &[usize]) -> bool {
    let len = a.len().max(b.len());
    let (mut sa, mut sb) = (0usize, 0usize);
    for k in 0..len {
        sa += a.get(k).copied().unwrap_or(0);
        sb += b.get(k).copied().unwrap_or(0);
        if sa > sb {
            return false;
        }
    }
    sa == sb
}

pub fn egalitarian_check(state: &StateVector) -> Result<EgalitarianReport> {
    let block = state.block();
    let spin = block.spin();
    let lowest = spin.lowest();
    let residual = state.population_where(|s| {
        s.projections()[LEFT] != lowest || s.projections()[MIDDLE] != lowest
    });
    if residual > 1e-3 {
        return Err(DsapError::ResidualExcitation(residual));
    }

    let mut groups: BTreeMap<Vec<usize>, (usize, f64)> = BTreeMap::new();
    for (basis, amp) in block.states().iter().zip(state.amplitudes().iter()) {
        let p = basis.projections();
        if p[LEFT] != lowest || p[MIDDLE] != lowest {
            continue;
        }
        let mut pattern: Vec<usize> = basis.quanta(spin)[2..].to_vec();
        pattern.sort_unstable_by(|a, b| b.cmp(a));
        let entry = groups.entry(pattern).or_default();
        entry.0 += 1;
        entry.1 += amp.norm();
    }
    let mut patterns: Vec<SharingPattern> = groups
        .into_iter()
        .map(|(pattern, (n, sum))| SharingPattern {
            pattern,
            states: n,
            mean_amplitude: sum / n as f64,
        })
        .collect();
    // Lexicographically smaller descending patterns are more even.
    patterns.sort_by(|a, b| a.pattern.cmp(&b.pattern));

    let mut violations = Vec::new();
    for a in &patterns {
        for b in &patterns {
            if a.pattern != b.pattern
                && more_even(&a.pattern, &b.pattern)
                && a.mean_amplitude + 1e-9 < b.mean_amplitude
            {
                violations.push((a.pattern.clone(), b.pattern.clone()));
            }
        }
    }
    Ok(EgalitarianReport {
        patterns,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::HamiltonianTerms;
    use crate::network::initial_state;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn product_state_reduces_to_pure() {
        let c = NetworkConfig::new(SpinMagnitude::HALF, 2);
        let psi = initial_state(&c, 1).unwrap();
        let rho = partial_trace(&psi, &[leaf_site(0)]).unwrap();
        assert_eq!(rho.matrix[(0, 0)].re, 1.0);
        assert_eq!(von_neumann_entropy(&rho).unwrap(), 0.0);
    }

    #[test]
    fn bell_reduction() {
        let r = reference_final_state(SpinMagnitude::HALF, 2, 1).unwrap();
        let rho = partial_trace(&r.state, &[leaf_site(0)]).unwrap();
        assert!(close(rho.matrix[(0, 0)].re, 0.5, 1e-15));
        assert!(close(rho.matrix[(1, 1)].re, 0.5, 1e-15));
        assert!(rho.matrix[(0, 1)].norm() < 1e-15);
        assert!(close(von_neumann_entropy(&rho).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn row_3d_reduction_by_hand() {
        let r = reference_final_state(SpinMagnitude::ONE, 2, 2).unwrap();
        let rho = partial_trace(&r.state, &[leaf_site(0)]).unwrap();
        let diag: Vec<f64> = (0..3).map(|k| rho.matrix[(k, k)].re).collect();
        for (got, want) in diag.iter().zip([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]) {
            assert!(close(*got, want, 1e-14));
        }
        let e = entanglement_of_formation(&r.state, 0).unwrap();
        assert!(close(e, 1.251629, 1e-6), "{e}");
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy_of(&[1.0 / 3.0, 2.0 / 3.0]), 0.918296, 1e-6));
        assert_eq!(entropy_of(&[1.0, 0.0, -1e-17]), 0.0);
        assert!(close(entropy_of(&[0.25; 4]), 2.0, 1e-15));
    }

    #[test]
    fn trace_guard() {
        let c = NetworkConfig::new(SpinMagnitude::HALF, 2);
        let mut psi = initial_state(&c, 1).unwrap();
        psi.amplitudes_mut().scale_mut(2.0);
        let rho = partial_trace(&psi, &[0]).unwrap();
        assert!(matches!(von_neumann_entropy(&rho), Err(DsapError::TraceDeviation(_))));
    }

    #[test]
    fn bad_site_lists() {
        let c = NetworkConfig::new(SpinMagnitude::HALF, 2);
        let psi = initial_state(&c, 1).unwrap();
        assert!(partial_trace(&psi, &[]).is_err());
        assert!(partial_trace(&psi, &[2, 2]).is_err());
        assert!(partial_trace(&psi, &[9]).is_err());
        assert!(entanglement_of_formation(&psi, 2).is_err());
    }

    #[test]
    fn table_is_complete_and_normalized() {
        assert_eq!(TABLE.len(), 18);
        for row in TABLE {
            let r = reference_for_row(row).unwrap();
            assert!(close(r.state.norm(), 1.0, 1e-12), "{}", row.id);
            let listed: usize = row.terms.iter().map(|t| t.2.len()).sum();
            let support = r.state.populations().iter().filter(|p| **p > 0.0).count();
            assert_eq!(listed, support, "duplicate label in {}", row.id);
            let printed = row.printed_norm_squared();
            if row.id == "4e" {
                assert!(close(printed, 84.0 / 85.0, 1e-15));
            } else {
                assert!(close(printed, 1.0, 1e-14), "{}", row.id);
            }
        }
    }

    #[test]
    fn single_excitation_entanglement() {
        let expected = [1.0, 0.9183, 0.8113];
        for row in TABLE.iter().filter(|r| r.excitations() == 1) {
            let r = reference_for_row(row).unwrap();
            let e = entanglement_of_formation(&r.state, 0).unwrap();
            assert!(close(e, expected[row.leaves - 2], 5e-5), "{} {e}", row.id);
        }
    }

    #[test]
    fn reference_examples() {
        let r = reference_final_state(SpinMagnitude::HALF, 3, 1).unwrap();
        let a = r
            .state
            .amplitude(&BasisState::parse(SpinMagnitude::HALF, "-1,-1,-1,-1,1").unwrap());
        assert!(close(a.re, 1.0 / 3f64.sqrt(), 1e-15));

        let r = reference_final_state(SpinMagnitude::ONE, 4, 2).unwrap();
        let pops = r.state.populations();
        assert_eq!(pops.iter().filter(|p| close(**p, 1.0 / 7.0, 1e-14)).count(), 6);
        assert_eq!(pops.iter().filter(|p| close(**p, 1.0 / 28.0, 1e-14)).count(), 4);

        let s = SpinMagnitude::THREE_HALVES;
        let r = reference_final_state(s, 2, 3).unwrap();
        let a = r.state.amplitude(&BasisState::parse(s, "-3,-3,1,-1").unwrap());
        let b = r.state.amplitude(&BasisState::parse(s, "-3,-3,3,-3").unwrap());
        assert!(close(a.re, 3.0 / (2.0 * 5f64.sqrt()), 1e-15));
        assert!(close(b.re, 1.0 / (2.0 * 5f64.sqrt()), 1e-15));

        assert!(matches!(
            reference_final_state(SpinMagnitude::ONE, 5, 1),
            Err(DsapError::NotTabulated { .. })
        ));
    }

    #[test]
    fn complement_entropy_matches() {
        for row in TABLE {
            let r = reference_for_row(row).unwrap();
            let rest: Vec<usize> = (0..row.leaves + 2).filter(|&s| s != 2).collect();
            let a = von_neumann_entropy(&partial_trace(&r.state, &[2]).unwrap()).unwrap();
            let b = von_neumann_entropy(&partial_trace(&r.state, &rest).unwrap()).unwrap();
            assert!(close(a, b, 1e-10), "{}", row.id);
        }
    }

    #[test]
    fn rho_is_hermitian_psd_unit_trace() {
        for row in TABLE {
            let r = reference_for_row(row).unwrap();
            let rho = partial_trace(&r.state, &[2, 3]).unwrap();
            assert!(close(rho.trace(), 1.0, 1e-10));
            assert!(rho.hermiticity_residual() < 1e-15);
            assert!(rho.eigenvalues().iter().all(|&v| v > -1e-10 && v < 1.0 + 1e-10));
        }
    }

    #[test]
    fn spin_half_dark_state_is_null() {
        for n in 2..=4 {
            let c = NetworkConfig::new(SpinMagnitude::HALF, n);
            let amps = PulseAmplitudes { left: 0.3, right: 0.7 };
            let d = spin_half_dark_state(&c, amps).unwrap();
            assert!(close(d.norm(), 1.0, 1e-15));
            let terms = HamiltonianTerms::new(&c, d.block().clone()).unwrap();
            let hd = terms.apply(amps, d.amplitudes());
            let e = d.amplitudes().dotc(&hd).re;
            assert!((hd - d.amplitudes().map(|z| z * e)).norm() < 1e-14);
        }
    }

    #[test]
    fn eq5_vs_w2_overlap() {
        let c = NetworkConfig::new(SpinMagnitude::HALF, 2);
        let d = spin_half_dark_state(&c, PulseAmplitudes { left: 1.0, right: 1.0 }).unwrap();
        let w = reference_final_state(SpinMagnitude::HALF, 2, 1).unwrap();
        assert!(close(fidelity(&d, &w.state).unwrap(), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn spin_one_dark_states() {
        let c = NetworkConfig::new(SpinMagnitude::ONE, 2);
        let amps = PulseAmplitudes { left: 0.5, right: 0.5 };
        let exact = spin_one_dark_state(&c, amps).unwrap();
        let terms = HamiltonianTerms::new(&c, exact.block().clone()).unwrap();
        let h = terms.apply(amps, exact.amplitudes());
        let e = exact.amplitudes().dotc(&h).re;
        assert!((h - exact.amplitudes().map(|z| z * e)).norm() < 1e-14);

        let shown = displayed_spin_one_dark_state(&c, amps).unwrap();
        let f = fidelity(&exact, &shown).unwrap();
        assert!(f < 0.9, "{f}");

        for amps in [PulseAmplitudes { left: 0.0, right: 1.0 }, PulseAmplitudes { left: 1.0, right: 0.0 }] {
            let a = spin_one_dark_state(&c, amps).unwrap();
            let b = displayed_spin_one_dark_state(&c, amps).unwrap();
            assert!(close(fidelity(&a, &b).unwrap(), 1.0, 1e-14));
        }
        let end = spin_one_dark_state(&c, PulseAmplitudes { left: 1.0, right: 0.0 }).unwrap();
        let r = reference_final_state(SpinMagnitude::ONE, 2, 2).unwrap();
        assert!(close(fidelity(&end, &r.state).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn majorization() {
        assert!(more_even(&[1, 1], &[2]));
        assert!(!more_even(&[2], &[1, 1]));
        assert!(more_even(&[1, 1, 1], &[2, 1]));
        assert!(more_even(&[2, 1], &[3]));
        assert!(more_even(&[2, 2], &[3, 1]));
    }

    #[test]
    fn egalitarian_examples() {
        let r = reference_final_state(SpinMagnitude::ONE, 2, 2).unwrap();
        let rep = egalitarian_check(&r.state).unwrap();
        assert!(rep.passes());
        assert_eq!(rep.patterns[0].pattern, vec![1, 1]);
        assert!(close(rep.patterns[0].mean_amplitude, (2.0f64 / 3.0).sqrt(), 1e-14));
        assert!(close(rep.patterns[1].mean_amplitude, (1.0f64 / 6.0).sqrt(), 1e-14));

        let r = reference_final_state(SpinMagnitude::ONE, 3, 2).unwrap();
        let rep = egalitarian_check(&r.state).unwrap();
        assert!(close(rep.patterns[0].mean_amplitude, 2.0 / 15f64.sqrt(), 1e-14));

        let w = reference_final_state(SpinMagnitude::HALF, 4, 1).unwrap();
        let rep = egalitarian_check(&w.state).unwrap();
        assert_eq!(rep.patterns.len(), 1);
        assert!(rep.passes());

        let c = NetworkConfig::new(SpinMagnitude::ONE, 2);
        let start = initial_state(&c, 2).unwrap();
        assert!(matches!(egalitarian_check(&start), Err(DsapError::ResidualExcitation(_))));
    }

    #[test]
    fn egalitarian_detects_inversion() {
        let c = NetworkConfig::new(SpinMagnitude::ONE, 2);
        let block = Arc::new(Block::sector(&c, 2).unwrap());
        let s = SpinMagnitude::ONE;
        let states = [
            (0.2, BasisState::parse(s, "-1,-1,0,0").unwrap()),
            (0.9, BasisState::parse(s, "-1,-1,1,-1").unwrap()),
        ];
        let psi = StateVector::from_terms(
            block,
            states.iter().map(|(a, b)| (Complex64::new(*a, 0.0), b)),
        )
        .unwrap()
        .normalized();
        assert!(!egalitarian_check(&psi).unwrap().passes());
    }
}
