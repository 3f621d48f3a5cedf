//! Density-matrix walks with projective dephasing, and classical references.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtqw::{ArcSpace, StepOperator, WalkState};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexPair};
use crate::linalg::{c, CMatrix, CVector, C64};

/// Hermitian, trace-one state over the arc basis or the vertex basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::NotSquare { rows: rho.nrows(), cols: rho.ncols() });
        }
        Ok(Self { rho })
    }

    pub fn pure(psi: &CVector) -> Self {
        Self { rho: psi * psi.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * c(0.5);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.rho[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).collect()
    }

    /// Probability on each vertex of an arc-basis state.
    pub fn vertex_marginals(&self, space: &ArcSpace) -> Vec<f64> {
        (0..space.vertex_count()).map(|v| space.ports(v).map(|a| self.rho[(a, a)].re).sum()).collect()
    }
}

/// Which basis the environment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseBasis {
    Coin,
    Position,
    Both,
}

impl fmt::Display for NoiseBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseBasis::Coin => "coin",
            NoiseBasis::Position => "position",
            NoiseBasis::Both => "both",
        })
    }
}

impl FromStr for NoiseBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coin" => Ok(NoiseBasis::Coin),
            "position" => Ok(NoiseBasis::Position),
            "both" => Ok(NoiseBasis::Both),
            _ => Err(Error::Parameter(format!("unknown noise basis {s:?} (expected coin, position or both)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub basis: NoiseBasis,
    pub rate: f64,
}

impl NoiseModel {
    pub fn new(basis: NoiseBasis, rate: f64) -> Self {
        Self { basis, rate }
    }
}

/// Projectors, stored as index groups: each group spans one diagonal
/// projector `P_j = Σ_{a ∈ group} |a⟩⟨a|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    groups: Vec<Vec<usize>>,
    /// `label[a]` is the group holding basis index `a`.
    label: Vec<usize>,
}

impl ProjectorSet {
    fn from_groups(dim: usize, groups: Vec<Vec<usize>>) -> Self {
        let mut label = vec![usize::MAX; dim];
        for (j, g) in groups.iter().enumerate() {
            for &a in g {
                label[a] = j;
            }
        }
        debug_assert!(label.iter().all(|&l| l != usize::MAX));
        Self { groups, label }
    }

    /// Discrete-walk projectors. Coin: one projector per port index, summed
    /// over the vertices that have that port. Position: one per vertex block.
    /// Both: one per arc.
    pub fn for_arcs(space: &ArcSpace, basis: NoiseBasis) -> Self {
        let dim = space.len();
        let groups = match basis {
            NoiseBasis::Position => (0..space.vertex_count())
                .map(|v| space.ports(v).collect())
                .filter(|g: &Vec<usize>| !g.is_empty())
                .collect(),
            NoiseBasis::Both => (0..dim).map(|a| vec![a]).collect(),
            NoiseBasis::Coin => {
                let max_degree = (0..space.vertex_count()).map(|v| space.degree(v)).max().unwrap_or(0);
                (0..max_degree)
                    .map(|port| {
                        (0..space.vertex_count())
                            .filter(|&v| port < space.degree(v))
                            .map(|v| space.arc_index(v, port))
                            .collect()
                    })
                    .collect()
            }
        };
        Self::from_groups(dim, groups)
    }

    /// Continuous-walk projectors: one per vertex (every basis collapses to
    /// position, as there is no coin).
    pub fn for_vertices(n: usize) -> Self {
        Self::from_groups(n, (0..n).map(|v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dense(&self, j: usize) -> CMatrix {
        let n = self.label.len();
        let mut p = CMatrix::zeros(n, n);
        for &a in &self.groups[j] {
            p[(a, a)] = c(1.0);
        }
        p
    }

    /// `Σ_j P_j ρ P_j`: keeps the entries whose row and column share a group.
    pub fn dephase(&self, rho: &CMatrix) -> CMatrix {
        CMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| {
            if self.label[i] == self.label[j] {
                rho[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

fn check_rate(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("decoherence probability must lie in [0, 1] (got {p})")));
    }
    Ok(())
}

/// One noisy step: `(1 − p)·UρU† + p·Σ_j P_j UρU† P_j` with `U = S·C`.
pub fn decohere_step(rho: &DensityMatrix, op: &StepOperator, noise: &NoiseModel) -> Result<DensityMatrix> {
    check_rate(noise.rate)?;
    let projectors = ProjectorSet::for_arcs(op.space(), noise.basis);
    decohere_step_with(rho, &op.dense(), &projectors, noise.rate)
}

/// As [`decohere_step`] with a precomputed dense `U` and projector set.
pub fn decohere_step_with(
    rho: &DensityMatrix,
    u: &CMatrix,
    projectors: &ProjectorSet,
    p: f64,
) -> Result<DensityMatrix> {
    if rho.dim() != u.nrows() {
        return Err(Error::Dimension { expected: u.nrows(), got: rho.dim() });
    }
    let evolved = u * &rho.rho * u.adjoint();
    let out = if p == 0.0 { evolved } else { evolved.scale(1.0 - p) + projectors.dephase(&evolved).scale(p) };
    Ok(DensityMatrix { rho: out })
}

/// Runs `steps` noisy steps, returning the states at `0..=steps`.
pub fn decohere_walk(
    init: &WalkState,
    op: &StepOperator,
    noise: &NoiseModel,
    steps: usize,
) -> Result<Vec<DensityMatrix>> {
    check_rate(noise.rate)?;
    let u = op.dense();
    let projectors = ProjectorSet::for_arcs(op.space(), noise.basis);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(DensityMatrix::pure(&init.amplitudes));
    for _ in 0..steps {
        let next = decohere_step_with(out.last().expect("non-empty"), &u, &projectors, noise.rate)?;
        out.push(next);
    }
    Ok(out)
}

/// Default integrator step.
pub const CT_DT: f64 = 1e-3;
/// Largest accepted trace drift of the continuous integrator.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

fn lindblad_rhs(a: &CMatrix, rho: &CMatrix, projectors: &ProjectorSet, p: f64) -> CMatrix {
    let i = C64::new(0.0, 1.0);
    let commutator = a * rho - rho * a;
    let mut d = commutator * (-i);
    if p != 0.0 {
        d += (projectors.dephase(rho) - rho).scale(p);
    }
    d
}

fn rk4(a: &CMatrix, rho0: &CMatrix, projectors: &ProjectorSet, p: f64, t: f64, dt: f64) -> CMatrix {
    let steps = (t / dt).ceil().max(0.0) as usize;
    if steps == 0 {
        return rho0.clone();
    }
    let h = t / steps as f64;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = lindblad_rhs(a, &rho, projectors, p);
        let k2 = lindblad_rhs(a, &(&rho + &k1 * c(h / 2.0)), projectors, p);
        let k3 = lindblad_rhs(a, &(&rho + &k2 * c(h / 2.0)), projectors, p);
        let k4 = lindblad_rhs(a, &(&rho + &k3 * c(h)), projectors, p);
        rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
    }
    rho
}

/// Integrates `dρ/dt = −i[A, ρ] − pρ + p Σ_j P_j ρ P_j` to time `t` with
/// classical RK4, halving `dt` until the trace drifts by less than
/// [`TRACE_DRIFT_TOL`] and every population lies in `[0, tr ρ]`. Projectors
/// are the vertex projectors.
pub fn decohere_ct(g: &Graph, rho0: &DensityMatrix, rate: f64, t: f64, dt: f64) -> Result<DensityMatrix> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("integrator step must be positive (got {dt})")));
    }
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time must be non-negative (got {t})")));
    }
    if !(rate >= 0.0) {
        return Err(Error::Parameter(format!("decoherence rate must be non-negative (got {rate})")));
    }
    if rho0.dim() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: rho0.dim() });
    }
    let a = g.adjacency().map(c);
    let projectors = ProjectorSet::for_vertices(g.n());
    let start = rho0.trace();
    let mut h = dt;
    for _ in 0..8 {
        let rho = rk4(&a, &rho0.rho, &projectors, rate, t, h);
        // RK4 keeps the trace exactly, so an unstable step shows up in the
        // populations instead.
        let bounded = rho.diagonal().iter().all(|z| z.re > -TRACE_DRIFT_TOL && z.re < start + TRACE_DRIFT_TOL);
        if bounded && (rho.trace().re - start).abs() < TRACE_DRIFT_TOL {
            return Ok(DensityMatrix { rho });
        }
        h /= 2.0;
    }
    Err(Error::Tolerance(format!("integrator did not settle within {TRACE_DRIFT_TOL:e} even at dt = {h:e}")))
}

fn column_stochastic(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for v in 0..n {
        let d = g.degree(v);
        if d == 0 {
            m[(v, v)] = 1.0;
            continue;
        }
        for w in g.neighbors(v) {
            m[(w, v)] += 1.0 / d as f64;
        }
        if g.has_loop(v) {
            m[(v, v)] += 1.0 / d as f64;
        }
    }
    m
}

/// Simple random walk: each step moves to a uniformly chosen incident edge
/// (a loop counts as one). Returns distributions at `0..=steps`.
pub fn classical_walk(g: &Graph, start: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    if start.len() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: start.len() });
    }
    let total: f64 = start.iter().sum();
    if (total - 1.0).abs() > 1e-12 || start.iter().any(|&x| x < 0.0) {
        return Err(Error::Parameter(format!("start distribution must be a probability vector (sum {total})")));
    }
    let m = column_stochastic(g);
    let mut p = DVector::from_column_slice(start);
    let mut out = vec![p.as_slice().to_vec()];
    for _ in 0..steps {
        p = &m * p;
        out.push(p.as_slice().to_vec());
    }
    Ok(out)
}

/// Classical limit of the coined walk under full dephasing: a Markov chain on
/// arcs with transition probabilities `|⟨b|S·C|a⟩|²`. The first step acts on
/// the amplitudes of `init`, later steps on probabilities. Returns vertex
/// marginals at `0..=steps`.
pub fn arc_markov_walk(op: &StepOperator, init: &WalkState, steps: usize) -> Vec<Vec<f64>> {
    let space = op.space();
    let u = op.dense();
    let m = u.map(|z| z.norm_sqr());
    let marginals = |arc: &DVector<f64>| -> Vec<f64> {
        (0..space.vertex_count()).map(|v| space.ports(v).map(|a| arc[a]).sum()).collect()
    };
    let mut out = vec![marginals(&init.amplitudes.map(|z| z.norm_sqr()))];
    if steps == 0 {
        return out;
    }
    let mut arc = (&u * &init.amplitudes).map(|z| z.norm_sqr());
    out.push(marginals(&arc));
    for _ in 1..steps {
        arc = &m * arc;
        out.push(marginals(&arc));
    }
    out
}

/// One row of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rate: f64,
    pub probability: f64,
}

/// Target probability after `steps` noisy steps for each rate in `rates`.
pub fn target_probability_vs_rate(
    op: &StepOperator,
    init: &WalkState,
    pair: VertexPair,
    basis: NoiseBasis,
    rates: &[f64],
    steps: usize,
) -> Result<Vec<RatePoint>> {
    for &p in rates {
        check_rate(p)?;
    }
    let u = op.dense();
    let space = op.space();
    let projectors = ProjectorSet::for_arcs(space, basis);
    rates
        .par_iter()
        .map(|&rate| {
            let mut rho = DensityMatrix::pure(&init.amplitudes);
            for _ in 0..steps {
                rho = decohere_step_with(&rho, &u, &projectors, rate)?;
            }
            Ok(RatePoint { rate, probability: rho.vertex_marginals(space)[pair.target] })
        })
        .collect()
}

/// Continuous-walk analogue: target probability at time `t` for each rate.
pub fn target_probability_vs_rate_ct(
    g: &Graph,
    pair: VertexPair,
    rates: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<RatePoint>> {
    pair.check(g)?;
    let mut start = CVector::zeros(g.n());
    start[pair.source] = c(1.0);
    let rho0 = DensityMatrix::pure(&start);
    rates
        .par_iter()
        .map(|&rate| {
            let rho = decohere_ct(g, &rho0, rate, t, dt)?;
            Ok(RatePoint { rate, probability: rho.rho[(pair.target, pair.target)].re })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinPolicy;
    use crate::graph::{build, FamilySpec};
    use crate::linalg::max_abs_diff;

    fn c4_walk() -> (Graph, StepOperator, WalkState) {
        let g = build(&FamilySpec::Cycle(4)).unwrap();
        let op = StepOperator::new(&g, &CoinPolicy::O2).unwrap();
        let init = WalkState::equal_superposition(op.space(), 0).unwrap();
        (g, op, init)
    }

    #[test]
    fn zero_rate_is_unitary() {
        let (_, op, init) = c4_walk();
        let rho = DensityMatrix::pure(&init.amplitudes);
        let out = decohere_step(&rho, &op, &NoiseModel::new(NoiseBasis::Both, 0.0)).unwrap();
        let psi = op.apply(&init.amplitudes);
        assert!(max_abs_diff(&out.rho, &(&psi * psi.adjoint())) < 1e-15);
    }

    #[test]
    fn full_dephasing_kills_coherences() {
        let (_, op, init) = c4_walk();
        let rho = DensityMatrix::pure(&init.amplitudes);
        let out = decohere_step(&rho, &op, &NoiseModel::new(NoiseBasis::Both, 1.0)).unwrap();
        assert_eq!(out.max_off_diagonal(), 0.0);
    }

    #[test]
    fn projector_sets_are_complete() {
        let g = build(&FamilySpec::k2_join(FamilySpec::Cycle(3))).unwrap();
        let space = ArcSpace::new(&g);
        for basis in [NoiseBasis::Coin, NoiseBasis::Position, NoiseBasis::Both] {
            let set = ProjectorSet::for_arcs(&space, basis);
            let mut sum = CMatrix::zeros(space.len(), space.len());
            for j in 0..set.len() {
                let p = set.dense(j);
                assert!(max_abs_diff(&(&p * &p), &p) == 0.0);
                sum += p;
            }
            assert_eq!(sum, CMatrix::identity(space.len(), space.len()));
        }
    }

    #[test]
    fn classical_c4_two_steps() {
        let g = build(&FamilySpec::Cycle(4)).unwrap();
        let d = classical_walk(&g, &[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(d[2], vec![0.5, 0.0, 0.5, 0.0]);
        let k2 = build(&FamilySpec::Complete(2)).unwrap();
        assert_eq!(classical_walk(&k2, &[1.0, 0.0], 1).unwrap()[1], vec![0.0, 1.0]);
    }

    #[test]
    fn identity_is_stationary_without_noise() {
        let g = build(&FamilySpec::Cycle(5)).unwrap();
        let rho = DensityMatrix::new(CMatrix::identity(5, 5) * c(0.2)).unwrap();
        let a = g.adjacency().map(c);
        let d = lindblad_rhs(&a, &rho.rho, &ProjectorSet::for_vertices(5), 0.0);
        assert!(d.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn noise_basis_parses() {
        assert_eq!("Coin".parse::<NoiseBasis>().unwrap(), NoiseBasis::Coin);
        assert!("spin".parse::<NoiseBasis>().is_err());
    }
}
