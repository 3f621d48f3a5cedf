//! Coined discrete-time walks over the arc space of a graph.
//!
//! Each vertex `v` owns `degree(v)` ports: one per neighbor in ascending
//! neighbor order, then the self loop if present. A step applies the coin
//! block of every vertex and then the flip-flop shift, which sends the arc
//! `v → w` to `w → v` and leaves loop arcs in place.

use nalgebra::SVD;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coin::{assemble_coin, BlockStepCoin, CoinPolicy};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexPair};
use crate::linalg::{norm_sqr, CMatrix, CVector, C64};

/// Default tolerance for exact transfer and periodicity claims.
pub const PST_TOL: f64 = 1e-9;
/// Default high-amplitude threshold.
pub const LAMBDA: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ArcSpace {
    /// `(from, to)` per arc; loop arcs have `from == to`.
    arcs: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    degrees: Vec<usize>,
}

impl ArcSpace {
    pub fn new(g: &Graph) -> Self {
        let mut arcs = Vec::new();
        let mut offsets = Vec::with_capacity(g.n());
        let mut degrees = Vec::with_capacity(g.n());
        for v in 0..g.n() {
            offsets.push(arcs.len());
            arcs.extend(g.neighbors(v).map(|w| (v, w)));
            if g.has_loop(v) {
                arcs.push((v, v));
            }
            degrees.push(arcs.len() - offsets[v]);
        }
        Self { arcs, offsets, degrees }
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    /// Arc indices of `v`'s ports, in port order.
    pub fn ports(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v] + self.degrees[v]
    }

    pub fn arc_index(&self, v: usize, port: usize) -> usize {
        debug_assert!(port < self.degrees[v]);
        self.offsets[v] + port
    }

    /// Port of `v` pointing at `w` (`w == v` selects the loop).
    pub fn port_towards(&self, v: usize, w: usize) -> Option<usize> {
        self.ports(v).position(|a| self.arcs[a].1 == w)
    }

    /// Flip-flop permutation: arc `i` is sent to arc `perm[i]`.
    pub fn flip_flop(&self) -> Vec<usize> {
        self.arcs
            .iter()
            .map(|&(v, w)| {
                let port = self.port_towards(w, v).expect("every arc has a reverse");
                self.arc_index(w, port)
            })
            .collect()
    }
}

/// Shift operator as a dense permutation matrix.
pub fn build_shift(g: &Graph) -> CMatrix {
    let space = ArcSpace::new(g);
    let perm = space.flip_flop();
    let mut s = CMatrix::zeros(space.len(), space.len());
    for (i, &j) in perm.iter().enumerate() {
        s[(j, i)] = C64::new(1.0, 0.0);
    }
    s
}

/// Amplitudes over the arc space.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub amplitudes: CVector,
}

impl WalkState {
    pub fn new(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    /// Places a coin configuration on the ports of `v`.
    pub fn at_vertex(space: &ArcSpace, v: usize, coin_state: &[C64]) -> Result<Self> {
        if v >= space.vertex_count() {
            return Err(Error::VertexOutOfRange { vertex: v, n: space.vertex_count() });
        }
        if coin_state.len() != space.degree(v) {
            return Err(Error::Dimension { expected: space.degree(v), got: coin_state.len() });
        }
        let mut amps = CVector::zeros(space.len());
        for (port, &a) in coin_state.iter().enumerate() {
            amps[space.arc_index(v, port)] = a;
        }
        Ok(Self { amplitudes: amps })
    }

    /// Equal magnitude and phase over every port of `v`.
    pub fn equal_superposition(space: &ArcSpace, v: usize) -> Result<Self> {
        let d = space.degree(v);
        if d == 0 {
            return Err(Error::Parameter(format!("vertex {v} has no ports")));
        }
        let a = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        Self::at_vertex(space, v, &vec![a; d])
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    /// Sum of `|α_{v,c}|²` over the ports of `v`.
    pub fn vertex_probability(&self, space: &ArcSpace, v: usize) -> f64 {
        space.ports(v).map(|a| self.amplitudes[a].norm_sqr()).sum()
    }

    pub fn coin_state(&self, space: &ArcSpace, v: usize) -> Vec<C64> {
        space.ports(v).map(|a| self.amplitudes[a]).collect()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &WalkState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

pub fn vertex_probability(state: &WalkState, space: &ArcSpace, v: usize) -> f64 {
    state.vertex_probability(space, v)
}

/// The one-step unitary `S·C`.
#[derive(Debug, Clone)]
pub struct StepOperator {
    space: ArcSpace,
    coin: BlockStepCoin,
    shift: Vec<usize>,
}

impl StepOperator {
    pub fn new(g: &Graph, policy: &CoinPolicy) -> Result<Self> {
        let coin = assemble_coin(g, policy)?;
        Ok(Self::from_coin(g, coin))
    }

    pub fn from_coin(g: &Graph, coin: BlockStepCoin) -> Self {
        let space = ArcSpace::new(g);
        debug_assert_eq!(coin.dim(), space.len());
        let shift = space.flip_flop();
        Self { space, coin, shift }
    }

    pub fn space(&self) -> &ArcSpace {
        &self.space
    }

    pub fn coin(&self) -> &BlockStepCoin {
        &self.coin
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    /// Applies `S·C` to a raw amplitude vector.
    pub fn apply(&self, amps: &CVector) -> CVector {
        let mut tossed = CVector::zeros(amps.len());
        for (v, block) in self.coin.blocks.iter().enumerate() {
            let d = block.nrows();
            if d == 0 {
                continue;
            }
            let off = self.coin.offsets[v];
            let local = block * amps.rows(off, d);
            tossed.rows_mut(off, d).copy_from(&local);
        }
        let mut out = CVector::zeros(amps.len());
        for (i, &j) in self.shift.iter().enumerate() {
            out[j] = tossed[i];
        }
        out
    }

    /// Dense `S·C`.
    pub fn dense(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            let mut e = CVector::zeros(n);
            e[k] = C64::new(1.0, 0.0);
            m.set_column(k, &self.apply(&e));
        }
        m
    }
}

pub fn step(state: &WalkState, op: &StepOperator) -> Result<WalkState> {
    if state.amplitudes.len() != op.dim() {
        return Err(Error::Dimension { expected: op.dim(), got: state.amplitudes.len() });
    }
    Ok(WalkState::new(op.apply(&state.amplitudes)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferParams {
    pub t_max: usize,
    pub lambda: f64,
    pub pst_tol: f64,
    /// Permit initial states with amplitude away from the source vertex.
    pub allow_off_source: bool,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self { t_max: 100, lambda: LAMBDA, pst_tol: PST_TOL, allow_off_source: false }
    }
}

impl TransferParams {
    pub fn with_t_max(t_max: usize) -> Self {
        Self { t_max, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::Parameter("t_max must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Parameter(format!("λ must lie in (0, 1] (got {})", self.lambda)));
        }
        if !(self.pst_tol >= 0.0) {
            return Err(Error::Parameter("pst_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of running one walk and watching a vertex pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub pair: VertexPair,
    /// Target probability at steps `0..=t_max`.
    pub target_probability: Vec<f64>,
    /// Source probability at steps `0..=t_max`.
    pub source_probability: Vec<f64>,
    pub pst_steps: Vec<usize>,
    /// Smallest `T ≥ 1` whose full state has fidelity `≥ 1 − pst_tol` with the start.
    pub strict_period: Option<usize>,
    /// Smallest `T ≥ 1` with all probability back on the source vertex.
    pub positional_period: Option<usize>,
    pub max_probability: f64,
    pub max_step: usize,
    pub lambda: f64,
    pub high_amplitude: bool,
    pub pst_tol: f64,
}

/// Runs the walk from `init` and reports transfer and periodicity.
pub fn detect_transfer(
    g: &Graph,
    policy: &CoinPolicy,
    init: &WalkState,
    pair: VertexPair,
    params: &TransferParams,
) -> Result<TransferReport> {
    let op = StepOperator::new(g, policy)?;
    detect_transfer_with(&op, init, pair, params)
}

pub fn detect_transfer_with(
    op: &StepOperator,
    init: &WalkState,
    pair: VertexPair,
    params: &TransferParams,
) -> Result<TransferReport> {
    params.validate()?;
    let space = op.space();
    for v in [pair.source, pair.target] {
        if v >= space.vertex_count() {
            return Err(Error::VertexOutOfRange { vertex: v, n: space.vertex_count() });
        }
    }
    if init.amplitudes.len() != op.dim() {
        return Err(Error::Dimension { expected: op.dim(), got: init.amplitudes.len() });
    }
    let norm = init.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    if !params.allow_off_source {
        let off: f64 = 1.0 - init.vertex_probability(space, pair.source);
        if off > 1e-12 {
            return Err(Error::Parameter(format!(
                "initial state has probability {off:e} away from source vertex {}",
                pair.source
            )));
        }
    }

    let tol = params.pst_tol;
    let mut target_probability = Vec::with_capacity(params.t_max + 1);
    let mut source_probability = Vec::with_capacity(params.t_max + 1);
    let mut pst_steps = Vec::new();
    let (mut strict_period, mut positional_period) = (None, None);
    let mut state = init.clone();
    target_probability.push(state.vertex_probability(space, pair.target));
    source_probability.push(state.vertex_probability(space, pair.source));
    for t in 1..=params.t_max {
        state = WalkState::new(op.apply(&state.amplitudes));
        let p_target = state.vertex_probability(space, pair.target);
        let p_source = state.vertex_probability(space, pair.source);
        if p_target >= 1.0 - tol {
            pst_steps.push(t);
        }
        if strict_period.is_none() && init.fidelity(&state) >= 1.0 - tol {
            strict_period = Some(t);
        }
        if positional_period.is_none() && p_source >= 1.0 - tol {
            positional_period = Some(t);
        }
        target_probability.push(p_target);
        source_probability.push(p_source);
    }
    let (max_step, max_probability) = target_probability
        .iter()
        .copied()
        .enumerate()
        .skip(1)
        .fold((0, f64::NEG_INFINITY), |best, (t, p)| if p > best.1 { (t, p) } else { best });
    Ok(TransferReport {
        pair,
        target_probability,
        source_probability,
        pst_steps,
        strict_period,
        positional_period,
        max_probability,
        max_step,
        lambda: params.lambda,
        high_amplitude: max_probability >= params.lambda,
        pst_tol: tol,
    })
}

/// Haar-random unit vectors in `ℂ^d`: normalized vectors of independent
/// standard complex Gaussians, reproducible from `seed`.
pub fn haar_states(d: usize, count: usize, seed: u64) -> Result<Vec<CVector>> {
    if d == 0 || count == 0 {
        return Err(Error::Parameter("haar_states needs d ≥ 1 and count ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| haar_vector(d, &mut rng)).collect())
}

pub(crate) fn haar_vector<R: rand::Rng>(d: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(d, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        let norm = norm_sqr(&v).sqrt();
        if norm > 1e-300 {
            return v.unscale(norm);
        }
    }
}

/// Target-from-source blocks of `(S·C)^T` for `T = 0..=t_max`: block `T` maps
/// a coin state on the source ports to the target-port amplitudes after `T`
/// steps.
pub fn transfer_blocks(op: &StepOperator, pair: VertexPair, t_max: usize) -> Vec<CMatrix> {
    let space = op.space();
    let src = space.ports(pair.source);
    let tgt = space.ports(pair.target);
    let mut columns: Vec<CVector> = src
        .clone()
        .map(|a| {
            let mut e = CVector::zeros(op.dim());
            e[a] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    let extract = |cols: &[CVector]| CMatrix::from_fn(tgt.len(), cols.len(), |i, j| cols[j][tgt.start + i]);
    let mut blocks = Vec::with_capacity(t_max + 1);
    blocks.push(extract(&columns));
    for _ in 0..t_max {
        for col in columns.iter_mut() {
            *col = op.apply(col);
        }
        blocks.push(extract(&columns));
    }
    blocks
}

/// Largest and smallest singular values of a transfer block.
pub fn singular_range(block: &CMatrix) -> (f64, f64) {
    if block.is_empty() {
        return (0.0, 0.0);
    }
    let svd = SVD::new(block.clone(), false, false);
    let s = &svd.singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    // A wide block (more source than target ports) has a nontrivial kernel.
    let min = if block.ncols() > block.nrows() { 0.0 } else { s.iter().copied().fold(f64::INFINITY, f64::min) };
    (max, min)
}

/// Steps `1..=t_max` at which some source coin state transfers perfectly.
pub fn exact_pst_steps(op: &StepOperator, pair: VertexPair, t_max: usize, tol: f64) -> Vec<usize> {
    transfer_blocks(op, pair, t_max)
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, b)| singular_range(b).0 >= 1.0 - tol)
        .map(|(t, _)| t)
        .collect()
}

/// Best transfer over Haar-sampled source coin states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub max_probability: f64,
    pub max_step: usize,
    /// Fraction of samples whose best target probability reaches `λ`.
    pub fraction_over_lambda: f64,
}

pub fn max_transfer_scan(
    g: &Graph,
    policy: &CoinPolicy,
    pair: VertexPair,
    samples: usize,
    t_max: usize,
    seed: u64,
    lambda: f64,
) -> Result<ScanResult> {
    pair.check(g)?;
    let op = StepOperator::new(g, policy)?;
    max_transfer_scan_with(&op, pair, samples, t_max, seed, lambda)
}

pub fn max_transfer_scan_with(
    op: &StepOperator,
    pair: VertexPair,
    samples: usize,
    t_max: usize,
    seed: u64,
    lambda: f64,
) -> Result<ScanResult> {
    if t_max == 0 {
        return Err(Error::Parameter("t_max must be at least 1".into()));
    }
    let d = op.space().degree(pair.source);
    let blocks = transfer_blocks(op, pair, t_max);
    let states = haar_states(d, samples, seed)?;
    let per_sample: Vec<(f64, usize)> = states
        .par_iter()
        .map(|psi| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (t, b) in blocks.iter().enumerate().skip(1) {
                let p = norm_sqr(&(b * psi));
                if p > best.0 {
                    best = (p, t);
                }
            }
            best
        })
        .collect();
    let (max_probability, max_step) =
        per_sample.iter().copied().fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let over = per_sample.iter().filter(|(p, _)| *p >= lambda).count();
    Ok(ScanResult { max_probability, max_step, fraction_over_lambda: over as f64 / samples as f64 })
}
