//! Cycle-variant enumeration, PST search, robustness and interpolation sweeps.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canon::{canonical_key_ordered, CanonicalKey};
use crate::coin::{grover, interp_grover, CoinPolicy, CoinSpec};
use crate::dtqw::{
    exact_pst_steps, max_transfer_scan_with, singular_range, transfer_blocks, ArcSpace, StepOperator, WalkState,
    LAMBDA, PST_TOL,
};
use crate::error::{Error, Result};
use crate::graph::{build, FamilySpec, Graph, VertexPair};
use crate::linalg::{c, norm_sqr, CMatrix, CVector, C64};

/// Largest number of nodes a variant may add.
pub const MAX_NEW_NODES: usize = 4;

/// An even cycle `C_base` plus new nodes `base, base + 1, …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantDescriptor {
    pub base: usize,
    /// Cycle vertices adjacent to each new node, ascending.
    pub attachments: Vec<Vec<usize>>,
    /// Edges among new nodes, numbered from 0.
    pub new_edges: Vec<(usize, usize)>,
}

impl VariantDescriptor {
    pub fn added(&self) -> usize {
        self.attachments.len()
    }

    pub fn pair(&self) -> VertexPair {
        VertexPair::new(0, self.base / 2)
    }

    pub fn graph(&self) -> Result<Graph> {
        let m = self.base;
        let mut edges: Vec<(usize, usize)> = (0..m).map(|v| (v, (v + 1) % m)).collect();
        for (k, cycle) in self.attachments.iter().enumerate() {
            for &v in cycle {
                edges.push((v, m + k));
            }
        }
        for &(i, j) in &self.new_edges {
            edges.push((m + i, m + j));
        }
        Graph::from_edges(m + self.added(), &edges)
    }

    /// Cycle vertices that gained an edge.
    pub fn touched(&self) -> BTreeSet<usize> {
        self.attachments.iter().flatten().copied().collect()
    }

    /// Additions reach the cycle only at the target, so transfer around the
    /// untouched cycle is guaranteed.
    pub fn is_trivial(&self) -> bool {
        self.touched().iter().all(|&v| v == self.base / 2)
    }

    pub fn modifies_only_antipodes(&self) -> bool {
        self.touched().iter().all(|&v| v == 0 || v == self.base / 2)
    }
}

/// A deduplicated variant with its graph and key.
#[derive(Debug, Clone)]
pub struct Variant {
    pub descriptor: VariantDescriptor,
    pub graph: Graph,
    pub key: CanonicalKey,
}

fn check_base(base: usize, max_new: usize) -> Result<()> {
    if base < 4 || base % 2 != 0 {
        return Err(Error::Parameter(format!("base cycle must be even and at least 4 (got {base})")));
    }
    if base > 16 {
        return Err(Error::Parameter(format!("base cycle too large to enumerate (got {base})")));
    }
    if max_new == 0 || max_new > MAX_NEW_NODES {
        return Err(Error::Parameter(format!("number of added nodes must be in 1..={MAX_NEW_NODES} (got {max_new})")));
    }
    Ok(())
}

/// Every descriptor before deduplication: each new node takes a nonempty
/// subset of the cycle (subsets listed in non-decreasing order to skip mere
/// relabelings of the new nodes), combined with every edge pattern among the
/// new nodes.
#[derive(Debug, Clone)]
pub struct RawVariants {
    base: usize,
    max_new: usize,
    masks: Vec<u32>,
    pattern: u32,
    done: bool,
}

pub fn enumerate_raw(base: usize, max_new: usize) -> Result<RawVariants> {
    check_base(base, max_new)?;
    Ok(RawVariants { base, max_new, masks: vec![1], pattern: 0, done: false })
}

impl RawVariants {
    fn pairs(k: usize) -> Vec<(usize, usize)> {
        (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
    }

    fn advance(&mut self) {
        let k = self.masks.len();
        self.pattern += 1;
        if self.pattern < 1 << Self::pairs(k).len() {
            return;
        }
        self.pattern = 0;
        let full = (1u32 << self.base) - 1;
        // Next non-decreasing sequence over 1..=full.
        match (0..k).rev().find(|&i| self.masks[i] < full) {
            Some(i) => {
                let v = self.masks[i] + 1;
                for m in &mut self.masks[i..] {
                    *m = v;
                }
            }
            None if k < self.max_new => self.masks = vec![1; k + 1],
            None => self.done = true,
        }
    }
}

impl Iterator for RawVariants {
    type Item = VariantDescriptor;

    fn next(&mut self) -> Option<VariantDescriptor> {
        if self.done {
            return None;
        }
        let attachments =
            self.masks.iter().map(|&mask| (0..self.base).filter(|&v| mask >> v & 1 == 1).collect()).collect();
        let new_edges = Self::pairs(self.masks.len())
            .into_iter()
            .enumerate()
            .filter(|(bit, _)| self.pattern >> bit & 1 == 1)
            .map(|(_, e)| e)
            .collect();
        let out = VariantDescriptor { base: self.base, attachments, new_edges };
        self.advance();
        Some(out)
    }
}

/// Variants of `C_base` with up to `max_new` added nodes, one per class of
/// graphs isomorphic under maps fixing the source `0` and the target
/// `base/2`. The first descriptor met in enumeration order represents its class.
pub fn enumerate_variants(base: usize, max_new: usize) -> Result<Vec<Variant>> {
    let mut seen: HashSet<CanonicalKey> = HashSet::new();
    let mut out = Vec::new();
    for descriptor in enumerate_raw(base, max_new)? {
        let graph = descriptor.graph()?;
        let pair = descriptor.pair();
        let key = canonical_key_ordered(&graph, &[pair.source, pair.target])?;
        if seen.insert(key.clone()) {
            out.push(Variant { descriptor, graph, key });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub samples: usize,
    pub t_max: usize,
    pub lambda: f64,
    pub pst_tol: f64,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { samples: 1500, t_max: 100, lambda: LAMBDA, pst_tol: PST_TOL, seed: 0 }
    }
}

/// One (variant, policy) cell of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub key: String,
    pub descriptor: VariantDescriptor,
    pub policy: String,
    pub best_p: f64,
    pub best_step: usize,
    pub pst: bool,
    /// Steps at which some source coin state transfers perfectly.
    pub pst_steps: Vec<usize>,
    /// Steps at which every source coin state transfers perfectly.
    #[serde(default)]
    pub all_states_steps: Vec<usize>,
    pub frac_over_lambda: f64,
    #[serde(default)]
    pub trivial: bool,
}

pub fn key_hex(key: &[u8]) -> String {
    key.iter().map(|b| format!("{b:02x}")).collect()
}

fn search_cell(variant: &Variant, policy: &CoinPolicy, params: &SearchParams) -> Result<SearchRecord> {
    let pair = variant.descriptor.pair();
    let op = StepOperator::new(&variant.graph, policy)?;
    let scan = max_transfer_scan_with(&op, pair, params.samples, params.t_max, params.seed, params.lambda)?;
    let blocks = transfer_blocks(&op, pair, params.t_max);
    let mut pst_steps = Vec::new();
    let mut all_states_steps = Vec::new();
    for (t, b) in blocks.iter().enumerate().skip(1) {
        let (hi, lo) = singular_range(b);
        if hi >= 1.0 - params.pst_tol {
            pst_steps.push(t);
        }
        if lo >= 1.0 - params.pst_tol {
            all_states_steps.push(t);
        }
    }
    Ok(SearchRecord {
        key: key_hex(&variant.key),
        descriptor: variant.descriptor.clone(),
        policy: policy.to_string(),
        best_p: scan.max_probability,
        best_step: scan.max_step,
        pst: !pst_steps.is_empty(),
        pst_steps,
        all_states_steps,
        frac_over_lambda: scan.fraction_over_lambda,
        trivial: variant.descriptor.is_trivial(),
    })
}

/// Runs every (variant, policy) cell, writing records to `sink` as JSON lines
/// in enumeration order, and returns them sorted by descending `best_p`.
/// Cells whose `(key, policy)` appears in `skip` are not run.
pub fn pst_search(
    variants: &[Variant],
    policies: &[CoinPolicy],
    params: &SearchParams,
    skip: &HashSet<(String, String)>,
    sink: Option<&mut dyn Write>,
) -> Result<Vec<SearchRecord>> {
    let cells: Vec<(&Variant, &CoinPolicy)> = variants
        .iter()
        .flat_map(|v| policies.iter().map(move |p| (v, p)))
        .filter(|(v, p)| !skip.contains(&(key_hex(&v.key), p.to_string())))
        .collect();
    let records: Vec<SearchRecord> = cells.par_iter().map(|(v, p)| search_cell(v, p, params)).collect::<Result<_>>()?;
    if let Some(out) = sink {
        for r in &records {
            let line = serde_json::to_string(r)?;
            writeln!(out, "{line}").map_err(|e| Error::Parameter(format!("writing records: {e}")))?;
        }
    }
    let mut sorted = records;
    sorted.sort_by(|a, b| b.best_p.total_cmp(&a.best_p));
    Ok(sorted)
}

/// Parses JSON-lines records, skipping blank lines.
pub fn read_records(text: &str) -> Result<Vec<SearchRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(Error::from)).collect()
}

/// Source coin state for a cycle vertex with one extra port (ports: two cycle
/// ports, then the extra one). After `Grover(3)` the cycle ports hold `x` and
/// `y` and the extra port is empty.
pub fn family_initial_state(x: C64, y: C64) -> Result<[C64; 3]> {
    let norm = x.norm_sqr() + y.norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(norm.sqrt()));
    }
    let first = (y * 2.0 - x) / 3.0;
    let second = (x * 2.0 - y) / 3.0;
    Ok([first, second, (first + second) * 2.0])
}

/// `C_m` with a pendant vertex `m` hung on the source `0`.
pub fn cycle_with_source_tail(m: usize) -> Result<Graph> {
    let mut edges: Vec<(usize, usize)> = (0..m).map(|v| (v, (v + 1) % m)).collect();
    edges.push((0, m));
    Graph::from_edges(m + 1, &edges)
}

/// Change to one or all ports of the equal superposition on `K̄₂ + Cₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Amplitude `1 − δ` on `port` (`None`: the last port).
    Defect { delta: f64, port: Option<usize> },
    /// Phase `e^{iθ}` on `port` (`None`: the last port).
    Phase { theta: f64, port: Option<usize> },
    /// Amplitude `1 − δ_k` on every port, `δ_k` uniform on `[0, 1]`.
    RandomDefect,
}

impl Perturbation {
    /// Perturbed, renormalized coin state on `n` ports.
    pub fn apply<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<C64>> {
        let mut amps = vec![c(1.0); n];
        match *self {
            Perturbation::Defect { delta, port } => {
                let k = port.unwrap_or(n - 1);
                check_port(k, n)?;
                amps[k] = c(1.0 - delta);
            }
            Perturbation::Phase { theta, port } => {
                let k = port.unwrap_or(n - 1);
                check_port(k, n)?;
                amps[k] = C64::from_polar(1.0, theta);
            }
            Perturbation::RandomDefect => {
                for a in amps.iter_mut() {
                    *a = c(1.0 - rng.random::<f64>());
                }
            }
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Parameter("perturbed state vanishes".into()));
        }
        Ok(amps.into_iter().map(|z| z / norm).collect())
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Perturbation::RandomDefect)
    }
}

fn check_port(k: usize, n: usize) -> Result<()> {
    if k >= n {
        return Err(Error::Parameter(format!("port {k} out of range for {n} ports")));
    }
    Ok(())
}

/// Step at which `K̄₂ + Cₙ` first transfers perfectly.
pub const ROBUST_STEP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub n: usize,
    pub perturbation: Perturbation,
    /// Target probability at the transfer step (mean over runs if random).
    pub probability: f64,
    pub runs: usize,
}

/// Target probability at step 6 on `K̄₂ + Cₙ` under Grover coins, for each
/// `(n, perturbation)`. Random cells average `runs` draws from a generator
/// seeded per cell.
pub fn robustness_sweep(
    ns: &[usize],
    perturbations: &[Perturbation],
    runs: usize,
    seed: u64,
) -> Result<Vec<RobustnessCell>> {
    if runs == 0 {
        return Err(Error::Parameter("runs must be at least 1".into()));
    }
    let cells: Vec<(usize, usize, Perturbation)> =
        ns.iter().enumerate().flat_map(|(i, &n)| perturbations.iter().map(move |&p| (i, n, p))).collect();
    let ops: BTreeMap<usize, (StepOperator, CMatrix)> = ns
        .iter()
        .map(|&n| {
            let g = build(&FamilySpec::k2_join(FamilySpec::Cycle(n)))?;
            let op = StepOperator::new(&g, &CoinPolicy::O2)?;
            let block = transfer_blocks(&op, VertexPair::new(0, 1), ROBUST_STEP).pop().expect("blocks");
            Ok((n, (op, block)))
        })
        .collect::<Result<_>>()?;
    cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(_, n, perturbation))| {
            let block = &ops[&n].1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let count = if perturbation.is_random() { runs } else { 1 };
            let mut total = 0.0;
            for _ in 0..count {
                let psi = CVector::from_vec(perturbation.apply(n, &mut rng)?);
                total += norm_sqr(&(block * psi));
            }
            Ok(RobustnessCell { n, perturbation, probability: total / count as f64, runs: count })
        })
        .collect()
}

/// Walk on the union of two edge sets in which the edges present only in the
/// second endpoint are switched on with strength `c`.
#[derive(Debug, Clone)]
pub struct Interpolation {
    pub from: Graph,
    pub to: Graph,
    /// Edges present only in `to`.
    pub tunneling: Vec<(usize, usize)>,
}

impl Interpolation {
    pub fn new(from: &Graph, to: &Graph) -> Result<Self> {
        if from.n() != to.n() {
            return Err(Error::Parameter(format!(
                "interpolation endpoints differ in size ({} vs {})",
                from.n(),
                to.n()
            )));
        }
        if !from.is_unweighted() || !to.is_unweighted() || from.has_any_loop() || to.has_any_loop() {
            return Err(Error::Parameter("interpolation endpoints must be simple unweighted graphs".into()));
        }
        let mut tunneling = Vec::new();
        for (i, j, _) in from.edges() {
            if !to.has_edge(i, j) {
                return Err(Error::Parameter(format!(
                    "edge ({i}, {j}) of the first endpoint is missing from the second"
                )));
            }
        }
        for (i, j, _) in to.edges() {
            if !from.has_edge(i, j) {
                tunneling.push((i, j));
            }
        }
        if tunneling.is_empty() {
            return Err(Error::Parameter("interpolation endpoints are identical".into()));
        }
        Ok(Self { from: from.clone(), to: to.clone(), tunneling })
    }

    /// The graph with tunneling edges at weight `c`.
    pub fn weighted(&self, coupling: f64) -> Result<Graph> {
        let mut a = self.from.adjacency().clone();
        for &(i, j) in &self.tunneling {
            a[(i, j)] = coupling;
            a[(j, i)] = coupling;
        }
        Graph::from_adjacency(a)
    }

    /// Step operator on the union graph with the interpolating coin at every
    /// vertex incident to a tunneling edge.
    pub fn step_operator(&self, coupling: f64) -> Result<StepOperator> {
        let g = &self.to;
        let space = ArcSpace::new(g);
        let mut coins = BTreeMap::new();
        for v in 0..g.n() {
            let d = g.degree(v);
            let tunnel_ports: Vec<usize> = (0..d)
                .filter(|&port| {
                    let (_, w) = space.arcs()[space.arc_index(v, port)];
                    !self.from.has_edge(v, w)
                })
                .collect();
            if tunnel_ports.is_empty() {
                continue;
            }
            let base = interp_grover(d, tunnel_ports.len(), coupling)?;
            // Normal ports first, then tunneling ones, each in port order.
            let order: Vec<usize> =
                (0..d).filter(|p| !tunnel_ports.contains(p)).chain(tunnel_ports.iter().copied()).collect();
            let mut placed = CMatrix::zeros(d, d);
            for (i, &pi) in order.iter().enumerate() {
                for (j, &pj) in order.iter().enumerate() {
                    placed[(pi, pj)] = base[(i, j)];
                }
            }
            coins.insert(v, CoinSpec::Custom(placed));
        }
        StepOperator::new(g, &CoinPolicy::O2.with_overrides(coins))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationPoint {
    pub n: usize,
    pub coupling: f64,
    pub probability: f64,
}

/// Target probability at `step` from the equal superposition at vertex 0 of
/// `K̄₂ + X`, for each `n` and coupling.
pub fn interpolation_sweep(
    endpoints: (&dyn Fn(usize) -> FamilySpec, &dyn Fn(usize) -> FamilySpec),
    couplings: &[f64],
    ns: &[usize],
    step: usize,
) -> Result<Vec<InterpolationPoint>> {
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| couplings.iter().map(move |&cp| (n, cp))).collect();
    let interps: BTreeMap<usize, Interpolation> = ns
        .iter()
        .map(|&n| {
            let from = build(&endpoints.0(n))?;
            let to = build(&endpoints.1(n))?;
            Ok((n, Interpolation::new(&from, &to)?))
        })
        .collect::<Result<_>>()?;
    cells
        .par_iter()
        .map(|&(n, coupling)| {
            let op = interps[&n].step_operator(coupling)?;
            let init = WalkState::equal_superposition(op.space(), 0)?;
            let mut amps = init.amplitudes;
            for _ in 0..step {
                amps = op.apply(&amps);
            }
            let probability = WalkState::new(amps).vertex_probability(op.space(), 1);
            Ok(InterpolationPoint { n, coupling, probability })
        })
        .collect()
}

/// Grover on `d` ports with equal amplitude on `half` of them: the image.
pub fn grover_half_image(d: usize, half: &[usize]) -> Result<CVector> {
    let g = grover(d)?;
    let mut psi = CVector::zeros(d);
    let a = 1.0 / (half.len() as f64).sqrt();
    for &k in half {
        psi[k] = c(a);
    }
    Ok(g * psi)
}

/// Exact-PST steps of a variant under `policy`.
pub fn variant_pst_steps(variant: &VariantDescriptor, policy: &CoinPolicy, t_max: usize) -> Result<Vec<usize>> {
    let g = variant.graph()?;
    let op = StepOperator::new(&g, policy)?;
    Ok(exact_pst_steps(&op, variant.pair(), t_max, PST_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn one_node_on_c4_has_fifteen_raw_subsets() {
        assert_eq!(enumerate_raw(4, 1).unwrap().count(), 15);
    }

    #[test]
    fn pendant_classes_on_c4() {
        let singles: Vec<_> =
            enumerate_variants(4, 1).unwrap().into_iter().filter(|v| v.descriptor.attachments[0].len() == 1).collect();
        // Source, target, or a side vertex.
        assert_eq!(singles.len(), 3);
        let unordered: HashSet<_> =
            singles.iter().map(|v| crate::canon::canonical_key_marked(&v.graph, &[0, 2]).unwrap()).collect();
        assert_eq!(unordered.len(), 2);
    }

    #[test]
    fn raw_count_with_two_nodes() {
        // 15 single-node sets, then C(16, 2) = 120 ordered pairs times 2 edge patterns.
        assert_eq!(enumerate_raw(4, 2).unwrap().count(), 15 + 240);
    }

    #[test]
    fn trivial_flag() {
        let d = VariantDescriptor { base: 4, attachments: vec![vec![2]], new_edges: vec![] };
        assert!(d.is_trivial());
        let d = VariantDescriptor { base: 4, attachments: vec![vec![0]], new_edges: vec![] };
        assert!(!d.is_trivial() && d.modifies_only_antipodes());
    }

    #[test]
    fn family_state_example() {
        let s = FRAC_1_SQRT_2;
        let v = family_initial_state(c(s), c(s)).unwrap();
        let want = [s / 3.0, s / 3.0, 4.0 * s / 3.0];
        for k in 0..3 {
            assert!((v[k] - c(want[k])).norm() < 1e-15);
        }
        assert!(family_initial_state(c(1.0), c(1.0)).is_err());
    }

    #[test]
    fn unperturbed_state_transfers() {
        let cells = robustness_sweep(
            &[4],
            &[Perturbation::Defect { delta: 0.0, port: None }, Perturbation::Phase { theta: 0.0, port: None }],
            1,
            0,
        )
        .unwrap();
        for cell in cells {
            assert!((cell.probability - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_rejects_non_nested_endpoints() {
        let a = build(&FamilySpec::Cycle(4)).unwrap();
        let b = build(&FamilySpec::Path(4)).unwrap();
        assert!(Interpolation::new(&a, &b).is_err());
        assert!(Interpolation::new(&b, &a).is_ok());
    }
}
