//! Continuous-time walks driven by `H = γA`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtqw::{LAMBDA, PST_TOL};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexPair};
use crate::linalg::{norm_sqr, CVector, C64};

/// Default scan spacing.
pub const DEFAULT_DT: f64 = 0.01;
/// Width tolerance of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-12;

/// Eigen-decomposition of `γA`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub gamma: f64,
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(g: &Graph, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::Parameter(format!("hopping rate must be finite (got {gamma})")));
        }
        let h = g.adjacency() * gamma;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(g.n(), order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(g.n(), g.n());
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Ok(Self { gamma, values, vectors })
    }

    pub fn of(g: &Graph) -> Result<Self> {
        Self::new(g, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `max |VΛVᵀ − H|`.
    pub fn reconstruction_error(&self, g: &Graph) -> f64 {
        let rebuilt = &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose();
        (rebuilt - g.adjacency() * self.gamma).abs().max()
    }

    /// `V e^{−iΛt} Vᵀ φ`.
    pub fn evolve(&self, init: &CVector, t: f64) -> CVector {
        let vt = self.vectors.transpose().map(|x| C64::new(x, 0.0));
        let mut coeffs = vt * init;
        for (k, z) in coeffs.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, -self.values[k] * t);
        }
        self.vectors.map(|x| C64::new(x, 0.0)) * coeffs
    }

    /// `⟨w| e^{−iHt} |v⟩`.
    pub fn amplitude(&self, v: usize, w: usize, t: f64) -> C64 {
        (0..self.dim()).map(|k| C64::from_polar(self.vectors[(w, k)] * self.vectors[(v, k)], -self.values[k] * t)).sum()
    }

    /// Eigenvalues and eigenvectors (one array per eigenvector) as JSON.
    pub fn to_json(&self) -> String {
        let vectors: Vec<Vec<f64>> = self.vectors.column_iter().map(|col| col.iter().copied().collect()).collect();
        serde_json::json!({
            "gamma": self.gamma,
            "values": self.values.as_slice(),
            "vectors": vectors,
        })
        .to_string()
    }
}

/// Amplitudes over the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionState {
    pub amplitudes: CVector,
}

impl PositionState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(n: usize, v: usize) -> Result<Self> {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        let mut a = CVector::zeros(n);
        a[v] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: a })
    }

    pub fn probability(&self, v: usize) -> f64 {
        self.amplitudes[v].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }
}

pub fn evolve_ct(g: &Graph, init: &PositionState, t: f64) -> Result<PositionState> {
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("time must be non-negative (got {t})")));
    }
    if init.amplitudes.len() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: init.amplitudes.len() });
    }
    if t == 0.0 {
        return Ok(init.clone());
    }
    let spec = Spectrum::of(g)?;
    Ok(PositionState { amplitudes: spec.evolve(&init.amplitudes, t) })
}

/// Closed-form state on `K̄₂ + K̄ₙ` started at vertex 0. Vertex 0 carries
/// `(cos ωt + 1)/2`, vertex 1 `(cos ωt − 1)/2` and every other vertex
/// `−i sin(ωt)/ω`, with `ω = √(2n)`.
pub fn analytic_k2kn(n: usize, t: f64) -> CVector {
    let mut out = CVector::zeros(n + 2);
    if n == 0 {
        out[0] = C64::new(1.0, 0.0);
        return out;
    }
    let w = (2.0 * n as f64).sqrt();
    let (s, c) = (w * t).sin_cos();
    out[0] = C64::new((c + 1.0) / 2.0, 0.0);
    out[1] = C64::new((c - 1.0) / 2.0, 0.0);
    for k in 0..n {
        out[k + 2] = C64::new(0.0, -s / w);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtParams {
    pub t_max: f64,
    pub dt: f64,
    pub lambda: f64,
    pub pst_tol: f64,
}

impl Default for CtParams {
    fn default() -> Self {
        Self { t_max: 10.0, dt: DEFAULT_DT, lambda: LAMBDA, pst_tol: PST_TOL }
    }
}

impl CtParams {
    pub fn with_t_max(t_max: f64) -> Self {
        Self { t_max, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::Parameter(format!(
                "need dt > 0 and t_max > 0 (got dt={}, t_max={})",
                self.dt, self.t_max
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Parameter(format!("λ must lie in (0, 1] (got {})", self.lambda)));
        }
        Ok(())
    }
}

/// A refined local maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtTransferReport {
    pub pair: VertexPair,
    pub times: Vec<f64>,
    pub target_probability: Vec<f64>,
    pub source_probability: Vec<f64>,
    /// Refined maxima of the target probability.
    pub peaks: Vec<Peak>,
    pub pst_times: Vec<f64>,
    /// First refined return of the start state, `|⟨v|φ(t)⟩|² ≥ 1 − pst_tol`.
    pub period: Option<f64>,
    pub max_probability: f64,
    pub max_time: f64,
    pub lambda: f64,
    pub high_amplitude: bool,
}

/// Scans `|⟨w|φ(t)⟩|²` from a start at `pair.source`, refining every interior
/// grid maximum. PST and the period are decided on refined values only.
pub fn detect_transfer_ct(g: &Graph, pair: VertexPair, params: &CtParams) -> Result<CtTransferReport> {
    params.validate()?;
    pair.check(g)?;
    let spec = Spectrum::of(g)?;
    let steps = (params.t_max / params.dt).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| (k as f64 * params.dt).min(params.t_max)).collect();
    let target = |t: f64| spec.amplitude(pair.source, pair.target, t).norm_sqr();
    let source = |t: f64| spec.amplitude(pair.source, pair.source, t).norm_sqr();
    let (target_probability, source_probability): (Vec<f64>, Vec<f64>) =
        times.par_iter().map(|&t| (target(t), source(t))).unzip();

    let peaks = refined_peaks(&times, &target_probability, &target);
    let pst_times: Vec<f64> = peaks.iter().filter(|pk| pk.p >= 1.0 - params.pst_tol).map(|pk| pk.t).collect();
    let period = refined_peaks(&times, &source_probability, &source)
        .into_iter()
        .find(|pk| pk.p >= 1.0 - params.pst_tol)
        .map(|pk| pk.t);

    let mut best = Peak { t: 0.0, p: f64::NEG_INFINITY };
    for (k, &p) in target_probability.iter().enumerate().skip(1) {
        if p > best.p {
            best = Peak { t: times[k], p };
        }
    }
    for pk in &peaks {
        if pk.p > best.p {
            best = *pk;
        }
    }
    Ok(CtTransferReport {
        pair,
        times,
        target_probability,
        source_probability,
        peaks,
        pst_times,
        period,
        max_probability: best.p,
        max_time: best.t,
        lambda: params.lambda,
        high_amplitude: best.p >= params.lambda,
    })
}

/// Interior grid maxima (the `t = 0` sample excluded), each polished by
/// golden-section search on its neighboring grid interval.
fn refined_peaks(times: &[f64], values: &[f64], f: &(dyn Fn(f64) -> f64 + Sync)) -> Vec<Peak> {
    let candidates: Vec<usize> = (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] >= values[k - 1] && values[k] > values[k + 1])
        .collect();
    candidates
        .par_iter()
        .map(|&k| {
            let (t, p) = golden_max(f, times[k - 1], times[k + 1], REFINE_TOL);
            Peak { t, p }
        })
        .collect()
}

/// Maximizes a unimodal `f` on `[a, b]`.
pub fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        if x2 <= x1 {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build, FamilySpec};
    use std::f64::consts::PI;

    fn k2kn(n: usize) -> Graph {
        build(&FamilySpec::k2_join(FamilySpec::EdgelessComplement(n))).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let g = build(&FamilySpec::Cycle(5)).unwrap();
        let init = PositionState::basis(5, 2).unwrap();
        assert_eq!(evolve_ct(&g, &init, 0.0).unwrap().probability(2), 1.0);
    }

    #[test]
    fn closed_form_matches_spectral() {
        for n in [1, 2, 7] {
            let g = k2kn(n);
            let init = PositionState::basis(n + 2, 0).unwrap();
            for t in [0.3, 1.7, 4.2] {
                let got = evolve_ct(&g, &init, t).unwrap().amplitudes;
                let want = analytic_k2kn(n, t);
                assert!((got - want).iter().all(|z| z.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn c4_antipode_at_half_pi() {
        let g = build(&FamilySpec::Cycle(4)).unwrap();
        let init = PositionState::basis(4, 0).unwrap();
        assert!(evolve_ct(&g, &init, PI / 2.0).unwrap().probability(2) > 1.0 - 1e-12);
    }

    #[test]
    fn spectrum_reconstructs() {
        let g = build(&FamilySpec::DiamondChain { diamonds: 2, loop_ends: true }).unwrap();
        let s = Spectrum::of(&g).unwrap();
        assert!(s.reconstruction_error(&g) < 1e-12);
        assert!(s.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn k2k9_period() {
        let g = k2kn(9);
        let r = detect_transfer_ct(&g, VertexPair::new(0, 1), &CtParams::default()).unwrap();
        let period = 2.0 * PI / 18f64.sqrt();
        assert!((r.period.unwrap() - period).abs() < 1e-6);
        assert!((r.pst_times[0] - period / 2.0).abs() < 1e-6);
    }

    #[test]
    fn golden_finds_parabola_top() {
        let (t, p) = golden_max(&|x: f64| 1.0 - (x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((t - 0.3).abs() < 1e-6 && (p - 1.0).abs() < 1e-12);
    }
}
