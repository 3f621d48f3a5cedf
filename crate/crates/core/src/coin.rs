//! Coin operators and per-vertex coin assignments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{c, direct_sum, unitarity_error, CMatrix, C64};

/// Tolerance used when validating user-supplied unitaries.
pub const UNITARY_TOL: f64 = 1e-12;

/// Grover diffusion coin: `(2 − d)/d` on the diagonal and `2/d` elsewhere.
pub fn grover(d: usize) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let df = d as f64;
    Ok(CMatrix::from_fn(d, d, |i, j| if i == j { c((2.0 - df) / df) } else { c(2.0 / df) }))
}

/// Unitary DFT with `ω = e^{−2πi/d}`, entry `(j, k) = ω^{jk}/√d`.
pub fn dft(d: usize) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let scale = 1.0 / (d as f64).sqrt();
    Ok(CMatrix::from_fn(d, d, |j, k| {
        // Reduce the exponent mod d so large products stay exact.
        let e = (j * k) % d;
        C64::from_polar(scale, -2.0 * PI * e as f64 / d as f64)
    }))
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)])
}

/// Hadamard with its columns exchanged.
pub fn h2() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(-s), c(s)])
}

/// Coin that switches on `t` tunneling ports with coupling `c ∈ [0, 1]`.
///
/// The first `d − t` ports form the normal block (`a` diagonal, `b` off
/// diagonal), the last `t` the tunneling block (`e`, `f`), and every entry
/// between the blocks equals `2c/d`. For `c > 0` the matrix is the reflection
/// `2ŵŵᵀ − I` with `ŵ = (α·1, β·1)`, taking the branch that meets the Grover
/// coin at `c = 1`. At `c = 0` the blocks decouple and the coin is
/// `Grover(d − t) ⊕ I_t`.
///
/// A continuous family of real symmetric unitaries has constant trace, and
/// `tr(Grover(d − t) ⊕ I_t) ≠ tr(Grover(d))`, so the limit `c → 0⁺` is
/// `Grover(d − t) ⊕ (−I_t)`: only the (decoupled) tunneling block differs from
/// the value at `c = 0`.
pub fn interp_grover(d: usize, t: usize, coupling: f64) -> Result<CMatrix> {
    if t == 0 || t >= d {
        return Err(Error::TunnelCount { d, t });
    }
    if !(0.0..=1.0).contains(&coupling) {
        return Err(Error::CouplingRange(coupling));
    }
    let m = d - t;
    if coupling == 0.0 {
        let mut blocks = vec![grover(m)?];
        blocks.push(CMatrix::identity(t, t));
        return Ok(direct_sum(&blocks));
    }
    // The Grover endpoint lies on the continuous branch only when m ≥ t.
    if m < t {
        return Err(Error::NoInterpolationBranch { d, t, c: coupling });
    }
    let (df, mf, tf) = (d as f64, m as f64, t as f64);
    let cross = 2.0 * coupling / df;
    // α² solves 4m·x² − 4x + t·C² = 0; the discriminant is (d² − 4mtc²)/d².
    let mut disc = (df * df - 4.0 * mf * tf * coupling * coupling) / (df * df);
    if disc < 0.0 {
        if disc > -1e-14 {
            disc = 0.0;
        } else {
            return Err(Error::NoInterpolationBranch { d, t, c: coupling });
        }
    }
    let alpha_sq = (1.0 + disc.sqrt()) / (2.0 * mf);
    let beta_sq = cross * cross / (4.0 * alpha_sq);
    let (a, b) = (2.0 * alpha_sq - 1.0, 2.0 * alpha_sq);
    let (e, f) = (2.0 * beta_sq - 1.0, 2.0 * beta_sq);
    Ok(CMatrix::from_fn(d, d, |i, j| {
        let entry = match (i < m, j < m) {
            (true, true) => {
                if i == j {
                    a
                } else {
                    b
                }
            }
            (false, false) => {
                if i == j {
                    e
                } else {
                    f
                }
            }
            _ => cross,
        };
        c(entry)
    }))
}

/// A single coin, named or explicit.
#[derive(Debug, Clone, PartialEq)]
pub enum CoinSpec {
    Grover(usize),
    Dft(usize),
    Hadamard,
    H2,
    InterpGrover { d: usize, t: usize, c: f64 },
    Custom(CMatrix),
}

impl CoinSpec {
    pub fn dim(&self) -> usize {
        match self {
            CoinSpec::Grover(d) | CoinSpec::Dft(d) => *d,
            CoinSpec::Hadamard | CoinSpec::H2 => 2,
            CoinSpec::InterpGrover { d, .. } => *d,
            CoinSpec::Custom(m) => m.nrows(),
        }
    }

    pub fn matrix(&self) -> Result<CMatrix> {
        match self {
            CoinSpec::Grover(d) => grover(*d),
            CoinSpec::Dft(d) => dft(*d),
            CoinSpec::Hadamard => Ok(hadamard()),
            CoinSpec::H2 => Ok(h2()),
            CoinSpec::InterpGrover { d, t, c } => interp_grover(*d, *t, *c),
            CoinSpec::Custom(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
                }
                let err = unitarity_error(m);
                if err > UNITARY_TOL {
                    return Err(Error::NotUnitary(err));
                }
                Ok(m.clone())
            }
        }
    }
}

/// JSON form: `{"grover": 3}`, `{"dft": 4}`, `"hadamard"`, `"h2"`,
/// `{"interp": {"d": 4, "t": 1, "c": 0.5}}` or `{"custom": [[[re, im], ...], ...]}`.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CoinSpecDoc {
    Grover(usize),
    Dft(usize),
    Hadamard,
    H2,
    Interp { d: usize, t: usize, c: f64 },
    Custom(Vec<Vec<[f64; 2]>>),
}

impl Serialize for CoinSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = match self {
            CoinSpec::Grover(d) => CoinSpecDoc::Grover(*d),
            CoinSpec::Dft(d) => CoinSpecDoc::Dft(*d),
            CoinSpec::Hadamard => CoinSpecDoc::Hadamard,
            CoinSpec::H2 => CoinSpecDoc::H2,
            CoinSpec::InterpGrover { d, t, c } => CoinSpecDoc::Interp { d: *d, t: *t, c: *c },
            CoinSpec::Custom(m) => CoinSpecDoc::Custom(
                (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
            ),
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoinSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match CoinSpecDoc::deserialize(d)? {
            CoinSpecDoc::Grover(d) => CoinSpec::Grover(d),
            CoinSpecDoc::Dft(d) => CoinSpec::Dft(d),
            CoinSpecDoc::Hadamard => CoinSpec::Hadamard,
            CoinSpecDoc::H2 => CoinSpec::H2,
            CoinSpecDoc::Interp { d, t, c } => CoinSpec::InterpGrover { d, t, c },
            CoinSpecDoc::Custom(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(serde::de::Error::custom("custom coin must be square"));
                }
                CoinSpec::Custom(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            }
        })
    }
}

/// The four coin arrangements studied on `K̄₂ + K̄ₙ` (vertices 0 and 1 form `K̄₂`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table1Row {
    /// DFT at every vertex.
    AllDft = 1,
    /// Any unitary at the `K̄₂` vertices (DFT unless overridden), `G₂` elsewhere.
    AnyUnitaryG2 = 2,
    /// `Gₙ` at the `K̄₂` vertices, `H` elsewhere.
    GroverH = 3,
    /// `Gₙ` at the `K̄₂` vertices, `H` on the first half of `K̄ₙ`, `H₂` on the rest.
    GroverHH2 = 4,
}

impl Table1Row {
    pub fn from_index(row: u8) -> Result<Self> {
        match row {
            1 => Ok(Self::AllDft),
            2 => Ok(Self::AnyUnitaryG2),
            3 => Ok(Self::GroverH),
            4 => Ok(Self::GroverHH2),
            _ => Err(Error::Parameter(format!("table1 row must be 1–4 (got {row})"))),
        }
    }
}

/// Assignment of a coin to every vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum CoinPolicy {
    /// DFT everywhere.
    O1,
    /// Grover everywhere.
    O2,
    /// `H` at degree-2 vertices, Grover elsewhere.
    O3,
    Table1(Table1Row),
    /// Explicit per-vertex coins; vertices not listed fall back to `fallback`.
    ExplicitMap {
        coins: BTreeMap<usize, CoinSpec>,
        fallback: Option<Box<CoinPolicy>>,
    },
}

impl CoinPolicy {
    pub fn explicit(coins: BTreeMap<usize, CoinSpec>) -> Self {
        CoinPolicy::ExplicitMap { coins, fallback: None }
    }

    pub fn with_overrides(self, coins: BTreeMap<usize, CoinSpec>) -> Self {
        CoinPolicy::ExplicitMap { coins, fallback: Some(Box::new(self)) }
    }

    /// The coin this policy places at `v`, or `None` for an isolated vertex.
    pub fn coin_for(&self, g: &Graph, v: usize) -> Result<Option<CoinSpec>> {
        let d = g.degree(v);
        if d == 0 {
            return Ok(None);
        }
        let spec = match self {
            CoinPolicy::O1 => CoinSpec::Dft(d),
            CoinPolicy::O2 => CoinSpec::Grover(d),
            CoinPolicy::O3 => {
                if d == 2 {
                    CoinSpec::Hadamard
                } else {
                    CoinSpec::Grover(d)
                }
            }
            CoinPolicy::Table1(row) => table1_coin(*row, g, v)?,
            CoinPolicy::ExplicitMap { coins, fallback } => match (coins.get(&v), fallback) {
                (Some(spec), _) => spec.clone(),
                (None, Some(base)) => return base.coin_for(g, v),
                (None, None) => {
                    return Err(Error::Policy {
                        policy: self.to_string(),
                        reason: format!("no coin given for vertex {v}"),
                    })
                }
            },
        };
        Ok(Some(spec))
    }
}

fn table1_coin(row: Table1Row, g: &Graph, v: usize) -> Result<CoinSpec> {
    let n = g.n().saturating_sub(2);
    let layout_ok =
        g.n() >= 3 && !g.has_edge(0, 1) && (2..g.n()).all(|w| g.degree(w) == 2 && g.has_edge(w, 0) && g.has_edge(w, 1));
    if !layout_ok {
        return Err(Error::Policy {
            policy: format!("table1:{}", row as u8),
            reason: "graph is not K̄₂ + K̄ₙ with K̄₂ at vertices 0 and 1".into(),
        });
    }
    let in_k2 = v < 2;
    Ok(match row {
        Table1Row::AllDft => CoinSpec::Dft(g.degree(v)),
        Table1Row::AnyUnitaryG2 => {
            if in_k2 {
                CoinSpec::Dft(n)
            } else {
                CoinSpec::Grover(2)
            }
        }
        Table1Row::GroverH => {
            if in_k2 {
                CoinSpec::Grover(n)
            } else {
                CoinSpec::Hadamard
            }
        }
        Table1Row::GroverHH2 => {
            if in_k2 {
                CoinSpec::Grover(n)
            } else if v - 2 < n / 2 {
                CoinSpec::Hadamard
            } else {
                CoinSpec::H2
            }
        }
    })
}

impl fmt::Display for CoinPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoinPolicy::O1 => f.write_str("O1"),
            CoinPolicy::O2 => f.write_str("O2"),
            CoinPolicy::O3 => f.write_str("O3"),
            CoinPolicy::Table1(row) => write!(f, "table1:{}", *row as u8),
            CoinPolicy::ExplicitMap { coins, fallback } => {
                let map: BTreeMap<String, &CoinSpec> = coins.iter().map(|(k, v)| (k.to_string(), v)).collect();
                let json = serde_json::to_string(&map).map_err(|_| fmt::Error)?;
                match fallback {
                    Some(base) => write!(f, "{base}+{json}"),
                    None => f.write_str(&json),
                }
            }
        }
    }
}

/// Parses `O1`, `O2`, `O3`, `table1:<row>` or an inline JSON map such as
/// `{"0": {"grover": 3}, "1": "hadamard"}`.
impl FromStr for CoinPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "O1" | "o1" => return Ok(CoinPolicy::O1),
            "O2" | "o2" => return Ok(CoinPolicy::O2),
            "O3" | "o3" => return Ok(CoinPolicy::O3),
            _ => {}
        }
        if let Some(row) = s.strip_prefix("table1:") {
            let row: u8 = row.parse().map_err(|_| Error::Parameter(format!("bad table1 row {row:?}")))?;
            return Ok(CoinPolicy::Table1(Table1Row::from_index(row)?));
        }
        if let Some((base, map)) = s.split_once('+') {
            if map.trim_start().starts_with('{') {
                let base: CoinPolicy = base.parse()?;
                let CoinPolicy::ExplicitMap { coins, .. } = map.parse()? else {
                    unreachable!("a JSON map parses to an explicit map")
                };
                return Ok(base.with_overrides(coins));
            }
        }
        if s.starts_with('{') {
            let raw: BTreeMap<String, CoinSpec> = serde_json::from_str(s)?;
            let mut coins = BTreeMap::new();
            for (k, v) in raw {
                let vertex: usize =
                    k.parse().map_err(|_| Error::Parameter(format!("bad vertex key {k:?} in coin map")))?;
                coins.insert(vertex, v);
            }
            return Ok(CoinPolicy::explicit(coins));
        }
        Err(Error::Parameter(format!("unknown coin policy {s:?} (expected O1, O2, O3, table1:<row> or a JSON map)")))
    }
}

/// Block-diagonal coin over the arc space, one block per vertex in vertex order.
#[derive(Debug, Clone)]
pub struct BlockStepCoin {
    pub blocks: Vec<CMatrix>,
    pub offsets: Vec<usize>,
}

impl BlockStepCoin {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        direct_sum(&self.blocks)
    }
}

/// Builds the direct-sum coin, checking each block against the vertex degree.
pub fn assemble_coin(g: &Graph, policy: &CoinPolicy) -> Result<BlockStepCoin> {
    let mut blocks = Vec::with_capacity(g.n());
    let mut offsets = Vec::with_capacity(g.n());
    let mut at = 0;
    for v in 0..g.n() {
        let degree = g.degree(v);
        offsets.push(at);
        let block = match policy.coin_for(g, v)? {
            None => CMatrix::zeros(0, 0),
            Some(spec) => {
                if spec.dim() != degree {
                    return Err(Error::CoinDimension { vertex: v, degree, coin: spec.dim() });
                }
                spec.matrix()?
            }
        };
        at += block.nrows();
        blocks.push(block);
    }
    Ok(BlockStepCoin { blocks, offsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build, FamilySpec};
    use crate::linalg::max_abs_diff;

    #[test]
    fn grover_small_cases() {
        let g2 = grover(2).unwrap();
        assert_eq!(g2, CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]));
        let g4 = grover(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { -0.5 } else { 0.5 };
                assert!((g4[(i, j)] - c(want)).norm() < 1e-15);
            }
        }
        assert_eq!(grover(1).unwrap(), CMatrix::from_element(1, 1, c(1.0)));
        assert_eq!(grover(0), Err(Error::ZeroDimension));
    }

    #[test]
    fn dft_small_cases() {
        assert!(max_abs_diff(&dft(2).unwrap(), &hadamard()) < 1e-15);
        assert_eq!(dft(1).unwrap(), CMatrix::from_element(1, 1, c(1.0)));
        assert!((dft(4).unwrap()[(1, 1)] - C64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn h2_is_hadamard_with_swapped_columns() {
        let h = hadamard();
        let m = h2();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m[(0, 0)] - c(s)).norm() < 1e-16 && (m[(1, 0)] - c(-s)).norm() < 1e-16);
        for i in 0..2 {
            assert_eq!(m[(i, 0)], h[(i, 1)]);
            assert_eq!(m[(i, 1)], h[(i, 0)]);
        }
        let prod = &m * m.transpose();
        assert!(max_abs_diff(&prod, &CMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn interp_endpoints() {
        let one = interp_grover(4, 1, 1.0).unwrap();
        assert!(max_abs_diff(&one, &grover(4).unwrap()) < 1e-12);
        let zero = interp_grover(4, 1, 0.0).unwrap();
        let want = direct_sum(&[grover(3).unwrap(), CMatrix::identity(1, 1)]);
        assert!(max_abs_diff(&zero, &want) < 1e-12);
        let mid = interp_grover(4, 1, 0.5).unwrap();
        assert!(unitarity_error(&mid) < 1e-12);
    }

    #[test]
    fn interp_rejects_bad_parameters() {
        assert_eq!(interp_grover(3, 3, 0.5), Err(Error::TunnelCount { d: 3, t: 3 }));
        assert_eq!(interp_grover(3, 0, 0.5), Err(Error::TunnelCount { d: 3, t: 0 }));
        assert_eq!(interp_grover(4, 1, 1.5), Err(Error::CouplingRange(1.5)));
        assert!(matches!(interp_grover(5, 3, 0.5), Err(Error::NoInterpolationBranch { .. })));
    }

    #[test]
    fn c4_with_o2_is_four_swaps() {
        let g = build(&FamilySpec::Cycle(4)).unwrap();
        let coin = assemble_coin(&g, &CoinPolicy::O2).unwrap();
        assert_eq!(coin.blocks.len(), 4);
        for b in &coin.blocks {
            assert_eq!(*b, grover(2).unwrap());
        }
    }

    #[test]
    fn o3_on_k2_k3() {
        let g = build(&FamilySpec::k2_join(FamilySpec::EdgelessComplement(3))).unwrap();
        let coin = assemble_coin(&g, &CoinPolicy::O3).unwrap();
        assert_eq!(coin.blocks[0], grover(3).unwrap());
        assert_eq!(coin.blocks[1], grover(3).unwrap());
        for v in 2..5 {
            assert_eq!(coin.blocks[v], hadamard());
        }
        assert!(unitarity_error(&coin.to_dense()) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_names_the_vertex() {
        let g = build(&FamilySpec::k2_join(FamilySpec::EdgelessComplement(3))).unwrap();
        let mut coins = BTreeMap::new();
        coins.insert(0, CoinSpec::Hadamard);
        let policy = CoinPolicy::O2.with_overrides(coins);
        assert_eq!(assemble_coin(&g, &policy).unwrap_err(), Error::CoinDimension { vertex: 0, degree: 3, coin: 2 });
    }

    #[test]
    fn policy_strings_parse() {
        assert_eq!("O1".parse::<CoinPolicy>().unwrap(), CoinPolicy::O1);
        assert_eq!("table1:3".parse::<CoinPolicy>().unwrap(), CoinPolicy::Table1(Table1Row::GroverH));
        let p: CoinPolicy = r#"{"0": {"grover": 3}, "2": "hadamard"}"#.parse().unwrap();
        let CoinPolicy::ExplicitMap { coins, .. } = &p else { panic!("expected a map") };
        assert_eq!(coins[&0], CoinSpec::Grover(3));
        assert_eq!(coins[&2], CoinSpec::Hadamard);
        assert!("O4".parse::<CoinPolicy>().is_err());
        assert!("table1:5".parse::<CoinPolicy>().is_err());
    }

    #[test]
    fn custom_coins_must_be_unitary() {
        let bad = CoinSpec::Custom(CMatrix::from_element(2, 2, c(1.0)));
        assert!(matches!(bad.matrix(), Err(Error::NotUnitary(_))));
    }
}
