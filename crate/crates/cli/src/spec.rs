//! Graph spec strings: `cycle n=6`, `join k2c n=5`, `diamond n=3 loops=true`,
//! or `@path.json` for a graph document.

use std::fs;

use qwalk::graph::{diamond_chain_end, FamilySpec, Graph, GraphDoc, VertexPair};

const FAMILIES: &str = "complete, path, cycle, empty, k2c, k2k, k2p, diamond";

/// A parsed spec: either a named family or a graph read from a file.
#[derive(Debug, Clone)]
pub enum GraphSpec {
    Family(FamilySpec),
    Document(GraphDoc),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, String> {
        match self {
            GraphSpec::Family(f) => f.build().map_err(|e| e.to_string()),
            GraphSpec::Document(d) => d.clone().into_graph().map_err(|e| e.to_string()),
        }
    }

    /// The pair studied for this family: the far end of a cycle or diamond
    /// chain, otherwise the two `K̄₂` vertices.
    pub fn default_pair(&self) -> VertexPair {
        match self {
            GraphSpec::Family(FamilySpec::Cycle(n)) => VertexPair::new(0, n / 2),
            GraphSpec::Family(FamilySpec::Path(n)) => VertexPair::new(0, n.saturating_sub(1)),
            GraphSpec::Family(FamilySpec::DiamondChain { diamonds, .. }) => {
                VertexPair::new(0, diamond_chain_end(*diamonds))
            }
            _ => VertexPair::new(0, 1),
        }
    }
}

/// Parses a spec, reading `@file` documents from disk. `n` fills in a missing
/// `n=` parameter (used by sweeps over family size).
pub fn parse(text: &str, n: Option<usize>) -> Result<GraphSpec, String> {
    let text = text.trim();
    if let Some(path) = text.strip_prefix('@') {
        let raw = fs::read_to_string(path).map_err(|e| format!("graph file {path}: {e}"))?;
        let doc: GraphDoc = serde_json::from_str(&raw).map_err(|e| format!("graph file {path}: {e}"))?;
        return Ok(GraphSpec::Document(doc));
    }
    parse_family(text, n).map(GraphSpec::Family)
}

pub fn parse_family(text: &str, n_default: Option<usize>) -> Result<FamilySpec, String> {
    let mut tokens = text.split_whitespace().peekable();
    let joined = tokens.next_if_eq(&"join").is_some();
    let name = tokens.next().ok_or_else(|| format!("empty graph spec (expected one of {FAMILIES})"))?;
    if joined && !name.starts_with("k2") {
        return Err(format!("join expects k2c, k2k or k2p (got {name:?})"));
    }

    let mut n = n_default;
    let mut loops = false;
    for tok in tokens {
        let (key, value) = tok.split_once('=').ok_or_else(|| format!("field {tok:?}: expected key=value"))?;
        match key {
            "n" => {
                n = Some(
                    value.parse().map_err(|_| format!("field `n`: expected a non-negative integer, got {value:?}"))?,
                )
            }
            "loops" if name == "diamond" => {
                loops = value.parse().map_err(|_| format!("field `loops`: expected true or false, got {value:?}"))?
            }
            _ => return Err(format!("field `{key}`: unknown parameter for {name}")),
        }
    }
    let n = n.ok_or_else(|| format!("field `n`: required for {name}"))?;
    Ok(match name {
        "complete" => FamilySpec::Complete(n),
        "path" => FamilySpec::Path(n),
        "cycle" => FamilySpec::Cycle(n),
        "empty" => FamilySpec::EdgelessComplement(n),
        "k2c" => FamilySpec::k2_join(FamilySpec::Cycle(n)),
        "k2k" => FamilySpec::k2_join(FamilySpec::EdgelessComplement(n)),
        "k2p" => FamilySpec::k2_join(FamilySpec::Path(n)),
        "diamond" => FamilySpec::DiamondChain { diamonds: n, loop_ends: loops },
        other => return Err(format!("unknown graph family {other:?} (expected one of {FAMILIES})")),
    })
}
