//! Deterministic synthetic benchmarks.
//!
//! Tools are described with pseudo-words. Core tools use their own
//! vocabulary and carry no dependencies; regular tools come in families that
//! share a few words and depend on core tools. A query borrows words from its
//! seed tool and the seed's family, and sometimes from a sibling, so the seed
//! is similar to the query while its dependencies are not.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instances::EvalInstance;
use crate::embedding::{
    render_tool_document, CacheKey, EmbedError, Embedder, EmbeddingCache, EmbeddingVector,
    HashEmbedder,
};
use crate::graph::{DependencyEdge, Relation, ToolKind, ToolKnowledgeGraph, ToolNode, ToolParameter};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible synthetic parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub tool_count: usize,
    pub avg_deps: f64,
    pub instance_count: usize,
    /// Share of tools that are core tools.
    pub core_fraction: f64,
    /// Regular tools per family.
    pub family_size: usize,
    /// Probability that a query also borrows words from a sibling tool.
    pub ambiguity: f64,
    /// Dimension of the hash embedder used for the fixture.
    pub dimension: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            tool_count: 200,
            avg_deps: 4.0,
            instance_count: 300,
            core_fraction: 0.2,
            family_size: 4,
            ambiguity: 0.5,
            dimension: crate::embedding::DEFAULT_DIMENSION,
        }
    }
}

pub struct SyntheticBenchmark {
    pub graph: ToolKnowledgeGraph,
    pub instances: Vec<EvalInstance>,
    /// Every tool document and query text with its vector, in generation order.
    pub embeddings: Vec<(String, EmbeddingVector)>,
    pub provider: String,
    pub model: String,
}

impl SyntheticBenchmark {
    pub fn cache_records(&self) -> impl Iterator<Item = (CacheKey, &EmbeddingVector)> + '_ {
        self.embeddings
            .iter()
            .map(|(text, v)| (CacheKey::new(&self.provider, &self.model, text), v))
    }

    pub fn write_embedding_fixture(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        EmbeddingCache::write_file(path, self.cache_records())
    }

    pub fn embedding_cache(&self) -> Result<EmbeddingCache, EmbedError> {
        let cache = EmbeddingCache::in_memory();
        for (key, v) in self.cache_records() {
            cache.insert(key, v)?;
        }
        Ok(cache)
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const PARAM_SUFFIXES: &[&str] = &["id", "value", "count", "text", "mode"];
const FILLER: &[&str] = &["please", "can", "you", "i", "need", "to", "the", "for", "my", "now"];

struct Words<'r> {
    rng: &'r mut ChaCha8Rng,
    used: HashSet<String>,
}

impl Words<'_> {
    fn next(&mut self) -> String {
        loop {
            let syllables = self.rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(char::from(*CONSONANTS.choose(self.rng).expect("non-empty")));
                w.push(char::from(*VOWELS.choose(self.rng).expect("non-empty")));
            }
            if self.rng.gen_bool(0.5) {
                w.push(char::from(*CONSONANTS.choose(self.rng).expect("non-empty")));
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn take(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.next()).collect()
    }
}

struct Spec {
    node: ToolNode,
    own: Vec<String>,
    family: Option<usize>,
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticBenchmark, SynthError> {
    let n = cfg.tool_count;
    if n < 2 {
        return Err(SynthError::Infeasible("tool_count must be at least 2".into()));
    }
    if !(cfg.avg_deps.is_finite() && cfg.avg_deps >= 0.0) {
        return Err(SynthError::Infeasible(format!("avg_deps must be >= 0, got {}", cfg.avg_deps)));
    }
    if (n as f64) < cfg.avg_deps + 1.0 {
        return Err(SynthError::Infeasible(format!(
            "tool_count ({n}) must be at least avg_deps + 1 ({})",
            cfg.avg_deps + 1.0
        )));
    }
    if !(0.0..1.0).contains(&cfg.core_fraction) || !(0.0..=1.0).contains(&cfg.ambiguity) {
        return Err(SynthError::Infeasible(
            "core_fraction must be in [0, 1) and ambiguity in [0, 1]".into(),
        ));
    }
    if cfg.family_size == 0 {
        return Err(SynthError::Infeasible("family_size must be at least 1".into()));
    }
    let embedder = HashEmbedder::new(cfg.dimension)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_core = ((n as f64 * cfg.core_fraction).round() as usize).min(n - 1);
    let n_regular = n - n_core;
    let n_families = n_regular.div_ceil(cfg.family_size);

    let mut specs: Vec<Spec> = Vec::with_capacity(n);
    let mut family_words: Vec<Vec<String>> = Vec::with_capacity(n_families);
    {
        let mut words = Words {
            rng: &mut rng,
            used: HashSet::new(),
        };
        let core_pool = words.take(8);
        for _ in 0..n_families {
            family_words.push(words.take(3));
        }
        for i in 0..n_core {
            let own = words.take(4);
            let pool = [
                core_pool[i % core_pool.len()].clone(),
                core_pool[(i * 3 + 1) % core_pool.len()].clone(),
            ];
            let description = format!("{} {} {} {}", own[2], pool[0], own[3], pool[1]);
            let parameters = if i % 2 == 0 {
                vec![param(&format!("{}_{}", own[0], PARAM_SUFFIXES[i % PARAM_SUFFIXES.len()]))]
            } else {
                vec![]
            };
            specs.push(Spec {
                node: ToolNode {
                    id: format!("{}_{}", own[0], own[1]),
                    name: format!("{}_{}", own[0], own[1]),
                    description,
                    kind: ToolKind::Core,
                    parameters,
                },
                own,
                family: None,
            });
        }
        for r in 0..n_regular {
            let family = r / cfg.family_size;
            let fw = &family_words[family];
            let own = words.take(4);
            let name = format!("{}_{}_{}", fw[0], own[0], own[1]);
            let description = format!("{} {} {} {} {}", own[2], fw[1], own[3], fw[2], own[0]);
            let n_params = 1 + r % 3;
            let parameters = (0..n_params)
                .map(|p| {
                    param(&format!(
                        "{}_{}",
                        own[(p + 1) % own.len()],
                        PARAM_SUFFIXES[(r + p) % PARAM_SUFFIXES.len()]
                    ))
                })
                .collect();
            specs.push(Spec {
                node: ToolNode {
                    id: name.clone(),
                    name,
                    description,
                    kind: ToolKind::Regular,
                    parameters,
                },
                own,
                family: Some(family),
            });
        }
    }

    let edges = wire_dependencies(&mut rng, &specs, n_core, cfg.avg_deps);
    let graph = ToolKnowledgeGraph::from_raw_parts(
        specs.iter().map(|s| s.node.clone()).collect(),
        edges,
    );

    let regular: Vec<usize> = (n_core..n).collect();
    let mut instances = Vec::with_capacity(cfg.instance_count);
    for i in 0..cfg.instance_count {
        let &seed_idx = regular.choose(&mut rng).expect("at least one regular tool");
        let seed = &specs[seed_idx];
        let family = seed.family.expect("regular tools have a family");
        let mut terms: Vec<String> = seed.own.choose_multiple(&mut rng, 2).cloned().collect();
        let shared = rng.gen_range(1..=2);
        terms.extend(family_words[family].choose_multiple(&mut rng, shared).cloned());
        let siblings: Vec<usize> = regular
            .iter()
            .copied()
            .filter(|&j| j != seed_idx && specs[j].family == Some(family))
            .collect();
        if !siblings.is_empty() && rng.gen_bool(cfg.ambiguity) {
            let &sib = siblings.choose(&mut rng).expect("non-empty");
            let borrowed = rng.gen_range(1..=3);
            terms.extend(specs[sib].own.choose_multiple(&mut rng, borrowed).cloned());
        }
        let filler = rng.gen_range(1..=3);
        terms.extend(FILLER.choose_multiple(&mut rng, filler).map(|s| s.to_string()));
        terms.shuffle(&mut rng);
        let seed_id = seed.node.id.clone();
        let mut golden = vec![seed_id.clone()];
        golden.extend(graph.reachable(&seed_id).expect("seed is in the graph"));
        instances.push(EvalInstance {
            id: format!("syn-{i:04}"),
            query: terms.join(" "),
            golden_tools: golden,
            seed: Some(seed_id),
        });
    }

    let mut seen = HashSet::new();
    let texts: Vec<String> = graph
        .nodes()
        .map(|t| render_tool_document(t).text)
        .chain(instances.iter().map(|i| i.query.clone()))
        .filter(|t| seen.insert(t.clone()))
        .collect();
    let embeddings = texts
        .into_iter()
        .map(|t| {
            let v = embedder.embed(&t)?;
            Ok((t, v))
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;

    Ok(SyntheticBenchmark {
        graph,
        instances,
        embeddings,
        provider: embedder.provider().to_string(),
        model: embedder.model().to_string(),
    })
}

fn param(name: &str) -> ToolParameter {
    ToolParameter {
        name: name.to_string(),
        description: String::new(),
        value_kind: "string".to_string(),
        required: true,
    }
}

/// `round(avg_deps * n)` edges, spread evenly over regular tools first and
/// over core tools only once every regular tool depends on all others.
/// Targets prefer core tools.
fn wire_dependencies(
    rng: &mut ChaCha8Rng,
    specs: &[Spec],
    n_core: usize,
    avg_deps: f64,
) -> Vec<DependencyEdge> {
    let n = specs.len();
    let cap = n - 1;
    let mut remaining = (avg_deps * n as f64).round() as usize;
    let mut degree = vec![0usize; n];
    for group in [n_core..n, 0..n_core] {
        let members = group.len();
        if members == 0 || remaining == 0 {
            continue;
        }
        let take = remaining.min(members * cap);
        for (slot, i) in group.enumerate() {
            degree[i] = take / members + usize::from(slot < take % members);
        }
        remaining -= take;
    }

    let mut edges = Vec::new();
    for (i, &d) in degree.iter().enumerate() {
        let mut core: Vec<usize> = (0..n_core).filter(|&j| j != i).collect();
        let mut other: Vec<usize> = (n_core..n).filter(|&j| j != i).collect();
        core.shuffle(rng);
        other.shuffle(rng);
        let source = &specs[i].node;
        for j in core.into_iter().chain(other).take(d) {
            let mut relation = *Relation::ALL.choose(rng).expect("non-empty");
            let parameter_name = if relation.is_parameter() {
                match source.parameters.choose(rng) {
                    Some(p) => Some(p.name.clone()),
                    None => {
                        relation = Relation::ToolDirect;
                        None
                    }
                }
            } else {
                None
            };
            edges.push(DependencyEdge {
                source: source.id.clone(),
                target: specs[j].node.id.clone(),
                relation,
                reason: format!("{} uses {}", source.name, specs[j].node.name),
                parameter_name,
            });
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            tool_count: 60,
            instance_count: 40,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a.graph.to_json_pretty().unwrap(), b.graph.to_json_pretty().unwrap());
        assert_eq!(a.instances, b.instances);
        assert_eq!(a.embeddings, b.embeddings);
        let c = generate_synthetic(&SynthConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.instances, c.instances);
    }

    #[test]
    fn default_shape() {
        let s = generate_synthetic(&SynthConfig::default()).unwrap();
        let stats = s.graph.stats();
        assert_eq!(stats.total_tools, 200);
        assert!((stats.avg_dependencies - 4.0).abs() <= 0.3);
        assert!(s.graph.validate().is_empty(), "{:?}", s.graph.validate());
        assert_eq!(s.instances.len(), 300);
    }

    #[test]
    fn golden_is_seed_plus_reachable() {
        let s = generate_synthetic(&small()).unwrap();
        for inst in &s.instances {
            let seed = inst.seed.as_deref().unwrap();
            let mut expected = vec![seed.to_string()];
            expected.extend(s.graph.reachable(seed).unwrap());
            assert_eq!(inst.golden_tools, expected);
        }
    }

    #[test]
    fn dense_and_infeasible() {
        let dense = SynthConfig {
            tool_count: 6,
            avg_deps: 5.0,
            instance_count: 3,
            ..SynthConfig::default()
        };
        let s = generate_synthetic(&dense).unwrap();
        assert_eq!(s.graph.edge_count(), 30);
        assert!(s.graph.validate().is_empty());
        let bad = SynthConfig {
            avg_deps: 5.5,
            ..dense
        };
        assert!(matches!(generate_synthetic(&bad), Err(SynthError::Infeasible(_))));
    }

    #[test]
    fn fixture_covers_every_text() {
        let s = generate_synthetic(&small()).unwrap();
        let cache = s.embedding_cache().unwrap();
        for t in s.graph.nodes() {
            let key = CacheKey::new("hash", &s.model, &render_tool_document(t).text);
            assert!(cache.get(&key).is_some());
        }
        for i in &s.instances {
            assert!(cache.get(&CacheKey::new("hash", &s.model, &i.query)).is_some());
        }
    }
}
