use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use toolgraph::embedding::{
    CachedEmbedder, EmbedError, Embedder, EmbeddingCache, HashEmbedder, ProviderConfig,
    DEFAULT_DIMENSION, EMBEDDING_MODEL_ENV,
};
use toolgraph::eval::{
    generate_synthetic, load_instances, resolve_instances, run_benchmark, standard_configs,
    write_instances, BenchOptions, ErrorCategory, SynthConfig,
};
use toolgraph::graph::ToolKnowledgeGraph;
use toolgraph::retrieval::{
    FirstPass, Fusion, LlmReranker, Mode, QueryTransform, RerankerKind, RetrievalConfig,
    RetrievalEngine, RetrievalError,
};

/// Tool retrieval over a tool dependency graph.
#[derive(Parser)]
#[command(name = "toolgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph document for structural problems.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print tool and dependency counts.
    Stats {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Embed every tool and build the indexes, filling the cache if one is given.
    Index {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Retrieve tools for one query.
    Retrieve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: String,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run the retriever lineup over a benchmark and report metrics.
    Eval {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Break benchmark failures down by cause.
    Errors {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write a deterministic synthetic benchmark.
    Synth {
        /// Output directory for graph.json, instances.jsonl and embeddings.bin.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        tools: usize,
        #[arg(long, default_value_t = 4.0)]
        avg_deps: f64,
        #[arg(long, default_value_t = 300)]
        instances: usize,
        /// Probability that a query also borrows words from a sibling tool.
        #[arg(long, default_value_t = 0.5)]
        ambiguity: f64,
        #[arg(long, default_value_t = DEFAULT_DIMENSION)]
        dimension: usize,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    retrieval: RetrievalArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Tsv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    /// Deterministic token-hash embeddings.
    Hash,
    /// Only vectors already in `--cache`.
    Cache,
    /// Embeddings endpoint from TOOLGRAPH_EMBEDDING_* variables.
    Remote,
}

#[derive(Args)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value_t = ProviderKind::Hash)]
    provider: ProviderKind,
    /// Hash embedding dimension.
    #[arg(long, default_value_t = DEFAULT_DIMENSION)]
    dimension: usize,
    /// Embedding cache file.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Serve embeddings from the cache only.
    #[arg(long)]
    offline: bool,
    /// Request timeout for remote calls, in seconds.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
}

#[derive(Args)]
struct RetrievalArgs {
    /// lexical, vector, hybrid or graph_fusion; `eval` runs the whole lineup when omitted.
    #[arg(long)]
    mode: Option<String>,
    /// First pass for graph_fusion: lexical, vector or hybrid.
    #[arg(long, default_value = "hybrid")]
    first_pass: String,
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    #[arg(long)]
    rerank_top_k: Option<usize>,
    #[arg(long = "final-top-K", default_value_t = 30)]
    final_top_k: usize,
    #[arg(long, default_value_t = 10)]
    d_limit: usize,
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    /// Use weighted reciprocal-rank fusion with this constant instead of min-max.
    #[arg(long)]
    rrf: Option<f64>,
    #[arg(long)]
    query_transform: Option<String>,
    /// identity, oracle (benchmarks only) or remote.
    #[arg(long)]
    reranker: Option<String>,
    /// Maximum concurrent remote reranker requests.
    #[arg(long, default_value_t = 4)]
    reranker_concurrency: usize,
}

/// Invalid flag combinations; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage(e: RetrievalError) -> anyhow::Error {
    match e {
        RetrievalError::Config(m) => Usage(m).into(),
        other => other.into(),
    }
}

impl RetrievalArgs {
    fn mode(&self) -> Result<Option<Mode>> {
        self.mode
            .as_deref()
            .map(|m| m.parse().map_err(usage))
            .transpose()
    }

    fn reranker(&self) -> Result<Option<RerankerKind>> {
        self.reranker
            .as_deref()
            .map(|r| r.parse().map_err(usage))
            .transpose()
    }

    fn config(&self, default_mode: Mode) -> Result<RetrievalConfig> {
        let cfg = RetrievalConfig {
            mode: self.mode()?.unwrap_or(default_mode),
            first_pass: self.first_pass.parse::<FirstPass>().map_err(usage)?,
            top_k: self.top_k,
            rerank_top_k: self.rerank_top_k,
            final_top_k: self.final_top_k,
            d_limit: self.d_limit,
            alpha: self.alpha,
            fusion: match self.rrf {
                Some(c) => Fusion::ReciprocalRank { c },
                None => Fusion::MinMax,
            },
            query_transform: self
                .query_transform
                .as_deref()
                .map(|t| t.parse::<QueryTransform>().map_err(usage))
                .transpose()?,
            reranker: self.reranker()?,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

impl ProviderArgs {
    fn embedder(&self) -> Result<Arc<dyn Embedder>> {
        let open_cache = |p: &Path| -> Result<Arc<EmbeddingCache>> {
            Ok(Arc::new(
                EmbeddingCache::open(p).with_context(|| format!("opening cache {}", p.display()))?,
            ))
        };
        let offline = self.offline || matches!(self.provider, ProviderKind::Cache);
        if offline {
            let Some(path) = &self.cache else {
                return Err(Usage("offline embeddings need --cache".into()).into());
            };
            let (provider, model) = match self.provider {
                ProviderKind::Hash | ProviderKind::Cache => {
                    let h = HashEmbedder::new(self.dimension).map_err(|e| Usage(e.to_string()))?;
                    (h.provider().to_string(), h.model().to_string())
                }
                ProviderKind::Remote => (
                    "remote".to_string(),
                    std::env::var(EMBEDDING_MODEL_ENV)
                        .map_err(|_| EmbedError::MissingEnv(EMBEDDING_MODEL_ENV))?,
                ),
            };
            return Ok(Arc::new(CachedEmbedder::offline(open_cache(path)?, &provider, &model)));
        }
        let config = match self.provider {
            ProviderKind::Hash => ProviderConfig::Hash {
                dimension: self.dimension,
                cache_path: self.cache.clone(),
            },
            ProviderKind::Remote => ProviderConfig::remote_from_env(
                Duration::from_secs(self.timeout),
                self.cache.clone(),
            )?,
            ProviderKind::Cache => unreachable!("handled as offline"),
        };
        if let ProviderConfig::Hash { dimension: 0, .. } = config {
            return Err(Usage("--dimension must be at least 1".into()).into());
        }
        Ok(config.build()?)
    }
}

fn load_graph(path: &Path) -> Result<ToolKnowledgeGraph> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ToolKnowledgeGraph::from_json_auto(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn build_engine(
    graph: ToolKnowledgeGraph,
    provider: &ProviderArgs,
    retrieval: &RetrievalArgs,
) -> Result<RetrievalEngine> {
    let engine = RetrievalEngine::build(Arc::new(graph), provider.embedder()?)?;
    if retrieval.reranker()? == Some(RerankerKind::Remote) {
        let llm = LlmReranker::from_env(
            Duration::from_secs(provider.timeout),
            retrieval.reranker_concurrency,
        )
        .map_err(usage)?;
        return Ok(engine.with_remote_reranker(Arc::new(llm)));
    }
    Ok(engine)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// Returns `Ok(false)` when the command ran but found data problems.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { graph, json } => {
            let g = load_graph(&graph)?;
            let report = g.validate();
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                println!("{} violations", report.len());
            }
            Ok(report.is_empty())
        }
        Command::Stats { graph, json } => {
            let st = load_graph(&graph)?.stats();
            if json {
                println!("{}", serde_json::to_string_pretty(&st)?);
            } else {
                println!("tools: {}", st.total_tools);
                println!("core tools: {}", st.core_count);
                println!("regular tools: {}", st.regular_count);
                println!("avg dependencies: {:.2}", st.avg_dependencies);
            }
            Ok(true)
        }
        Command::Index { graph, provider } => {
            let g = load_graph(&graph)?;
            let engine = RetrievalEngine::build(Arc::new(g), provider.embedder()?)?;
            println!(
                "indexed {} tools: {} terms, vector dimension {}",
                engine.graph().len(),
                engine.lexical().term_count(),
                engine.vectors().dimension()
            );
            if let Some(p) = &provider.cache {
                println!("cache: {}", p.display());
            }
            Ok(true)
        }
        Command::Retrieve {
            graph,
            query,
            retrieval,
            provider,
            json,
        } => {
            let cfg = retrieval.config(Mode::GraphFusion)?;
            if cfg.reranker == Some(RerankerKind::Oracle) {
                return Err(Usage("the oracle reranker needs golden labels; use it with eval".into()).into());
            }
            let engine = build_engine(load_graph(&graph)?, &provider, &retrieval)?;
            let trace = engine
                .retrieve_with(&query, &cfg, &Default::default())
                .map_err(usage)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&trace.list)?);
                return Ok(true);
            }
            let width = trace.list.entries.iter().map(|e| e.tool_id.len()).max().unwrap_or(4).max(4);
            println!("{:>4}  {:<width$}  {:<10}  seed", "rank", "tool", "provenance");
            for (i, e) in trace.list.entries.iter().enumerate() {
                println!("{:>4}  {:<width$}  {:<10}  {}", i + 1, e.tool_id, e.provenance.to_string(), e.seed_id);
            }
            if trace.list.truncated {
                println!("(truncated to {})", cfg.final_top_k);
            }
            if trace.rerank_fallback {
                eprintln!("warning: reranker failed; first-pass order kept");
            }
            Ok(true)
        }
        Command::Eval { bench, format } => {
            let Prepared { engine, instances, ok } = prepare(&bench)?;
            let configs = match bench.retrieval.mode()? {
                Some(mode) => {
                    let cfg = bench.retrieval.config(mode)?;
                    vec![(mode.to_string(), cfg)]
                }
                None => {
                    let base = bench.retrieval.config(Mode::GraphFusion)?;
                    standard_configs(&RetrievalConfig { reranker: None, ..base.clone() }, base.reranker)
                }
            };
            let run = run_benchmark(&engine, &instances, &configs, bench_options(&bench)).map_err(usage)?;
            warn_failures(&run.failures);
            let text = match format {
                Format::Table => run.report.to_table(),
                Format::Tsv => run.report.to_tsv(),
                Format::Json => serde_json::to_string_pretty(&run.report)? + "\n",
            };
            emit(bench.out.as_deref(), &text)?;
            Ok(ok)
        }
        Command::Errors { bench, format } => {
            let Prepared { engine, instances, ok } = prepare(&bench)?;
            let cfg = bench.retrieval.config(Mode::GraphFusion)?;
            let label = cfg.mode.to_string();
            let run = run_benchmark(&engine, &instances, &[(label, cfg)], bench_options(&bench))
                .map_err(usage)?;
            warn_failures(&run.failures);
            let (_, b) = &run.breakdowns[0];
            let text = match format {
                Format::Json => serde_json::to_string_pretty(b)? + "\n",
                Format::Tsv | Format::Table => {
                    let sep = if matches!(format, Format::Tsv) { "\t" } else { "  " };
                    let mut rows = vec![("retrieved_correctly", b.successes, b.success_rate())];
                    for c in ErrorCategory::ALL {
                        rows.push((c.as_str(), b.count(c), b.rate(c)));
                    }
                    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
                    let mut s = String::new();
                    for (name, n, rate) in rows {
                        if matches!(format, Format::Tsv) {
                            s += &format!("{name}{sep}{n}{sep}{rate:.4}\n");
                        } else {
                            s += &format!("{name:<width$}{sep}{n:>6}{sep}{:>6.1}%\n", rate * 100.0);
                        }
                    }
                    s += &format!("instances{sep}{}\n", b.instances);
                    s
                }
            };
            emit(bench.out.as_deref(), &text)?;
            Ok(ok)
        }
        Command::Synth {
            out,
            seed,
            tools,
            avg_deps,
            instances,
            ambiguity,
            dimension,
        } => {
            let cfg = SynthConfig {
                seed,
                tool_count: tools,
                avg_deps,
                instance_count: instances,
                ambiguity,
                dimension,
                ..SynthConfig::default()
            };
            let bench = generate_synthetic(&cfg).map_err(|e| Usage(e.to_string()))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            fs::write(out.join("graph.json"), bench.graph.to_json_pretty()? + "\n")?;
            let mut buf = Vec::new();
            write_instances(&mut buf, &bench.instances)?;
            fs::write(out.join("instances.jsonl"), buf)?;
            bench.write_embedding_fixture(out.join("embeddings.bin"))?;
            println!(
                "wrote {} tools, {} instances and {} embeddings to {} (model {})",
                bench.graph.len(),
                bench.instances.len(),
                bench.embeddings.len(),
                out.display(),
                bench.model
            );
            Ok(true)
        }
    }
}

struct Prepared {
    engine: RetrievalEngine,
    instances: Vec<toolgraph::eval::EvalInstance>,
    ok: bool,
}

fn prepare(bench: &BenchArgs) -> Result<Prepared> {
    // validate flags before any expensive work
    bench.retrieval.config(Mode::GraphFusion)?;
    let graph = load_graph(&bench.graph)?;
    let file = fs::File::open(&bench.instances)
        .with_context(|| format!("reading {}", bench.instances.display()))?;
    let mut instances = load_instances(BufReader::new(file))
        .with_context(|| format!("loading {}", bench.instances.display()))?;
    let problems = resolve_instances(&mut instances, &graph);
    for p in &problems {
        eprintln!("invalid instance: {p}");
    }
    if !problems.is_empty() {
        let bad: std::collections::HashSet<String> = problems
            .iter()
            .filter_map(|p| match p {
                toolgraph::eval::InstanceError::EmptyGolden { id }
                | toolgraph::eval::InstanceError::UnknownTool { id, .. } => Some(id.clone()),
                _ => None,
            })
            .collect();
        instances.retain(|i| !bad.contains(&i.id) && !i.golden_tools.is_empty());
        eprintln!("warning: {} invalid instances excluded", bad.len());
    }
    if instances.is_empty() {
        bail!("no valid instances in {}", bench.instances.display());
    }
    let engine = build_engine(graph, &bench.provider, &bench.retrieval)?;
    Ok(Prepared {
        engine,
        instances,
        ok: problems.is_empty(),
    })
}

fn bench_options(bench: &BenchArgs) -> BenchOptions {
    BenchOptions {
        jobs: bench.jobs,
        final_top_k: bench.retrieval.final_top_k,
    }
}

fn warn_failures(failures: &[toolgraph::eval::bench::InstanceFailure]) {
    if failures.is_empty() {
        return;
    }
    eprintln!("warning: {} instance retrievals failed and were excluded", failures.len());
    for f in failures.iter().take(5) {
        eprintln!("  [{}] {}: {}", f.label, f.instance_id, f.message);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
