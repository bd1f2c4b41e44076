//! Command-line front end: graph validation, separation queries,
//! parameter sampling, joint construction, independence tests, the
//! faithfulness harness and equivalence tooling, glued together through
//! JSON files so commands compose into pipelines.
//!
//! Exit codes: 0 success, 1 domain failure (validation violations, Markov
//! violations), 2 usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chaingauss::equivalence::{self, EquivalenceWitness};
use chaingauss::faithfulness::{run_harness, FaithfulnessReport};
use chaingauss::gaussian::{build_joint, Gaussian, GaussianDoc};
use chaingauss::graph::{GraphSummary, Vertex, Violation};
use chaingauss::independence::ci_test;
use chaingauss::params::{dimension, sample, NdParameters, NdParametersDoc, SampleConfig};
use chaingauss::parse::{parse_graph, LabeledGraph};
use chaingauss::separation::{separated, SeparationQuery};

#[derive(Parser)]
#[command(name = "chaingauss", version, about = "Chain graphs over regular Gaussians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the chain-graph invariants of a graph file.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        /// Declare nodes implicitly when first referenced by an edge.
        #[arg(long)]
        auto_declare: bool,
    },
    /// Decide whether I and J are separated given K.
    Separate {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated node ids.
        i_set: String,
        j_set: String,
        /// Conditioning set; may be omitted or empty.
        #[arg(default_value = "")]
        k_set: String,
        #[arg(long)]
        json: bool,
    },
    /// Print the parameter-space dimension of a graph.
    Dim {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Draw a parameter set and write it as JSON.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Width of the diagonal sampling window.
        #[arg(long, default_value_t = 2.0)]
        diag_range: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Assemble the joint distribution identified by a parameter file.
    Build {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Test conditional independence in a distribution file.
    Ci {
        #[arg(long)]
        dist: PathBuf,
        i: String,
        j: String,
        /// Conditioning set; may be omitted or empty.
        #[arg(default_value = "")]
        z_set: String,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Monte-Carlo Markov/faithfulness verification of a graph.
    Faithfulness {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        json: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Decide Markov equivalence of two graph files.
    Equiv {
        graph_a: PathBuf,
        graph_b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate all chain graphs on n vertices and their equivalence
    /// classes.
    Enumerate {
        n: usize,
        #[arg(long)]
        json: bool,
    },
}

/// Error that terminates the process with exit code 2.
struct Usage(String);

impl<T: std::fmt::Display> From<T> for Usage {
    fn from(e: T) -> Self {
        Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8, Usage> {
    match command {
        Command::Validate { graph, auto_declare } => cmd_validate(&graph, auto_declare),
        Command::Separate { graph, i_set, j_set, k_set, json } => {
            cmd_separate(&graph, &i_set, &j_set, &k_set, json)
        }
        Command::Dim { graph } => {
            let lg = load_graph(&graph)?;
            println!("{}", dimension(&lg.graph));
            Ok(0)
        }
        Command::Sample { graph, seed, diag_range, output } => {
            cmd_sample(&graph, seed, diag_range, output.as_deref())
        }
        Command::Build { graph, params, output } => cmd_build(&graph, &params, output.as_deref()),
        Command::Ci { dist, i, j, z_set, tol, json } => cmd_ci(&dist, &i, &j, &z_set, tol, json),
        Command::Faithfulness { graph, samples, seed, tol, json, output } => {
            cmd_faithfulness(&graph, samples, seed, tol, json, output.as_deref())
        }
        Command::Equiv { graph_a, graph_b, json } => cmd_equiv(&graph_a, &graph_b, json),
        Command::Enumerate { n, json } => cmd_enumerate(n, json),
    }
}

fn load_graph_with(path: &Path, auto_declare: bool) -> Result<LabeledGraph, Usage> {
    let text = fs::read_to_string(path)
        .map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_graph(&text, auto_declare).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<LabeledGraph, Usage> {
    load_graph_with(path, false)
}

/// Comma-separated external ids to internal vertex ids. Empty input is an
/// empty set.
fn parse_set(lg: &LabeledGraph, text: &str) -> Result<Vec<Vertex>, Usage> {
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let label: u64 = token
            .parse()
            .map_err(|_| Usage(format!("`{token}` is not a node id")))?;
        let v = lg
            .vertex_of(label)
            .ok_or_else(|| Usage(format!("node {label} is not in the graph")))?;
        out.push(v);
    }
    Ok(out)
}

fn labels_of(lg: &LabeledGraph, vs: &[Vertex]) -> Vec<u64> {
    vs.iter().map(|&v| lg.label_of(v)).collect()
}

fn summary_with_labels(lg: &LabeledGraph) -> GraphSummary {
    let mut edges: Vec<String> = lg
        .graph
        .undirected_edges()
        .map(|(a, b)| format!("{} -- {}", lg.label_of(a), lg.label_of(b)))
        .collect();
    edges.extend(
        lg.graph
            .directed_edges()
            .map(|(t, h)| format!("{} -> {}", lg.label_of(t), lg.label_of(h))),
    );
    GraphSummary { nodes: lg.graph.vertex_count(), edges }
}

fn render_violation(v: &Violation, lg: &LabeledGraph) -> String {
    match v {
        Violation::SelfLoop(a) => format!("self-loop at {}", lg.label_of(*a)),
        Violation::DuplicateEdge(a, b) => {
            format!("duplicate edge between {} and {}", lg.label_of(*a), lg.label_of(*b))
        }
        Violation::DirectedPseudocycle(cycle) => {
            let ids: Vec<String> = cycle.iter().map(|&v| lg.label_of(v).to_string()).collect();
            format!("directed pseudocycle {}", ids.join(","))
        }
    }
}

fn write_output(output: Option<&Path>, text: &str) -> Result<(), Usage> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(path: &Path, auto_declare: bool) -> Result<u8, Usage> {
    let lg = load_graph_with(path, auto_declare)?;
    let violations = lg.graph.validate();
    if violations.is_empty() {
        println!("ok: {} nodes, {} edges", lg.graph.vertex_count(), lg.graph.edge_count());
        Ok(0)
    } else {
        for v in &violations {
            println!("violation: {}", render_violation(v, &lg));
        }
        Ok(1)
    }
}

fn cmd_separate(path: &Path, i: &str, j: &str, k: &str, json: bool) -> Result<u8, Usage> {
    let lg = load_graph(path)?;
    let i_set = parse_set(&lg, i)?;
    let j_set = parse_set(&lg, j)?;
    let k_set = parse_set(&lg, k)?;
    let query = SeparationQuery::new(&lg.graph, &i_set, &j_set, &k_set)?;
    let verdict = separated(&lg.graph, &query);
    if json {
        // Include the moralized ancestral graph the criterion inspected.
        let mut all = i_set.clone();
        all.extend(&j_set);
        all.extend(&k_set);
        let ancestors: Vec<Vertex> =
            lg.graph.ancestors(&all).expect("validated query").into_iter().collect();
        let moral = lg
            .graph
            .induced_subgraph(&ancestors)
            .expect("ancestors are in range")
            .moral_graph();
        let moral_edges: Vec<String> = moral
            .undirected_edges()
            .map(|(a, b)| format!("{} -- {}", lg.label_of(a), lg.label_of(b)))
            .collect();
        let doc = serde_json::json!({
            "separated": verdict,
            "I": labels_of(&lg, &i_set),
            "J": labels_of(&lg, &j_set),
            "K": labels_of(&lg, &k_set),
            "moral_ancestral_graph": {
                "vertices": labels_of(&lg, &ancestors),
                "edges": moral_edges,
            },
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else {
        println!("{verdict}");
    }
    Ok(0)
}

fn cmd_sample(path: &Path, seed: u64, diag_range: f64, output: Option<&Path>) -> Result<u8, Usage> {
    if diag_range <= 0.0 {
        return Err(Usage("--diag-range must be positive".to_string()));
    }
    let lg = load_graph(path)?;
    let params = sample(&lg.graph, seed, &SampleConfig { diag_range });
    let mut doc = params.to_doc();
    relabel_params_doc(&mut doc, &lg);
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    write_output(output, &text)?;
    Ok(0)
}

fn relabel_params_doc(doc: &mut NdParametersDoc, lg: &LabeledGraph) {
    for comp in &mut doc.components {
        for v in comp.vertices.iter_mut().chain(comp.parents.iter_mut()) {
            *v = lg.label_of(*v) as usize;
        }
    }
}

fn delabel_params_doc(doc: &mut NdParametersDoc, lg: &LabeledGraph) -> Result<(), Usage> {
    for comp in &mut doc.components {
        for v in comp.vertices.iter_mut().chain(comp.parents.iter_mut()) {
            *v = lg
                .vertex_of(*v as u64)
                .ok_or_else(|| Usage(format!("parameter file names node {v} not in the graph")))?;
        }
    }
    Ok(())
}

fn cmd_build(graph: &Path, params_path: &Path, output: Option<&Path>) -> Result<u8, Usage> {
    let lg = load_graph(graph)?;
    let text = fs::read_to_string(params_path)
        .map_err(|e| Usage(format!("cannot read {}: {e}", params_path.display())))?;
    let mut doc: NdParametersDoc = serde_json::from_str(&text)
        .map_err(|e| Usage(format!("{}: {e}", params_path.display())))?;
    delabel_params_doc(&mut doc, &lg)?;
    let params = NdParameters::from_doc(&doc)?;
    let joint = build_joint(&lg.graph, &params)?;
    let mut gdoc = joint.to_doc();
    for label in &mut gdoc.labels {
        *label = lg.label_of(*label) as usize;
    }
    let text = serde_json::to_string_pretty(&gdoc).expect("serializable");
    write_output(output, &text)?;
    Ok(0)
}

fn cmd_ci(dist: &Path, i: &str, j: &str, z: &str, tol: f64, json: bool) -> Result<u8, Usage> {
    if tol <= 0.0 {
        return Err(Usage("--tol must be positive".to_string()));
    }
    let text = fs::read_to_string(dist)
        .map_err(|e| Usage(format!("cannot read {}: {e}", dist.display())))?;
    let doc: GaussianDoc =
        serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", dist.display())))?;
    let gaussian = Gaussian::from_doc(&doc)?;
    let parse_one = |t: &str| -> Result<Vertex, Usage> {
        t.trim().parse().map_err(|_| Usage(format!("`{t}` is not a node id")))
    };
    let i = parse_one(i)?;
    let j = parse_one(j)?;
    let z_set: Vec<Vertex> = z
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_one)
        .collect::<Result<_, _>>()?;
    let verdict = ci_test(&gaussian, i, j, &z_set, tol)?;
    if json {
        println!("{}", serde_json::to_string(&verdict).expect("serializable"));
    } else {
        println!(
            "{} (partial correlation {})",
            if verdict.independent { "independent" } else { "dependent" },
            verdict.partial_corr
        );
    }
    Ok(0)
}

fn relabel_report(report: &mut FaithfulnessReport, lg: &LabeledGraph) {
    report.graph = summary_with_labels(lg);
    for record in report
        .markov_violations
        .iter_mut()
        .chain(report.faithfulness_violations.iter_mut())
        .chain(report.borderline.iter_mut())
    {
        record.i = lg.label_of(record.i) as usize;
        record.j = lg.label_of(record.j) as usize;
        for v in &mut record.z {
            *v = lg.label_of(*v) as usize;
        }
    }
}

fn cmd_faithfulness(
    graph: &Path,
    samples: usize,
    seed: u64,
    tol: f64,
    json: bool,
    output: Option<&Path>,
) -> Result<u8, Usage> {
    if tol <= 0.0 {
        return Err(Usage("--tol must be positive".to_string()));
    }
    let lg = load_graph(graph)?;
    let mut report = run_harness(&lg.graph, samples, seed, tol)?;
    relabel_report(&mut report, &lg);
    if json || output.is_some() {
        let text = serde_json::to_string_pretty(&report).expect("serializable");
        write_output(output, &text)?;
    }
    if !json && output.is_none() {
        println!(
            "graph {} (d={}): {} samples, faithful fraction {}, {} markov violations, {} faithfulness violations",
            report.digest,
            report.d,
            report.n_samples,
            report.faithful_fraction,
            report.markov_violation_count,
            report.faithfulness_violations.len(),
        );
    }
    Ok(if report.markov_violation_count > 0 { 1 } else { 0 })
}

fn cmd_equiv(path_a: &Path, path_b: &Path, json: bool) -> Result<u8, Usage> {
    let a = load_graph(path_a)?;
    let b = load_graph(path_b)?;
    if a.labels != b.labels {
        return Err(Usage(format!(
            "graphs are over different node sets: {:?} vs {:?}",
            a.labels, b.labels
        )));
    }
    let verdict = equivalence::equivalent(&a.graph, &b.graph)?;
    let witness = verdict.witness.as_ref().map(|w| match w {
        EquivalenceWitness::SkeletonEdge(x, y) => {
            format!("skeleton edge {} - {}", a.label_of(*x), a.label_of(*y))
        }
        EquivalenceWitness::Complex(c) => {
            let region: Vec<String> =
                c.region.iter().map(|&v| a.label_of(v).to_string()).collect();
            format!(
                "complex {} -> [{}] <- {}",
                a.label_of(c.left),
                region.join(","),
                a.label_of(c.right)
            )
        }
    });
    if json {
        let doc = serde_json::json!({
            "skeleton_equal": verdict.skeleton_equal,
            "complexes_equal": verdict.complexes_equal,
            "equivalent": verdict.equivalent,
            "witness": witness,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else if verdict.equivalent {
        println!("equivalent");
    } else {
        println!("not equivalent ({})", witness.unwrap_or_default());
    }
    Ok(0)
}

fn cmd_enumerate(n: usize, json: bool) -> Result<u8, Usage> {
    let graphs: Vec<_> = equivalence::enumerate_cgs(n)?.collect();
    let classes = equivalence::partition_classes(&graphs)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&classes).expect("serializable"));
    } else {
        println!("{} graphs on {} vertices in {} equivalence classes", graphs.len(), n, classes.len());
        for class in &classes {
            println!(
                "class {} (size {}, dimension {}): e.g. [{}]",
                class.digest,
                class.size,
                class.dimension,
                class.members[0].edges.join(", ")
            );
        }
    }
    Ok(0)
}
