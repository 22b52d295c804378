use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use policylearn::agent::{AgentConfig, FloorSchedule};
use policylearn::aipw::{regret_bound, tree_entropy_bound, weight_sequence, RegretBoundInputs, WeightScheme};
use policylearn::config::{EnvSource, ExperimentConfig};
use policylearn::env::{make_test_set, EnvKind, Environment};
use policylearn::eval::{best_in_class, policy_value, RegretReport};
use policylearn::experiment::{self, build_env, collect, learn_from_log, score_samples, summarize, AGENT_SCHEME};
use policylearn::io::{emit_results, read_logged, write_logged, write_scores};
use policylearn::treepolicy::{TreeClassSpec, TreePolicy};
use policylearn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "policylearn",
    version,
    about = "Learn tree policies from adaptively collected bandit data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect data with the floored Thompson sampling agent and write the log.
    Simulate(SimulateArgs),
    /// Learn a tree policy from a logged-data CSV.
    Learn(LearnArgs),
    /// Measure the regret of a tree on a fresh test set.
    Evaluate(EvaluateArgs),
    /// Run the full replication protocol and write the results CSV.
    Run(RunArgs),
    /// Print the regret bound and the tree entropy bound.
    Bound(BoundArgs),
    /// Load a classification CSV and report its shape.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct EnvArgs {
    /// synthetic or classification
    #[arg(long, default_value = "synthetic")]
    env: String,
    /// Classification table (implies --env classification).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Label column of the classification table.
    #[arg(long)]
    label: Option<String>,
}

impl EnvArgs {
    fn source(&self) -> Result<EnvSource> {
        match (self.env.as_str(), &self.csv) {
            ("synthetic", None) => Ok(EnvSource::Synthetic),
            (_, Some(csv)) => Ok(EnvSource::Classification {
                csv: csv.clone(),
                label: self
                    .label
                    .clone()
                    .ok_or_else(|| Error::Config("--label is required with --csv".into()))?,
            }),
            ("classification", None) => Err(Error::Config("--csv is required for classification".into())),
            (other, _) => Err(Error::Config(format!("unknown environment {other:?}"))),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long = "T")]
    horizon: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    m_draws: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnArgs {
    /// Logged-data CSV (t, x_1..x_p, action, reward, propensity).
    #[arg(long)]
    log: PathBuf,
    #[arg(long = "L", default_value_t = 2)]
    depth: usize,
    /// Number of arms; defaults to the largest logged action + 1.
    #[arg(long = "K")]
    arms: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// uniform, floor, or pow:<beta>
    #[arg(long, default_value = "floor")]
    scheme: String,
    /// Also write the raw AIPW score matrix here.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Output path for the tree; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// File holding a tree in text form.
    #[arg(long)]
    tree: PathBuf,
    #[command(flatten)]
    env: EnvArgs,
    /// Depth of the reference class; defaults to the tree's depth.
    #[arg(long = "L")]
    depth: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "L")]
    depth: Option<usize>,
    /// Comma-separated horizons.
    #[arg(long)]
    horizons: Option<String>,
    /// Comma-separated weight schemes.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m_draws: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long = "L")]
    depth: usize,
    #[arg(long)]
    p: usize,
    #[arg(long = "K")]
    arms: usize,
    #[arg(long = "T")]
    horizon: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long = "M")]
    bound_m: f64,
    /// uniform, floor, or pow:<beta>
    #[arg(long, default_value = "floor")]
    scheme: String,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    label: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Learn(a) => learn(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Run(a) => run(a),
        Command::Bound(a) => bound(a),
        Command::Convert(a) => convert(a),
    }
}

fn write_output(out: Option<&Path>, body: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Error::io(path, e)),
        None => std::io::stdout().write_all(body).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    if a.horizon == 0 {
        return Err(Error::Config("--T must be positive".into()));
    }
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(Error::Config("--alpha must lie in [0, 1]".into()));
    }
    let env = build_env(&a.env.source()?, a.seed)?;
    let agent = AgentConfig {
        m_draws: a.m_draws.max(1),
        ..AgentConfig::default()
    };
    let run = collect(&env, a.horizon, a.alpha, agent, a.seed, &[]);
    let mut buf = Vec::new();
    write_logged(&mut buf, &run.samples, env.p)?;
    write_output(a.out.as_deref(), &buf)
}

fn learn(a: LearnArgs) -> Result<()> {
    let scheme: WeightScheme = a.scheme.parse()?;
    let (samples, p) = read_logged(&a.log)?;
    if samples.is_empty() {
        return Err(Error::BadRow {
            row: 0,
            message: "logged file has no rows".into(),
        });
    }
    let k = match a.arms {
        Some(k) => k,
        None => samples.iter().map(|s| s.w).max().unwrap_or(0) + 1,
    }
    .max(2);
    if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.w >= k) {
        return Err(Error::BadRow {
            row: i + 1,
            message: format!("action {} out of range for K={k}", s.w),
        });
    }
    if a.depth < 1 {
        return Err(Error::Config("--L must be at least 1".into()));
    }
    if let Some(path) = &a.scores {
        let gamma = score_samples(&samples, p, k)?;
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_scores(file, &gamma)?;
    }
    let res = learn_from_log(&samples, p, k, scheme, a.alpha, a.depth)?;
    eprintln!("objective {}", res.objective);
    write_output(a.out.as_deref(), format!("{}\n", res.tree).as_bytes())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let text = fs::read_to_string(&a.tree).map_err(|e| Error::io(&a.tree, e))?;
    let tree: TreePolicy = text.trim().parse()?;
    let env = build_env(&a.env.source()?, a.seed)?;
    let spec = TreeClassSpec {
        depth: a.depth.unwrap_or(tree.depth()).max(1),
        p: env.p,
        k: env.k,
    };
    tree.validate(&spec)?;
    let n_test = a.n_test.unwrap_or_else(|| env.default_n_test());
    let test = make_test_set(&env, n_test, experiment::test_seed(a.seed));
    let (_, best) = best_in_class(&test, &spec)?;
    let report = RegretReport::new(policy_value(&tree, &test)?, best, test.len());
    println!("policy_value {}", report.policy_value);
    println!("best_value {}", report.best_value);
    println!("regret {}", report.regret);
    println!("n_test {}", report.n_test);
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)?;
    }
    let overrides: [(&str, Option<String>); 12] = [
        ("env", a.env),
        ("csv", a.csv.map(|p| p.display().to_string())),
        ("label", a.label),
        ("alpha", a.alpha.map(|v| v.to_string())),
        ("depth", a.depth.map(|v| v.to_string())),
        ("horizons", a.horizons),
        ("schemes", a.schemes),
        ("reps", a.reps.map(|v| v.to_string())),
        ("n_test", a.n_test.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("m_draws", a.m_draws.map(|v| v.to_string())),
        ("out", a.out.map(|p| p.display().to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let EnvSource::Classification { csv, label } = &cfg.env {
        if csv.as_os_str().is_empty() || label.is_empty() {
            return Err(Error::Config("classification runs need both csv and label".into()));
        }
    }
    cfg.validate()?;
    let rows = experiment::run_experiment(&cfg)?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
    emit_results(&rows, &out)?;

    println!("{:>8}  {:>10}  {:>10}  {:>9}", "T", "scheme", "regret", "se");
    let mut ids: Vec<String> = cfg.schemes.iter().map(|s| s.to_string()).collect();
    ids.push(AGENT_SCHEME.to_owned());
    for &t in &cfg.horizons {
        for id in &ids {
            if let Some((mean, se, _)) = summarize(&rows, t, id) {
                println!("{t:>8}  {id:>10}  {mean:>10.5}  {se:>9.5}");
            }
        }
    }
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn bound(a: BoundArgs) -> Result<()> {
    if a.horizon == 0 {
        return Err(Error::Config("--T must be positive".into()));
    }
    let scheme: WeightScheme = a.scheme.parse()?;
    let kappa = tree_entropy_bound(a.depth, a.p, a.arms)?;
    let sched = FloorSchedule::new(a.alpha, a.arms);
    let g = sched.sequence(a.horizon);
    let h = weight_sequence(scheme, a.horizon, &sched);
    let value = regret_bound(&RegretBoundInputs {
        m: a.bound_m,
        delta: a.delta,
        kappa,
        h,
        g,
    })?;
    println!("kappa {kappa:.6}");
    println!("regret_bound {value:.6}");
    Ok(())
}

fn convert(a: ConvertArgs) -> Result<()> {
    let env: Environment = policylearn::env::load_classification_csv(&a.csv, &a.label)?;
    let EnvKind::Classification(table) = &env.kind else {
        unreachable!("loaded from csv")
    };
    println!("rows {}", table.features.len());
    println!("p {}", env.p);
    println!("K {}", env.k);
    println!("n_test_default {}", env.default_n_test());
    for (i, class) in table.classes.iter().enumerate() {
        let count = table.labels.iter().filter(|&&l| l == i).count();
        println!("arm {i} label {class} count {count}");
    }
    Ok(())
}
