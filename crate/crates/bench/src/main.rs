use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use legible_bench::balance::balance_results;
use legible_bench::config::{BenchConfig, DEFAULT_LEARNER_ETA, DEFAULT_POOL_SIZE};
use legible_bench::episodes::export_episodes;
use legible_bench::irl_curves::{run_irl, write_curve, Condition};
use legible_bench::records::{read_rows_from, RowSink};
use legible_bench::responses::{aggregate, read_responses, write_summary};
use legible_bench::scaling::{run_goal_scaling, run_state_scaling};
use legible_bench::BenchError;
use legible_core::fixtures;
use legible_core::maze::{build_family, parse_maze, Action, MazeSpec};
use legible_core::mdp::Policy;
use legible_core::{GoalQTables, LegibleProblem};

#[derive(Parser)]
#[command(name = "legible", version, about = "Legible-policy benchmarks and study tooling")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, global = true, default_value_t = 0.9)]
    gamma: f64,
    /// Observer rationality for the belief model and the Miura metric.
    #[arg(long, global = true, default_value_t = 1.0)]
    eta: f64,
    /// Learner rationality for goal inference in the IRL curves.
    #[arg(long, global = true, default_value_t = DEFAULT_LEARNER_ETA)]
    learner_eta: f64,
    /// Per-sample wall-clock limit; defaults to 300 (7200 with --paper-scale).
    #[arg(long, global = true)]
    timeout_secs: Option<f64>,
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,
    /// Restore the full sample counts and timeouts.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Samples per configuration (or IRL scenarios per maze).
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one maze and print the optimal and legible policies.
    Solve {
        /// Fixture name or path to a maze file.
        maze: String,
        /// Goal label; every goal when omitted.
        #[arg(long)]
        goal: Option<char>,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
    #[command(subcommand)]
    Irl(IrlCommand),
    /// Write the study episode pools as JSON.
    ExportEpisodes {
        #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
        pool: usize,
        #[arg(long, default_value = fixtures::STUDY)]
        maze: String,
    },
    /// Summarize a response log written by the guessing game.
    AggregateResponses { input: PathBuf },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// 25x25 maze with 3 to 10 goals.
    Goals,
    /// Seven maze sizes from 5x8 to 75x75.
    States {
        /// Restrict to these fixtures.
        #[arg(long, value_delimiter = ',')]
        fixtures: Option<Vec<String>>,
    },
    /// Keep the fastest paired successes per configuration.
    Balance {
        input: PathBuf,
        #[arg(long)]
        quota: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IrlCommand {
    Trajectory,
    Samples,
}

fn config_from(args: &GlobalArgs) -> Result<BenchConfig, BenchError> {
    let base = if args.paper_scale {
        BenchConfig::paper_scale()
    } else {
        BenchConfig::desk()
    };
    let mut config = BenchConfig {
        seed: args.seed,
        beta: args.beta,
        gamma: args.gamma,
        eta: args.eta,
        learner_eta: args.learner_eta,
        out_dir: args.out_dir.clone(),
        ..base
    };
    if let Some(secs) = args.timeout_secs {
        if !(secs > 0.0) || !secs.is_finite() {
            return Err(BenchError::Config("--timeout-secs must be positive".into()));
        }
        config.timeout = Duration::from_secs_f64(secs);
    }
    if let Some(n) = args.samples {
        config.samples = n;
        config.irl_scenarios = n;
    }
    config.validate()?;
    Ok(config)
}

fn load_maze(name: &str) -> Result<MazeSpec, BenchError> {
    let path = Path::new(name);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Ok(parse_maze(&text).map_err(legible_core::maze::MazeError::from)?)
    } else {
        Ok(fixtures::load(name)?)
    }
}

fn render(spec: &MazeSpec, policy: &Policy) -> String {
    let mut out = String::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let cell = legible_core::maze::Cell::new(r, c);
            let ch = if spec.walls.contains(&cell) {
                '#'
            } else if let Some((&label, _)) = spec.goals.iter().find(|(_, &g)| g == cell) {
                label
            } else {
                policy
                    .action(spec.state_of(cell))
                    .and_then(Action::from_index)
                    .map_or('?', Action::arrow)
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

fn solve(config: &BenchConfig, maze: &str, goal: Option<char>) -> Result<(), BenchError> {
    let spec = load_maze(maze)?;
    let family = build_family(&spec, config.gamma, 1.0, 0.0)?;
    let q = GoalQTables::solve(&family, config.solver_tolerance, legible_core::mdp::DEFAULT_MAX_ITERATIONS)?;
    let labels: Vec<char> = match goal {
        Some(label) => vec![label],
        None => spec.goal_labels(),
    };
    for label in labels {
        let g = spec
            .goal_index(label)
            .ok_or_else(|| BenchError::Config(format!("maze has no goal '{label}'")))?;
        let (result, legible) = LegibleProblem::new(&family, &q, g, config.beta)?.solve(config.solver_tolerance)?;
        println!("goal {label}: optimal");
        print!("{}", render(&spec, &q.optimal_policy(g)));
        println!("goal {label}: legible ({} iterations)", result.iterations);
        print!("{}", render(&spec, &legible));
    }
    Ok(())
}

fn create(path: &Path) -> Result<File, BenchError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    File::create(path).map_err(|e| BenchError::io(path, e))
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let config = config_from(&cli.global)?;
    let out = &config.out_dir;
    match cli.command {
        Command::Solve { maze, goal } => solve(&config, &maze, goal)?,
        Command::Bench(BenchCommand::Goals) => {
            let path = out.join("goal_scaling.csv");
            let mut sink = RowSink::create(&path)?;
            let rows = run_goal_scaling(fixtures::GOAL_COUNTS, &config, &mut sink)?;
            println!("{} rows -> {}", rows.len(), path.display());
        }
        Command::Bench(BenchCommand::States { fixtures: names }) => {
            let names: Vec<String> = names.unwrap_or_else(|| fixtures::STATE_SCALING.iter().map(|s| s.to_string()).collect());
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let path = out.join("state_scaling.csv");
            let mut sink = RowSink::create(&path)?;
            let rows = run_state_scaling(&refs, &config, &mut sink)?;
            println!("{} rows -> {}", rows.len(), path.display());
        }
        Command::Bench(BenchCommand::Balance { input, quota, output }) => {
            let rows = read_rows_from(&input)?;
            let kept = balance_results(&rows, quota.unwrap_or(config.quota), config.seed)?;
            let path = output.unwrap_or_else(|| input.with_extension("balanced.csv"));
            let mut sink = RowSink::new(create(&path)?)?;
            for row in &kept {
                sink.write(row)?;
            }
            println!("{} of {} rows -> {}", kept.len(), rows.len(), path.display());
        }
        Command::Irl(which) => {
            let condition = match which {
                IrlCommand::Trajectory => Condition::Trajectory,
                IrlCommand::Samples => Condition::Samples,
            };
            let points = run_irl(condition, &fixtures::IRL_MAZES, &config)?;
            let path = out.join(format!("irl_{}.csv", condition.as_str()));
            write_curve(&points, create(&path)?)?;
            println!("{} points -> {}", points.len(), path.display());
        }
        Command::ExportEpisodes { pool, maze } => {
            let dir = out.join("episodes");
            let written = export_episodes(&maze, pool, &config, &dir)?;
            println!("{} episodes -> {}", written.len(), dir.display());
        }
        Command::AggregateResponses { input } => {
            let file = File::open(&input).map_err(|e| BenchError::io(&input, e))?;
            let rows = read_responses(file)?;
            write_summary(&aggregate(&rows), std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
