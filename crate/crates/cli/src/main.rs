//! Batch front end: parse inputs, dispatch to the library, write a JSON
//! report. Exit 0 on a completed run (verdicts live in the report), 1 on
//! input errors, 2 on exhausted budgets.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homog::report::{execute, RunConfig};

#[derive(Parser)]
#[command(name = "homog", version, about = "Ages, generic structures and vertex partition search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report here (default: $HOMOG_OUT_DIR/report-<cmd>.json
    /// or stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Bounds {
    #[arg(long, default_value_t = 2)]
    sockel_bound: usize,
    #[arg(long, default_value_t = 5)]
    size_bound: usize,
    #[arg(long, default_value_t = 3)]
    fragment_bound: usize,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    #[arg(long, default_value_t = 50)]
    retry: usize,
    #[arg(long, default_value_t = 20)]
    backtrack: usize,
    #[arg(long, default_value_t = 500)]
    advance: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a boundary: divisible with witnesses, certified
    /// indivisible, or bound-stamped rank-linearity evidence.
    Classify {
        boundary: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Enumerate type classes with rank vectors at the bound.
    Types {
        boundary: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Grow a generic structure and export the snapshot with its demand log.
    Sample {
        boundary: PathBuf,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample extra relations randomly instead of free attachment.
        #[arg(long)]
        random: bool,
    },
    /// Play the monochromatic-copy game against an adversary.
    Game {
        boundary: PathBuf,
        #[arg(long, default_value = "parity")]
        oracle: String,
        #[arg(long, default_value_t = 0)]
        color: usize,
        #[arg(long, default_value_t = 40)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Two-colour dichotomy over the age of all finite graphs.
    Dichotomy {
        #[arg(long, default_value = "parity")]
        oracle: String,
        #[arg(long, default_value_t = 40)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Validate a sort-game instance, compute the labelling, the largeness
    /// dichotomy and the constructive set.
    Mho {
        /// Instance file; omitted means generate one from the seed.
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ground elements of the tested subset, comma separated.
        #[arg(long, value_delimiter = ',')]
        s: Vec<usize>,
    },
    /// Build the lexicographic P/Q/R partition for a divisible age.
    Divide {
        boundary: PathBuf,
        #[arg(long, default_value_t = 60)]
        prefix: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Type files overriding the classifier's witness pair.
        #[arg(long)]
        type_t: Option<PathBuf>,
        #[arg(long)]
        type_s: Option<PathBuf>,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Weak indivisibility run: a colour class missing a structure forces a
    /// copy in the other class.
    Weak {
        boundary: PathBuf,
        #[arg(long)]
        missing: PathBuf,
        #[arg(long, default_value = "edge-free-red")]
        oracle: String,
        #[arg(long, default_value_t = 0)]
        color: usize,
        #[arg(long, default_value_t = 40)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Print the DOT rendering of a structure's 2-section.
    ExportDot { structure: PathBuf },
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    Ok(fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?)
}

fn build_config(cli: &Command) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::default();
    match cli {
        Command::Classify { boundary, bounds } => {
            config.command = "classify".into();
            config.inputs.insert("boundary".into(), read(boundary)?);
            apply_bounds(&mut config, bounds);
        }
        Command::Types { boundary, bounds } => {
            config.command = "types".into();
            config.inputs.insert("boundary".into(), read(boundary)?);
            apply_bounds(&mut config, bounds);
        }
        Command::Sample {
            boundary,
            steps,
            seed,
            random,
        } => {
            config.command = "sample".into();
            config.inputs.insert("boundary".into(), read(boundary)?);
            config.steps = *steps;
            config.seed = *seed;
            config.random_mode = *random;
        }
        Command::Game {
            boundary,
            oracle,
            color,
            length,
            seed,
            budgets,
        } => {
            config.command = "game".into();
            config.inputs.insert("boundary".into(), read(boundary)?);
            config.oracle = oracle.clone();
            config.color = *color;
            config.target_len = *length;
            config.seed = *seed;
            apply_budgets(&mut config, budgets);
        }
        Command::Dichotomy {
            oracle,
            length,
            seed,
            budgets,
        } => {
            config.command = "dichotomy".into();
            config.oracle = oracle.clone();
            config.target_len = *length;
            config.seed = *seed;
            apply_budgets(&mut config, budgets);
        }
        Command::Mho { instance, seed, s } => {
            config.command = "mho".into();
            if let Some(path) = instance {
                config.inputs.insert("mho".into(), read(path)?);
            }
            config.seed = *seed;
            config.mho_s = s.clone();
        }
        Command::Divide {
            boundary,
            prefix,
            seed,
            type_t,
            type_s,
            bounds,
        } => {
            config.command = "divide".into();
            config.inputs.insert("boundary".into(), read(boundary)?);
            config.prefix = *prefix;
            config.seed = *seed;
            if let Some(p) = type_t {
                config.inputs.insert("type_t".into(), read(p)?);
            }
            if let Some(p) = type_s {
                config.inputs.insert("type_s".into(), read(p)?);
            }
            apply_bounds(&mut config, bounds);
        }
        Command::Weak {
            boundary,
            missing,
            oracle,
            color,
            length,
            seed,
            budgets,
        } => {
            config.command = "weak".into();
            config.inputs.insert("boundary".into(), read(boundary)?);
            config.inputs.insert("missing".into(), read(missing)?);
            config.oracle = oracle.clone();
            config.color = *color;
            config.target_len = *length;
            config.seed = *seed;
            apply_budgets(&mut config, budgets);
        }
        Command::ExportDot { structure } => {
            config.command = "export-dot".into();
            config.inputs.insert("structure".into(), read(structure)?);
        }
    }
    Ok(config)
}

fn apply_bounds(config: &mut RunConfig, b: &Bounds) {
    config.sockel_bound = b.sockel_bound;
    config.size_bound = b.size_bound;
    config.fragment_bound = b.fragment_bound;
}

fn apply_budgets(config: &mut RunConfig, b: &BudgetArgs) {
    config.retry = b.retry;
    config.backtrack = b.backtrack;
    config.advance = b.advance;
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("input error: {e}");
            return ExitCode::from(1);
        }
    };
    match execute(&config) {
        Ok(out) => {
            let dest = cli.out.clone().or_else(|| {
                std::env::var("HOMOG_OUT_DIR").ok().map(|dir| {
                    PathBuf::from(dir).join(format!("report-{}.json", config.command))
                })
            });
            match dest {
                Some(path) => {
                    if let Err(e) = fs::write(&path, &out.report) {
                        eprintln!("cannot write {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                    println!("{}", path.display());
                }
                None => {
                    if config.command == "export-dot" {
                        // Emit the DOT text itself for piping.
                        let v: serde_json::Value =
                            serde_json::from_str(&out.report).expect("valid report");
                        if let Some(dot) = v["result"]["dot"].as_str() {
                            print!("{dot}");
                            return ExitCode::SUCCESS;
                        }
                    }
                    println!("{}", out.report);
                }
            }
            ExitCode::SUCCESS
        }
        Err(homog::Error::Budget(msg)) => {
            eprintln!("budget exhausted: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("input error: {e}");
            ExitCode::from(1)
        }
    }
}
