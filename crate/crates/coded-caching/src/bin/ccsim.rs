//! Command-line front end: scenario sweeps, the two-user scheme, bounds, and
//! a built-in self test.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coded_caching::error::{Error, Result};
use coded_caching::rate_model::DemandVector;
use coded_caching::scenario::{
    check_dominance, emit_csv, emit_json, format_sig9, run_scenario, ScenarioConfig,
};
use coded_caching::{bounds, layer, pair, scenario, simkit};

#[derive(Parser)]
#[command(name = "ccsim", about = "Delivery-rate computation and simulation for lossy coded caching", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write curve CSV/JSON files.
    Run {
        /// Path to a key=value scenario config.
        config: PathBuf,
    },
    /// Evaluate the optimal two-file, two-user scheme at one point.
    Pair(PairArgs),
    /// Print the cut-set bound across a config's cache sweep.
    Bound {
        /// Path to a key=value scenario config.
        config: PathBuf,
    },
    /// Run built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct PairArgs {
    /// Cache capacity of user 1 (bpss).
    #[arg(long)]
    m1: f64,
    /// Cache capacity of user 2 (bpss).
    #[arg(long)]
    m2: f64,
    /// Description rate of user 1 (bpss).
    #[arg(long)]
    r1: f64,
    /// Description rate of user 2 (bpss).
    #[arg(long)]
    r2: f64,
    /// Demand as "file_for_user1,file_for_user2" (files 1 or 2).
    #[arg(long, default_value = "1,2")]
    demand: String,
}

fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    ScenarioConfig::parse(&text)
}

/// Output directory: CCSIM_OUT_DIR if set, else the working directory.
fn out_dir() -> PathBuf {
    std::env::var_os("CCSIM_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn cmd_run(config_path: &Path) -> Result<()> {
    let config = read_config(config_path)?;
    let curves = run_scenario(&config)?;
    check_dominance(&curves)?;

    let dir = out_dir();
    std::fs::create_dir_all(&dir)
        .map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let csv_path = dir.join("curves.csv");
    let json_path = dir.join("curves.json");
    write_out(&csv_path, &emit_csv(&curves))?;
    write_out(&json_path, &emit_json(&curves))?;

    println!("wrote {} and {}", csv_path.display(), json_path.display());
    for c in &curves {
        match (c.points.first(), c.points.last()) {
            (Some(first), Some(last)) => println!(
                "{:<13} {} points, rate {} at M={} down to {} at M={}",
                c.scheme,
                c.points.len(),
                format_sig9(first.1),
                format_sig9(first.0),
                format_sig9(last.1),
                format_sig9(last.0)
            ),
            _ => println!("{:<13} 0 points", c.scheme),
        }
    }
    Ok(())
}

fn cmd_pair(args: &PairArgs) -> Result<()> {
    let demands: Vec<usize> = args
        .demand
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad demand '{}'", args.demand))))
        .collect::<Result<_>>()?;
    if demands.len() != 2 {
        return Err(Error::invalid("demand must list exactly two file indices"));
    }
    let demand = DemandVector::new(demands, 2)?;

    let case = pair::classify_case(args.m1, args.m2, args.r1, args.r2)?;
    let rate = pair::optimal_rate(args.m1, args.m2, args.r1, args.r2)?;
    let placement = pair::build_placement(args.m1, args.m2, args.r1, args.r2)?;
    let message = pair::delivery_message(&placement, &demand)?;
    for user in 1..=2 {
        pair::decode(user, &placement, &message, &demand)?;
    }

    println!("case {case}");
    println!("optimal delivery rate {}", format_sig9(rate));
    let sizes: Vec<String> =
        (1..=8).map(|p| format!("{p}:{}", format_sig9(placement.size(p)))).collect();
    println!("part sizes {}", sizes.join(" "));
    println!(
        "cache loads user1 {} user2 {}",
        format_sig9(placement.cache_load(1)),
        format_sig9(placement.cache_load(2))
    );
    println!("delivery for demand ({},{}):", demand.demands[0], demand.demands[1]);
    for piece in &message.pieces {
        match piece {
            pair::MessagePiece::Plain(s) => println!("  send {s}"),
            pair::MessagePiece::Xor(a, b) => println!("  send {a} xor {b}"),
        }
    }
    println!("message rate {}", format_sig9(message.total_rate));
    println!("both users decode");
    Ok(())
}

fn cmd_bound(config_path: &Path) -> Result<()> {
    let config = read_config(config_path)?;
    let rp = config.rate_profile()?;
    println!("M,bound,cut_size,users");
    for &m in &config.sweep {
        let cp = config.cache_at(m)?;
        let report = bounds::cutset_bound(&cp, &rp, config.num_files)?;
        let users: Vec<String> = report.argmax_users.iter().map(|u| u.to_string()).collect();
        println!(
            "{},{},{},{}",
            format_sig9(m),
            format_sig9(report.value),
            report.argmax_s,
            users.join("+")
        );
    }
    Ok(())
}

fn selftest_check(name: &str, ok: bool) -> Result<()> {
    if ok {
        println!("selftest: {name}: ok");
        Ok(())
    } else {
        Err(Error::internal(format!("selftest failed: {name}")))
    }
}

fn cmd_selftest() -> Result<()> {
    let rate = pair::optimal_rate(1.0, 1.0, 1.0, 2.0)?;
    selftest_check("two-user optimum at M=(1,1)", (rate - 1.5).abs() < 1e-12)?;

    let demand = DemandVector::new(vec![1, 2], 2)?;
    let sim = pair::simulate_pair(2000, 0.5, 1.0, 1.0, 2.0, &demand, 9)?;
    let want = pair::optimal_rate(0.5, 1.0, 1.0, 2.0)?;
    let rate_err = (sim.transmitted_bits as f64 / 2000.0 - want).abs();
    selftest_check("two-user bit simulation decodes at rate", sim.decode_ok && rate_err < 8.0 / 2000.0)?;

    let bad = pair::simulate_pair_sabotaged(2000, 0.5, 1.0, 1.0, 2.0, &demand, 9)?;
    selftest_check("corrupted cache is detected", !bad.decode_ok)?;

    let spec = layer::SubLayerSpec::new(3, 1, 1.0, 3)?;
    selftest_check("coded delivery corner matches simulation", simkit::verify_corner(&spec, 1, 4000, 5)?)?;

    let text = "files = 10\nusers = 10\nrates = 1,2,3,4,5,6,7,8,9,10\ncache = identical\n\
                sweep = 0,50,100\nschemes = pca,oca,envelope,uncoded,cutset\n";
    let config = ScenarioConfig::parse(text)?;
    let a = run_scenario(&config)?;
    let b = run_scenario(&config)?;
    check_dominance(&a)?;
    selftest_check("sweep outputs byte-stable", emit_csv(&a) == emit_csv(&b) && emit_json(&a) == emit_json(&b))?;
    selftest_check(
        "curve JSON round-trips",
        scenario::parse_json(&emit_json(&a)).map(|c| c.len() == a.len()).unwrap_or(false),
    )?;
    println!("selftest: all checks passed");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successes; anything else is a validation error
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Pair(args) => cmd_pair(args),
        Command::Bound { config } => cmd_bound(config),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
