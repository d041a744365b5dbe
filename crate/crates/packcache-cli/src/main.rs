//! Command-line front end for the packable-caching simulator: simulate,
//! sweep, compare, oracle, generate and pricing subcommands.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 oracle
//! budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use packcache::accounting::{pricing_projection, AccountingError, CostReport, PricingConfig};
use packcache::engine::{run_trace, EngineError, ServeMode};
use packcache::model::{CostParams, ModelError, Trace};
use packcache::oracle::{
    dp_total_opt_with_budget, offline_frequent_pairs, proof_mode_opt, OracleError,
    DEFAULT_DP_BUDGET,
};
use packcache::sweep::{
    run_sweep, sweep_csv, sweep_plot_svg, Coupling, SweepError, SweepParam, SweepSpec,
};
use packcache::trace::{
    generate_adversarial, generate_synthetic, parse_trace, write_trace, AdversaryConfig,
    SyntheticConfig, TraceError,
};

#[derive(Parser)]
#[command(
    name = "packcache",
    version,
    about = "Trace-driven simulator for online packable data caching"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Packed,
    Individual,
}

impl From<ModeArg> for ServeMode {
    fn from(m: ModeArg) -> ServeMode {
        match m {
            ModeArg::Packed => ServeMode::Packed,
            ModeArg::Individual => ServeMode::Individual,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Caching cost per item per time unit
    #[arg(long, default_value_t = 3.0)]
    mu: f64,
    /// Transfer cost per item
    #[arg(long, default_value_t = 3.0)]
    lambda: f64,
    /// Packed-transfer discount factor in (0, 1]
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    /// Minimum support for frequent pairs in (0, 1]
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    /// Number of caching servers (generated traces only)
    #[arg(long, default_value_t = 50)]
    servers: usize,
    /// Number of distinct data items (generated traces only)
    #[arg(long, default_value_t = 10)]
    items: usize,
    /// Serving mode
    #[arg(long, value_enum, default_value_t = ModeArg::Packed)]
    mode: ModeArg,
    /// RNG seed for generated traces
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Read the request trace from this file instead of generating one
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write CSV output to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit an SVG line chart next to the CSV
    #[arg(long, requires = "out")]
    plot: bool,
    /// Number of requests to generate
    #[arg(long, default_value_t = 1000)]
    requests: usize,
    /// Fraction of generated requests that ask for an item pair
    #[arg(long, default_value_t = 0.6)]
    pair_fraction: f64,
    /// Mean inter-arrival gap of generated requests
    #[arg(long, default_value_t = 1.0)]
    mean_gap: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the online engine once and print its cost report
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run one engine pass per (value, mode) cell and emit a CSV table
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Swept parameter: rho, gamma, alpha, servers, items or requests
        #[arg(long)]
        param: String,
        /// Comma-separated values to sweep over
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// For rho sweeps, hold lambda + mu at this sum (default: current sum)
        #[arg(long)]
        cost_sum: Option<f64>,
    },
    /// Compare the engine against the offline oracles
    Compare {
        #[command(flatten)]
        common: Common,
        /// State budget for the exact total-cost oracle
        #[arg(long, default_value_t = DEFAULT_DP_BUDGET as u64)]
        budget: u64,
    },
    /// Evaluate the offline oracles on a trace
    Oracle {
        #[command(flatten)]
        common: Common,
        /// State budget for the exact total-cost oracle
        #[arg(long, default_value_t = DEFAULT_DP_BUDGET as u64)]
        budget: u64,
    },
    /// Generate a synthetic or adversarial trace file
    Generate {
        #[command(flatten)]
        common: Common,
        /// Emit the lower-bound adversarial instance instead of a synthetic trace
        #[arg(long)]
        adversarial: bool,
        /// Number of adversarial rounds
        #[arg(long, default_value_t = 5)]
        rounds: usize,
        /// Inter-round gap for the adversarial instance (default: 2 * lambda / mu)
        #[arg(long)]
        gap: Option<f64>,
    },
    /// Project packed-vs-individual serving onto a cloud price sheet
    Pricing {
        #[command(flatten)]
        common: Common,
        /// Currency per GB per billing period of cached data
        #[arg(long, default_value_t = 0.04)]
        cache_price: f64,
        /// Currency per GB transferred
        #[arg(long, default_value_t = 0.08)]
        transfer_price: f64,
        /// Data volume of one item in GB
        #[arg(long, default_value_t = 1.0)]
        gb_per_item: f64,
        /// Simulated time units per billing period
        #[arg(long, default_value_t = 1.0)]
        period_scale: f64,
    },
}

enum CliError {
    Validation(String),
    Budget(String),
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}
validation_from!(ModelError, TraceError, EngineError, SweepError, AccountingError, std::io::Error);

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Budget(e.to_string())
    }
}

fn main() {
    // die quietly when a pipeline consumer such as `head` closes stdout
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.cmd) {
        Ok(()) => 0,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Budget(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    }
}

fn params_of(c: &Common) -> Result<CostParams, CliError> {
    Ok(CostParams::new(c.mu, c.lambda, c.alpha, c.gamma)?)
}

fn generator_of(c: &Common) -> SyntheticConfig {
    // a couple of recurring pairs so the miner has something to find
    let hot_pairs = if c.items >= 4 {
        vec![(0, 1, 0.3), (2, 3, 0.15)]
    } else if c.items >= 2 {
        vec![(0, 1, 0.45)]
    } else {
        vec![]
    };
    SyntheticConfig {
        k: c.items,
        m: c.servers,
        n: c.requests,
        pair_fraction: c.pair_fraction,
        hot_pairs,
        mean_gap: c.mean_gap,
        seed: c.seed,
    }
}

fn trace_of(c: &Common) -> Result<Trace, CliError> {
    match &c.trace {
        Some(path) => Ok(parse_trace(&fs::read_to_string(path)?)?),
        None => Ok(generate_synthetic(&generator_of(c))?),
    }
}

fn echo_source(c: &Common) {
    match &c.trace {
        Some(path) => println!("trace={} seed={}", path.display(), c.seed),
        None => println!(
            "trace=synthetic seed={} items={} servers={} requests={}",
            c.seed, c.items, c.servers, c.requests
        ),
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)?;
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Simulate { common } => {
            let params = params_of(&common)?;
            let trace = trace_of(&common)?;
            let report = run_trace(&trace, params, common.mode.into())?;
            echo_source(&common);
            println!(
                "mu={} lambda={} alpha={} gamma={} mode={}",
                params.mu(),
                params.lambda(),
                params.alpha(),
                params.gamma(),
                mode_name(common.mode)
            );
            println!("{}", report.summary());
            if let Some(out) = &common.out {
                write_out(out, &format!("{}\n{}\n", CostReport::CSV_HEADER, report.csv_row()))?;
            }
            Ok(())
        }
        Cmd::Sweep { common, param, values, cost_sum } => {
            let param = SweepParam::parse(&param)
                .ok_or_else(|| CliError::Validation(format!("unknown sweep parameter {param:?}")))?;
            let base_params = params_of(&common)?;
            let coupling = if param == SweepParam::Rho {
                Coupling::FixedSum(cost_sum.unwrap_or(common.mu + common.lambda))
            } else if let Some(sum) = cost_sum {
                return Err(CliError::Validation(format!(
                    "--cost-sum {sum} only applies to rho sweeps"
                )));
            } else {
                Coupling::None
            };
            let spec = SweepSpec {
                param,
                values,
                base_params,
                generator: generator_of(&common),
                coupling,
                modes: vec![ServeMode::Packed, ServeMode::Individual],
            };
            let cells = run_sweep(&spec)?;
            let csv = sweep_csv(&spec, &cells);
            match &common.out {
                Some(out) => {
                    write_out(out, &csv)?;
                    println!("seed={} rows={} csv={}", common.seed, cells.len(), out.display());
                    if common.plot {
                        let plot_path = out.with_extension("svg");
                        write_out(&plot_path, &sweep_plot_svg(&spec, &cells))?;
                        println!("plot={}", plot_path.display());
                    }
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Cmd::Compare { common, budget } => {
            let params = params_of(&common)?;
            let trace = trace_of(&common)?;
            let report = run_trace(&trace, params, common.mode.into())?;
            let freq = offline_frequent_pairs(&trace, params.gamma());
            let opt_proof = proof_mode_opt(&trace, &params, &freq);
            echo_source(&common);
            println!("engine_proof_cost={}", report.proof_mode_cost());
            println!("engine_total_cost={}", report.total_cost());
            println!("proof_mode_opt={opt_proof}");
            println!("proof_ratio={}", report.proof_mode_cost() / opt_proof);
            println!("bound_2_over_alpha={}", 2.0 / params.alpha());
            match dp_total_opt_with_budget(&trace, &params, &freq, budget as u128) {
                Ok(opt_total) => {
                    println!("dp_total_opt={opt_total}");
                    println!("total_ratio={}", report.total_cost() / opt_total);
                }
                Err(e) => println!("dp_total_opt=skipped ({e})"),
            }
            Ok(())
        }
        Cmd::Oracle { common, budget } => {
            let params = params_of(&common)?;
            let trace = trace_of(&common)?;
            let freq = offline_frequent_pairs(&trace, params.gamma());
            echo_source(&common);
            println!("frequent_pairs={}", freq.pairs().len());
            println!("proof_mode_opt={}", proof_mode_opt(&trace, &params, &freq));
            let opt_total = dp_total_opt_with_budget(&trace, &params, &freq, budget as u128)?;
            println!("dp_total_opt={opt_total}");
            Ok(())
        }
        Cmd::Generate { common, adversarial, rounds, gap } => {
            let params = params_of(&common)?;
            let trace = if adversarial {
                let config = AdversaryConfig {
                    rounds,
                    gap: gap.unwrap_or(2.0 * params.delta_t()),
                    m: common.servers.max(rounds + 1),
                };
                generate_adversarial(&config, &params)?
            } else {
                generate_synthetic(&generator_of(&common))?
            };
            let text = write_trace(&trace);
            match &common.out {
                Some(out) => {
                    write_out(out, &text)?;
                    println!(
                        "seed={} requests={} file={}",
                        common.seed,
                        trace.requests().len(),
                        out.display()
                    );
                }
                None => {
                    eprintln!("seed={}", common.seed);
                    print!("{text}");
                }
            }
            Ok(())
        }
        Cmd::Pricing { common, cache_price, transfer_price, gb_per_item, period_scale } => {
            let params = params_of(&common)?;
            let trace = trace_of(&common)?;
            let packed = run_trace(&trace, params, ServeMode::Packed)?;
            let individual = run_trace(&trace, params, ServeMode::Individual)?;
            let pricing = PricingConfig { cache_price, transfer_price, gb_per_item, period_scale };
            let projection = pricing_projection(&packed, &individual, &pricing)?;
            echo_source(&common);
            println!(
                "cache_price={cache_price} transfer_price={transfer_price} \
                 gb_per_item={gb_per_item} period_scale={period_scale}"
            );
            println!("packed_spend={:.4}", projection.packed_spend);
            println!("individual_spend={:.4}", projection.individual_spend);
            println!("saving={:.4}", projection.saving);
            println!("gb_avoided={:.4}", projection.gb_avoided);
            Ok(())
        }
    }
}

fn mode_name(mode: ModeArg) -> &'static str {
    match mode {
        ModeArg::Packed => "packed",
        ModeArg::Individual => "individual",
    }
}
