//! Command-line front end: config parsing, dispatch, CSV emission.
//!
//! Exit codes: 0 success, 1 domain/usage error, 2 verification FAIL.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_config, Config};
use fkqkd::bounds::{verify_f_monotone, SerflingModel};
use fkqkd::channel::{
    csv_row, expected_stats, keyrate_point, sweep_optimize, ChannelSpec, SweepRow, CSV_HEADER,
};
use fkqkd::concentration::{gamma_bin, gamma_serf};
use fkqkd::decoy::{
    extend_decoy_monotone, key_length_decoy, single_photon_lower_bound_fixed_fraction, DecoyStats,
};
use fkqkd::detector::{delta_bounds, derived_extremes};
use fkqkd::key_length::lambda_ec_model;
use fkqkd::mc::{verify_inflation, verify_serfling, verify_thinning, McReport};
use std::fs;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fkqkd", version, about = "Finite-key QKD security analysis")]
struct Cli {
    /// Path to a key=value config file.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Echo the normalized config to stderr before running.
    #[arg(long, global = true)]
    echo_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the key rate at the configured parameter point (CSV).
    Point {
        /// Use the decoy-state pipeline with the fixed-fraction estimator.
        #[arg(long)]
        decoy: bool,
    },
    /// Distance sweep with basis-probability optimization (CSV).
    Sweep,
    /// Print the detector extremes and mismatch bounds for the config.
    Delta,
    /// Evaluate a finite-size deviation term.
    Gamma {
        #[command(subcommand)]
        which: GammaCommand,
    },
    /// Monte-Carlo and numerical verification suites.
    Verify {
        #[command(subcommand)]
        which: VerifyCommand,
    },
}

#[derive(Subcommand)]
enum GammaCommand {
    /// Binomial-tail deviation term.
    Bin {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_name = "EPS_SQ")]
        eps_sq: f64,
    },
    /// Sampling-without-replacement deviation term.
    Serf {
        #[arg(long)]
        n_x: u64,
        #[arg(long)]
        n_k: u64,
        #[arg(long, value_name = "EPS_SQ")]
        eps_sq: f64,
    },
}

#[derive(Args)]
struct McArgs {
    /// Trials per run (default: mc_trials from config).
    #[arg(long)]
    trials: Option<u64>,
    /// PRNG seed (default: mc_seed from config).
    #[arg(long)]
    seed: Option<u64>,
    /// Failure probability under test (default: mc_eps_sq from config).
    #[arg(long)]
    eps_sq: Option<f64>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Random test/key partitions of a fixed error pattern.
    Serfling {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value_t = 1000)]
        n_tot: u64,
        #[arg(long, default_value_t = 500)]
        n_k: u64,
        /// Fraction of rounds carrying an error.
        #[arg(long, default_value_t = 0.3)]
        error_rate: f64,
    },
    /// Binomial loss thinning against its deviation guarantee.
    Thinning {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value_t = 1000)]
        n_tilde: u64,
        #[arg(long, default_value_t = 0.1)]
        delta2_true: f64,
        #[arg(long, default_value_t = 0.1)]
        delta2_bound: f64,
    },
    /// Coupled error inflation against its deviation guarantee.
    Inflation {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value_t = 1000)]
        n_tilde: u64,
        #[arg(long, default_value_t = 0.05)]
        base_e: f64,
        #[arg(long, default_value_t = 0.1)]
        delta1_true: f64,
        #[arg(long, default_value_t = 0.1)]
        delta1_bound: f64,
    },
    /// Sampled monotonicity and continuity of the envelope product.
    Lemma1 {
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; --help/--version print and exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> fkqkd::Result<ExitCode> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fkqkd::Error::Domain(format!("cannot read {path}: {e}")))?;
            parse_config(&text)?
        }
        None => Config::default(),
    };
    if cli.echo_config {
        eprint!("{}", cfg.dump());
    }
    let mut out = String::new();
    let code = dispatch(cli, &cfg, &mut out)?;
    match &cli.out {
        Some(path) => {
            let mut file = fs::File::create(path)
                .map_err(|e| fkqkd::Error::Domain(format!("cannot create {path}: {e}")))?;
            file.write_all(out.as_bytes())
                .map_err(|e| fkqkd::Error::Domain(format!("write {path}: {e}")))?;
        }
        None => print!("{out}"),
    }
    Ok(code)
}

fn dispatch(cli: &Cli, cfg: &Config, out: &mut String) -> fkqkd::Result<ExitCode> {
    match &cli.command {
        Command::Point { decoy } => {
            let row = if *decoy {
                decoy_point(cfg)?
            } else {
                let result = keyrate_point(
                    &cfg.channel_spec(),
                    &cfg.detector_spec()?,
                    &cfg.budget(false)?,
                    &cfg.source_spec(),
                )?;
                SweepRow {
                    l_km: cfg.length_km,
                    p_za: cfg.p_za,
                    p_zb: cfg.p_zb,
                    result,
                }
            };
            out.push_str(CSV_HEADER);
            out.push('\n');
            out.push_str(&csv_row(&row));
            out.push('\n');
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep => {
            let rows = sweep_optimize(
                &cfg.channel_spec(),
                &cfg.detector_spec()?,
                &cfg.budget(false)?,
                &cfg.source_spec(),
                &cfg.sweep_grid(),
            )?;
            out.push_str(CSV_HEADER);
            out.push('\n');
            for row in &rows {
                out.push_str(&csv_row(row));
                out.push('\n');
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Delta => {
            let ext = derived_extremes(&cfg.detector_spec()?);
            let mm = delta_bounds(&ext);
            out.push_str(&format!(
                "d_max={:.9e} d_min={:.9e} r_eta={:.9e} delta1={:.9e} delta2={:.9e}\n",
                ext.d_max, ext.d_min, ext.r_eta, mm.delta1, mm.delta2
            ));
            Ok(ExitCode::SUCCESS)
        }
        Command::Gamma { which } => {
            match which {
                GammaCommand::Bin { n, delta, eps_sq } => {
                    let g = gamma_bin(*n, *delta, *eps_sq)?;
                    out.push_str(&format!(
                        "gamma_bin n={n} delta={delta:.9e} eps_sq={eps_sq:.9e} value={g:.9e}\n"
                    ));
                }
                GammaCommand::Serf { n_x, n_k, eps_sq } => {
                    let g = gamma_serf(*n_x, *n_k, *eps_sq)?;
                    out.push_str(&format!(
                        "gamma_serf n_x={n_x} n_k={n_k} eps_sq={eps_sq:.9e} value={g:.9e}\n"
                    ));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { which } => {
            let report = match which {
                VerifyCommand::Serfling {
                    mc,
                    n_tot,
                    n_k,
                    error_rate,
                } => {
                    if !(0.0..=1.0).contains(error_rate) {
                        return Err(fkqkd::Error::Domain(format!(
                            "error_rate {error_rate} outside [0, 1]"
                        )));
                    }
                    let errors = (*n_tot as f64 * error_rate).round() as u64;
                    let pattern: Vec<bool> = (0..*n_tot).map(|i| i < errors).collect();
                    verify_serfling(
                        *n_tot,
                        *n_k,
                        &pattern,
                        mc.trials.unwrap_or(cfg.mc_trials),
                        mc.eps_sq.unwrap_or(cfg.mc_eps_sq),
                        mc.seed.unwrap_or(cfg.mc_seed),
                    )?
                }
                VerifyCommand::Thinning {
                    mc,
                    n_tilde,
                    delta2_true,
                    delta2_bound,
                } => verify_thinning(
                    *n_tilde,
                    *delta2_true,
                    *delta2_bound,
                    mc.trials.unwrap_or(cfg.mc_trials),
                    mc.eps_sq.unwrap_or(cfg.mc_eps_sq),
                    mc.seed.unwrap_or(cfg.mc_seed),
                )?,
                VerifyCommand::Inflation {
                    mc,
                    n_tilde,
                    base_e,
                    delta1_true,
                    delta1_bound,
                } => verify_inflation(
                    *n_tilde,
                    *base_e,
                    *delta1_true,
                    *delta1_bound,
                    mc.trials.unwrap_or(cfg.mc_trials),
                    mc.eps_sq.unwrap_or(cfg.mc_eps_sq),
                    mc.seed.unwrap_or(cfg.mc_seed),
                )?,
                VerifyCommand::Lemma1 {
                    samples,
                    tolerance,
                    seed,
                } => {
                    let r = verify_f_monotone(*samples, *tolerance, *seed)?;
                    out.push_str(&format!(
                        "samples={} min_slope={:.9e} violations={} boundary_checks={} \
                         boundary_violations={} max_boundary_gap={:.9e}\n",
                        r.samples,
                        r.min_slope,
                        r.violations,
                        r.boundary_checks,
                        r.boundary_violations,
                        r.max_boundary_gap
                    ));
                    let rate = r.violations as f64 / r.samples as f64;
                    let verdict = if r.pass() { "PASS" } else { "FAIL" };
                    out.push_str(&format!("{verdict} rate={rate:.9e} bound=0.000000000e0\n"));
                    return Ok(if r.pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    });
                }
            };
            push_mc_report(out, &report);
            Ok(if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn push_mc_report(out: &mut String, r: &McReport) {
    out.push_str(&format!(
        "trials={} violations={} empirical={:.9e} claimed={:.9e}\n",
        r.trials, r.violations, r.empirical_rate, r.claimed_bound
    ));
    let verdict = if r.pass() { "PASS" } else { "FAIL" };
    out.push_str(&format!(
        "{verdict} rate={:.9e} bound={:.9e}\n",
        r.empirical_rate, r.claimed_bound
    ));
}

/// Decoy pipeline: fixed-fraction single-photon estimate, closed-form decoy
/// extension of the Serfling bound, decoy key length.
fn decoy_point(cfg: &Config) -> fkqkd::Result<SweepRow> {
    let ch: ChannelSpec = cfg.channel_spec();
    let budget = cfg.budget(true)?;
    let mismatch = delta_bounds(&derived_extremes(&cfg.detector_spec()?));
    let obs = expected_stats(&ch)?;
    let stats = DecoyStats::new(vec![obs.n_k], vec![obs.test.n_x], obs.n_k)?;
    let m = single_photon_lower_bound_fixed_fraction(&stats, cfg.decoy_fraction);
    let model = SerflingModel::new(budget.eps_ind_sq)?;
    let eps_sp_sq = budget.eps_sp_sq.expect("decoy budget");
    let ext = extend_decoy_monotone(
        &model,
        m,
        &obs.test,
        mismatch,
        budget.eps_dep1_sq,
        budget.eps_dep2_sq,
        eps_sp_sq,
    )?;
    let lambda_ec = lambda_ec_model(obs.n_k, obs.e_z_obs, ch.f_ec)?;
    let l = key_length_decoy(m, ext.rate_bound, lambda_ec, budget.eps_pa, budget.eps_ev)?;
    Ok(SweepRow {
        l_km: cfg.length_km,
        p_za: cfg.p_za,
        p_zb: cfg.p_zb,
        result: fkqkd::channel::KeyRateResult {
            l,
            rate: l as f64 / ch.n_total as f64,
            delta1: mismatch.delta1,
            delta2: mismatch.delta2,
            e_ph_bound: ext.rate_bound,
            gamma_dep1: 0.0,
            gamma_dep2: 0.0,
            n_k: obs.n_k,
            n_x: obs.test.n_x,
            e_x: obs.test.e_x,
            lambda_ec,
            eps_sec: budget.eps_sec(),
            eps_corr: budget.eps_corr(),
            source: cfg.source_spec(),
        },
    })
}
