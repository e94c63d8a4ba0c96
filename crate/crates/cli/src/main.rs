use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use acquire_cli::output::{read_aggregate, tsv_writer, write_aggregate, write_grid, write_scan_records};
use acquire_cli::parse_config;
use acquire_core::admissible::{admissible_points, range_state, ArGridSpec};
use acquire_core::astro::{cartesian_to_kepler, MU_EARTH};
use acquire_core::sim::{
    init_search_set, monte_carlo, run_closed_loop, trial_seed, trial_truth, Policy, RunOptions, Scenario,
};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Closed-loop search and track of a newly detected space object.
#[derive(Parser)]
#[command(name = "acquire", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Admissible-region grid points and the Gaussian mixture built from them.
    Ar(Common),
    /// One closed-loop trial with per-scan logs, reward maps and intensity maps.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "info")]
        policy: PolicyArg,
        /// Monte-Carlo trial whose truth and noise to replay.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Both policies over independent truth draws, with per-scan quantiles.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Quantile table from an `mc` output directory.
    Report {
        /// Directory written by `mc`, or its aggregate.tsv.
        input: PathBuf,
        /// Print every k-th scan (the last scan is always printed).
        #[arg(long, default_value_t = 1)]
        every: usize,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replaces the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the number of scans.
    #[arg(long)]
    scans: Option<usize>,
    /// Replaces the particle count of the reward estimator.
    #[arg(long)]
    n_samp: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Info,
    Scan,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Info => Policy::Information,
            PolicyArg::Scan => Policy::Scanning,
        }
    }
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let text = fs::read_to_string(&self.config).with_context(|| format!("cannot read {}", self.config.display()))?;
        let mut s = parse_config(&text).with_context(|| format!("in {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(n) = self.scans {
            s.n_scans = n;
        }
        if let Some(n) = self.n_samp {
            s.reward.n_samp = n;
        }
        s.validate().context("after applying command-line overrides")?;
        Ok(s)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ACQUIRE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("ACQUIRE_THREADS={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn ar(common: &Common) -> Result<()> {
    let s = common.scenario()?;
    let out = common.out_dir()?;
    let search = init_search_set(&s)?;
    let att = &search.attributable;
    let spec = ArGridSpec::default_for(att, &s.ar, s.ar_n_rho, s.ar_n_rho_rate);
    let points = admissible_points(att, &s.ar, &spec)?;

    let mut w = tsv_writer(&out.join("ar_points.tsv"))?;
    w.write_record(["range[km]", "range_rate[km/s]", "semimajor_axis[km]", "eccentricity[1]"])?;
    for &(rho, rr) in &points.points {
        let el = cartesian_to_kepler(&range_state(att, rho, rr), MU_EARTH)?;
        w.write_record([rho, rr, el.a, el.e].map(|v| v.to_string()))?;
    }
    w.flush()?;

    let mut w = tsv_writer(&out.join("ar_gmm.tsv"))?;
    let axes = ["x", "y", "z", "vx", "vy", "vz"];
    let unit = |k: usize| if k < 3 { "km" } else { "km/s" };
    let mut header = vec!["weight[targets]".to_string()];
    header.extend((0..6).map(|k| format!("mean_{}[{}]", axes[k], unit(k))));
    for i in 0..6 {
        for j in i..6 {
            let u = match (unit(i), unit(j)) {
                ("km", "km") => "km^2",
                ("km/s", "km/s") => "km^2/s^2",
                _ => "km^2/s",
            };
            header.push(format!("cov_{}_{}[{u}]", axes[i], axes[j]));
        }
    }
    w.write_record(&header)?;
    for c in &search.ar_gmm.components {
        let mut row = vec![c.weight.to_string()];
        row.extend(c.mean.iter().map(|v| v.to_string()));
        for i in 0..6 {
            for j in i..6 {
                row.push(c.cov[(i, j)].to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    println!("{}: {} admissible points, {} components", s.name, points.points.len(), search.ar_gmm.len());
    Ok(())
}

fn run(common: &Common, policy: Policy, trial: usize) -> Result<()> {
    let s = common.scenario()?;
    let out = common.out_dir()?;
    let search = init_search_set(&s)?;
    let truth = trial_truth(&s, &search, trial)?;
    let opts = RunOptions { record_rewards: true, record_snapshots: true };
    let result = run_closed_loop(&s, &search, &truth, policy, trial_seed(&s, trial), opts)?;

    write_scan_records(&out.join("scans.tsv"), &result.records)?;

    let mut w = tsv_writer(&out.join("cardinality.tsv"))?;
    let n_max = result.snapshots.first().map_or(0, |x| x.cardinality.len());
    let mut header = vec!["scan".to_string()];
    header.extend((0..n_max).map(|n| format!("p{n}[prob]")));
    w.write_record(&header)?;
    for (scan, snap) in result.snapshots.iter().enumerate() {
        let mut row = vec![scan.to_string()];
        row.extend(snap.cardinality.iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = tsv_writer(&out.join("truth.tsv"))?;
    w.write_record(["kind", "x[km]", "y[km]", "z[km]", "vx[km/s]", "vy[km/s]", "vz[km/s]"])?;
    for (kind, objects) in [("target", &truth.targets), ("catalog", &truth.clutter)] {
        for x in objects {
            let mut row = vec![kind.to_string()];
            row.extend(x.to_vector().iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;

    for dir in ["rewards", "intensity"] {
        fs::create_dir_all(out.join(dir))?;
    }
    for (scan, snap) in result.snapshots.iter().enumerate() {
        let name = format!("scan_{scan:03}.grid");
        let rewards = snap.rewards.as_deref().unwrap_or(&[]);
        let rewards = if rewards.is_empty() { vec![0.0; search.grid.len()] } else { rewards.to_vec() };
        write_grid(&out.join("rewards").join(&name), &search.grid, &rewards)?;
        write_grid(&out.join("intensity").join(&name), &search.grid, &snap.projected_mass)?;
    }

    let mut w = tsv_writer(&out.join("timing.tsv"))?;
    w.write_record(["scan", "wall_time[s]"])?;
    for r in &result.records {
        w.write_record([r.scan.to_string(), r.wall_time_s.to_string()])?;
    }
    w.flush()?;

    let last = result.records.last().context("scenario has no scans")?;
    println!(
        "{} {} trial {trial}: final divergence {:.3}, E[N] {:.3} (truth {}), {} false tracks",
        s.name,
        policy.label(),
        last.divergence,
        last.expected_cardinality,
        truth.targets.len(),
        last.false_tracks
    );
    Ok(())
}

fn mc(common: &Common, trials: usize) -> Result<()> {
    let s = common.scenario()?;
    let out = common.out_dir()?;
    let started = Instant::now();
    let outcome = monte_carlo(&s, &[Policy::Information, Policy::Scanning], trials)?;
    let elapsed = started.elapsed().as_secs_f64();

    write_aggregate(&out.join("aggregate.tsv"), &outcome.aggregate)?;

    let mut w = tsv_writer(&out.join("trials.tsv"))?;
    w.write_record([
        "trial",
        "policy",
        "final_divergence[nat]",
        "final_expected_cardinality[targets]",
        "final_cardinality_error[targets]",
        "final_false_tracks[count]",
    ])?;
    for (trial, runs) in outcome.runs.iter().enumerate() {
        for r in runs {
            let last = r.records.last().context("scenario has no scans")?;
            w.write_record([
                trial.to_string(),
                r.policy.label().to_string(),
                last.divergence.to_string(),
                last.expected_cardinality.to_string(),
                last.cardinality_error.to_string(),
                last.false_tracks.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = tsv_writer(&out.join("summary.tsv"))?;
    w.write_record(["policy", "trials[count]", "trials_without_false_tracks[count]"])?;
    for p in &outcome.aggregate.policies {
        w.write_record([p.policy.label().to_string(), trials.to_string(), p.trials_without_false_tracks.to_string()])?;
    }
    w.flush()?;

    let mut w = tsv_writer(&out.join("timing.tsv"))?;
    w.write_record(["wall_time[s]"])?;
    w.write_record([elapsed.to_string()])?;
    w.flush()?;

    for p in &outcome.aggregate.policies {
        let (d, c) = (p.divergence.last().context("no scans")?, p.cardinality_error.last().context("no scans")?);
        println!(
            "{}: final median divergence {:.3}, median cardinality error {:.3}, {}/{trials} trials without false tracks",
            p.policy.label(),
            d.median,
            c.median,
            p.trials_without_false_tracks
        );
    }
    Ok(())
}

fn report(input: &Path, every: usize, out: Option<&Path>) -> Result<()> {
    let path = if input.is_dir() { input.join("aggregate.tsv") } else { input.to_path_buf() };
    let rows = read_aggregate(&path)?;
    let mut policies: Vec<&str> = Vec::new();
    for r in &rows {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    let last = rows.iter().map(|r| r.scan).max().context("aggregate table is empty")?;
    let every = every.max(1);
    let mut text = String::new();
    let mut header = vec!["scan".to_string()];
    for p in &policies {
        header.push(format!("{p}_divergence_median[nat]"));
        header.push(format!("{p}_divergence_iqr[nat]"));
        header.push(format!("{p}_cardinality_error_median[targets]"));
    }
    text.push_str(&header.join("\t"));
    text.push('\n');
    for scan in (0..=last).filter(|k| k % every == 0 || *k == last) {
        let mut line = vec![scan.to_string()];
        for p in &policies {
            match rows.iter().find(|r| r.policy == *p && r.scan == scan) {
                Some(r) => {
                    line.push(format!("{:.3}", r.values[1]));
                    line.push(format!("{:.3}", r.values[2] - r.values[0]));
                    line.push(format!("{:.3}", r.values[4]));
                }
                None => line.extend(["-".to_string(), "-".to_string(), "-".to_string()]),
            }
        }
        text.push_str(&line.join("\t"));
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Ar(common) => ar(common),
        Command::Run { common, policy, trial } => run(common, (*policy).into(), *trial),
        Command::Mc { common, trials } => mc(common, *trials),
        Command::Report { input, every, out } => report(input, *every, out.as_deref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
