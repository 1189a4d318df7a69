//! Command-line front end: simulation, ensembles, noise generation, span
//! checks and kernel tables, each writing a run directory with a manifest.

use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vortorus_core::diagnostics;
use vortorus_core::dynamics::Simulator;
use vortorus_core::hypo;
use vortorus_core::kernel::{EvalPath, Kernel, KernelMode, KernelSpec};
use vortorus_core::mc;
use vortorus_core::output::{self, RunManifest};
use vortorus_core::spectral::NoiseFamily;
use vortorus_core::torus::TorusVec;
use vortorus_core::{parse_config, CollapseMode, ConfigDocument, CoreError};

type Result<T> = std::result::Result<T, CoreError>;

#[derive(Parser)]
#[command(
    name = "vortorus",
    version,
    about = "Point-vortex dynamics on the 2D torus with shared spectral noise",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output run directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write it with diagnostics columns.
    Simulate(ConfigArgs),
    /// Run an ensemble of trajectories and write per-trajectory summaries.
    Ensemble(ConfigArgs),
    /// Ensemble collision probabilities over the epsilon ladder.
    CollisionProb {
        #[command(flatten)]
        common: ConfigArgs,
        /// Also dump per-trajectory minima for external plotting.
        #[arg(long)]
        dump_minima: bool,
    },
    /// Three-vortex collapse demonstration.
    CollapseDemo {
        /// deterministic (planar) or noisy (torus ensemble).
        #[arg(long, default_value = "deterministic")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Ensemble size in noisy mode.
        #[arg(long, default_value_t = 100)]
        trajectories: usize,
        /// Noise amplitude in noisy mode.
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
    },
    /// Sample a noise family and write it to a directory.
    GenNoise(ConfigArgs),
    /// Direct span check of the lifted noise family over a grid.
    CheckSpan(ConfigArgs),
    /// Bracket-growing rank check at the configured vortex positions.
    CheckHormander(ConfigArgs),
    /// Repeated random-family span checks.
    Genericity(ConfigArgs),
    /// Tabulate G and K on a grid as delimited text.
    KernelTable {
        #[arg(long)]
        out: PathBuf,
        /// exact | regularized | planar
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long)]
        delta: Option<f64>,
        /// Table resolution (points per axis).
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Per-run statistics over one or more run directories.
    Summarize {
        /// Run directory; repeatable.
        #[arg(long, required = true)]
        run: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage problems (including unknown subcommands) exit 1
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn load(config: &Path) -> Result<(ConfigDocument, PathBuf)> {
    let doc = parse_config(config)?;
    let base = config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((doc, base))
}

fn write_output(dir: &Path, name: &str, data: &str, manifest: &mut RunManifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), data)?;
    manifest.add_output(dir, name)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Ensemble(args) => ensemble(&args),
        Command::CollisionProb { common, dump_minima } => collision_prob(&common, dump_minima),
        Command::CollapseDemo {
            mode,
            out,
            seed,
            trajectories,
            amplitude,
        } => collapse_demo(&mode, &out, seed, trajectories, amplitude),
        Command::GenNoise(args) => gen_noise(&args),
        Command::CheckSpan(args) => check_span(&args),
        Command::CheckHormander(args) => check_hormander(&args),
        Command::Genericity(args) => genericity(&args),
        Command::KernelTable {
            out,
            mode,
            delta,
            grid,
        } => kernel_table(&out, &mode, delta, grid),
        Command::Summarize { run, out } => summarize(&run, &out),
    }
}

fn simulate(args: &ConfigArgs) -> Result<()> {
    let (doc, base) = load(&args.config)?;
    let sde = doc.sde_config(&base)?;
    let seed = sde.seed;
    let delta = sde.kernel.delta().unwrap_or(0.05);
    let x0 = doc.initial_state()?;
    let sim = Simulator::new(sde)?;
    let traj = sim.simulate(&x0)?;
    let records = diagnostics::records_for(&traj, sim.kernel(), delta)?;
    let text = output::trajectory_text(&traj, &records)?;
    let mut manifest = RunManifest::new("simulate", Some(seed), doc.to_toml_string());
    manifest.stopped_at = traj.stopped_at;
    write_output(&args.out, "trajectory.tsv", &text, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "simulate: {} steps, min distance {:.6e}{}",
        traj.times.len() - 1,
        traj.min_pair_distance(),
        match traj.stopped_at {
            Some((t, pair)) => format!(", stopped at t = {t:.6} by pair {pair:?}"),
            None => String::new(),
        }
    );
    Ok(())
}

fn summaries_text(summaries: &[mc::TrajectorySummary]) -> String {
    let mut text = String::from(
        "index\tseed\tmin_pair_distance\tsup_g_delta\tstopped_t\tstopped_i\tstopped_j\terror\n",
    );
    for s in summaries {
        let (st, si, sj) = match s.stopped_at {
            Some((t, (i, j))) => (fmt_f(t), i.to_string(), j.to_string()),
            None => ("".into(), "".into(), "".into()),
        };
        writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.index,
            s.seed,
            fmt_f(s.min_pair_distance),
            s.sup_g_delta.map(fmt_f).unwrap_or_default(),
            st,
            si,
            sj,
            s.error.clone().unwrap_or_default()
        )
        .unwrap();
    }
    text
}

fn ensemble(args: &ConfigArgs) -> Result<()> {
    let (doc, base) = load(&args.config)?;
    let spec = doc.ensemble_spec(&base)?;
    let summaries = mc::run_ensemble(&spec)?;
    let mut manifest = RunManifest::new("ensemble", Some(spec.base_seed), doc.to_toml_string());
    write_output(&args.out, "summaries.tsv", &summaries_text(&summaries), &mut manifest)?;
    manifest.write(&args.out)?;
    let failed = summaries.iter().filter(|s| s.error.is_some()).count();
    println!(
        "ensemble: {} trajectories, {failed} failed",
        summaries.len()
    );
    Ok(())
}

fn collision_prob(args: &ConfigArgs, dump_minima: bool) -> Result<()> {
    let (doc, base) = load(&args.config)?;
    let spec = doc.ensemble_spec(&base)?;
    let table = mc::collision_prob(&spec)?;
    let mut text = String::from("epsilon\tcount\tp_hat\tstd_err\tfit\n");
    for r in &table.rows {
        writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}",
            fmt_f(r.epsilon),
            r.count,
            fmt_f(r.p_hat),
            fmt_f(r.std_err),
            fmt_f(table.fit_a / r.epsilon.ln().abs())
        )
        .unwrap();
    }
    let mut manifest =
        RunManifest::new("collision-prob", Some(spec.base_seed), doc.to_toml_string());
    manifest.extra = serde_json::to_value(&table).expect("serializable");
    write_output(&args.out, "collisions.tsv", &text, &mut manifest)?;
    if dump_minima {
        let summaries = mc::run_ensemble(&spec)?;
        let mut dump = String::from("index\tmin_pair_distance\n");
        for s in &summaries {
            writeln!(dump, "{}\t{}", s.index, fmt_f(s.min_pair_distance)).unwrap();
        }
        write_output(&args.out, "minima.tsv", &dump, &mut manifest)?;
    }
    manifest.write(&args.out)?;
    println!(
        "collision-prob: fit a = {:.4e}, upper-bounds within 2se: {}",
        table.fit_a, table.fit_upper_bounds_within_2se
    );
    Ok(())
}

fn collapse_demo(
    mode: &str,
    out: &Path,
    seed: u64,
    trajectories: usize,
    amplitude: f64,
) -> Result<()> {
    let mode = match mode {
        "deterministic" => CollapseMode::Deterministic,
        "noisy" => {
            let family = NoiseFamily::sample(2, 0.0, 8, amplitude, seed ^ 0x6e6f6973)?;
            CollapseMode::Noisy {
                family,
                trajectories,
            }
        }
        other => {
            return Err(CoreError::InvalidInput(format!(
                "unknown mode `{other}` (expected deterministic or noisy)"
            )))
        }
    };
    let report = mc::collapse_demo(mode, seed)?;
    let mut manifest = RunManifest::new("collapse-demo", Some(seed), String::new());
    manifest.extra = serde_json::to_value(&report).expect("serializable");
    if let Some(det) = &report.deterministic {
        let mut text = String::from("t\tmin_dist\n");
        for &(t, d) in &det.series {
            writeln!(text, "{}\t{}", fmt_f(t), fmt_f(d)).unwrap();
        }
        write_output(out, "min_distance.tsv", &text, &mut manifest)?;
        println!(
            "collapse-demo deterministic: reached = {}, t = {:.4}, min distance {:.3e}",
            det.reached, det.time, det.final_min_distance
        );
    }
    if let Some(noisy) = &report.noisy {
        println!(
            "collapse-demo noisy: {}/{} paths hit stop_delta (fraction {:.3}, CI95 [{:.3}, {:.3}])",
            noisy.hits, noisy.total, noisy.fraction, noisy.ci95.0, noisy.ci95.1
        );
    }
    manifest.write(out)?;
    Ok(())
}

fn gen_noise(args: &ConfigArgs) -> Result<()> {
    let (doc, base) = load(&args.config)?;
    let family = doc
        .noise_family(&base)?
        .ok_or_else(|| CoreError::Config {
            key: "noise".into(),
            reason: "section required by gen-noise".into(),
        })?;
    let noise = doc.noise.as_ref().expect("checked above");
    output::write_noise_dir(&args.out, &family, noise.seed, noise.d, noise.gamma)?;
    let mut manifest = RunManifest::new("gen-noise", noise.seed, doc.to_toml_string());
    for i in 0..family.len() {
        manifest.add_output(&args.out, &format!("field_{i:03}.tsv"))?;
    }
    manifest.write(&args.out)?;
    println!("gen-noise: wrote {} fields", family.len());
    Ok(())
}

fn hypo_inputs(doc: &ConfigDocument, base: &Path) -> Result<(hypo::LiftedFamily, hypo::SpanGrid, u32, f64)> {
    let h = doc.hypo.as_ref().ok_or_else(|| CoreError::Config {
        key: "hypo".into(),
        reason: "section required by this subcommand".into(),
    })?;
    let family = doc
        .noise_family(base)?
        .ok_or_else(|| CoreError::Config {
            key: "noise".into(),
            reason: "section required by this subcommand".into(),
        })?;
    let lifted = hypo::LiftedFamily::new(family, h.n)?;
    let grid = hypo::SpanGrid {
        per_axis: h.grid,
        delta: h.delta,
        n: h.n,
    };
    Ok((lifted, grid, h.depth, h.tol))
}

fn check_span(args: &ConfigArgs) -> Result<()> {
    let (doc, base) = load(&args.config)?;
    let (family, grid, _depth, tol) = hypo_inputs(&doc, &base)?;
    let basis = hypo::bracket_closure(&family.base, 1, 100_000)?;
    let report = hypo::check_span(&family, &basis, &grid, tol)?;
    let mut text = String::from("pass\tmin_rank\trequired_rank\tmin_margin\tpoints_checked\tpoints_skipped\n");
    writeln!(
        text,
        "{}\t{}\t{}\t{}\t{}\t{}",
        report.pass,
        report.min_rank,
        report.required_rank,
        fmt_f(report.min_margin),
        report.points_checked,
        report.points_skipped
    )
    .unwrap();
    let mut manifest = RunManifest::new("check-span", None, doc.to_toml_string());
    manifest.extra = serde_json::to_value(&report).expect("serializable");
    write_output(&args.out, "span_report.tsv", &text, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "check-span: pass = {}, min rank {}/{}, margin {:.3e}",
        report.pass, report.min_rank, report.required_rank, report.min_margin
    );
    Ok(())
}

fn check_hormander(args: &ConfigArgs) -> Result<()> {
    let (doc, base) = load(&args.config)?;
    let (family, _grid, depth, tol) = hypo_inputs(&doc, &base)?;
    let state = doc.initial_state()?;
    if state.n() != family.n {
        return Err(CoreError::Config {
            key: "hypo.n".into(),
            reason: format!(
                "hypo.n = {} but [vortices] has {} points",
                family.n,
                state.n()
            ),
        });
    }
    let points: Vec<TorusVec> = state.positions().to_vec();
    let report = hypo::check_hormander(&family, &points, depth, tol, 100_000)?;
    let mut manifest = RunManifest::new("check-hormander", None, doc.to_toml_string());
    manifest.extra = serde_json::to_value(&report).expect("serializable");
    let mut text = String::from("depth\trank\n");
    for &(d, r) in &report.ranks {
        writeln!(text, "{d}\t{r}").unwrap();
    }
    write_output(&args.out, "hormander_report.tsv", &text, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "check-hormander: pass = {}, achieved depth {:?}",
        report.pass, report.achieved_depth
    );
    Ok(())
}

fn genericity(args: &ConfigArgs) -> Result<()> {
    let (doc, _base) = load(&args.config)?;
    let h = doc.hypo.as_ref().ok_or_else(|| CoreError::Config {
        key: "hypo".into(),
        reason: "section required by genericity".into(),
    })?;
    let degree = h.degree.ok_or_else(|| CoreError::Config {
        key: "hypo.degree".into(),
        reason: "required by genericity".into(),
    })?;
    let m = h.fields_m.ok_or_else(|| CoreError::Config {
        key: "hypo.fields_m".into(),
        reason: "required by genericity".into(),
    })?;
    let trials = h.trials.unwrap_or(50);
    let seed = doc.run.as_ref().map(|r| r.seed).unwrap_or(0);
    let grid = hypo::SpanGrid {
        per_axis: h.grid,
        delta: h.delta,
        n: h.n,
    };
    let stats = hypo::genericity_trial(h.n, degree, m, &grid, trials, seed, h.tol)?;
    let mut manifest = RunManifest::new("genericity", Some(seed), doc.to_toml_string());
    manifest.extra = serde_json::to_value(&stats).expect("serializable");
    let mut text = String::from("trials\tpasses\tpass_rate\tmin_margin\tmin_margin_trial\n");
    writeln!(
        text,
        "{}\t{}\t{}\t{}\t{}",
        stats.trials,
        stats.passes,
        fmt_f(stats.pass_rate),
        fmt_f(stats.min_margin),
        stats.min_margin_trial
    )
    .unwrap();
    write_output(&args.out, "genericity.tsv", &text, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "genericity: pass rate {:.3} over {} trials, min margin {:.3e}",
        stats.pass_rate, stats.trials, stats.min_margin
    );
    Ok(())
}

fn kernel_table(out: &Path, mode: &str, delta: Option<f64>, grid: usize) -> Result<()> {
    let mode_enum = match mode {
        "exact" => KernelMode::Exact,
        "planar" => KernelMode::Planar,
        "regularized" => KernelMode::Regularized {
            delta: delta.ok_or_else(|| {
                CoreError::InvalidInput("--delta is required in regularized mode".into())
            })?,
        },
        other => {
            return Err(CoreError::InvalidInput(format!(
                "unknown mode `{other}` (expected exact, regularized or planar)"
            )))
        }
    };
    if grid == 0 {
        return Err(CoreError::InvalidInput("--grid must be positive".into()));
    }
    let spec = KernelSpec {
        mode: mode_enum,
        eval: EvalPath::default(),
    };
    let kernel = Kernel::new(spec)?;
    let mut text = String::from("x1\tx2\tG\tK1\tK2\n");
    let h = 2.0 * std::f64::consts::PI / grid as f64;
    for i in 0..grid {
        for j in 0..grid {
            let p = [
                -std::f64::consts::PI + (i as f64 + 0.5) * h,
                -std::f64::consts::PI + (j as f64 + 0.5) * h,
            ];
            let x = TorusVec::wrap(p)?;
            let g = match mode_enum {
                KernelMode::Planar => f64::NAN,
                _ => kernel.potential(x)?,
            };
            let k = kernel.biot_savart(x)?;
            writeln!(
                text,
                "{}\t{}\t{}\t{}\t{}",
                fmt_f(p[0]),
                fmt_f(p[1]),
                fmt_f(g),
                fmt_f(k[0]),
                fmt_f(k[1])
            )
            .unwrap();
        }
    }
    let mut manifest = RunManifest::new("kernel-table", None, String::new());
    write_output(out, "kernel_table.tsv", &text, &mut manifest)?;
    manifest.write(out)?;
    println!("kernel-table: {grid}x{grid} points in {mode} mode");
    Ok(())
}

fn summarize(runs: &[PathBuf], out: &Path) -> Result<()> {
    let mut text =
        String::from("run\trows\tmin_dist_min\tg_delta_max\th_first\th_last\th_rel_drift\n");
    for dir in runs {
        let manifest = RunManifest::read(dir)?;
        let doc: ConfigDocument = if manifest.config_toml.is_empty() {
            ConfigDocument::default()
        } else {
            vortorus_core::parse_config_str(&manifest.config_toml)?
        };
        let traj_path = dir.join("trajectory.tsv");
        if traj_path.exists() {
            let intensities = doc
                .vortices
                .as_ref()
                .map(|v| v.intensities.clone())
                .ok_or_else(|| CoreError::Format("manifest lacks vortex intensities".into()))?;
            let read = output::parse_trajectory(&std::fs::read_to_string(&traj_path)?, &intensities)?;
            let min_dist = read.min_dist.iter().copied().fold(f64::INFINITY, f64::min);
            let g_max = read.g_delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let h_first = *read.hamiltonian.first().unwrap();
            let h_last = *read.hamiltonian.last().unwrap();
            let drift = ((h_last - h_first) / h_first.abs().max(1e-300)).abs();
            writeln!(
                text,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                dir.display(),
                read.times.len(),
                fmt_f(min_dist),
                fmt_f(g_max),
                fmt_f(h_first),
                fmt_f(h_last),
                fmt_f(drift)
            )
            .unwrap();
        } else if dir.join("summaries.tsv").exists() {
            let content = std::fs::read_to_string(dir.join("summaries.tsv"))?;
            let mut min_dist = f64::INFINITY;
            let mut g_max = f64::NEG_INFINITY;
            let mut rows = 0usize;
            for line in content.lines().skip(1) {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() < 4 {
                    continue;
                }
                rows += 1;
                if let Ok(d) = fields[2].parse::<f64>() {
                    if d.is_finite() {
                        min_dist = min_dist.min(d);
                    }
                }
                if let Ok(g) = fields[3].parse::<f64>() {
                    g_max = g_max.max(g);
                }
            }
            writeln!(
                text,
                "{}\t{}\t{}\t{}\t\t\t",
                dir.display(),
                rows,
                fmt_f(min_dist),
                fmt_f(g_max)
            )
            .unwrap();
        } else {
            return Err(CoreError::Format(format!(
                "{} has neither trajectory.tsv nor summaries.tsv",
                dir.display()
            )));
        }
    }
    let mut manifest = RunManifest::new("summarize", None, String::new());
    write_output(out, "summary.tsv", &text, &mut manifest)?;
    manifest.write(out)?;
    println!("summarize: {} runs", runs.len());
    Ok(())
}
