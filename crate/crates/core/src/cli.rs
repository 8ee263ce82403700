//! Command-line interface: `solve`, `verify` and `convert`.
//!
//! Exit codes: 0 success, 1 failed verification or other error, 2 unreadable or invalid
//! input, 3 game without perfect recall, 4 path or solver did not converge.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::game::{parse_game, GameTree};
use crate::homotopy::{
    export_path, random_anchor, trace_many, PathFormat, TraceResult, TraceStatus, TracerConfig,
    TransformParams,
};
use crate::oracle::{build_normal_form, DEFAULT_PROFILE_CAP};
use crate::profile::{ProfileFile, PROFILE_FORMAT_TAG};
use crate::qre::{recover_multipliers, residual_gamma_sys, sigma_e, solve_fixed_t, QreInstance};
use crate::sequence::{compile, mixed_of, nash_gaps, RealizationProfile, SequenceSpace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RECALL: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qrepath", version, about = "Nash equilibria of extensive-form games by logit QRE path following")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the path from a starting plan to a Nash equilibrium.
    Solve(SolveArgs),
    /// Check a profile for Nash equilibrium or for the QRE system at some t.
    Verify(VerifyArgs),
    /// Print the sequence form of a game.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TransformParams::DEFAULT_KAPPA0)]
    pub kappa0: f64,
    #[arg(long, default_value_t = TransformParams::DEFAULT_ALPHA_SCALE)]
    pub alpha_scale: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub corrector_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_nash: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub initial_step: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub min_step: f64,
    #[arg(long, default_value_t = 0.1)]
    pub max_step: f64,
    /// Number of traces; run k uses seed + k.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// `uniform`, `random`, or a profile file.
    #[arg(long, default_value = "random")]
    pub start: String,
    /// Solve the anchored system at this t only and print the solution as a profile.
    #[arg(long)]
    pub fixed_t: Option<f64>,
    /// Directory for path files and the summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Nash,
    Qre,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, value_enum, default_value_t = VerifyMode::Nash)]
    pub mode: VerifyMode,
    /// t for qre mode; defaults to the profile's own `t`.
    #[arg(long)]
    pub t: Option<f64>,
    /// Largest gap or residual that passes.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub game: PathBuf,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Syntax { .. }
        | Error::InvalidGame { .. }
        | Error::UnknownHistory(_)
        | Error::DimensionMismatch(_)
        | Error::Infeasible(_)
        | Error::NonPositive(_)
        | Error::ZeroT
        | Error::Config(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_INPUT,
        Error::ImperfectRecall(_) => EXIT_RECALL,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_FAILURE,
    }
}

fn read_game(path: &Path) -> Result<GameTree> {
    let text = fs::read_to_string(path)?;
    parse_game(&text)
}

fn load(path: &Path) -> Result<(GameTree, SequenceSpace)> {
    let game = read_game(path)?;
    let space = compile(&game)?;
    Ok((game, space))
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Convert(a) => cmd_convert(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::ImperfectRecall(violations) = &e {
                for v in violations {
                    let _ = writeln!(err, "  {v}");
                }
            }
            exit_code(&e)
        }
    }
}

fn start_plan(args: &SolveArgs, space: &SequenceSpace, seed: u64) -> Result<RealizationProfile> {
    match args.start.as_str() {
        "uniform" => Ok(RealizationProfile::uniform(space)),
        "random" => Ok(random_anchor(space, seed)),
        file => {
            let profile = ProfileFile::parse(&fs::read_to_string(file)?)?;
            let gamma = profile.realization(space)?;
            if !gamma.is_interior() {
                return Err(Error::NonPositive(
                    gamma.plans.iter().flatten().copied().fold(f64::INFINITY, f64::min),
                ));
            }
            Ok(gamma)
        }
    }
}

fn tracer_config(a: &SolveArgs) -> TracerConfig {
    TracerConfig {
        t_end: a.t_end,
        initial_step: a.initial_step,
        min_step: a.min_step,
        max_step: a.max_step,
        corrector_tol: a.corrector_tol,
        eps_nash: a.eps_nash,
        ..TracerConfig::default()
    }
}

#[derive(Serialize)]
struct RunSummary {
    run: usize,
    seed: u64,
    status: TraceStatus,
    nash_gap: f64,
    payoffs: Vec<f64>,
    t_final: f64,
    lambda_r_final: f64,
    points: usize,
    restarts: usize,
    alpha_scale: f64,
    final_gamma: Vec<Vec<f64>>,
    final_behavior: Vec<Vec<Vec<f64>>>,
    final_sigma: Option<Vec<Vec<f64>>>,
    path_file: Option<String>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    let (_, space) = load(&a.game)?;
    if a.runs == 0 {
        return Err(Error::Config("--runs must be at least 1".into()));
    }
    if !(a.alpha_scale >= 0.0) {
        return Err(Error::Config("--alpha-scale must be nonnegative".into()));
    }
    let cfg = tracer_config(a);
    cfg.validate()?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
    }

    if let Some(t) = a.fixed_t {
        let anchor = start_plan(a, &space, a.seed)?;
        let inst = QreInstance::new(&space, Some(&anchor), t)?;
        let (gamma, nu) = solve_fixed_t(&inst, None)?;
        let profile = ProfileFile {
            format: PROFILE_FORMAT_TAG.into(),
            behavior: None,
            anchor: Some(anchor.plans.clone()),
            t: Some(t),
            nu: Some(nu.nu),
            ..ProfileFile::from_gamma(&gamma)
        };
        if let Some(dir) = &a.out {
            write_json(&dir.join("fixed_t.json"), &profile)?;
        }
        serde_json::to_writer_pretty(&mut *out, &profile)?;
        writeln!(out)?;
        return Ok(EXIT_OK);
    }

    let jobs = (0..a.runs)
        .map(|k| {
            let seed = a.seed.wrapping_add(k as u64);
            let anchor = start_plan(a, &space, seed)?;
            let params = TransformParams::seeded(space.n0(), a.alpha_scale, seed).with_kappa0(a.kappa0);
            params.validate(space.n0())?;
            Ok((anchor, params))
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<TraceResult> = trace_many(&space, &jobs, &cfg)
        .into_iter()
        .collect::<Result<_>>()?;

    let format = match a.format {
        OutputFormat::Csv => PathFormat::Csv,
        OutputFormat::Json => PathFormat::Json,
    };
    let ext = match a.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let mut runs = Vec::with_capacity(results.len());
    for (k, res) in results.iter().enumerate() {
        let path_file = match &a.out {
            Some(dir) => {
                let name = format!("run-{k}.{ext}");
                let mut w = BufWriter::new(File::create(dir.join(&name))?);
                export_path(&space, res, &cfg, format, &mut w)?;
                w.flush()?;
                Some(name)
            }
            None => None,
        };
        let last = res.path.last().expect("paths are never empty");
        runs.push(RunSummary {
            run: k,
            seed: a.seed.wrapping_add(k as u64),
            status: res.status,
            nash_gap: res.nash_gap,
            payoffs: res.payoffs.clone(),
            t_final: last.t,
            lambda_r_final: last.lambda_r(),
            points: res.path.len(),
            restarts: res.restarts,
            alpha_scale: res.params.alpha_scale,
            final_gamma: res.final_gamma.plans.clone(),
            final_behavior: res.final_gamma.behavior(&space),
            final_sigma: res.final_sigma.as_ref().map(|s| s.probs.clone()),
            path_file,
        });
    }
    let ok = results
        .iter()
        .all(|r| r.status == TraceStatus::Converged && r.nash_gap <= a.eps_nash);
    let summary = json!({
        "game": a.game.display().to_string(),
        "players": space.players().iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
        "converged": ok,
        "runs": runs,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    if let Some(dir) = &a.out {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    serde_json::to_writer_pretty(&mut *out, &summary)?;
    writeln!(out)?;
    Ok(if ok { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let (game, space) = load(&a.game)?;
    let profile = ProfileFile::parse(&fs::read_to_string(&a.profile)?)?;
    let gamma = profile.realization(&space)?;
    match a.mode {
        VerifyMode::Nash => {
            let gaps = nash_gaps(&space, &gamma);
            for (p, g) in space.players().iter().zip(&gaps) {
                writeln!(out, "player {}: best-response gap {g:e}", p.name)?;
            }
            let worst = gaps.iter().copied().fold(0.0, f64::max);
            let ok = worst <= a.tol;
            writeln!(out, "{}: max gap {worst:e} (tolerance {:e})", if ok { "nash" } else { "not nash" }, a.tol)?;
            Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
        }
        VerifyMode::Qre => {
            let t = a
                .t
                .or(profile.t)
                .ok_or_else(|| Error::Config("qre mode needs --t or a profile with t".into()))?;
            let anchor = profile.anchor(&space)?;
            let inst = QreInstance::new(&space, anchor.as_ref(), t)?;
            let nu = recover_multipliers(&inst, &gamma)?;
            let residual = residual_gamma_sys(&inst, &gamma, &nu)?
                .into_iter()
                .fold(0.0, |m, v| f64::max(m, v.abs()));
            writeln!(
                out,
                "{} system residual at t = {t} (rationality {}): {residual:e}",
                if anchor.is_some() { "anchored" } else { "unanchored" },
                inst.lambda_r()
            )?;
            let mut ok = residual <= a.tol;
            match build_normal_form(&game, DEFAULT_PROFILE_CAP) {
                Ok(nf) => {
                    let sigma = mixed_of(&space, &gamma)?;
                    let response = sigma_e(&inst, &nf, &gamma)?;
                    let fixed = sigma.max_abs_diff(&response);
                    writeln!(out, "normal-form logit fixed-point residual: {fixed:e}")?;
                    ok &= fixed <= a.tol;
                }
                Err(Error::CapExceeded { count, cap, .. }) => {
                    writeln!(out, "normal-form check skipped: {count} pure profiles exceed the cap of {cap}")?;
                }
                Err(e) => return Err(e),
            }
            writeln!(out, "{} (tolerance {:e})", if ok { "qre" } else { "not qre" }, a.tol)?;
            Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

fn seq_name(space: &SequenceSpace, i: usize, s: usize) -> &str {
    &space.player(i).labels[s]
}

fn fmt_payoff(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(","))
}

const GRID_CELL_LIMIT: usize = 10_000;

fn cmd_convert(a: &ConvertArgs, out: &mut dyn Write) -> Result<i32> {
    let (_, space) = load(&a.game)?;
    let n = space.num_players();
    for p in space.players() {
        writeln!(out, "player {} sequences: {}", p.name, p.labels.join(", "))?;
        for info in &p.infosets {
            writeln!(
                out,
                "  infoset {} after {}: {}",
                info.name,
                p.labels[info.parent_seq],
                info.extensions().map(|s| p.labels[s].as_str()).collect::<Vec<_>>().join(", ")
            )?;
        }
    }
    writeln!(out, "coefficients: {}", space.coefficients().len())?;
    for c in space.coefficients() {
        let seqs: Vec<&str> = c.seqs.iter().enumerate().map(|(i, &s)| seq_name(&space, i, s)).collect();
        writeln!(out, "  ({}) -> {}", seqs.join(", "), fmt_payoff(&c.payoff))?;
    }

    // Table layout: rows are player 1's sequences, columns every combination of the others'.
    let rows = space.player(0).len();
    let cols: usize = (1..n).map(|i| space.player(i).len()).product();
    if n >= 2 && rows * cols <= GRID_CELL_LIMIT {
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for i in 1..n {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    (0..space.player(i).len()).map(move |s| {
                        let mut next = c.clone();
                        next.push(s);
                        next
                    })
                })
                .collect();
        }
        let zero = fmt_payoff(&vec![0.0; n]);
        let mut table: Vec<Vec<String>> = Vec::with_capacity(rows + 1);
        let mut header = vec![String::new()];
        header.extend(combos.iter().map(|c| {
            c.iter()
                .enumerate()
                .map(|(k, &s)| seq_name(&space, k + 1, s))
                .collect::<Vec<_>>()
                .join(" ")
        }));
        table.push(header);
        for r in 0..rows {
            let mut line = vec![seq_name(&space, 0, r).to_string()];
            for combo in &combos {
                let cell = space
                    .coefficients()
                    .iter()
                    .find(|c| c.seqs[0] == r && c.seqs[1..] == combo[..])
                    .map(|c| format!("{}*", fmt_payoff(&c.payoff)))
                    .unwrap_or_else(|| zero.clone());
                line.push(cell);
            }
            table.push(line);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|k| table.iter().map(|row| row[k].chars().count()).max().unwrap_or(0))
            .collect();
        writeln!(out, "table (* marks terminal coefficients):")?;
        for row in &table {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            writeln!(out, "  {}", cells.join("  ").trim_end())?;
        }
    }
    Ok(EXIT_OK)
}
