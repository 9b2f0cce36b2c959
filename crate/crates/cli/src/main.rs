mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qqft::circuit::SCHEMA;
use qqft::engine::NoiseGranularity;
use qqft::haldane::{self, linspace};
use qqft::linalg;
use qqft::poincare::{self, build_dispersion, equivalence_classes, greens_function, GreensRoute};
use qqft::protocol::{qqft_sequence, runtime_for_depth};
use qqft::{CircuitSequence, NoiseModel, Route};
use serde::Serialize;

use config::{resolve, Experiment, Overrides, RunConfig};
use output::{num, OutputDir};

/// Largest entrywise deviation from the DFT accepted by `verify`.
const VERIFY_TOL: f64 = 1e-10;

/// Tunneling used for the runtime estimate, in units of the recoil energy.
const DEFAULT_J_OVER_ER: f64 = 0.01;

#[derive(Parser)]
#[command(name = "qqft", version, about = "Compile, verify and simulate local-gate quadratic quantum Fourier transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the QQFT on N sites into a gate-sequence file.
    Compile(CompileArgs),
    /// Check a gate-sequence file against the discrete Fourier transform.
    Verify {
        file: PathBuf,
    },
    /// Noisy flat Chern band: gap/width sweep and Bott phase diagram.
    Flatband(FlatbandArgs),
    /// Lorentz-symmetric lattice: Green's functions and symmetry measures.
    Poincare(PoincareArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("size").required(true))]
struct CompileArgs {
    /// Radix-2 exponent, N = 2^n.
    #[arg(long, group = "size", value_parser = clap::value_parser!(u32).range(1..=11))]
    n: Option<u32>,
    /// Arbitrary number of sites (Givens fallback unless a power of two).
    #[arg(long = "N", group = "size", value_parser = clap::value_parser!(u64).range(1..))]
    big_n: Option<u64>,
    /// Output file.
    #[arg(long, default_value = "qqft-seq.json")]
    out: PathBuf,
    /// Tunneling J / E_R for the runtime estimate.
    #[arg(long, default_value_t = DEFAULT_J_OVER_ER)]
    j_over_er: f64,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML file with configuration overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated noise strengths.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; does not affect results.
    #[arg(long, value_parser = clap::value_parser!(usize))]
    workers: Option<usize>,
    /// Also perturb the diagonal momentum-space evolution.
    #[arg(long)]
    noise_on_diagonal: bool,
    /// Draw a fresh noise value for every gate instead of every step.
    #[arg(long)]
    per_gate_noise: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            sigmas: self.sigma.clone(),
            realizations: self.realizations,
            grid: self.grid,
            out: self.out.clone(),
            noise_on_diagonal: self.noise_on_diagonal.then_some(true),
            granularity: self.per_gate_noise.then_some(NoiseGranularity::PerGate),
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct FlatbandArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Skip the phase diagram.
    #[arg(long)]
    no_diagram: bool,
    /// Diagram resolution along phi.
    #[arg(long)]
    phi_cells: Option<usize>,
    /// Diagram resolution along M.
    #[arg(long)]
    m_cells: Option<usize>,
}

#[derive(Args)]
struct PoincareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Boost parameter of the discrete Lorentz map.
    #[arg(long)]
    gamma: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => compile(&a),
        Command::Verify { file } => verify(&file),
        Command::Flatband(a) => flatband(&a),
        Command::Poincare(a) => poincare_cmd(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn compile(a: &CompileArgs) -> Result<bool> {
    let n_sites = match (a.n, a.big_n) {
        (Some(n), _) => 1usize << n,
        (None, Some(n)) => usize::try_from(n)?,
        (None, None) => unreachable!("clap enforces the size group"),
    };
    let seq = qqft_sequence(n_sites)?;
    std::fs::write(&a.out, seq.to_json()?).with_context(|| format!("writing {}", a.out.display()))?;
    let route = seq.route();
    println!("N = {n_sites}");
    println!("route = {}", route_name(route));
    println!("D = {}", seq.depth());
    println!("gates = {}", seq.gate_count());
    println!("scaling: {}", route.scaling());
    if route == Route::Givens {
        println!("bound: D <= N^2 = {}", n_sites * n_sites);
    }
    let rt = runtime_for_depth(seq.depth() as u64, a.j_over_er);
    println!(
        "runtime at J/E_R = {}: {:.4} ms per step, {:.1} ms total",
        a.j_over_er, rt.gate_time_ms, rt.total_ms
    );
    println!("wrote {} ({SCHEMA})", a.out.display());
    Ok(true)
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Radix2 => "radix2",
        Route::Givens => "givens",
    }
}

fn verify(path: &PathBuf) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let seq = match CircuitSequence::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL invalid sequence: {e}");
            return Ok(false);
        }
    };
    let u = qqft::sequence_to_unitary(&seq);
    let err = linalg::max_abs_diff(&u, &linalg::dft_matrix(seq.n_sites()));
    let ok = err < VERIFY_TOL;
    println!(
        "{} N={} D={} max_error={err:e}",
        if ok { "PASS" } else { "FAIL" },
        seq.n_sites(),
        seq.depth()
    );
    Ok(ok)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => bail!("--workers must be at least 1"),
        Some(w) => rayon::ThreadPoolBuilder::new().num_threads(w).build()?.install(f),
    }
}

fn noise_template(cfg: &RunConfig) -> NoiseModel {
    NoiseModel {
        sigma: 0.0,
        seed: cfg.seed,
        stream_id: 0,
        granularity: cfg.granularity,
        on_diagonal: cfg.noise_on_diagonal,
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    config: &'a RunConfig,
    files: Vec<String>,
}

fn finish(out: &mut OutputDir, cfg: &RunConfig, digest: String) -> Result<()> {
    let files = out.written().to_vec();
    out.json("manifest.json", &Manifest { tool: "qqft", version: qqft::VERSION, config_sha256: digest, config: cfg, files })?;
    println!("wrote {} files to {}", out.written().len(), out.path().display());
    Ok(())
}

fn flatband(a: &FlatbandArgs) -> Result<bool> {
    let mut flags = a.common.overrides();
    if a.no_diagram || a.phi_cells.is_some() || a.m_cells.is_some() {
        flags.diagram = Some(config::DiagramOverrides {
            enabled: a.no_diagram.then_some(false),
            phi_cells: a.phi_cells,
            m_cells: a.m_cells,
            ..Default::default()
        });
    }
    let cfg = resolve(Experiment::Flatband, a.common.config.as_deref(), &flags)?;
    let digest = cfg.digest()?;
    let template = noise_template(&cfg);

    let (rows, diagram) = with_workers(a.common.workers, || {
        let rows = haldane::noise_sweep_gap_width(&cfg.haldane, cfg.grid, &cfg.sigmas, cfg.realizations, &template)?;
        let diagram = if cfg.diagram.enabled {
            let d = &cfg.diagram;
            let phis = linspace(d.phi_min, d.phi_max, d.phi_cells);
            let masses = linspace(d.m_min, d.m_max, d.m_cells);
            // Streams past the sweep's so the diagram never reuses its draws.
            let noise = NoiseModel { sigma: d.sigma, stream_id: cfg.realizations as u64, ..template };
            Some(haldane::phase_diagram(&cfg.haldane, &phis, &masses, cfg.grid, &noise)?)
        } else {
            None
        };
        Ok((rows, diagram))
    })?;

    let mut out = OutputDir::create(&cfg.out, &digest)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.sigma),
                num(r.mean_gap),
                num(r.mean_width),
                num(r.stderr_gap),
                num(r.stderr_width),
                num(r.mean_ratio),
                num(r.stderr_ratio),
                r.realizations.to_string(),
            ]
        })
        .collect();
    out.csv(
        "gap_width.csv",
        &["sigma", "mean_G", "mean_W", "stderr_G", "stderr_W", "mean_W_over_G", "stderr_W_over_G", "realizations"],
        &table,
    )?;
    for r in &rows {
        println!(
            "sigma={:e} G={:.6} W={:.3e} W/G={:.4}",
            r.sigma, r.mean_gap, r.mean_width, r.mean_ratio
        );
    }
    if let Some(diag) = &diagram {
        let table: Vec<Vec<String>> = diag
            .cells
            .iter()
            .map(|c| {
                vec![
                    num(c.phi),
                    num(c.m),
                    c.bott.map(num).unwrap_or_default(),
                    c.chern.map(|x| x.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        out.csv("phase_diagram.csv", &["phi", "M", "bott", "chern"], &table)?;
    }
    finish(&mut out, &cfg, digest)?;
    Ok(true)
}

fn poincare_cmd(a: &PoincareArgs) -> Result<bool> {
    let mut flags = a.common.overrides();
    flags.gamma = a.gamma;
    let cfg = resolve(Experiment::Poincare, a.common.config.as_deref(), &flags)?;
    let digest = cfg.digest()?;
    let template = noise_template(&cfg);
    let n = cfg.grid;

    let disp = build_dispersion(n, cfg.gamma)?;
    let lattice = equivalence_classes(n, cfg.gamma)?;
    let (greens, rows) = with_workers(a.common.workers, || {
        // Each sigma's displayed Green's function is realization 0.
        let greens = cfg
            .sigmas
            .iter()
            .map(|&sigma| greens_function(&disp, &NoiseModel { sigma, ..template }, GreensRoute::Qqft))
            .collect::<qqft::Result<Vec<_>>>()?;
        let rows = poincare::symmetry_sweep(&disp, &lattice, &cfg.sigmas, cfg.realizations, &template)?;
        Ok((greens, rows))
    })?;

    let mut out = OutputDir::create(&cfg.out, &digest)?;
    for (sigma, g) in cfg.sigmas.iter().zip(&greens) {
        let tag = format!("{sigma:e}");
        let part = |f: fn(&qqft::c64) -> f64| -> Vec<Vec<String>> {
            (0..n).map(|row| (0..n).map(|m| num(f(&g.g[(row, m)]))).collect()).collect()
        };
        out.csv(&format!("greens_re_sigma_{tag}.csv"), &[], &part(|z| z.re))?;
        out.csv(&format!("greens_im_sigma_{tag}.csv"), &[], &part(|z| z.im))?;
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.sigma),
                num(r.mean_s_l),
                num(r.mean_s_p),
                num(r.stderr_s_l),
                num(r.stderr_s_p),
                r.samples.to_string(),
            ]
        })
        .collect();
    out.csv("symmetry.csv", &["sigma", "mean_S_L", "mean_S_P", "stderr_S_L", "stderr_S_P", "samples"], &table)?;
    for r in &rows {
        println!("sigma={:e} S_L={:.3e} S_P={:.3e}", r.sigma, r.mean_s_l, r.mean_s_p);
    }

    #[derive(Serialize)]
    struct DispersionTable<'a> {
        n: usize,
        gamma: usize,
        lorentz_invariant: bool,
        odd: bool,
        class_sizes: Vec<usize>,
        j: &'a [usize],
    }
    out.json(
        "dispersion.json",
        &DispersionTable {
            n,
            gamma: cfg.gamma,
            lorentz_invariant: disp.is_lorentz_invariant(),
            odd: disp.is_odd(),
            class_sizes: lattice.class_sizes(),
            j: &disp.j,
        },
    )?;
    finish(&mut out, &cfg, digest)?;
    Ok(true)
}
