//! Command-line surface for the normal-form engine.
//!
//! Exit codes: 0 success, 2 parse error, 3 precondition violation,
//! 4 certificate failure. `NILNORM_THREADS` caps worker threads in batch
//! commands.

use clap::{Parser, Subcommand};
use nilnorm::error::EngineError;
use nilnorm::io;
use nilnorm::rat::rat;
use nilnorm::takens;
use nilnorm::vf::PlanarVectorField;
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nilnorm", about = "Exact normal forms for planar vector fields with nilpotent linear part", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input file (vector-field JSON); most commands require it.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Truncation order N.
    #[arg(long, default_value_t = 16, global = true)]
    trunc: usize,
    /// Maximum weight for the secondary normalization (default 4*sigma).
    #[arg(long, global = true)]
    weight: Option<usize>,
    /// Iteration steps.
    #[arg(long, default_value_t = 3, global = true)]
    steps: usize,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    /// Output file (stdout when omitted); output directory for `fixtures`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where both are supported.
    #[arg(long, default_value = "json", global = true)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the (r, s) normal form and the conjugating transformation.
    Normalize,
    /// Report the integrability invariants of a field.
    Invariants,
    /// Secondary (weighted) normal form and invariant window of r.
    Stage2,
    /// Run the order-doubling iteration and emit its trace.
    Kam,
    /// Compute the formal flow map.
    Flow,
    /// Check whether a map is the time-1 flow map of a field.
    Embed,
    /// Generate the seeded fixture corpus.
    Fixtures {
        /// Fixtures per family (integrable and generic).
        #[arg(long, default_value_t = 25)]
        count: usize,
    },
    /// Run the full certificate battery.
    Selftest,
}

fn exit_code_for(e: &EngineError) -> u8 {
    match e {
        EngineError::Parse(_) => 2,
        EngineError::Certificate(_) => 4,
        _ => 3,
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String, EngineError> {
    let path = path
        .as_ref()
        .ok_or_else(|| EngineError::Precondition("--input is required for this command".into()))?;
    std::fs::read_to_string(path)
        .map_err(|e| EngineError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), EngineError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| EngineError::Precondition(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn load_field(cli: &Cli) -> Result<PlanarVectorField, EngineError> {
    let text = read_input(&cli.input)?;
    let vf = io::vf_from_json(&text)?;
    if cli.trunc < 2 {
        return Err(EngineError::Precondition("--trunc must be at least 2".into()));
    }
    Ok(vf.with_truncation(cli.trunc.max(vf.truncation())))
}

fn cmd_normalize(cli: &Cli) -> Result<(), EngineError> {
    let vf = load_field(cli)?;
    let n = cli.trunc;
    let (phi, nf) = takens::takens_normalize(&vf, n)?;
    let (r1, r2) = takens::conjugacy_residual(&vf, &phi, &nf, n);
    let residual_zero = r1.is_zero() && r2.is_zero();
    emit(&cli.out, &io::normal_form_to_json(&nf, &phi, residual_zero))?;
    if !residual_zero {
        return Err(EngineError::Certificate(
            "conjugacy residual is nonzero".into(),
        ));
    }
    Ok(())
}

fn cmd_invariants(cli: &Cli) -> Result<(), EngineError> {
    let vf = load_field(cli)?;
    let n = cli.trunc;
    let tau = takens::integrability_order(&vf, n)?;
    let (_, nf) = takens::takens_normalize(&vf, n)?;
    let locus = takens::singular_locus_is_curve(&vf, n);
    let body = serde_json::json!({
        "truncation": n,
        "tau": tau.to_string(),
        "sigma": nf.sigma.to_string(),
        "singular_locus_is_curve": locus,
    });
    emit(&cli.out, &serde_json::to_string_pretty(&body).unwrap())
}

fn cmd_stage2(cli: &Cli) -> Result<(), EngineError> {
    let vf = load_field(cli)?;
    let (_, nf) = takens::takens_normalize(&vf, cli.trunc)?;
    let (sigma, _, outcome) = nilnorm::stage2::scale_normalize(&nf.r)?;
    let w = cli.weight.unwrap_or(4 * sigma);
    let tuple = nilnorm::stage2::stage2_invariants(&nf.r, w)?;
    let normal = match outcome {
        nilnorm::stage2::ScaleOutcome::Exact { r_scaled, .. } => {
            Some(nilnorm::stage2::stage2_normalize(&r_scaled, w)?.1)
        }
        nilnorm::stage2::ScaleOutcome::Algebraic { .. } => None,
    };
    emit(&cli.out, &io::stage2_to_json(&tuple, normal.as_ref()))
}

fn cmd_kam(cli: &Cli) -> Result<(), EngineError> {
    let vf = load_field(cli)?;
    let n = cli.trunc;
    let integrable = matches!(
        takens::integrability_order(&vf, n)?,
        takens::IntegrabilityOrder::AtLeast(_)
    );
    let (trace, _, _) = nilnorm::kam::kam_iterate(&vf, n, cli.steps, &rat(1, 2), integrable)?;
    let content = match cli.format {
        Format::Csv | Format::Json => io::kam_trace_to_csv(&trace),
    };
    emit(&cli.out, &content)
}

fn cmd_flow(cli: &Cli) -> Result<(), EngineError> {
    let vf = load_field(cli)?;
    let flow = nilnorm::flows::flow_map(&vf, cli.trunc);
    if !nilnorm::flows::flow_derivative_residual(&flow, &vf) {
        return Err(EngineError::Certificate(
            "flow does not satisfy its defining equation".into(),
        ));
    }
    emit(&cli.out, &io::flow_to_json(&flow))
}

#[derive(Deserialize)]
struct EmbedInput {
    field: io::VectorFieldDto,
    /// Candidate map components; defaults to the shear `T(x,y) = (x+y, y)`.
    map: Option<EmbedMapDto>,
}

#[derive(Deserialize)]
struct EmbedMapDto {
    c1: io::SeriesDto,
    c2: io::SeriesDto,
}

fn cmd_embed(cli: &Cli) -> Result<(), EngineError> {
    let text = read_input(&cli.input)?;
    let input: EmbedInput =
        serde_json::from_str(&text).map_err(|e| EngineError::Parse(e.to_string()))?;
    let vf = io::vf_from_dto(&input.field)?.with_truncation(cli.trunc);
    let map = match &input.map {
        Some(m) => nilnorm::flows::ParabolicMap::new(
            io::bi_from_dto(&m.c1)?.with_truncation(cli.trunc),
            io::bi_from_dto(&m.c2)?.with_truncation(cli.trunc),
        )?,
        None => nilnorm::flows::ParabolicMap::t_map(cli.trunc),
    };
    let (verdict, (r1, r2)) = nilnorm::flows::embed_check(&map, &vf, cli.trunc)?;
    let body = serde_json::json!({
        "truncation": cli.trunc,
        "is_time_one_map": verdict,
        "residual": {
            "c1": serde_json::to_value(io::bi_to_dto(&r1)).unwrap(),
            "c2": serde_json::to_value(io::bi_to_dto(&r2)).unwrap(),
        },
    });
    emit(&cli.out, &serde_json::to_string_pretty(&body).unwrap())
}

fn cmd_fixtures(cli: &Cli, count: usize) -> Result<(), EngineError> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| EngineError::Precondition(format!("cannot create {}: {e}", dir.display())))?;
    let fixtures = nilnorm::fixtures::corpus(cli.seed, count, cli.trunc);
    for fix in &fixtures {
        let ground_truth = fix.ground_truth.as_ref().map(|gt| {
            serde_json::json!({
                "r": serde_json::to_value(io::uni_to_dto(&gt.r)).unwrap(),
                "u": serde_json::to_value(io::bi_to_dto(gt.psi.u())).unwrap(),
                "v": serde_json::to_value(io::bi_to_dto(gt.psi.v())).unwrap(),
            })
        });
        let body = serde_json::json!({
            "name": fix.name,
            "truncation": fix.vf.truncation(),
            "field": serde_json::to_value(io::vf_to_dto(&fix.vf)).unwrap(),
            "ground_truth": ground_truth,
        });
        let path = dir.join(format!("{}.json", fix.name));
        std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).map_err(|e| {
            EngineError::Precondition(format!("cannot write {}: {e}", path.display()))
        })?;
    }
    eprintln!("wrote {} fixtures to {}", fixtures.len(), dir.display());
    Ok(())
}

fn cmd_selftest(cli: &Cli) -> Result<(), EngineError> {
    let outcomes = nilnorm::checks::run_all(cli.seed);
    let mut failed = 0usize;
    for o in &outcomes {
        println!(
            "criterion {:2} [{}] {} ({:.2}s): {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds,
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(EngineError::Certificate(format!("{failed} criteria failed")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), EngineError> {
    match &cli.command {
        Command::Normalize => cmd_normalize(cli),
        Command::Invariants => cmd_invariants(cli),
        Command::Stage2 => cmd_stage2(cli),
        Command::Kam => cmd_kam(cli),
        Command::Flow => cmd_flow(cli),
        Command::Embed => cmd_embed(cli),
        Command::Fixtures { count } => cmd_fixtures(cli, *count),
        Command::Selftest => cmd_selftest(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
