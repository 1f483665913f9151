use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use closure_lab::pipeline::{
    self, build_leaf, leaf_diameter, run_bm_check, run_identities, run_parameters, run_verdicts,
    PipelineError, TheoremSelect,
};
use closure_lab::report::{self, ReportDoc, SCHEMA_VERSION};
use closure_lab::spec::{load_spec, SpacetimeSpec, ToleranceProfile};
use closure_lab::{fields_io, spec};

/// Closure analysis of foliated spacetimes: computes the kinematic and
/// matter parameters of one leaf, certifies closure through diameter-bound
/// machinery, and cross-checks every bound against a numerical
/// geodesic-diameter oracle.
#[derive(Parser)]
#[command(name = "closure-lab", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// spacetime spec file
    #[arg(long)]
    spec: PathBuf,

    /// directory receiving report.json (and parameters.csv)
    #[arg(long)]
    out: Option<PathBuf>,

    /// extra refinement levels; each level doubles the grid resolution
    #[arg(long, default_value_t = 0)]
    refine: u32,

    /// override the spec's tolerance profile
    #[arg(long, value_enum)]
    tolerance_profile: Option<ProfileArg>,
}

#[derive(ValueEnum, Clone, Copy)]
enum ProfileArg {
    Analytic,
    Fd,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum TheoremArg {
    #[value(name = "13")]
    T13,
    #[value(name = "14")]
    T14,
    #[value(name = "15")]
    T15,
    Generic,
    All,
}

impl TheoremArg {
    fn select(self) -> TheoremSelect {
        match self {
            TheoremArg::T13 => TheoremSelect::DecelerationPressure,
            TheoremArg::T14 => TheoremSelect::EnergyCondition,
            TheoremArg::T15 => TheoremSelect::PerfectFluid,
            TheoremArg::Generic => TheoremSelect::Generic,
            TheoremArg::All => TheoremSelect::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Kinematic and matter parameters, optionally as a time series
    Parameters(Common),
    /// Closure verdict pipelines with closed-form and optimized bounds
    Verdict {
        #[command(flatten)]
        common: Common,
        /// which pipeline to run
        #[arg(long, value_enum, default_value_t = TheoremArg::All)]
        theorem: TheoremArg,
    },
    /// Geodesic-diameter oracle only
    Diameter(Common),
    /// Raw diameter-bound hypothesis check on user-supplied u, V, Q fields
    BmCheck(Common),
    /// Invariant suites (constraint round trip, conformal identity,
    /// time-derivative consistency); exits nonzero when any fails
    Identities(Common),
}

const EXIT_SPEC_ERROR: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

enum AppError {
    Spec(spec::SpecError),
    Pipeline(PipelineError),
    Io(std::io::Error),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Spec(_) | AppError::Io(_) => EXIT_SPEC_ERROR,
            AppError::Pipeline(p) if p.is_hypothesis_failure() => EXIT_HYPOTHESIS,
            AppError::Pipeline(p) if p.is_invariant_violation() => EXIT_INVARIANT,
            AppError::Pipeline(_) => EXIT_SPEC_ERROR,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Spec(e) => write!(f, "{e}"),
            AppError::Pipeline(e) => write!(f, "{e}"),
            AppError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        AppError::Pipeline(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

fn load(common: &Common) -> Result<SpacetimeSpec, AppError> {
    let mut spec = load_spec(&common.spec).map_err(AppError::Spec)?;
    if let Some(profile) = common.tolerance_profile {
        spec.analysis.tolerance_profile = match profile {
            ProfileArg::Analytic => ToleranceProfile::Analytic,
            ProfileArg::Fd => ToleranceProfile::Fd,
        };
    }
    Ok(spec)
}

fn base_doc(command: &str, common: &Common, spec: &SpacetimeSpec) -> ReportDoc {
    ReportDoc {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        spec_path: common.spec.display().to_string(),
        kind: spec.kind.name().to_string(),
        t0: spec.analysis.t0,
        tolerance_profile: spec.analysis.tolerance_profile.name().to_string(),
        parameters: None,
        diagnostics: None,
        oracle: None,
        verdicts: Vec::new(),
        bm_check: None,
        identities: Vec::new(),
        series: Vec::new(),
    }
}

fn emit(doc: &ReportDoc, common: &Common, csv: Option<&str>) -> Result<(), AppError> {
    let bytes = report::to_json_bytes(doc);
    use std::io::Write;
    std::io::stdout().write_all(&bytes)?;
    if let Some(dir) = &common.out {
        fields_io::write_atomic(&dir.join("report.json"), &bytes)?;
        if let Some(csv) = csv {
            fields_io::write_atomic(&dir.join("parameters.csv"), csv.as_bytes())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.command {
        Command::Verdict { common, theorem } => {
            let spec = load(&common)?;
            let leaf = build_leaf(&spec, None, common.refine)?;
            let reports = run_verdicts(&leaf, theorem.select())?;
            let fluid = pipeline::fluid_summary(&leaf)?;
            let oracle = leaf_diameter(&leaf)?;
            let mut doc = base_doc("verdict", &common, &spec);
            doc.parameters = Some(report::param_block(&leaf, fluid));
            doc.diagnostics = Some(report::diagnostics_block(&leaf));
            doc.oracle = Some(report::OracleBlock::from_estimate(&oracle));
            doc.verdicts = reports.iter().map(report::verdict_json).collect();
            for v in &reports {
                eprintln!(
                    "theorem {}: {}",
                    v.pipeline.id(),
                    match v.verdict {
                        closure_core::verdicts::Verdict::Closed => "closed",
                        closure_core::verdicts::Verdict::Inconclusive => "inconclusive",
                    }
                );
            }
            emit(&doc, &common, None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Parameters(common) => {
            let spec = load(&common)?;
            let rows = run_parameters(&spec, common.refine)?;
            let leaf = build_leaf(&spec, None, common.refine)?;
            let fluid = pipeline::fluid_summary(&leaf)?;
            let mut doc = base_doc("parameters", &common, &spec);
            doc.parameters = Some(report::param_block(&leaf, fluid));
            doc.diagnostics = Some(report::diagnostics_block(&leaf));
            doc.series = rows.iter().map(report::series_row_json).collect();
            let csv = report::series_csv(&rows);
            emit(&doc, &common, Some(&csv))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Diameter(common) => {
            let spec = load(&common)?;
            let leaf = build_leaf(&spec, None, common.refine)?;
            let oracle = leaf_diameter(&leaf)?;
            let mut doc = base_doc("diameter", &common, &spec);
            doc.diagnostics = Some(report::diagnostics_block(&leaf));
            doc.oracle = Some(report::OracleBlock::from_estimate(&oracle));
            emit(&doc, &common, None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::BmCheck(common) => {
            let spec = load(&common)?;
            let leaf = build_leaf(&spec, None, common.refine)?;
            let outcome = run_bm_check(&spec, &leaf)?;
            let mut doc = base_doc("bm-check", &common, &spec);
            doc.diagnostics = Some(report::diagnostics_block(&leaf));
            doc.bm_check = Some(report::bm_check_json(&outcome));
            emit(&doc, &common, None)?;
            if !outcome.hypothesis_valid {
                eprintln!("hypothesis checks failed; see report");
                return Ok(ExitCode::from(EXIT_HYPOTHESIS));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Identities(common) => {
            let spec = load(&common)?;
            let results = run_identities(&spec, common.refine)?;
            let mut doc = base_doc("identities", &common, &spec);
            doc.identities = results.iter().map(report::identity_json).collect();
            for r in &results {
                eprintln!(
                    "identity {}: {} ({})",
                    r.name,
                    if r.pass { "pass" } else { "FAIL" },
                    r.detail
                );
            }
            emit(&doc, &common, None)?;
            if results.iter().any(|r| !r.pass) {
                return Ok(ExitCode::from(EXIT_INVARIANT));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
