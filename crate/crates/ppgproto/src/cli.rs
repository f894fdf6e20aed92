//! The `ppgproto` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppgproto_core::segmentation::{SegmentationMethod, DEFAULT_REJECT_HIGH, DEFAULT_REJECT_LOW};
use ppgproto_core::DEFAULT_GRID_SIZE;
use ppgproto_synth::{generate_cohort, CohortSpec};

use crate::error::{CliError, Result};
use crate::io;
use crate::pipeline::{self, FeatureRow, PrototypeOptions, RecordFilter, SubjectBundle};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const OUT_ENV: &str = "PPGPROTO_OUT";
pub const DEFAULT_OUT: &str = "ppgproto-out";

#[derive(Debug, Parser)]
#[command(
    name = "ppgproto",
    version,
    about = "PPG cardiac-cycle prototypes, markers and R-peak prediction"
)]
pub struct Cli {
    /// Output directory [env: PPGPROTO_OUT; default: ppgproto-out]
    #[arg(long, global = true, env = OUT_ENV, hide_env = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort with ground truth.
    Synth(SynthArgs),
    /// Build median prototypes for subject directories.
    Prototype(PrototypeArgs),
    /// Unmodeled harmonic energy per order.
    Harmonics(HarmonicsArgs),
    /// Marker table (M, F, D, Z_H) from prototype files.
    Features(FeaturesArgs),
    /// Fit and evaluate the R-peak position predictor.
    Predict(PredictArgs),
    /// IBI-bin feature changes and the LD/SD/LI/SI split.
    Ibi(IbiArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ecg,
    Blind,
}

impl From<Method> for SegmentationMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Ecg => SegmentationMethod::EcgBased,
            Method::Blind => SegmentationMethod::PpgBlind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bins {
    Ibi3,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Cohort config (JSON); missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub subjects: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Grid points per cycle.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    /// Discard cycles shorter than this fraction of the median IBI.
    #[arg(long, default_value_t = DEFAULT_REJECT_LOW)]
    pub reject_low: f64,
    /// Discard cycles longer than this fraction of the median IBI.
    #[arg(long, default_value_t = DEFAULT_REJECT_HIGH)]
    pub reject_high: f64,
}

#[derive(Debug, Args)]
pub struct PrototypeArgs {
    /// Subject directories, or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "ecg")]
    pub method: Method,
    #[command(flatten)]
    pub segment: SegmentArgs,
    #[arg(long, value_enum)]
    pub bins: Option<Bins>,
    /// Epoch labels; each yields a with/without pair of prototypes.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Only prototypes of this method.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Only prototypes of this condition.
    #[arg(long)]
    pub condition: Option<String>,
}

impl FilterArgs {
    fn filter(&self) -> RecordFilter {
        RecordFilter {
            method: self.method.map(Into::into),
            condition: self.condition.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct HarmonicsArgs {
    /// Prototype files, or directories searched for them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,
    /// Also summarize the lowest- and highest-IBI prototypes separately.
    #[arg(long)]
    pub ibi_split: bool,
    /// Prototypes per outer IBI group [default: a third of the prototypes].
    #[arg(long)]
    pub outer: Option<usize>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Prototype files, or directories searched for them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Marker tables (markers.json) from `features`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Condition whose ECG-based and ECG-blind rows are paired.
    #[arg(long, default_value = pipeline::ALL)]
    pub condition: String,
    /// Evaluate leave-one-subject-out instead of in sample.
    #[arg(long)]
    pub leave_one_out: bool,
    /// Also compare candidate feature subsets.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct IbiArgs {
    /// Subject directories, or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub segment: SegmentArgs,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match &cli.command {
        Command::Synth(a) => synth(&out, a),
        Command::Prototype(a) => prototype(&out, a),
        Command::Harmonics(a) => harmonics(&out, a),
        Command::Features(a) => features(&out, a),
        Command::Predict(a) => predict(&out, a),
        Command::Ibi(a) => ibi(&out, a),
    }
}

fn synth(out: &Path, a: &SynthArgs) -> Result<()> {
    let mut spec: CohortSpec = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => CohortSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(n) = a.subjects {
        spec.n_subjects = n;
    }
    let (subjects, truth) = generate_cohort(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Usage(format!("{}: {e}", out.display())))?;
    for s in &subjects {
        pipeline::write_subject(out, s)?;
    }
    io::write_json(&out.join(io::TRUTH_FILE), &truth)?;
    for w in &truth.warnings {
        eprintln!("warning: {w}");
    }
    say!("wrote {} subjects to {}", subjects.len(), out.display());
    Ok(())
}

fn options(seg: &SegmentArgs) -> PrototypeOptions {
    PrototypeOptions {
        grid_size: seg.grid,
        reject_low: seg.reject_low,
        reject_high: seg.reject_high,
        ..PrototypeOptions::default()
    }
}

fn prototype(out: &Path, a: &PrototypeArgs) -> Result<()> {
    let opts = PrototypeOptions {
        ibi_bins: a.bins.is_some(),
        labels: a.labels.clone(),
        ..options(&a.segment)
    };
    let method = SegmentationMethod::from(a.method);
    for dir in io::subject_dirs(&a.inputs)? {
        let bundle = SubjectBundle::load(&dir)?;
        let built = pipeline::build_prototypes(&bundle, method, &opts)?;
        for rec in &built.records {
            pipeline::write_prototype(&out.join(&built.subject), rec)?;
            let deviant = match rec.deviant {
                Some(v) if v.is_deviant() => "deviant",
                Some(_) => "typical",
                None => "n/a",
            };
            say!(
                "{} {} {}: {} cycles, median IBI {:.3} s, {}",
                built.subject,
                pipeline::method_tag(method),
                rec.condition,
                rec.prototype.n_cycles,
                rec.prototype.median_ibi,
                deviant
            );
        }
    }
    Ok(())
}

fn harmonics(out: &Path, a: &HarmonicsArgs) -> Result<()> {
    let records = pipeline::load_prototypes(&a.inputs, &a.filter.filter())?;
    let curves = pipeline::energy_curves(&records, a.max_order)?;
    let outer = a.ibi_split.then(|| a.outer.unwrap_or(records.len() / 3));
    let summary = pipeline::summarize_harmonics(&records, &curves, a.max_order, outer)?;
    let dir = out.join("harmonics");
    for c in &curves {
        let name = format!(
            "energy_{}_{}_{}.csv",
            c.subject,
            pipeline::method_tag(c.method),
            c.condition
        );
        io::write_csv(
            &dir.join(name),
            &["order", "unmodeled_db"],
            c.unmodeled_db
                .iter()
                .enumerate()
                .map(|(m, v)| [m.to_string(), io::num(*v)]),
        )?;
    }
    io::write_json(&dir.join("summary.json"), &summary)?;
    for o in &summary.orders {
        say!(
            "M={:<2} median {:8.2} dB  [{:.2}, {:.2}]",
            o.order,
            o.summary.median,
            o.summary.q1,
            o.summary.q3
        );
    }
    Ok(())
}

fn features(out: &Path, a: &FeaturesArgs) -> Result<()> {
    let records = pipeline::load_prototypes(&a.inputs, &a.filter.filter())?;
    if records.is_empty() {
        return Err(CliError::Insufficient("no prototype files found".into()));
    }
    let rows: Vec<FeatureRow> = records.iter().map(pipeline::feature_row).collect();
    let dir = out.join("features");
    io::write_json(&dir.join("markers.json"), &rows)?;
    io::write_csv(
        &dir.join("scatter.csv"),
        &pipeline::SCATTER_HEADER,
        rows.iter().map(pipeline::scatter_cells),
    )?;
    let flagged = rows.iter().filter(|r| r.flag.is_some()).count();
    say!("{} rows, {} flagged", rows.len(), flagged);
    Ok(())
}

fn predict(out: &Path, a: &PredictArgs) -> Result<()> {
    let files = io::collect_files(&a.inputs, &|n| n == "markers.json")?;
    let mut rows: Vec<FeatureRow> = Vec::new();
    for f in &files {
        rows.extend(io::read_json::<Vec<FeatureRow>>(f)?);
    }
    let (samples, warnings) = pipeline::pair_rows(&rows, &a.condition);
    let report = pipeline::predict(&samples, a.leave_one_out, warnings)?;
    let dir = out.join("predict");
    io::write_json(&dir.join("report.json"), &report)?;
    let cdf = |c: &[(f64, f64)]| {
        c.iter()
            .map(|(e, p)| [io::num(*e), io::num(*p)])
            .collect::<Vec<_>>()
    };
    io::write_csv(
        &dir.join("cdf_model.csv"),
        &["e_s", "fraction"],
        cdf(&report.cdf),
    )?;
    io::write_csv(
        &dir.join("cdf_baseline.csv"),
        &["e_s", "fraction"],
        cdf(&report.baseline.cdf),
    )?;
    if a.compare {
        io::write_json(
            &dir.join("feature_sets.json"),
            &pipeline::compare_subsets(&samples)?,
        )?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    say!(
        "{} subjects: k1 {:.1} ms, k2 {:.3}, sigma {:.1} ms, ci90 {:.1} ms (baseline {:.1} ms)",
        report.n,
        1e3 * report.k1_s,
        report.k2,
        1e3 * report.sigma_s,
        1e3 * report.ci90_s,
        1e3 * report.baseline.ci90_s
    );
    Ok(())
}

fn ibi(out: &Path, a: &IbiArgs) -> Result<()> {
    let opts = options(&a.segment);
    let bins = io::subject_dirs(&a.inputs)?
        .iter()
        .map(|dir| pipeline::subject_bins(&SubjectBundle::load(dir)?, &opts))
        .collect::<Result<Vec<_>>>()?;
    let report = pipeline::ibi_report(&bins)?;
    let dir = out.join("ibi");
    io::write_json(&dir.join("report.json"), &report)?;
    io::write_csv(
        &dir.join("changes.csv"),
        &pipeline::IBI_HEADER,
        pipeline::ibi_rows(&report),
    )?;
    say!(
        "LD {} / SD {}, LI {} / SI {}",
        report.split.ld.len(),
        report.split.sd.len(),
        report.split.li.len(),
        report.split.si.len()
    );
    Ok(())
}
