//! `echoaug`: augmentation, inpainting, evaluation and survey pipelines.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::{ConfigError, Overrides};

#[derive(Debug, Parser)]
#[command(name = "echoaug", version, about = "Generative augmentation of fan-beam ultrasound frames")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    /// Log more (repeat for debug output)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the cosine noise schedule, optionally respaced
    ScheduleInspect {
        /// Training diffusion steps
        #[arg(long = "T", default_value_t = echoaug::diffusion::DEFAULT_TRAIN_STEPS)]
        t: usize,
        /// Respace to this many steps
        #[arg(long)]
        respace: Option<usize>,
        /// Write the full table (t, model_t, beta, alpha_bar) as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Draw unconditional samples
    Sample {
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Square output size in pixels
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inpaint the pixels where the keep mask is zero
    Inpaint {
        #[arg(long)]
        image: PathBuf,
        /// PNG; nonzero pixels are kept
        #[arg(long)]
        keep: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an augmented dataset: each original plus generated variants
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// depth, tilt, width, translation, combination or no-repaint
        #[arg(long, value_parser = parse_family)]
        family: Option<echoaug::pipeline::Family>,
        #[arg(long)]
        variants: Option<usize>,
    },
    /// Dice and Hausdorff distance of predicted against reference masks
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// lv, myo or la
        #[arg(long, default_value = "lv", value_parser = parse_label)]
        label: echoaug::Label,
        /// Per-frame CSV (id, dice, hd_mm, depth_mm, angle_deg)
        #[arg(long)]
        report: PathBuf,
        /// Depth/angle subset table as JSON
        #[arg(long)]
        subsets: Option<PathBuf>,
    },
    /// Biplane ejection fraction per exam
    Ef {
        /// One sub-directory per patient
        #[arg(long)]
        exams: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bias and limits of agreement between automatic and manual EF
    BlandAltman {
        #[arg(long = "in")]
        input: PathBuf,
        /// Column whose values split the rows into groups
        #[arg(long)]
        split: Option<String>,
        /// Output directory for the statistics and the plot table
        #[arg(long)]
        out: PathBuf,
    },
    /// Realism survey
    #[command(subcommand)]
    Survey(SurveyCommand),
}

#[derive(Debug, Subcommand)]
enum SurveyCommand {
    /// Draw a survey plan from real and synthetic image directories
    Plan {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a plan over HTTP
    Serve {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Response store directory
        #[arg(long)]
        store: PathBuf,
        /// Directory with every image named in the plan
        #[arg(long)]
        images: PathBuf,
        /// Built UI bundle to serve at /
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Summarize a response store
    Report {
        #[arg(long)]
        store: PathBuf,
        /// Plan file; defaults to the copy kept in the store
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Also write the JSON summary here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_family(s: &str) -> Result<echoaug::pipeline::Family, String> {
    echoaug::pipeline::Family::parse(s).ok_or_else(|| format!("unknown family `{s}`"))
}

fn parse_label(s: &str) -> Result<echoaug::Label, String> {
    echoaug::Label::parse(s).ok_or_else(|| format!("unknown label `{s}`"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    use commands::*;
    let o = &cli.overrides;
    match cli.command {
        Command::ScheduleInspect { t, respace, csv } => schedule_inspect(t, respace, csv.as_deref()),
        Command::Sample { count, size, out } => sample(&resolve(o)?, count, size, &out),
        Command::Inpaint { image, keep, out } => inpaint(&resolve(o)?, &image, &keep, &out),
        Command::Augment {
            input,
            output,
            family,
            variants,
        } => augment(&config::RunConfig::resolve(o, family, variants)?, &input, &output),
        Command::Metrics {
            pred,
            reference,
            label,
            report,
            subsets,
        } => metrics(&pred, &reference, label, &report, subsets.as_deref()),
        Command::Ef { exams, out } => ef(&exams, &out),
        Command::BlandAltman { input, split, out } => bland_altman(&input, split.as_deref(), &out),
        Command::Survey(SurveyCommand::Plan { real, synth, out }) => survey_plan(&resolve(o)?, &real, &synth, &out),
        Command::Survey(SurveyCommand::Serve {
            plan,
            port,
            host,
            store,
            images,
            static_dir,
        }) => survey_serve(&plan, (host, port).into(), &store, &images, static_dir.as_deref()),
        Command::Survey(SurveyCommand::Report { store, plan, out }) => {
            survey_report(&store, plan.as_deref(), out.as_deref())
        }
    }
}

fn resolve(o: &Overrides) -> Result<config::RunConfig, ConfigError> {
    config::RunConfig::resolve(o, None, None)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ConfigError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
