//! `srf`: synthetic data, SRF encoding, training, LOPO evaluation and
//! streaming classification from the command line.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 on I/O failure.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use srf_core::cnn::{history_csv, load_model, save_model, train, Optimizer};
use srf_core::harness::{encode_training_set, run_lopo_with_progress, sequence_srf, LopoConfig};
use srf_core::online::{OnlineClassifier, StepOutcome};
use srf_core::skeleton::{
    read_jsonl, synth_generate, write_jsonl, ActionSequence, FrameRecord, JsonlError, LabelSet, SynthSpec,
};
use srf_core::{SrfConfig, TrainConfig};

#[derive(Parser)]
#[command(
    name = "srf",
    version,
    about = "Online skeleton action recognition with spatio-temporal Radon footprints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic skeleton corpus as JSONL.
    Synth {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 5)]
        subjects: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the SRF of every sequence as PGM and/or CSV.
    Encode {
        /// JSONL input ("-" for stdin).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Frames to include (defaults to the whole sequence).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
        #[command(flatten)]
        srf: SrfArgs,
    },
    /// Train a classifier on final-frame SRFs and save it.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Per-epoch loss/accuracy CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        srf: SrfArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Leave-one-person-out evaluation with JSON and CSV reports.
    EvalLopo {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        report_json: Option<PathBuf>,
        #[arg(long)]
        report_csv: Option<PathBuf>,
        #[command(flatten)]
        srf: SrfArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Classify a frame stream (JSONL) and print one JSON object per classified frame.
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// JSONL frames; stdin if omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Per-frame confidence CSV written when each stream ends.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        srf: SrfArgs,
    },
    /// Write the SRF of one sequence at one `t` as PGM.
    ExportSrf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long)]
        action: Option<usize>,
        #[arg(long)]
        trial: Option<String>,
        #[arg(long)]
        t: Option<usize>,
        /// Also write the values as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        srf: SrfArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pgm,
    Csv,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Args)]
struct SrfArgs {
    #[arg(long, default_value_t = 64)]
    resample_h: usize,
    #[arg(long, default_value_t = 64)]
    resample_w: usize,
    #[arg(long, default_value_t = 64)]
    n_rho: usize,
    #[arg(long, default_value_t = 90)]
    n_theta: usize,
    /// Defaults to twice the larger resampled side.
    #[arg(long)]
    samples_per_ray: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_t: usize,
    #[arg(long, default_value_t = srf_core::mahalanobis::DEFAULT_LAMBDA_REL)]
    lambda_rel: f64,
}

impl SrfArgs {
    fn config(&self) -> Result<SrfConfig, CliError> {
        let config = SrfConfig {
            resample_h: self.resample_h,
            resample_w: self.resample_w,
            n_rho: self.n_rho,
            n_theta: self.n_theta,
            samples_per_ray: self.samples_per_ray,
            min_t: self.min_t,
        };
        config.validate().map_err(invalid)?;
        if !(self.lambda_rel.is_finite() && self.lambda_rel >= 0.0) {
            return Err(CliError::Invalid("--lambda-rel must be finite and non-negative".into()));
        }
        Ok(config)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Also train on the SRF at the midpoint of every sequence.
    #[arg(long)]
    augment_midpoint: bool,
    /// Comma-separated class names (default a1, a2, ...).
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            optimizer: match self.optimizer {
                OptimizerArg::Adam => Optimizer::adam(),
                OptimizerArg::Sgd => Optimizer::sgd_momentum(),
            },
        }
    }

    fn labels(&self, seqs: &[ActionSequence]) -> Result<LabelSet, CliError> {
        match &self.labels {
            Some(names) => LabelSet::new(names.iter().map(|n| n.trim())).map_err(invalid),
            None => LabelSet::covering(seqs).map_err(invalid),
        }
    }

    fn lopo(&self, srf: &SrfArgs) -> Result<LopoConfig, CliError> {
        Ok(LopoConfig {
            srf: srf.config()?,
            train: self.config(),
            lambda_rel: srf.lambda_rel,
            augment_midpoint: self.augment_midpoint,
        })
    }
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Io(String),
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if path == Path::new("-") {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_sequences(path: &Path) -> Result<Vec<ActionSequence>, CliError> {
    match read_jsonl(open_input(path)?) {
        Ok(seqs) => Ok(seqs),
        Err(JsonlError::Io(e)) => Err(io_err(path, e)),
        Err(e) => Err(CliError::Invalid(format!("{}: {e}", path.display()))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn stem(seq: &ActionSequence) -> String {
    format!("{}_a{}_{}", seq.subject_id(), seq.label(), seq.trial_id())
}

fn synth(
    classes: usize,
    subjects: usize,
    trials: usize,
    frames: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let seqs = synth_generate(&SynthSpec::well_separated(classes), subjects, trials, frames, seed).map_err(invalid)?;
    match out {
        Some(path) => {
            let file = File::create(&path).map_err(|e| io_err(&path, e))?;
            let mut w = BufWriter::new(file);
            write_jsonl(&mut w, &seqs)
                .and_then(|_| w.flush())
                .map_err(|e| io_err(&path, e))
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            write_jsonl(&mut w, &seqs)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn encode(input: &Path, out_dir: &Path, t: Option<usize>, format: Format, srf: &SrfArgs) -> Result<(), CliError> {
    let config = srf.config()?;
    let seqs = read_sequences(input)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    for seq in &seqs {
        let s = sequence_srf(seq, t.unwrap_or(seq.len()), &config, srf.lambda_rel).map_err(invalid)?;
        let base = out_dir.join(stem(seq));
        if format != Format::Csv {
            write_file(&base.with_extension("pgm"), &s.to_pgm())?;
        }
        if format != Format::Pgm {
            write_file(&base.with_extension("csv"), s.to_csv().as_bytes())?;
        }
    }
    eprintln!("encoded {} sequences into {}", seqs.len(), out_dir.display());
    Ok(())
}

fn train_cmd(
    input: &Path,
    model_path: &Path,
    history: Option<&Path>,
    srf: &SrfArgs,
    args: &TrainArgs,
) -> Result<(), CliError> {
    let config = args.lopo(srf)?;
    let seqs = read_sequences(input)?;
    let labels = args.labels(&seqs)?;
    let refs: Vec<&ActionSequence> = seqs.iter().collect();
    let samples = encode_training_set(&refs, &config).map_err(invalid)?;
    let (model, hist) = train(&samples, &labels, &config.train).map_err(invalid)?;
    write_file(model_path, &save_model(&model))?;
    if let Some(path) = history {
        write_file(path, history_csv(&hist).as_bytes())?;
    }
    if let Some(last) = hist.last() {
        eprintln!(
            "trained on {} samples: loss {:.4}, train accuracy {:.4}",
            samples.len(),
            last.loss,
            last.train_accuracy
        );
    }
    Ok(())
}

fn eval_lopo(
    input: &Path,
    json: Option<&Path>,
    csv: Option<&Path>,
    srf: &SrfArgs,
    args: &TrainArgs,
) -> Result<(), CliError> {
    let config = args.lopo(srf)?;
    let seqs = read_sequences(input)?;
    let labels = args.labels(&seqs)?;
    let report = run_lopo_with_progress(&seqs, &labels, &config, |f| {
        eprintln!("fold {}: {}/{} correct", f.subject, f.correct, f.test_sequences)
    })
    .map_err(invalid)?;
    if let Some(path) = json {
        write_file(path, report.to_json().as_bytes())?;
    }
    if let Some(path) = csv {
        write_file(path, report.confusion_csv().as_bytes())?;
    }
    println!(
        "{}",
        serde_json::json!({
            "mean_accuracy": report.mean_accuracy,
            "best_accuracy": report.best_accuracy,
            "worst_accuracy": report.worst_accuracy,
            "sequences": report.total_sequences(),
        })
    );
    Ok(())
}

#[derive(Serialize)]
struct FrameOutput<'a> {
    t: usize,
    class: usize,
    confidences: &'a [f64],
}

/// Consecutive records with the same (subject, action, trial) form one stream;
/// a new key starts a fresh classifier.
fn classify(model_path: &Path, input: Option<&Path>, trace: Option<&Path>, srf: &SrfArgs) -> Result<(), CliError> {
    let config = srf.config()?;
    let bytes = fs::read(model_path).map_err(|e| io_err(model_path, e))?;
    let model = load_model(&bytes).map_err(|e| CliError::Invalid(format!("{}: {e}", model_path.display())))?;
    let [_, h, w] = model.architecture().input();
    if (h, w) != (config.n_rho, config.n_theta) {
        return Err(CliError::Invalid(format!(
            "model expects {h}x{w} sinograms but --n-rho/--n-theta give {}x{}",
            config.n_rho, config.n_theta
        )));
    }
    let reader = open_input(input.unwrap_or(Path::new("-")))?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut stream: Option<((String, usize, String), OnlineClassifier)> = None;
    let mut traces = String::new();

    let finish = |s: &Option<((String, usize, String), OnlineClassifier)>, traces: &mut String| {
        if let Some(((subject, action, trial), online)) = s {
            match online.final_decision() {
                Ok((class, conf)) => eprintln!(
                    "{subject}/{action}/{trial}: class {class} ({}) confidence {conf:.4}",
                    model.labels().name(class).unwrap_or("?")
                ),
                Err(e) => eprintln!("{subject}/{action}/{trial}: {e}"),
            }
            traces.push_str(&online.tracker().export_confidence_trace());
        }
    };

    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = FrameRecord::parse(&line).map_err(|e| CliError::Invalid(format!("line {}: {e}", n + 1)))?;
        let frame = record
            .to_frame()
            .map_err(|e| CliError::Invalid(format!("line {}: {e}", n + 1)))?;
        let key = (record.subject, record.action, record.trial);
        if stream.as_ref().is_none_or(|(k, _)| *k != key) {
            finish(&stream, &mut traces);
            let online = OnlineClassifier::new(&model, config.clone(), frame.joint_count(), srf.lambda_rel);
            stream = Some((key, online));
        }
        let (_, online) = stream.as_mut().expect("stream initialized");
        let outcome = online
            .push(&frame)
            .map_err(|e| CliError::Invalid(format!("line {}: {e}", n + 1)))?;
        if let StepOutcome::Classified {
            t, class, confidences, ..
        } = outcome
        {
            let json = serde_json::to_string(&FrameOutput {
                t,
                class,
                confidences: &confidences,
            })
            .expect("plain struct serializes");
            match writeln!(out, "{json}").and_then(|_| out.flush()) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
                Err(e) => return Err(CliError::Io(e.to_string())),
            }
        }
    }
    finish(&stream, &mut traces);
    if let Some(path) = trace {
        write_file(path, traces.as_bytes())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn export_srf(
    input: &Path,
    out: &Path,
    subject: Option<&str>,
    action: Option<usize>,
    trial: Option<&str>,
    t: Option<usize>,
    csv: Option<&Path>,
    srf: &SrfArgs,
) -> Result<(), CliError> {
    let config = srf.config()?;
    let seqs = read_sequences(input)?;
    let matches: Vec<&ActionSequence> = seqs
        .iter()
        .filter(|s| subject.is_none_or(|x| s.subject_id() == x))
        .filter(|s| action.is_none_or(|x| s.label() == x))
        .filter(|s| trial.is_none_or(|x| s.trial_id() == x))
        .collect();
    let seq = match matches.as_slice() {
        [one] => *one,
        [] => return Err(CliError::Invalid("no sequence matches the selection".into())),
        many => {
            return Err(CliError::Invalid(format!(
                "{} sequences match; narrow with --subject/--action/--trial",
                many.len()
            )))
        }
    };
    let t = t.unwrap_or(seq.len());
    if t > seq.len() {
        return Err(CliError::Invalid(format!(
            "t = {t} exceeds the sequence length {}",
            seq.len()
        )));
    }
    let s = sequence_srf(seq, t, &config, srf.lambda_rel).map_err(invalid)?;
    write_file(out, &s.to_pgm())?;
    if let Some(path) = csv {
        write_file(path, s.to_csv().as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            classes,
            subjects,
            trials,
            frames,
            seed,
            out,
        } => synth(classes, subjects, trials, frames, seed, out),
        Command::Encode {
            input,
            out_dir,
            t,
            format,
            srf,
        } => encode(&input, &out_dir, t, format, &srf),
        Command::Train {
            input,
            model,
            history,
            srf,
            train,
        } => train_cmd(&input, &model, history.as_deref(), &srf, &train),
        Command::EvalLopo {
            input,
            report_json,
            report_csv,
            srf,
            train,
        } => eval_lopo(&input, report_json.as_deref(), report_csv.as_deref(), &srf, &train),
        Command::Classify {
            model,
            input,
            trace,
            srf,
        } => classify(&model, input.as_deref(), trace.as_deref(), &srf),
        Command::ExportSrf {
            input,
            out,
            subject,
            action,
            trial,
            t,
            csv,
            srf,
        } => export_srf(
            &input,
            &out,
            subject.as_deref(),
            action,
            trial.as_deref(),
            t,
            csv.as_deref(),
            &srf,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn samples_per_ray_is_optional() {
        let cli = Cli::try_parse_from(["srf", "export-srf", "--input", "a", "--out", "b"]).unwrap();
        match cli.command {
            Command::ExportSrf { srf, .. } => {
                assert_eq!(srf.samples_per_ray, None);
                assert_eq!(srf.config().unwrap(), SrfConfig::default());
            }
            _ => unreachable!(),
        }
    }
}
