//! `contact-audio` command-line tool.
//!
//! Machine-readable results go to stdout as JSON; diagnostics go to stderr.
//! Exit codes: 0 success, 1 input or validation error, 2 internal error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contact_audio::evaluation::{aggregate, parse_episodes};
use contact_audio::events::{coalesce_contacts_with_period, parse_events, DEFAULT_GAP_THRESHOLD};
use contact_audio::fusion::{audio_tokens_from_spectrogram, run_demo, ModelDims};
use contact_audio::library::validate_library;
use contact_audio::modulation::{chunk_stream, render_with_threads, ModulationError, RenderConfig};
use contact_audio::spectral::{fbsp_transform, features_for_chunks, log_power, LogPowerSpectrogram, NUM_BINS};
use contact_audio::wav;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "contact-audio", version, about = "Contact-audio synthesis, features and evaluation")]
struct Cli {
    /// Seed for every randomized step (overrides `rng_seed` from --config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file overriding render configuration defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Extra diagnostics on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Contact-sound library tools.
    Library {
        #[command(subcommand)]
        command: LibraryCommand,
    },
    /// Render an event stream to a WAV file.
    Synth(SynthArgs),
    /// Log-power spectrogram of a WAV file or a directory of chunk WAVs.
    Features(FeaturesArgs),
    /// Seeded forward pass of the fusion model with loss and gradient check.
    FuseDemo(FuseDemoArgs),
    /// Success rate and task completion rate over an episode log.
    Eval {
        /// Episode log (JSON Lines).
        episodes: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum LibraryCommand {
    /// Load every clip of a manifest and report all problems.
    Validate { manifest: PathBuf },
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Event stream (JSON Lines, header first).
    events: PathBuf,
    /// Library manifest (JSON).
    manifest: PathBuf,
    /// Output WAV (mono, 32-bit float).
    output: PathBuf,
    /// Also write per-control-step chunk WAVs and `chunks.json` here.
    #[arg(long, value_name = "DIR")]
    chunks_dir: Option<PathBuf>,
    /// Skip events with no matching library clips instead of failing.
    #[arg(long)]
    skip_unknown: bool,
    /// Gap in seconds bridged when merging contacts [default: one control period].
    #[arg(long, value_name = "SECONDS", conflicts_with = "no_coalesce")]
    coalesce_gap: Option<f64>,
    /// Render events exactly as given, without merging contacts.
    #[arg(long)]
    no_coalesce: bool,
    /// Worker threads for per-event processing (output does not depend on it).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    /// WAV file, or a directory of `chunk_*.wav` files.
    input: PathBuf,
    /// SPG1 output file, or output directory when the input is a directory.
    output: PathBuf,
    /// Also write a CSV export (single-file input only).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FuseDemoArgs {
    /// Use this SPG1 spectrogram as the audio tokens (one token per frame).
    #[arg(long, value_name = "PATH")]
    audio_spg: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 7)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    n_lang: usize,
    #[arg(long, default_value_t = 4)]
    n_aud: usize,
    #[arg(long, default_value_t = 64)]
    d_llm: usize,
    /// Patch tokens per camera view.
    #[arg(long, default_value_t = 256)]
    patches: usize,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn input(msg: impl std::fmt::Display) -> Failure {
    Failure::Input(msg.to_string())
}

fn print_stdout(text: &str) {
    // A closed pipe (e.g. `| head`) is not an error for a reporting tool.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit(value: serde_json::Value) {
    print_stdout(&serde_json::to_string_pretty(&value).expect("json value serializes"));
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("MissingFile: {}: {e}", path.display())))
}

fn render_config(cli: &Cli) -> Result<RenderConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RenderConfig::from_json(&read_text(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?,
        None => RenderConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    Ok(cfg)
}

fn cmd_library_validate(manifest: &Path) -> CmdResult {
    match validate_library(manifest) {
        Ok(lib) => {
            emit(json!({ "valid": true, "clips": lib.clip_count() }));
            Ok(())
        }
        Err(errors) => {
            for e in &errors {
                eprintln!("{}: {e}", e.kind());
            }
            let list: Vec<_> = errors.iter().map(|e| json!({ "kind": e.kind(), "message": e.to_string() })).collect();
            emit(json!({ "valid": false, "errors": list }));
            Err(input(format!("{} problem(s) in {}", errors.len(), manifest.display())))
        }
    }
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> CmdResult {
    let mut cfg = render_config(cli)?;
    cfg.skip_unknown |= args.skip_unknown;
    let stream = parse_events(&read_text(&args.events)?).map_err(|e| input(format!("{}: {}: {e}", e.kind(), args.events.display())))?;
    let library = validate_library(&args.manifest).map_err(|errors| {
        for e in &errors {
            eprintln!("{}: {e}", e.kind());
        }
        input(format!("library {} failed to load", args.manifest.display()))
    })?;

    let events_in = stream.len();
    let stream = if args.no_coalesce {
        stream
    } else {
        let gap = args.coalesce_gap.unwrap_or(DEFAULT_GAP_THRESHOLD);
        if !(gap.is_finite() && gap >= 0.0) {
            return Err(input(format!("--coalesce-gap must be non-negative, got {gap}")));
        }
        coalesce_contacts_with_period(&stream, gap, 1.0 / cfg.control_rate)
    };

    let out = render_with_threads(&stream, &library, &cfg, args.threads).map_err(|e| match e {
        ModulationError::UnresolvableEvent { .. } | ModulationError::InvalidConfig(_) => {
            input(format!("{e} (use --skip-unknown to skip such events)"))
        }
        other => Failure::Internal(other.to_string()),
    })?;
    for &i in &out.stats.skipped {
        eprintln!("warning: skipped unresolvable event {i}");
    }
    out.buffer.write_wav(&args.output).map_err(|e| input(format!("{}: {e}", args.output.display())))?;

    let chunks = match &args.chunks_dir {
        Some(dir) => {
            let chunked = chunk_stream(&out.buffer, cfg.control_rate).map_err(|e| Failure::Internal(e.to_string()))?;
            chunked.write_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
            serde_json::to_value(chunked.sidecar()).expect("sidecar serializes")
        }
        None => serde_json::Value::Null,
    };
    if cli.verbose {
        eprintln!("rendered {} of {} events into {} samples", out.stats.rendered, stream.len(), out.stats.total_samples);
    }
    emit(json!({
        "output": args.output,
        "sample_rate": out.buffer.sample_rate,
        "samples": out.buffer.samples.len(),
        "duration_s": out.buffer.duration_secs(),
        "events_in": events_in,
        "events_rendered": out.stats.rendered,
        "events_after_coalesce": stream.len(),
        "skipped": out.stats.skipped,
        "clipped_samples": out.stats.clipped_samples,
        "peak_abs_pre_clamp": out.stats.peak_abs_pre_clamp,
        "chunks": chunks,
    }));
    Ok(())
}

fn read_wav(path: &Path, verbose: bool) -> Result<wav::MonoAudio, Failure> {
    let audio = wav::read_mono(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if audio.source_channels > 1 {
        eprintln!("notice: {} has {} channels, mixed to mono", path.display(), audio.source_channels);
    } else if verbose {
        eprintln!("{}: {} samples at {} Hz", path.display(), audio.samples.len(), audio.sample_rate);
    }
    Ok(audio)
}

fn chunk_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| input(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "wav")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("chunk_"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_features(cli: &Cli, args: &FeaturesArgs) -> CmdResult {
    if args.input.is_dir() {
        if args.csv.is_some() {
            return Err(input("--csv is only supported for single-file input"));
        }
        let files = chunk_files(&args.input)?;
        let chunks = files.iter().map(|f| read_wav(f, cli.verbose).map(|a| a.samples)).collect::<Result<Vec<_>, _>>()?;
        let features = features_for_chunks(&chunks).map_err(|e| input(e.to_string()))?;
        std::fs::create_dir_all(&args.output).map_err(|e| input(format!("{}: {e}", args.output.display())))?;
        let mut padded = 0;
        let mut frames = Vec::with_capacity(features.len());
        for (file, feat) in files.iter().zip(&features) {
            let name = Path::new(file.file_name().expect("chunk file name")).with_extension("spg");
            let dest = args.output.join(name);
            std::fs::write(&dest, feat.spectrogram.to_spg_bytes()).map_err(|e| input(format!("{}: {e}", dest.display())))?;
            padded += feat.padded as usize;
            frames.push(feat.spectrogram.num_frames());
        }
        frames.dedup();
        emit(json!({
            "chunks": features.len(),
            "num_bins": NUM_BINS,
            "num_frames_per_chunk": frames,
            "padded_chunks": padded,
            "output": args.output,
        }));
        return Ok(());
    }

    let audio = read_wav(&args.input, cli.verbose)?;
    let spec = fbsp_transform(&audio.samples).map_err(|e| input(format!("InputTooShort: {}: {e}", args.input.display())))?;
    let lp = log_power(&spec);
    std::fs::write(&args.output, lp.to_spg_bytes()).map_err(|e| input(format!("{}: {e}", args.output.display())))?;
    if let Some(csv) = &args.csv {
        let file = std::fs::File::create(csv).map_err(|e| input(format!("{}: {e}", csv.display())))?;
        lp.write_csv(std::io::BufWriter::new(file)).map_err(|e| input(format!("{}: {e}", csv.display())))?;
    }
    emit(json!({
        "num_bins": lp.num_bins(),
        "num_frames": lp.num_frames(),
        "sample_rate": audio.sample_rate,
        "samples": audio.samples.len(),
        "min_db": lp.min_db(),
        "max_db": lp.max_db(),
        "output": args.output,
    }));
    Ok(())
}

fn cmd_fuse_demo(cli: &Cli, args: &FuseDemoArgs) -> CmdResult {
    let dims = ModelDims {
        k: args.k,
        d: args.d,
        n_lang: args.n_lang,
        n_aud: args.n_aud,
        d_llm: args.d_llm,
        n_third: args.patches,
        n_wrist: args.patches,
        ..ModelDims::default()
    };
    let audio = match &args.audio_spg {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| input(format!("MissingFile: {}: {e}", path.display())))?;
            let spec = LogPowerSpectrogram::from_spg_bytes(&bytes).map_err(|e| input(format!("{}: {e}", path.display())))?;
            Some(audio_tokens_from_spectrogram(&spec, dims.d_aud).map_err(|e| input(e.to_string()))?)
        }
        None => None,
    };
    let report = run_demo(cli.seed.unwrap_or(0), dims, audio).map_err(|e| input(e.to_string()))?;
    if !report.grad_check.passed || report.sequence_shape[0] != report.expected_sequence_rows {
        return Err(Failure::Internal(format!(
            "invariant violated: rows {} vs {}, grad error {}",
            report.sequence_shape[0], report.expected_sequence_rows, report.grad_check.max_abs_error
        )));
    }
    emit(serde_json::to_value(&report).expect("report serializes"));
    Ok(())
}

fn cmd_eval(path: &Path) -> CmdResult {
    let episodes = parse_episodes(&read_text(path)?).map_err(|e| input(format!("{}: {}: {e}", e.kind(), path.display())))?;
    let report = aggregate(&episodes).map_err(|e| input(format!("{}: {e}", e.kind())))?;
    eprint!("{}", report.to_table());
    print_stdout(&report.to_json());
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Library { command: LibraryCommand::Validate { manifest } } => cmd_library_validate(manifest),
        Command::Synth(args) => cmd_synth(cli, args),
        Command::Features(args) => cmd_features(cli, args),
        Command::FuseDemo(args) => cmd_fuse_demo(cli, args),
        Command::Eval { episodes } => cmd_eval(episodes),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Input(msg) | Failure::Internal(msg)) = &failure;
            eprintln!("error: {msg}");
            ExitCode::from(failure.exit_code())
        }
    }
}
