//! `fcgs`: stage-by-stage and end-to-end front end over `fcgs-core`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcgs_core::chaos_game::{compute_fcgr, FcgrMatrix};
use fcgs_core::cwt_engine::{analyze, MorletParams, ScaleGrid, ScaleSpacing, Scalogram};
use fcgs_core::fcgs_encoder::{encode_at, FcgsSignal};
use fcgs_core::intron_scan::{
    band_energy, call_regions, evaluate_within, Threshold, DEFAULT_MIN_LEN, DEFAULT_SMOOTHING,
};
use fcgs_core::pipeline::{run_pipeline, ConfigError, PipelineConfig};
use fcgs_core::sequence_io::{
    fetch_remote_fasta, parse_annotations, read_fasta_file, subsequence, write_annotations,
    write_fasta, AnnotationTrack, NucleotideSequence, RegionLabel,
};
use fcgs_core::synth::{generate, parse_layout, SynthSpec, DEFAULT_UNIT6, DEFAULT_UNIT7};
use fcgs_core::viz_export::{export_profile_csv, render_scalogram, Colormap, RenderSpec};
use fcgs_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fcgs",
    version,
    about = "Frequency chaos game signals and Morlet scalograms for DNA"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count an order-k FCGR matrix and write it as CSV.
    Fcgr(FcgrArgs),
    /// Encode a record (or a window of it) into an FCGS signal.
    Encode(EncodeArgs),
    /// Complex Morlet CWT of a binary signal.
    Cwt(CwtArgs),
    /// Band energy profile, region calls and optional evaluation.
    Scan(ScanArgs),
    /// Scalogram PNG.
    Render(RenderArgs),
    /// Seeded synthetic genome with planted period-6.5 motifs.
    Synth(SynthArgs),
    /// All stages from a config file and/or overrides.
    Pipeline(PipelineArgs),
    /// Download FASTA into a local cache (cache first).
    Fetch(FetchArgs),
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    fasta: PathBuf,
    /// Record id; the first record when omitted.
    #[arg(long)]
    seq_id: Option<String>,
}

#[derive(Args)]
struct FcgrArgs {
    #[command(flatten)]
    record: RecordArgs,
    #[arg(short, long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    record: RecordArgs,
    /// Matrix CSV; counted from the whole record when omitted.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(short, long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Window start, 1-based inclusive.
    #[arg(long, requires = "end")]
    start: Option<u64>,
    #[arg(long, requires = "start")]
    end: Option<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    bin: Option<PathBuf>,
}

#[derive(Args)]
struct CwtArgs {
    /// Binary signal written by `encode --bin`.
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, default_value_t = 5.4285)]
    omega0: f64,
    #[arg(long, default_value_t = 601)]
    support_len: usize,
    #[arg(long, default_value_t = 1.0)]
    scale_min: f64,
    #[arg(long, default_value_t = 64.0)]
    scale_max: f64,
    #[arg(long, default_value_t = 64)]
    scale_count: usize,
    #[arg(long)]
    linear: bool,
    /// Crop to this range after the transform.
    #[arg(long, requires = "crop_end")]
    crop_start: Option<u64>,
    #[arg(long, requires = "crop_start")]
    crop_end: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    scalogram: PathBuf,
    #[arg(long, default_value_t = 1.0 / 7.5)]
    band_low: f64,
    #[arg(long, default_value_t = 1.0 / 5.5)]
    band_high: f64,
    /// `auto` or a number.
    #[arg(long, default_value = "auto")]
    threshold: Threshold,
    #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
    min_len: usize,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: usize,
    #[arg(long, default_value = "intron")]
    label: RegionLabel,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    calls: Option<PathBuf>,
    /// Annotation file to score the calls against.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scalogram: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1200)]
    width: u32,
    #[arg(long, default_value_t = 400)]
    height: u32,
    #[arg(long, default_value = "jet")]
    colormap: Colormap,
    #[arg(long, requires = "end")]
    start: Option<u64>,
    #[arg(long, requires = "start")]
    end: Option<u64>,
    /// Annotation file whose entries are drawn as vertical lines.
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long)]
    overlay_label: Option<RegionLabel>,
}

#[derive(Args)]
struct SynthArgs {
    /// Comma-separated segment lengths: background, motif, background, ...
    #[arg(long)]
    layout: String,
    #[arg(long, default_value_t = 0.05)]
    mutation_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synth")]
    seq_id: String,
    #[arg(long, default_value = DEFAULT_UNIT6)]
    unit6: String,
    #[arg(long, default_value = DEFAULT_UNIT7)]
    unit7: String,
    #[arg(long)]
    fasta: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fasta: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Any config key, e.g. `--set window_start=235841`. Applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long)]
    url: String,
    #[arg(long, default_value = ".fcgs_cache")]
    cache_dir: PathBuf,
    /// Also write the parsed records here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_record(args: &RecordArgs) -> Result<NucleotideSequence> {
    let records = read_fasta_file(&args.fasta).map_err(|e| match e {
        fcgs_core::sequence_io::SequenceError::Io(io) => Error::io(&args.fasta, io),
        other => other.into(),
    })?;
    let wanted = args.seq_id.as_deref();
    records
        .into_iter()
        .find(|r| wanted.is_none_or(|id| r.id() == id))
        .ok_or_else(|| {
            ConfigError::Invalid {
                key: "seq_id".into(),
                message: format!("record `{}` not found", wanted.unwrap_or("<first>")),
            }
            .into()
        })
}

fn read_track(path: &Path) -> Result<AnnotationTrack> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_annotations(&text)?)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn cmd_fcgr(a: FcgrArgs) -> Result<()> {
    let seq = load_record(&a.record)?;
    let m = compute_fcgr(&seq, a.k as usize)?;
    m.write_csv(&a.out)?;
    println!("counted_words\t{}", m.counted_words());
    println!("entropy_bits\t{:.6}", m.entropy_bits());
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let seq = load_record(&a.record)?;
    let matrix = match &a.matrix {
        Some(p) => FcgrMatrix::read_csv(p)?,
        None => compute_fcgr(&seq, a.k as usize)?,
    };
    let (piece, start) = match (a.start, a.end) {
        (Some(s), Some(e)) => (subsequence(&seq, s, e)?, s),
        _ => (seq.clone(), 1),
    };
    let mut signal = encode_at(&piece, &matrix, start)?;
    signal.source_id = seq.id().to_string();
    for p in [&a.csv, &a.bin].into_iter().flatten() {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    signal
        .save(a.csv.as_deref(), a.bin.as_deref())
        .map_err(|e| {
            Error::io(
                a.csv.as_ref().or(a.bin.as_ref()).unwrap_or(&PathBuf::new()),
                e,
            )
        })?;
    println!("samples\t{}", signal.len());
    println!("masked\t{}", signal.masked_count());
    Ok(())
}

fn cmd_cwt(a: CwtArgs) -> Result<()> {
    let signal = FcgsSignal::read_binary(open(&a.signal)?)?;
    let params = MorletParams::new(a.omega0, a.support_len)?;
    let spacing = if a.linear {
        ScaleSpacing::Linear
    } else {
        ScaleSpacing::Log
    };
    let grid = ScaleGrid::build(a.scale_min, a.scale_max, a.scale_count, spacing)?;
    let mut s = analyze(&signal, &grid, &params)?;
    if let (Some(lo), Some(hi)) = (a.crop_start, a.crop_end) {
        s = s.crop(lo, hi)?;
    }
    let mut w = create(&a.out)?;
    s.write_binary(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&a.out, e))?;
    if let Some(p) = &a.csv {
        let mut w = create(p)?;
        s.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(p, e))?;
    }
    let (_, scale, freq) = s.ridge();
    println!("ridge_scale\t{scale:.4}");
    println!("ridge_frequency\t{freq:.6}");
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> Result<()> {
    let s = Scalogram::read_binary(open(&a.scalogram)?)?;
    let profile = band_energy(&s, a.band_low, a.band_high)?;
    let calls = call_regions(&profile, a.threshold, a.min_len, a.smoothing)?;
    if let Some(p) = &a.profile {
        export_profile_csv(&profile, p)?;
    }
    match &a.calls {
        Some(p) => {
            let mut w = create(p)?;
            calls
                .write_bed(&mut w, a.label)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(p, e))?;
        }
        None => calls
            .write_bed(std::io::stdout().lock(), a.label)
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    eprintln!("threshold_used\t{}", calls.threshold_used);
    if let Some(t) = &a.truth {
        let truth = read_track(t)?;
        let range = (s.start_coordinate, s.end_coordinate());
        let m = evaluate_within(&calls, &truth, a.label, Some(range))?;
        match &a.metrics {
            Some(p) => std::fs::write(p, m.to_string()).map_err(|e| Error::io(p, e))?,
            None => eprint!("{m}"),
        }
    }
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let s = Scalogram::read_binary(open(&a.scalogram)?)?;
    let mut spec = RenderSpec::full(&s, a.width, a.height);
    spec.colormap = a.colormap;
    if let (Some(lo), Some(hi)) = (a.start, a.end) {
        spec.window = (lo, hi);
    }
    if let Some(p) = &a.overlay {
        let track = read_track(p)?;
        let entries = track
            .for_sequence(&s.source_id)
            .filter(|e| a.overlay_label.is_none_or(|l| e.label == l))
            .cloned()
            .collect();
        spec.overlay = Some(AnnotationTrack::from_entries(entries)?);
    }
    let png = render_scalogram(&s, &spec)?;
    std::fs::write(&a.out, png).map_err(|e| Error::io(&a.out, e))?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        seq_id: a.seq_id,
        layout: parse_layout(&a.layout)?,
        mutation_rate: a.mutation_rate,
        seed: a.seed,
        unit6: a.unit6,
        unit7: a.unit7,
        ..SynthSpec::default()
    };
    let (seq, track) = generate(&spec)?;
    let mut w = create(&a.fasta)?;
    write_fasta(std::slice::from_ref(&seq), &mut w, 60)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&a.fasta, e))?;
    let mut w = create(&a.truth)?;
    write_annotations(&track, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&a.truth, e))?;
    println!("length\t{}", seq.len());
    println!("motifs\t{}", spec.motif_intervals().len());
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = a.fasta {
        cfg.fasta = Some(p);
    }
    if let Some(p) = a.annotations {
        cfg.annotations = Some(p);
    }
    if let Some(p) = a.out_dir {
        cfg.out_dir = p;
    }
    for kv in &a.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Invalid {
            key: kv.clone(),
            message: "expected KEY=VALUE".into(),
        })?;
        cfg.set(k.trim(), v, None)?;
    }
    let report = run_pipeline(&cfg)?;
    println!("seq_id\t{}", report.seq_id);
    println!("range\t{}-{}", report.range.0, report.range.1);
    println!("regions\t{}", report.calls.intervals.len());
    println!("ridge_frequency\t{:.6}", report.ridge.2);
    if let Some(m) = &report.metrics {
        print!("{m}");
    }
    println!("manifest\t{}", report.manifest.display());
    Ok(())
}

fn cmd_fetch(a: FetchArgs) -> Result<()> {
    let records = fetch_remote_fasta(&a.url, &a.cache_dir)?;
    if let Some(p) = &a.out {
        let mut w = create(p)?;
        write_fasta(&records, &mut w, 60)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(p, e))?;
    }
    for r in &records {
        println!("{}\t{}", r.id(), r.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Fcgr(a) => cmd_fcgr(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Cwt(a) => cmd_cwt(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Render(a) => cmd_render(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Fetch(a) => cmd_fetch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.family().exit_code() as u8)
        }
    }
}
