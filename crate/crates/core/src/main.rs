use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ldcodec::allocation::AllocationProfile;
use ldcodec::bands::BandLayout;
use ldcodec::codec::{analysis_window, CodecConfig, Decoder, Encoder, FrameStats, TransientMode};
use ldcodec::container::{read_stream, write_stream, StreamHeader};
use ldcodec::energy::CoarseParams;
use ldcodec::metrics;

#[derive(Parser)]
#[command(version, about = "Very-low-delay MDCT audio codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a mono WAV file into a framed stream.
    Encode(EncodeArgs),
    /// Decode a stream back to WAV, optionally dropping frames.
    Decode(DecodeArgs),
    /// Compare an original and a decoded WAV file.
    Analyze(AnalyzeArgs),
    /// Print the band layout of a frame size.
    Layout {
        #[arg(long, default_value_t = 256)]
        frame_size: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Flat,
    Psychoacoustic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transient {
    Auto,
    Off,
    Always,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    output: PathBuf,
    /// Target bit rate in bit/s, rounded to whole bytes per frame.
    #[arg(long, conflicts_with = "bytes")]
    bitrate: Option<f64>,
    /// Bytes per frame.
    #[arg(long)]
    bytes: Option<usize>,
    #[arg(long, default_value_t = 256)]
    frame_size: usize,
    #[arg(long, value_enum, default_value_t = Profile::Psychoacoustic)]
    profile: Profile,
    /// Code every frame's energies without inter-frame prediction.
    #[arg(long)]
    intra: bool,
    #[arg(long, value_enum, default_value_t = Transient::Auto)]
    transient: Transient,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    output: PathBuf,
    /// Probability of losing each frame.
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Seed of the loss pattern.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lose every k-th frame.
    #[arg(long)]
    loss_every: Option<usize>,
    /// Write 32-bit float samples instead of 16-bit integers.
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    original: PathBuf,
    decoded: PathBuf,
    /// Samples to skip at the start of the decoded file.
    #[arg(long, default_value_t = 0)]
    delay: usize,
    /// Frame size used for the per-band energy error.
    #[arg(long, default_value_t = 256)]
    frame_size: usize,
}

fn read_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    let mut reader =
        hound::WavReader::open(path).with_context(|| format!("opening {}", path.display()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        bail!(
            "{}: {} channels, only mono is supported",
            path.display(),
            spec.channels
        );
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 2f64.powi(i32::from(bits) - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<std::result::Result<Vec<_>, _>>()?
        }
        (format, bits) => bail!(
            "{}: unsupported {bits}-bit {format:?} samples",
            path.display()
        ),
    };
    Ok((samples, spec.sample_rate))
}

fn write_wav(path: &Path, samples: &[f64], sample_rate: u32, float: bool) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: if float { 32 } else { 16 },
        sample_format: if float {
            hound::SampleFormat::Float
        } else {
            hound::SampleFormat::Int
        },
    };
    let mut w = hound::WavWriter::create(path, spec)
        .with_context(|| format!("creating {}", path.display()))?;
    for &s in samples {
        if float {
            w.write_sample(s as f32)?;
        } else {
            w.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?;
        }
    }
    w.finalize()?;
    Ok(())
}

fn print_stats(config: &CodecConfig, stats: &[FrameStats]) {
    let frames = stats.len().max(1) as f64;
    let avg = |f: fn(&FrameStats) -> u64| {
        stats.iter().map(|s| FrameStats::as_bits(f(s))).sum::<f64>() / frames
    };
    let rows = [
        ("Coarse energy (Q1)", avg(|s| s.coarse)),
        ("Fine energy (Q2)", avg(|s| s.fine)),
        ("Shape (Q3)", avg(|s| s.shape)),
        ("Mode flags", avg(|s| s.flags)),
        ("Unallocated", avg(|s| s.unallocated)),
    ];
    let total: f64 = rows.iter().map(|r| r.1).sum();
    println!(
        "{} frames, {} bytes/frame, {:.1} kbit/s",
        stats.len(),
        config.frame_bytes,
        config.bitrate() / 1000.0
    );
    println!("{:<22}{:>10}", "Parameter", "Avg. bits");
    for (name, bits) in rows {
        println!("{name:<22}{bits:>10.1}");
    }
    println!("{:<22}{total:>10.1}", "Total");
    let transient = stats.iter().filter(|s| s.transient).count();
    println!("transient frames: {transient}");
}

fn encode(args: EncodeArgs) -> Result<()> {
    let (pcm, sample_rate) = read_wav(&args.input)?;
    let bytes = match (args.bytes, args.bitrate) {
        (Some(b), _) => b,
        (None, Some(rate)) => CodecConfig::bytes_for_bitrate(rate, sample_rate, args.frame_size),
        (None, None) => bail!("one of --bytes or --bitrate is required"),
    };
    let mut config = CodecConfig::new(args.frame_size, bytes.max(1))?;
    config.sample_rate = sample_rate;
    config.profile = match args.profile {
        Profile::Flat => AllocationProfile::Flat,
        Profile::Psychoacoustic => AllocationProfile::Psychoacoustic,
    };
    if args.intra {
        config.prediction = CoarseParams::intra();
    }
    config.transient_mode = match args.transient {
        Transient::Auto => TransientMode::Auto,
        Transient::Off => TransientMode::Off,
        Transient::Always => TransientMode::Always,
    };
    config.validate()?;
    let header = StreamHeader::from_config(&config)?;
    let mut encoder = Encoder::new(config.clone())?;
    let mut frames = Vec::new();
    let mut stats = Vec::new();
    for m in 0..config.frame_count(pcm.len()) {
        let (frame, s) = encoder.encode_frame_with_stats(&analysis_window(&pcm, &config, m))?;
        frames.push(frame);
        stats.push(s);
    }
    let file = fs::File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    write_stream(std::io::BufWriter::new(file), &header, &frames)?;
    print_stats(&config, &stats);
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.loss) {
        bail!("--loss must be within [0, 1]");
    }
    if args.loss_every == Some(0) {
        bail!("--loss-every must be positive");
    }
    let bytes =
        fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let stream = read_stream(&bytes)?;
    if stream.trailing > 0 {
        eprintln!(
            "warning: dropped {} trailing bytes of a truncated final frame",
            stream.trailing
        );
    }
    let config = stream.header.to_config()?;
    let mut decoder = Decoder::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut out = Vec::with_capacity(stream.frames.len() * config.frame_size);
    let mut lost = 0;
    for (i, frame) in stream.frames.iter().enumerate() {
        let drop_random = args.loss > 0.0 && rng.random_bool(args.loss);
        let drop_periodic = args.loss_every.is_some_and(|k| (i + 1) % k == 0);
        let input = if drop_random || drop_periodic {
            lost += 1;
            None
        } else {
            Some(frame.as_slice())
        };
        out.extend(
            decoder
                .decode_frame(input)
                .with_context(|| format!("frame {i}"))?,
        );
    }
    write_wav(&args.output, &out, config.sample_rate, args.float)?;
    println!(
        "{} frames decoded, {lost} lost, {} samples",
        stream.frames.len(),
        out.len()
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let (reference, rate_a) = read_wav(&args.original)?;
    let (decoded, rate_b) = read_wav(&args.decoded)?;
    if rate_a != rate_b {
        bail!("sample rates differ: {rate_a} vs {rate_b}");
    }
    let decoded = decoded.get(args.delay..).unwrap_or(&[]);
    let slack = args.frame_size + args.frame_size / 2;
    if reference.len().abs_diff(decoded.len()) > slack {
        bail!(
            "lengths differ by more than {slack} samples: {} vs {}",
            reference.len(),
            decoded.len()
        );
    }
    let n = reference.len().min(decoded.len());
    let (x, y) = (&reference[..n], &decoded[..n]);
    println!("compared samples: {n}");
    let snr = metrics::snr_db(x, y)?;
    if snr >= metrics::SNR_CAP_DB {
        println!("SNR: inf (identical)");
    } else {
        println!("SNR: {snr:.2} dB");
    }
    let segment = (rate_a / 100) as usize;
    println!(
        "segmental SNR ({segment}-sample segments): {:.2} dB",
        metrics::segmental_snr_db(x, y, segment)?
    );
    let band_error = metrics::band_energy_error_db(x, y, args.frame_size, rate_a)?;
    println!("band energy error (dB):");
    for (b, e) in band_error.iter().enumerate() {
        println!("  band {b:>2}: {e:.3}");
    }
    let onsets = metrics::detect_onsets(x, 1e-3, 2 * slack);
    let window = (rate_a / 200) as usize;
    println!(
        "pre-echo energy ({} onsets, {window}-sample windows): {:.4e}",
        onsets.len(),
        metrics::pre_echo_energy(x, y, &onsets, window)?
    );
    Ok(())
}

fn layout(frame_size: usize) -> Result<()> {
    let layout = BandLayout::new(frame_size, 48_000)?;
    println!(
        "{:>4} {:>6} {:>6} {:>6} {:>9}",
        "band", "start", "end", "width", "Hz"
    );
    for b in 0..layout.num_bands() {
        let r = layout.range(b);
        let (lo, hi) = layout.hz_range(b);
        println!(
            "{b:>4} {:>6} {:>6} {:>6} {:>4.0}-{hi:.0}",
            r.start,
            r.end,
            r.len(),
            lo
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Analyze(a) => analyze(a),
        Command::Layout { frame_size } => layout(frame_size),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
