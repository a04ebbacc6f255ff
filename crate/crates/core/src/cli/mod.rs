//! The `inpaint` command line. [`run`] parses arguments, executes one
//! subcommand and returns the process exit status: 0 on success, 2 on a usage
//! error, 1 on any other failure (with a one-line diagnostic on stderr).

mod disc;
mod gradcheck;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::blocks::{assemble, bench_lka, ModelSpec, Role};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::init;
use crate::io::{
    gray_from_tensor, load_params, mask_from_gray, mask_to_gray, read_pgm, read_ppm, read_segments,
    save_params, write_pgm, write_zten, Gray,
};
use crate::losses::{
    adversarial_losses, feature_match, gradient_penalty, gradient_prior_loss, hrf_loss, masked_l1,
    resize_mask_for_patches, total_loss, ConvExtractor, IdentityExtractor, LossParts, LossWeights, PatchResize,
};
use crate::mpe::mpe_parts;
use crate::priors::{
    edge_nms, enms_fuse, evaluate_f1, rasterize_lines, sobel_gradients, ssu_train, ssu_upsample,
    synthetic_corpus, SsuWeights, TrainConfig, DEFAULT_WIDTH,
};
use crate::tensor::{resize, ConvSpec, ResizeMode, Tensor};

#[derive(Debug, Parser)]
#[command(name = "inpaint", version, about = "Masking encodings, structure priors, losses and block probes")]
pub struct Cli {
    /// key=value file overriding the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance and direction encodings of a PGM mask (black = hole).
    Mpe(MpeArgs),
    /// Anti-aliased rendering of a segment file.
    Rasterize(RasterizeArgs),
    /// Thins an edge map and fuses it with the raw map.
    Enms(EnmsArgs),
    /// Iterated learned doubling of a structure map.
    Upsample(UpsampleArgs),
    /// Trains the structure upsampler on synthetic lines.
    SsuTrain(SsuTrainArgs),
    /// Downsamples a mask to discriminator patches.
    MaskResize(MaskResizeArgs),
    /// Evaluates every loss term and the weighted total as CSV.
    Loss(LossArgs),
    /// Compares tape gradients with central differences as CSV.
    GradCheck(GradCheckArgs),
    /// Prints the stage schedule of an assembled network.
    Shapes(ShapesArgs),
    /// Times direct against decomposed large-kernel depthwise convolution.
    BenchLka(BenchLkaArgs),
}

#[derive(Debug, Args)]
pub struct MpeArgs {
    #[arg(long)]
    pub mask: PathBuf,
    /// Masking distance as ZTEN (H×W).
    #[arg(long)]
    pub out_dis: Option<PathBuf>,
    /// Masking distance as a 16-bit PGM holding raw step counts.
    #[arg(long)]
    pub out_dis_pgm: Option<PathBuf>,
    /// Sinusoidal distance code as ZTEN (1×d×H×W).
    #[arg(long)]
    pub out_edis: Option<PathBuf>,
    /// Direction embedding as ZTEN (1×d×H×W).
    #[arg(long)]
    pub out_edir: Option<PathBuf>,
    /// Multi-hot directions (up, down, left, right) as ZTEN (1×4×H×W).
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    /// Summed encoding at the target size as ZTEN.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub target_h: Option<usize>,
    #[arg(long)]
    pub target_w: Option<usize>,
    /// 4×d direction embedding as ZTEN; drawn from N(0, 0.02²) by seed if absent.
    #[arg(long)]
    pub w_dir: Option<PathBuf>,
    /// Channels of the encoding (overrides mpe.d).
    #[arg(long)]
    pub d: Option<usize>,
    /// Distance ceiling (overrides d_max).
    #[arg(long)]
    pub d_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RasterizeArgs {
    /// Text file with one `x1 y1 x2 y2` segment per line.
    #[arg(long)]
    pub segments: PathBuf,
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = bits_parser)]
    pub bits: u8,
}

#[derive(Debug, Args)]
pub struct EnmsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fusion threshold (overrides enms.threshold).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write the thinned map without fusing.
    #[arg(long)]
    pub thin_only: bool,
}

#[derive(Debug, Args)]
pub struct UpsampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Parameter directory written by `ssu-train`; not needed when the target
    /// equals the input size.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = bits_parser)]
    pub bits: u8,
}

#[derive(Debug, Args)]
pub struct SsuTrainArgs {
    /// Parameter directory to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    /// Side of the low-resolution maps.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Overrides ssu.epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides ssu.step.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_WIDTH)]
    pub channels: usize,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Held-out pairs scored after training (0 skips scoring).
    #[arg(long, default_value_t = 0)]
    pub eval: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ResizeKind {
    Nearest,
    Maxpool,
}

impl From<ResizeKind> for PatchResize {
    fn from(k: ResizeKind) -> Self {
        match k {
            ResizeKind::Nearest => PatchResize::Nearest,
            ResizeKind::Maxpool => PatchResize::MaxPool,
        }
    }
}

#[derive(Debug, Args)]
pub struct MaskResizeArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub factor: usize,
    #[arg(long, value_enum, default_value_t = ResizeKind::Maxpool)]
    pub mode: ResizeKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HrfKind {
    Identity,
    Stub,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Predicted image (PPM).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth image (PPM).
    #[arg(long)]
    pub gt: PathBuf,
    /// Mask (PGM, black = hole).
    #[arg(long)]
    pub mask: PathBuf,
    /// Edge map weighting the gradient-prior term (PGM); the term is skipped without it.
    #[arg(long)]
    pub canny: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ResizeKind::Maxpool)]
    pub patch_resize: ResizeKind,
    #[arg(long, value_enum, default_value_t = HrfKind::Stub)]
    pub hrf: HrfKind,
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    /// One op name, or `all`.
    #[arg(long, default_value = "all")]
    pub op: String,
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Largest accepted normwise relative error.
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct ShapesArgs {
    #[arg(long, value_parser = ["tsr", "sfe", "ftr"])]
    pub role: Option<String>,
    /// Width fraction (overrides width_fraction).
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long)]
    pub blocks: Option<usize>,
    /// key=value model description; replaces --role.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchLkaArgs {
    /// Receptive field (overrides K).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Dilation (overrides d).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 64)]
    pub channels: usize,
    /// Timed repetitions; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
}

fn bits_parser(s: &str) -> std::result::Result<u8, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err("expected 8 or 16".into()),
    }
}

fn maxval(bits: u8) -> u16 {
    if bits == 16 {
        u16::MAX
    } else {
        255
    }
}

/// Runs the command line on `argv` (program name first), writing reports to
/// `out`. Returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                eprint!("{}", e.render());
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("inpaint: {e}");
            1
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Mpe(a) => cmd_mpe(a, &cfg, out),
        Command::Rasterize(a) => cmd_rasterize(a, out),
        Command::Enms(a) => cmd_enms(a, &cfg, out),
        Command::Upsample(a) => cmd_upsample(a, out),
        Command::SsuTrain(a) => cmd_ssu_train(a, &cfg, out),
        Command::MaskResize(a) => cmd_mask_resize(a, out),
        Command::Loss(a) => cmd_loss(a, &cfg, out),
        Command::GradCheck(a) => gradcheck::run(a, &cfg, out),
        Command::Shapes(a) => cmd_shapes(a, &cfg, out),
        Command::BenchLka(a) => cmd_bench_lka(a, &cfg, out),
    }
}

fn read_mask(path: &Path) -> Result<Tensor> {
    Ok(mask_from_gray(&read_pgm(path)?))
}

fn write_map(path: &Path, t: &Tensor, bits: u8) -> Result<()> {
    write_pgm(path, &gray_from_tensor(t, maxval(bits)))
}

fn cmd_mpe(a: &MpeArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let mask = read_mask(&a.mask)?;
    let (h, w) = (mask.shape()[0], mask.shape()[1]);
    let d = a.d.unwrap_or(cfg.mpe_d);
    let d_max = a.d_max.unwrap_or(cfg.d_max);
    let w_dir = match &a.w_dir {
        Some(p) => crate::io::read_zten(p)?,
        None => init::normal(&[4, d], 0.02, &mut init::rng(cfg.seed)),
    };
    let parts = mpe_parts(&mask, &w_dir, d, d_max)?;
    if let Some(p) = &a.out_dis {
        write_zten(p, &parts.distance)?;
    }
    if let Some(p) = &a.out_dis_pgm {
        let gray = Gray {
            width: w,
            height: h,
            maxval: u16::MAX,
            data: parts.distance.data().iter().map(|&v| v as u16).collect(),
        };
        write_pgm(p, &gray)?;
    }
    if let Some(p) = &a.out_edis {
        write_zten(p, &parts.e_dis)?;
    }
    if let Some(p) = &a.out_edir {
        write_zten(p, &parts.e_dir)?;
    }
    if let Some(p) = &a.out_labels {
        write_zten(p, &parts.directions.labels)?;
    }
    if let Some(p) = &a.out {
        let sum = parts.e_dis.add(&parts.e_dir)?;
        let th = a.target_h.unwrap_or(h);
        let tw = a.target_w.unwrap_or(w);
        write_zten(p, &resize(&sum, th, tw, ResizeMode::Nearest)?)?;
    }
    let masked = mask.sum() as usize;
    writeln!(out, "height,width,masked,max_distance,uncovered")?;
    writeln!(
        out,
        "{h},{w},{masked},{},{}",
        parts.distance.max_abs(),
        parts.directions.uncovered
    )?;
    Ok(())
}

fn cmd_rasterize(a: &RasterizeArgs, out: &mut dyn Write) -> Result<()> {
    let segs = read_segments(&a.segments)?;
    let map = rasterize_lines(&segs, a.height, a.width)?;
    write_map(&a.out, &map, a.bits)?;
    writeln!(out, "segments,{}", segs.len())?;
    Ok(())
}

fn cmd_enms(a: &EnmsArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let img = read_pgm(&a.input)?;
    let raw = img.to_tensor();
    let thin = edge_nms(&raw);
    let threshold = a.threshold.unwrap_or(cfg.enms_threshold);
    let result = if a.thin_only { thin.clone() } else { enms_fuse(&raw, &thin, threshold)? };
    write_pgm(&a.out, &gray_from_tensor(&result, img.maxval))?;
    let kept = thin.data().iter().filter(|&&v| v > 0.0).count();
    let support = raw.data().iter().filter(|&&v| v > 0.0).count();
    writeln!(out, "support,kept,threshold")?;
    writeln!(out, "{support},{kept},{threshold}")?;
    Ok(())
}

fn cmd_upsample(a: &UpsampleArgs, out: &mut dyn Write) -> Result<()> {
    let prior = read_pgm(&a.input)?.to_tensor();
    let (h, w) = (prior.shape()[0], prior.shape()[1]);
    let result = if (a.height, a.width) == (h, w) {
        prior
    } else {
        let dir = a.weights.as_ref().ok_or_else(|| {
            Error::invalid("upsample", "--weights is required when the target differs from the input")
        })?;
        let weights = SsuWeights::from_named(&load_params(dir)?)?;
        ssu_upsample(&prior, &weights, a.height, a.width)?
    };
    write_map(&a.out, &result, a.bits)?;
    writeln!(out, "height,width\n{},{}", a.height, a.width)?;
    Ok(())
}

fn cmd_ssu_train(a: &SsuTrainArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let mut rng = init::rng(cfg.seed);
    let corpus = synthetic_corpus(a.pairs, a.size, 2, &mut rng)?;
    let mut weights = SsuWeights::init(a.channels, &mut rng);
    let train = TrainConfig {
        epochs: a.epochs.unwrap_or(cfg.ssu_epochs),
        batch: a.batch,
        seed: cfg.seed,
        ..TrainConfig::default()
    }
    .with_step(a.step.unwrap_or(cfg.ssu_step));
    writeln!(out, "epoch,loss")?;
    let mut lines = Vec::new();
    ssu_train(&mut weights, &corpus, &train, |e, loss, _| lines.push(format!("{e},{loss:.6}")))?;
    for l in &lines {
        writeln!(out, "{l}")?;
    }
    save_params(&a.out, &weights.named())?;
    if a.eval > 0 {
        let held_out = synthetic_corpus(a.eval, a.size, 2, &mut rng)?;
        writeln!(out, "held_out_f1,{:.6}", evaluate_f1(&weights, &held_out)?)?;
    }
    Ok(())
}

fn cmd_mask_resize(a: &MaskResizeArgs, out: &mut dyn Write) -> Result<()> {
    let mask = read_mask(&a.mask)?;
    let small = resize_mask_for_patches(&mask, a.factor, a.mode.into())?;
    write_pgm(&a.out, &mask_to_gray(&small))?;
    writeln!(out, "masked_patches,{}", small.sum() as usize)?;
    Ok(())
}

fn cmd_loss(a: &LossArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let pred = read_ppm(&a.pred)?.to_tensor();
    let gt = read_ppm(&a.gt)?.to_tensor();
    let mask = read_mask(&a.mask)?;
    let [_, _, h, w] = gt.dims4();
    let disc = disc::StubDiscriminator::init(3, &mut init::rng(cfg.seed));
    let real = disc.forward(&gt)?;
    let fake = disc.forward(&pred)?;
    let patch_mask = resize_mask_for_patches(&mask, disc::PATCH, a.patch_resize.into())?;
    let (l_d, l_g) = adversarial_losses(&real, &fake, &patch_mask)?;
    let gp = gradient_penalty(|t, x| disc.record_score(t, x), &gt)?;
    let fm = feature_match(&real.features, &fake.features)?;
    let hrf = match a.hrf {
        HrfKind::Identity => hrf_loss(&IdentityExtractor, &gt, &pred)?,
        HrfKind::Stub => {
            let mut rng = init::rng(cfg.seed.wrapping_add(1));
            let stub = ConvExtractor {
                layers: vec![(init::conv_weight([8, 3, 3, 3], &mut rng), ConvSpec::same(3))],
            };
            hrf_loss(&stub, &gt, &pred)?
        }
    };
    let parts = LossParts {
        l1: masked_l1(&pred, &gt, &mask)?,
        l_d,
        l_g,
        gp,
        fm,
        hrf,
    };
    writeln!(out, "component,value")?;
    for (name, v) in parts.named() {
        writeln!(out, "{name},{v:.12e}")?;
    }
    writeln!(out, "total,{:.12e}", total_loss(&parts, &LossWeights::default())?)?;
    if let Some(p) = &a.canny {
        let canny = read_pgm(p)?.to_tensor();
        if canny.shape() != [h, w] {
            return Err(Error::invalid("loss", "canny map must match the image size"));
        }
        let g = gradient_prior_loss(&sobel_gradients(&pred), &sobel_gradients(&gt), &canny)?;
        writeln!(out, "gradient_prior,{g:.12e}")?;
    }
    Ok(())
}

fn model_spec(a: &ShapesArgs, cfg: &Config) -> Result<ModelSpec> {
    let mut spec = match (&a.spec, &a.role) {
        (Some(p), _) => ModelSpec::parse(&std::fs::read_to_string(p)?)?,
        (None, Some(r)) => ModelSpec::new(Role::parse(r)?)
            .width(a.width.unwrap_or(cfg.width_fraction))
            .size(a.size),
        (None, None) => return Err(Error::invalid("shapes", "give --role or --spec")),
    };
    if a.spec.is_none() {
        spec.k = cfg.k;
        spec.d = cfg.d;
    }
    if let Some(b) = a.blocks {
        spec = spec.blocks(b);
    }
    Ok(spec)
}

fn cmd_shapes(a: &ShapesArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let spec = model_spec(a, cfg)?;
    let schedule = assemble(&spec)?;
    writeln!(out, "stage,channels,height,width")?;
    for row in schedule.trace(spec.size, spec.size)? {
        writeln!(out, "{},{},{},{}", row.label, row.channels, row.h, row.w)?;
    }
    Ok(())
}

fn cmd_bench_lka(a: &BenchLkaArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let k = a.k.unwrap_or(cfg.k);
    let d = a.d.unwrap_or(cfg.d);
    let b = bench_lka(k, d, a.size, a.channels, a.reps, cfg.seed)?;
    writeln!(
        out,
        "K,d,size,channels,direct_macs,decomposed_macs,pointwise_macs,direct_secs,decomposed_secs,speedup"
    )?;
    writeln!(
        out,
        "{k},{d},{},{},{},{},{},{:.6},{:.6},{:.3}",
        a.size,
        a.channels,
        b.flops.direct,
        b.flops.decomposed,
        b.flops.pointwise,
        b.direct_secs,
        b.decomposed_secs,
        b.speedup()
    )?;
    Ok(())
}
