//! The `ape` command line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::alignment::{emit_heatmap, extract_alignment, HeadAgg, HeatmapFormat, LayerSpec};
use crate::corpus::{
    load_triplets, read_lines, synth, CorpusHandle, RunConfig, SynthSpec, Task, Vocabulary,
};
use crate::decoding::{postedit, DecodeOptions, DEFAULT_ALPHA, DEFAULT_BEAM};
use crate::error::{Error, Result};
use crate::metrics::evaluate_corpus;
use crate::model::{load_checkpoint, peek_config, Model};
use crate::numerics::{Float, FloatWidth};
use crate::training::train;

#[derive(Debug, Parser)]
#[command(
    name = "ape",
    version,
    about = "Multi-source Transformer for automatic post-editing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model from a JSON run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Post-edit an mt file given its src file.
    Postedit {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        mt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BEAM)]
        beam: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Output length cap; defaults to 1.5·|mt| + 10 per sentence.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Score a hypothesis file against references (TER and BLEU as JSON).
    Eval {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Also print a plain-text table to stderr.
        #[arg(long)]
        table: bool,
    },
    /// Write src–mt attention heatmaps, one file per sentence.
    Align {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        mt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        /// `last`, `all-mean` or a layer index.
        #[arg(long, default_value = "last")]
        layer: String,
        /// `mean` or a head index.
        #[arg(long, default_value = "mean")]
        heads: String,
    },
    /// Generate a synthetic corpus (src.txt, mt.txt, pe.txt).
    Gen {
        #[arg(long)]
        task: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        min_len: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Build a shared vocabulary from text files.
    Vocab {
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32_000)]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        min_freq: usize,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train { config } => cmd_train(&config),
        Command::Postedit {
            model,
            src,
            mt,
            out,
            beam,
            alpha,
            max_len,
        } => {
            let opts = DecodeOptions {
                beam,
                alpha,
                max_len,
            };
            match peek_config(&model)?.float {
                FloatWidth::F32 => cmd_postedit::<f32>(&model, &src, &mt, &out, opts),
                FloatWidth::F64 => cmd_postedit::<f64>(&model, &src, &mt, &out, opts),
            }
        }
        Command::Eval {
            hyp,
            reference,
            table,
        } => {
            let report = evaluate_corpus(&hyp, &reference)?;
            println!("{}", report.to_json());
            if table {
                eprint!("{}", report.table());
            }
            Ok(())
        }
        Command::Align {
            model,
            src,
            mt,
            out,
            format,
            layer,
            heads,
        } => {
            let format: HeatmapFormat = format.parse()?;
            let spec = (layer.parse::<LayerSpec>()?, heads.parse::<HeadAgg>()?);
            match peek_config(&model)?.float {
                FloatWidth::F32 => cmd_align::<f32>(&model, &src, &mt, &out, format, spec),
                FloatWidth::F64 => cmd_align::<f64>(&model, &src, &mt, &out, format, spec),
            }
        }
        Command::Gen {
            task,
            n,
            seed,
            out,
            min_len,
            max_len,
        } => {
            let task: Task = task.parse()?;
            let spec = SynthSpec::new(task, n, seed).with_lengths(min_len, max_len);
            let written = synth::gen_synthetic(&spec, &out)?;
            log::info!(
                "wrote {} {task} triplets to {}",
                written.len(),
                out.display()
            );
            Ok(())
        }
        Command::Vocab {
            inputs,
            out,
            max_size,
            min_freq,
        } => {
            let v = Vocabulary::build_from_files(&inputs, max_size, min_freq)?;
            v.save(&out)?;
            log::info!("wrote {} entries to {}", v.len(), out.display());
            Ok(())
        }
    }
}

fn cmd_train(path: &Path) -> Result<()> {
    let cfg = RunConfig::load(path)?;
    let train_corpus = CorpusHandle::in_dir(&cfg.train_dir)?;
    let dev_corpus = CorpusHandle::in_dir(&cfg.dev_dir)?;
    let vocab = match &cfg.vocab {
        Some(p) => Vocabulary::load(p)?,
        None => train_corpus.build_vocab(cfg.max_vocab, cfg.min_freq)?,
    };
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    vocab.save(&cfg.out_dir.join("vocab.txt"))?;
    let train_set = load_triplets(&train_corpus, &vocab)?.triplets;
    let dev_set = load_triplets(&dev_corpus, &vocab)?.triplets;
    log::info!(
        "{} training / {} dev triplets, vocabulary {}",
        train_set.len(),
        dev_set.len(),
        vocab.len()
    );
    match cfg.float {
        FloatWidth::F32 => train_with::<f32>(&cfg, &vocab, &train_set, &dev_set),
        FloatWidth::F64 => train_with::<f64>(&cfg, &vocab, &train_set, &dev_set),
    }
}

fn train_with<T: Float>(
    cfg: &RunConfig,
    vocab: &Vocabulary,
    train_set: &[crate::training::Triplet],
    dev_set: &[crate::training::Triplet],
) -> Result<()> {
    let mut model = Model::<T>::new(cfg.model_config(vocab.len()), cfg.seed)?;
    let state = train(
        &mut model,
        Some(vocab),
        train_set,
        dev_set,
        &cfg.train_config(),
    )?;
    log::info!(
        "finished after {} steps; best dev loss {:.4} at step {}",
        state.step,
        state.best_dev_loss,
        state.best_step
    );
    Ok(())
}

type Lines = Vec<Vec<String>>;

fn sentence_pairs(src: &Path, mt: &Path) -> Result<(Lines, Lines)> {
    let (s, m) = (read_lines(src)?, read_lines(mt)?);
    if s.len() != m.len() {
        return Err(Error::Input(format!(
            "src file has {} lines, mt file has {}",
            s.len(),
            m.len()
        )));
    }
    Ok((s, m))
}

fn cmd_postedit<T: Float>(
    model: &Path,
    src: &Path,
    mt: &Path,
    out: &Path,
    opts: DecodeOptions,
) -> Result<()> {
    let (model, vocab) = load_checkpoint::<T>(model)?;
    let (srcs, mts) = sentence_pairs(src, mt)?;
    let mut text = String::new();
    let mut truncated = 0;
    for (s, m) in srcs.iter().zip(&mts) {
        if s.is_empty() || m.is_empty() {
            // Nothing to condition on: pass the mt line through.
            text.push_str(&m.join(" "));
        } else {
            let hyp = postedit(&model, &vocab.encode(s), &vocab.encode(m), opts)?;
            truncated += usize::from(hyp.truncated());
            text.push_str(&vocab.detokenize(hyp.tokens()));
        }
        text.push('\n');
    }
    if truncated > 0 {
        log::warn!("{truncated} outputs hit the length limit");
    }
    fs::write(out, text).map_err(|e| Error::io(out, e))
}

fn cmd_align<T: Float>(
    model: &Path,
    src: &Path,
    mt: &Path,
    out: &Path,
    format: HeatmapFormat,
    (layers, heads): (LayerSpec, HeadAgg),
) -> Result<()> {
    let (model, vocab) = load_checkpoint::<T>(model)?;
    let (srcs, mts) = sentence_pairs(src, mt)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (i, (s, m)) in srcs.iter().zip(&mts).enumerate() {
        if s.is_empty() || m.is_empty() {
            log::warn!("line {} has an empty side; no heatmap", i + 1);
            continue;
        }
        let map = extract_alignment(
            &model,
            Some(&vocab),
            &vocab.encode(s),
            &vocab.encode(m),
            layers,
            heads,
        )?;
        let path = out.join(format!("{:05}.{}", i + 1, format.extension()));
        emit_heatmap(&map, &path, format)?;
    }
    Ok(())
}
