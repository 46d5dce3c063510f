use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use memd_core::classifier::RankedGrid;
use memd_core::data::{
    build_vocabulary, load_corpus, load_dense_csv, load_sparse_with_dim, load_stopwords, Vocabulary,
};
use memd_core::harness::{choose_k, csv_field, KSelection};
use memd_core::{
    cross_validate, DataSource, Dataset, ErrorKind, ExperimentConfig, FeatureFunctionSpec,
    FitOptions, MemdError, Method, NaiveBayesModel, Result, SupportSpec,
};

#[derive(Parser)]
#[command(
    name = "memd",
    version,
    about = "Maximum-entropy feature selection and naive Bayes"
)]
struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a classifier and write it as a model file.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Model file to write; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank every feature and print `feature_id,score,rank`.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify instances with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// K-fold cross-validation report.
    Cv {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Keep class proportions equal across folds.
        #[arg(long)]
        stratified: bool,
        /// Add per-fold wall-clock times (makes the report non-reproducible).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Minimum corpus frequency of a vocabulary word.
    #[arg(long, default_value_t = 2)]
    gamma: usize,
    /// One stop word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Js)]
    method: MethodArg,
    /// 1: mean only; 2: mean and second moment.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    orders: u8,
    #[arg(long, value_enum, default_value_t = SupportArg::Halfline)]
    support: SupportArg,
    /// Number of features to keep, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_k)]
    k: KSelection,
    #[arg(long, default_value_t = memd_core::maxent::DEFAULT_SMOOTHING)]
    smoothing: f64,
    #[arg(long, default_value_t = memd_core::maxent::DEFAULT_VARIANCE_FLOOR)]
    variance_floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Sparse,
    Corpus,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    J,
    Js,
}

#[derive(Clone, Copy, ValueEnum)]
enum SupportArg {
    Halfline,
    Real,
    Unit,
}

fn parse_k(s: &str) -> std::result::Result<KSelection, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(KSelection::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("K must be at least 1".into()),
        Ok(k) => Ok(KSelection::Fixed(k)),
        Err(_) => Err(format!("expected a positive integer or `auto`, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Parse => 2,
                ErrorKind::Config => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit { input, model, out } => {
            let config = experiment_config(&input, &model)?;
            let source = load_source(&input)?;
            let (train, vocabulary) = to_table(&source, &config)?;
            let k = match config.k {
                KSelection::Fixed(k) => k,
                KSelection::Auto => {
                    let k = choose_k(&train, &config, config.seed)?;
                    info!("chose K = {k}");
                    k
                }
            };
            let mut fitted = memd_core::fit(&train, &config.classifier(Some(k)))?;
            if let Some(words) = vocabulary {
                fitted = fitted.with_vocabulary(words)?;
            }
            emit(out.as_deref(), &(fitted.to_json()? + "\n"))
        }
        Command::Rank { input, model, out } => {
            let config = experiment_config(&input, &model)?;
            let source = load_source(&input)?;
            let (table, _) = to_table(&source, &config)?;
            let ranked = RankedGrid::fit(&table, &config.classifier(None))?;
            let mut text = String::from("feature_id,score,rank\n");
            for (rank, &i) in ranked.ranking.order.iter().enumerate() {
                let name = csv_field(&table.feature_names()[i]);
                text.push_str(&format!(
                    "{name},{},{}\n",
                    ranked.ranking.scores[i],
                    rank + 1
                ));
            }
            emit(out.as_deref(), &text)
        }
        Command::Predict { model, input, out } => {
            let model = NaiveBayesModel::load(&model)?;
            let data = prediction_table(&model, &input)?;
            let mut text = String::from("instance_id,predicted_label");
            for name in model.labels().names() {
                text.push_str(&format!(",{}", csv_field(&format!("log_posterior_{name}"))));
            }
            text.push('\n');
            for (i, row) in data.rows().iter().enumerate() {
                let label = model.labels().name(model.predict(row));
                text.push_str(&format!("{i},{}", csv_field(label)));
                for score in model.log_posterior(row) {
                    text.push_str(&format!(",{score}"));
                }
                text.push('\n');
            }
            emit(out.as_deref(), &text)
        }
        Command::Cv {
            input,
            model,
            folds,
            stratified,
            timings,
            out,
        } => {
            let mut config = experiment_config(&input, &model)?;
            config.folds = folds;
            config.stratified = stratified;
            config.validate()?;
            let source = load_source(&input)?;
            let report = cross_validate(&source, &config)?;
            info!("mean accuracy {}", report.mean_accuracy);
            emit(out.as_deref(), &report.render(&config, timings))
        }
    }
}

fn experiment_config(input: &InputArgs, model: &ModelArgs) -> Result<ExperimentConfig> {
    let stopwords = match &input.stopwords {
        Some(path) => load_stopwords(path)?,
        None => Default::default(),
    };
    let config = ExperimentConfig {
        method: match model.method {
            MethodArg::J => Method::MeMdJ,
            MethodArg::Js => Method::MeMdJs,
        },
        spec: if model.orders == 1 {
            FeatureFunctionSpec::mean()
        } else {
            FeatureFunctionSpec::mean_and_second()
        },
        support: match model.support {
            SupportArg::Halfline => SupportSpec::HalfLineNonNegative,
            SupportArg::Real => SupportSpec::RealLine,
            SupportArg::Unit => SupportSpec::UNIT,
        },
        fit: FitOptions {
            smoothing: model.smoothing,
            variance_floor: model.variance_floor,
            ..FitOptions::default()
        },
        gamma: input.gamma,
        stopwords,
        k: model.k,
        seed: model.seed,
        ..ExperimentConfig::default()
    };
    if !(config.fit.smoothing >= 0.0 && config.fit.smoothing.is_finite()) {
        return Err(MemdError::InvalidConfig(
            "smoothing must be a finite value >= 0".into(),
        ));
    }
    if !(config.fit.variance_floor > 0.0 && config.fit.variance_floor.is_finite()) {
        return Err(MemdError::InvalidConfig(
            "variance floor must be positive".into(),
        ));
    }
    config.support.validate(&config.spec)?;
    Ok(config)
}

fn load_source(input: &InputArgs) -> Result<DataSource> {
    Ok(match input.format {
        Format::Csv => DataSource::Table(load_dense_csv(&input.data)?),
        Format::Sparse => DataSource::Table(load_sparse_with_dim(&input.data, 0)?),
        Format::Corpus => DataSource::Corpus(load_corpus(&input.data)?),
    })
}

/// The whole source as one table, plus the vocabulary for a corpus.
fn to_table(
    source: &DataSource,
    config: &ExperimentConfig,
) -> Result<(Dataset, Option<Vec<String>>)> {
    match source {
        DataSource::Table(d) => Ok((d.clone(), None)),
        DataSource::Corpus(c) => {
            let vocab = build_vocabulary(&c.docs, &config.stopwords, config.gamma)?;
            let (table, flagged) = c.vectorize(&vocab)?;
            if flagged > 0 {
                warn!("{flagged} documents contain no vocabulary word");
            }
            Ok((table, Some(vocab.words().to_vec())))
        }
    }
}

fn prediction_table(model: &NaiveBayesModel, input: &InputArgs) -> Result<Dataset> {
    let data = match (input.format, model.vocabulary()) {
        (Format::Corpus, Some(words)) => {
            let vocab = Vocabulary::from_words(words.to_vec())?;
            load_corpus(&input.data)?.vectorize(&vocab)?.0
        }
        (Format::Corpus, None) => {
            return Err(MemdError::InvalidConfig(
                "model was not trained on a corpus; it has no vocabulary".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(MemdError::InvalidConfig(
                "model was trained on a corpus; use --format corpus".into(),
            ))
        }
        (Format::Sparse, None) => load_sparse_with_dim(&input.data, model.dim())?,
        (Format::Csv, None) => load_dense_csv(&input.data)?,
    };
    if data.dim() != model.dim() {
        let message = format!(
            "data has {} features, model expects {}",
            data.dim(),
            model.dim()
        );
        if matches!(input.format, Format::Csv) {
            return Err(MemdError::InvalidConfig(message));
        }
        warn!("{message}; extra features are ignored");
    }
    Ok(data)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
