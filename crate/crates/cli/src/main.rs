use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use gazepred::config::RunConfig;
use gazepred::corpus::{load_corpus, write_predictions, Corpus, TARGET_NAMES};
use gazepred::diagnostics::gradcheck_suite;
use gazepred::digest::sha256_file;
use gazepred::evaluation::{
    correlations_csv, drop_one_subsets, each_single_subsets, evaluate_corpora, group_stats, group_stats_csv,
    run_ablation, scatter_csv, scatter_data, target_correlations, Subset,
};
use gazepred::features::{build_feature_matrix, FeatureMatrix, Lemmatizer, LexiconTagger, PosTagger, SidecarTagger};
use gazepred::model::{predict, ContextualEmbeddings, EmbeddingTable, LanguageInfo, LanguageSource};
use gazepred::training::{histories_csv, train};
use gazepred::{Bundle64, Error};

const PREDICTION_DECIMALS: usize = 4;

#[derive(Parser, Debug)]
#[command(name = "gazepred", version, about = "Token-level eye-tracking feature prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the engineered feature matrix of a corpus.
    Featurize {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Train a model bundle with early stopping on a held-out split.
    Train {
        #[arg(long, value_name = "CSV")]
        train: PathBuf,
        /// Bundle directory; also receives history.csv, val_metrics.csv and run_manifest.toml.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        language: LanguageArgs,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Predict all five targets for every token of a corpus.
    Predict {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        language: LanguageArgs,
    },
    /// Score predictions against gold targets.
    Evaluate {
        #[arg(long, value_name = "CSV")]
        predictions: PathBuf,
        #[arg(long, value_name = "CSV")]
        gold: PathBuf,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Retrain on feature subsets and report validation R2 per subset.
    Ablate {
        #[arg(long, value_name = "CSV")]
        train: PathBuf,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// One run per feature group on its own.
        #[arg(long, conflicts_with_all = ["drop_one", "subset"])]
        each_single: bool,
        /// One run per feature group, leaving that group out.
        #[arg(long, conflicts_with = "subset")]
        drop_one: bool,
        /// Custom subset as `name=feature,feature,...`; repeatable.
        #[arg(long, value_name = "SPEC")]
        subset: Vec<String>,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        language: LanguageArgs,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Target correlations, flag group means and feature/target scatter data.
    Stats {
        #[arg(long, value_name = "CSV")]
        train: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Finite-difference check of every layer and of the full model.
    Gradcheck {
        /// Add a check with a deliberately broken backward pass.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct TextArgs {
    /// CSV of `sentence_id,word_id,tag` replacing the built-in tagger.
    #[arg(long, value_name = "CSV")]
    pos_tags: Option<PathBuf>,
    /// CSV of `sentence_id,word_id,lemma` replacing the built-in lemmatizer.
    #[arg(long, value_name = "CSV")]
    lemmas: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct LanguageArgs {
    /// Word vectors in text format (`word v1 v2 ...`).
    #[arg(long, value_name = "FILE", conflicts_with = "contextual")]
    embeddings: Option<PathBuf>,
    /// Per-token vectors as CSV `sentence_id,word_id,v1,...`.
    #[arg(long, value_name = "CSV")]
    contextual: Option<PathBuf>,
    /// Match embedding vocabulary case-sensitively.
    #[arg(long)]
    no_case_fold: bool,
}

macro_rules! config_flags {
    ($($key:ident),* $(,)?) => {
        /// Configuration layers: defaults, then `--config`, then individual flags.
        #[derive(Args, Debug, Clone, Default)]
        struct ConfigFlags {
            /// Flat TOML file using the same key names as the flags.
            #[arg(long = "config", value_name = "FILE")]
            config_file: Option<PathBuf>,
            $(
                #[arg(long, value_name = "VALUE")]
                $key: Option<String>,
            )*
        }

        impl ConfigFlags {
            fn overrides(&self) -> Vec<(&'static str, Option<&str>)> {
                vec![$((stringify!($key), self.$key.as_deref())),*]
            }
        }
    };
}

config_flags!(
    batch_size,
    num_warm_up_steps,
    learning_rate,
    max_epochs,
    beta_1,
    beta_2,
    delta,
    early_stopping_patience,
    weight_decay,
    tfidf_error,
    validation_split_ratio,
    training_split_ratio,
    loss,
    seed,
    scaling,
    target_mode,
    bilstm_learning_rate,
    features,
    feature_dense,
    d_model,
    heads,
    ffn_ratio,
    lstm_hidden,
    head_hidden,
    dropout,
    activation,
    output_activation,
    fusion_mode,
);

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Gradcheck(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) => 1,
        Failure::Core(e) if e.is_numerical() => 3,
        Failure::Core(Error::Config(_)) => 1,
        Failure::Core(_) => 2,
        Failure::Gradcheck(_) => 3,
    }
}

fn scalar_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn flag_value(default: &Value, raw: &str) -> Value {
    match default {
        Value::String(_) => Value::String(raw.to_string()),
        Value::Array(_) if raw.trim().is_empty() => Value::Array(Vec::new()),
        Value::Array(_) => Value::Array(raw.split(',').map(|p| scalar_value(p.trim())).collect()),
        _ => scalar_value(raw),
    }
}

impl ConfigFlags {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut layers = Vec::new();
        if let Some(path) = &self.config_file {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            layers.push(RunConfig::parse_file_text(&text)?);
        }
        let defaults = RunConfig::defaults_table();
        let mut flags = Table::new();
        for (key, raw) in self.overrides() {
            if let Some(raw) = raw {
                let default = defaults.get(key).expect("every flag names a config key");
                flags.insert(key.to_string(), flag_value(default, raw));
            }
        }
        layers.push(flags);
        Ok(RunConfig::from_layers(&layers)?)
    }
}

fn tagger(text: &TextArgs) -> CliResult<Box<dyn PosTagger>> {
    Ok(match &text.pos_tags {
        Some(p) => Box::new(SidecarTagger::load(p)?),
        None => Box::new(LexiconTagger),
    })
}

fn lemmatizer(text: &TextArgs) -> CliResult<Lemmatizer> {
    Ok(match &text.lemmas {
        Some(p) => Lemmatizer::with_sidecar(p)?,
        None => Lemmatizer::rules(),
    })
}

fn featurize(corpus: &Corpus, text: &TextArgs, tfidf_error: f64) -> CliResult<FeatureMatrix> {
    let tagger = tagger(text)?;
    Ok(build_feature_matrix(
        corpus,
        tagger.as_ref(),
        &lemmatizer(text)?,
        tfidf_error,
    )?)
}

fn load_language(args: &LanguageArgs) -> CliResult<Option<(LanguageSource, LanguageInfo)>> {
    let case_fold = !args.no_case_fold;
    if let Some(path) = &args.embeddings {
        let table = EmbeddingTable::load(path, case_fold)?;
        let info = LanguageInfo {
            kind: "embeddings".into(),
            path: Some(path.display().to_string()),
            sha256: Some(sha256_file(path)?),
            dim: Some(table.dim()),
            case_fold: Some(case_fold),
        };
        return Ok(Some((LanguageSource::Embeddings(table), info)));
    }
    if let Some(path) = &args.contextual {
        let vectors = ContextualEmbeddings::load(path)?;
        let info = LanguageInfo {
            kind: "contextual".into(),
            path: Some(path.display().to_string()),
            sha256: Some(sha256_file(path)?),
            dim: Some(vectors.dim()),
            case_fold: None,
        };
        return Ok(Some((LanguageSource::Contextual(vectors), info)));
    }
    Ok(None)
}

/// Language inputs for prediction: explicit flags, else the files recorded in the bundle.
fn bundle_language(args: &LanguageArgs, recorded: &LanguageInfo) -> CliResult<Option<(LanguageSource, LanguageInfo)>> {
    if args.embeddings.is_some() || args.contextual.is_some() {
        return load_language(args);
    }
    let Some(path) = recorded.path.as_ref().map(PathBuf::from) else {
        return Ok(None);
    };
    let args = match recorded.kind.as_str() {
        "embeddings" => LanguageArgs {
            embeddings: Some(path.clone()),
            contextual: None,
            no_case_fold: recorded.case_fold == Some(false),
        },
        "contextual" => LanguageArgs {
            contextual: Some(path.clone()),
            ..LanguageArgs::default()
        },
        _ => return Ok(None),
    };
    let loaded = load_language(&args)?;
    if let Some((_, info)) = &loaded {
        if recorded.sha256.is_some() && info.sha256 != recorded.sha256 {
            return Err(Error::Validation(format!(
                "language file {} changed since training (sha256 mismatch)",
                path.display()
            ))
            .into());
        }
    }
    Ok(loaded)
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Validation(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Error::Validation(format!("{}: {e}", path.display())).into())
}

/// `out.csv` → `out.manifest.toml` next to it.
fn sibling_manifest(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.toml"))
}

struct RunManifest {
    table: Table,
    inputs: Table,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        let mut table = Table::new();
        table.insert("command".into(), Value::String(command.into()));
        table.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        Self {
            table,
            inputs: Table::new(),
        }
    }

    fn input(&mut self, name: &str, path: &Path) -> CliResult<()> {
        let mut entry = Table::new();
        entry.insert("path".into(), Value::String(path.display().to_string()));
        entry.insert("sha256".into(), Value::String(sha256_file(path)?));
        self.inputs.insert(name.into(), Value::Table(entry));
        Ok(())
    }

    fn text_inputs(&mut self, text: &TextArgs) -> CliResult<()> {
        if let Some(p) = &text.pos_tags {
            self.input("pos_tags", p)?;
        }
        if let Some(p) = &text.lemmas {
            self.input("lemmas", p)?;
        }
        Ok(())
    }

    fn language(&mut self, language: &Option<(LanguageSource, LanguageInfo)>) -> CliResult<()> {
        if let Some((_, info)) = language {
            let name = info.kind.clone();
            self.input(&name, Path::new(info.path.as_deref().unwrap_or_default()))?;
        }
        Ok(())
    }

    fn config(&mut self, cfg: &RunConfig) -> CliResult<()> {
        self.table.insert("seed".into(), Value::Integer(cfg.train.seed as i64));
        self.table.insert("config".into(), Value::Table(cfg.to_table()?));
        Ok(())
    }

    fn set(&mut self, key: &str, value: Value) {
        self.table.insert(key.into(), value);
    }

    fn save(mut self, path: &Path) -> CliResult<()> {
        self.table.insert("inputs".into(), Value::Table(self.inputs));
        let text = toml::to_string(&self.table).map_err(|e| Error::Serialize(e.to_string()))?;
        write(path, text.as_bytes())
    }
}

fn language_ref(language: &Option<(LanguageSource, LanguageInfo)>) -> Option<(&LanguageSource, LanguageInfo)> {
    language.as_ref().map(|(s, i)| (s, i.clone()))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Featurize {
            input,
            out,
            text,
            config,
        } => {
            let cfg = config.resolve()?;
            let corpus = load_corpus(&input, false)?;
            let features = featurize(&corpus, &text, cfg.train.tfidf_error)?;
            write(&out, &features.to_csv()?)?;
            let mut manifest = RunManifest::new("featurize");
            manifest.input("corpus", &input)?;
            manifest.text_inputs(&text)?;
            manifest.config(&cfg)?;
            manifest.set("manifest_hash", Value::String(features.manifest_hash()));
            manifest.save(&sibling_manifest(&out))?;
            eprintln!(
                "wrote {} rows x {} features to {}",
                features.num_rows(),
                features.width(),
                out.display()
            );
        }
        Command::Train {
            train: path,
            out,
            text,
            language,
            config,
        } => {
            let cfg = config.resolve()?;
            let corpus = load_corpus(&path, true)?;
            let features = featurize(&corpus, &text, cfg.train.tfidf_error)?;
            let language = load_language(&language)?;
            let outcome = train::<f64>(&corpus, &features, language_ref(&language), &cfg.train, &cfg.model)?;
            for w in &outcome.warnings {
                eprintln!("{w}");
            }
            outcome.bundle.save(&out)?;
            write(&out.join("history.csv"), &histories_csv(&outcome.histories)?)?;
            write(&out.join("val_metrics.csv"), &outcome.val_metrics.to_csv()?)?;
            let mut manifest = RunManifest::new("train");
            manifest.input("train", &path)?;
            manifest.text_inputs(&text)?;
            manifest.language(&language)?;
            manifest.config(&cfg)?;
            manifest.set(
                "manifest_hash",
                Value::String(outcome.bundle.manifest.manifest_hash.clone()),
            );
            manifest.save(&out.join("run_manifest.toml"))?;
            for h in &outcome.histories {
                eprintln!(
                    "model {}: best epoch {} of {} trained",
                    h.model, h.best_epoch, h.stopped_epoch
                );
            }
            eprintln!(
                "validation mean R2 {:.4} (std {:.4}); bundle written to {}",
                outcome.val_metrics.mean_r2,
                outcome.val_metrics.std_r2,
                out.display()
            );
        }
        Command::Predict {
            input,
            model,
            out,
            text,
            language,
        } => {
            let bundle = Bundle64::load(&model)?;
            let corpus = load_corpus(&input, false)?;
            let features = featurize(&corpus, &text, bundle.manifest.tfidf_error)?;
            let features = features.select(&bundle.manifest.feature_columns)?;
            let language = bundle_language(&language, &bundle.manifest.language)?;
            let preds = predict(&bundle, &corpus, &features, language.as_ref().map(|(s, _)| s))?;
            write_predictions(&out, &corpus, &preds, PREDICTION_DECIMALS)?;
            let mut manifest = RunManifest::new("predict");
            manifest.input("corpus", &input)?;
            for f in ["bundle.toml", "model.toml", "scalers.toml"] {
                manifest.input(&format!("model_{}", f.trim_end_matches(".toml")), &model.join(f))?;
            }
            manifest.text_inputs(&text)?;
            manifest.language(&language)?;
            manifest.save(&sibling_manifest(&out))?;
            eprintln!("wrote {} predictions to {}", preds.len(), out.display());
        }
        Command::Evaluate { predictions, gold, out } => {
            let pred = load_corpus(&predictions, true)?;
            let gold_corpus = load_corpus(&gold, true)?;
            let metrics = evaluate_corpora(&pred, &gold_corpus)?;
            let csv = metrics.to_csv()?;
            write(&out, &csv)?;
            let mut manifest = RunManifest::new("evaluate");
            manifest.input("predictions", &predictions)?;
            manifest.input("gold", &gold)?;
            manifest.save(&sibling_manifest(&out))?;
            print!("{}", String::from_utf8_lossy(&csv));
        }
        Command::Ablate {
            train: path,
            out,
            each_single,
            drop_one,
            subset,
            text,
            language,
            config,
        } => {
            let subsets = if each_single {
                each_single_subsets()
            } else if drop_one {
                drop_one_subsets()
            } else if !subset.is_empty() {
                subset.iter().map(|s| parse_subset(s)).collect::<CliResult<Vec<_>>>()?
            } else {
                return Err(Failure::Usage(
                    "pass --each-single, --drop-one or at least one --subset".into(),
                ));
            };
            let cfg = config.resolve()?;
            let corpus = load_corpus(&path, true)?;
            let features = featurize(&corpus, &text, cfg.train.tfidf_error)?;
            let language = load_language(&language)?;
            let report = run_ablation::<f64>(
                &corpus,
                &features,
                language_ref(&language),
                &cfg.train,
                &cfg.model,
                &subsets,
            )?;
            let csv = report.to_csv()?;
            write(&out, &csv)?;
            let mut manifest = RunManifest::new("ablate");
            manifest.input("train", &path)?;
            manifest.text_inputs(&text)?;
            manifest.language(&language)?;
            manifest.config(&cfg)?;
            manifest.set(
                "subsets",
                Value::Array(subsets.iter().map(|s| Value::String(s.name.clone())).collect()),
            );
            manifest.save(&sibling_manifest(&out))?;
            print!("{}", String::from_utf8_lossy(&csv));
        }
        Command::Stats {
            train: path,
            out_dir,
            text,
            config,
        } => {
            let cfg = config.resolve()?;
            let corpus = load_corpus(&path, true)?;
            let features = featurize(&corpus, &text, cfg.train.tfidf_error)?;
            write(
                &out_dir.join("correlations.csv"),
                &correlations_csv(&target_correlations(&corpus)?)?,
            )?;
            let mut groups = Vec::new();
            for flag in ["stopword", "endword", "number"] {
                for target in TARGET_NAMES {
                    groups.push(group_stats(&corpus, &features, flag, target)?);
                }
            }
            write(&out_dir.join("groupmeans.csv"), &group_stats_csv(&groups)?)?;
            for feature in ["word_len", "lem_word_len", "tfidf"] {
                for target in TARGET_NAMES {
                    let pairs = scatter_data(&corpus, &features, feature, target)?;
                    write(
                        &out_dir.join(format!("scatter_{feature}_{target}.csv")),
                        &scatter_csv(feature, target, &pairs)?,
                    )?;
                }
            }
            let mut manifest = RunManifest::new("stats");
            manifest.input("train", &path)?;
            manifest.text_inputs(&text)?;
            manifest.config(&cfg)?;
            manifest.set("correlation", Value::String("pearson".into()));
            manifest.save(&out_dir.join("run_manifest.toml"))?;
            eprintln!("statistics written to {}", out_dir.display());
        }
        Command::Gradcheck { inject_fault, out } => {
            let results = gradcheck_suite(inject_fault)?;
            let mut report = String::from("check,max_rel_error,threshold,worst,checked,status\n");
            for r in &results {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{status} {:<28} max_rel_error={:.3e} threshold={:.0e} worst={} entries={}",
                    r.report.name, r.report.max_rel_error, r.threshold, r.report.worst, r.report.checked
                );
                report.push_str(&format!(
                    "{},{:e},{:e},{},{},{status}\n",
                    r.report.name, r.report.max_rel_error, r.threshold, r.report.worst, r.report.checked
                ));
            }
            if let Some(out) = out {
                write(&out, report.as_bytes())?;
            }
            let failed = results.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(Failure::Gradcheck(failed));
            }
        }
    }
    Ok(())
}

fn parse_subset(spec: &str) -> CliResult<Subset> {
    let (name, cols) = spec
        .split_once('=')
        .ok_or_else(|| Failure::Usage(format!("subset `{spec}` must look like name=feature,feature")))?;
    let features: Vec<String> = cols
        .split(',')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if name.trim().is_empty() || features.is_empty() {
        return Err(Failure::Usage(format!(
            "subset `{spec}` needs a name and at least one feature"
        )));
    }
    Ok(Subset {
        name: name.trim().to_string(),
        features,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Gradcheck(n) => eprintln!("error: {n} gradient check(s) failed"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_config_key_has_a_flag() {
        let mut flags: Vec<&str> = ConfigFlags::default().overrides().into_iter().map(|(k, _)| k).collect();
        let mut keys: Vec<String> = RunConfig::defaults_table().keys().cloned().collect();
        flags.sort_unstable();
        keys.sort_unstable();
        assert_eq!(flags, keys);
    }

    #[test]
    fn flag_values_follow_default_types() {
        assert_eq!(flag_value(&Value::Integer(4), "8"), Value::Integer(8));
        assert_eq!(flag_value(&Value::Float(0.1), "3e-5"), Value::Float(3e-5));
        assert_eq!(
            flag_value(&Value::String("x".into()), "min_max"),
            Value::String("min_max".into())
        );
        assert_eq!(
            flag_value(&Value::Array(vec![]), "64,32"),
            Value::Array(vec![Value::Integer(64), Value::Integer(32)])
        );
        assert_eq!(
            flag_value(&Value::Array(vec![]), "word_len,tfidf"),
            Value::Array(vec![Value::String("word_len".into()), Value::String("tfidf".into())])
        );
        assert_eq!(flag_value(&Value::Array(vec![]), ""), Value::Array(vec![]));
    }

    #[test]
    fn cli_flags_beat_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        fs::write(&file, "batch_size = 16\nmax_epochs = 3\n").unwrap();
        let flags = ConfigFlags {
            config_file: Some(file),
            batch_size: Some("2".into()),
            ..ConfigFlags::default()
        };
        let cfg = flags.resolve().unwrap();
        assert_eq!(cfg.train.batch_size, 2);
        assert_eq!(cfg.train.max_epochs, 3);
        assert_eq!(cfg.train.learning_rate, 3e-5);
    }

    #[test]
    fn subset_specs() {
        let s = parse_subset("lengths=word_len,lem_word_len").unwrap();
        assert_eq!(s.name, "lengths");
        assert_eq!(s.features, vec!["word_len", "lem_word_len"]);
        assert!(parse_subset("nothing").is_err());
    }

    #[test]
    fn exit_codes_by_failure_class() {
        assert_eq!(exit_code(&Failure::Usage("x".into())), 1);
        assert_eq!(exit_code(&Failure::Core(Error::Validation("x".into()))), 2);
        assert_eq!(exit_code(&Failure::Core(Error::NonFinite("x".into()))), 3);
        assert_eq!(exit_code(&Failure::Core(Error::Config("x".into()))), 1);
    }
}
