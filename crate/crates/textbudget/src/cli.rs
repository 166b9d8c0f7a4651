//! Command-line interface.
//!
//! Exit codes: 0 success, 1 configuration error (bad flags, unusable
//! settings), 2 data or contract error. Every run logs its resolved
//! configuration to stderr. A `--config FILE` of `key=value` lines overrides
//! the corresponding flags (keys are the long flag names without `--`;
//! multi-value keys such as `selectors` take comma-separated values).

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{
    aggregate, train_dag, write_aggregated, Level, SelectorSuite, SuiteEntry,
};
use crate::bench::{evaluate, tradeoff_curve, Filter};
use crate::classifier::{load_model, save_model, Arch, ClassifierModel, TrainConfig};
use crate::corpus::{
    build_vocab, encode_corpus, gen_synthetic, load_embeddings, read_dataset, synthetic_vocab,
    tokenize_raw, write_dataset, EmbeddingTable, LabeledCorpus, SyntheticSpec, Vocabulary,
};
use crate::error::{Error, Result};
use crate::selector::we::{joint_train, JointConfig, WeSelector};
use crate::selector::{bow, AnySelector};

const USAGE: &str = "\
usage: textbudget <command> [flags] [--config FILE]

commands:
  train-bow  --data F (--budget B | --target-rate R) --out F
             [--min-freq N] [--tol T] [--b-lo X] [--b-hi Y] [--max-iters N] [--seed S]
  train-we   --data F --emb F --lambda1 X --lambda2 Y --out-selector F --out-classifier F
             [--arch boe|rnn] [--hidden H] [--epochs N] [--lr-c X] [--lr-s X]
             [--samples N] [--seed S] [--emb-seed S] [--min-freq N]
  aggregate  --data F --selectors F... --level word|phrase|sentence --out F
             [--emb F] [--emb-seed S] [--min-freq N]
  train-dag  --aggregated F --arch boe|rnn --epochs N --seed S --out F
             [--emb F] [--emb-seed S] [--dim D] [--hidden H] [--lr X]
             [--batch-size N] [--min-freq N]
  eval       --model F --data F --report F [--selector F] [--stopwords F]
             [--emb F] [--emb-seed S] [--repeats N]
  curve      --model F --selectors F... --data F --out F
             [--emb F] [--emb-seed S] [--repeats N] [--level L]
  gradcheck  --seed S
  synth      --spec F --seed S --out F [--keywords-out F]
";

type ArgMap = BTreeMap<String, Vec<String>>;

/// Run the CLI against an argument vector (without the program name).
pub fn run_cli(argv: &[String]) -> i32 {
    let (command, args) = match parse_argv(argv) {
        Ok(parsed) => parsed,
        Err(message) => {
            eprintln!("{}", message);
            eprint!("{}", USAGE);
            return 1;
        }
    };
    let args = match apply_config_file(args) {
        Ok(args) => args,
        Err(err) => {
            eprintln!("textbudget: {}", err);
            return err.exit_code();
        }
    };
    log_invocation(&command, &args);
    let result = match command.as_str() {
        "train-bow" => cmd_train_bow(&args),
        "train-we" => cmd_train_we(&args),
        "aggregate" => cmd_aggregate(&args),
        "train-dag" => cmd_train_dag(&args),
        "eval" => cmd_eval(&args),
        "curve" => cmd_curve(&args),
        "gradcheck" => cmd_gradcheck(&args),
        "synth" => cmd_synth(&args),
        _ => {
            eprintln!("textbudget: unknown command {:?}", command);
            eprint!("{}", USAGE);
            return 1;
        }
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("textbudget: {}", err);
            err.exit_code()
        }
    }
}

fn parse_argv(argv: &[String]) -> std::result::Result<(String, ArgMap), String> {
    let mut iter = argv.iter().peekable();
    let command = iter
        .next()
        .ok_or_else(|| "textbudget: missing command".to_string())?
        .clone();
    if command.starts_with("--") {
        return Err(format!(
            "textbudget: expected a command, found {:?}",
            command
        ));
    }
    let mut args: ArgMap = BTreeMap::new();
    while let Some(arg) = iter.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(format!("textbudget: unexpected argument {:?}", arg));
        };
        if key.is_empty() {
            return Err("textbudget: empty flag".into());
        }
        let mut values = Vec::new();
        while let Some(next) = iter.peek() {
            if next.starts_with("--") {
                break;
            }
            values.push(iter.next().unwrap().clone());
        }
        if values.is_empty() {
            return Err(format!("textbudget: flag --{} needs a value", key));
        }
        args.entry(key.to_string()).or_default().extend(values);
    }
    Ok((command, args))
}

/// Entries of a `--config` file replace the flag values of the same name.
fn apply_config_file(mut args: ArgMap) -> Result<ArgMap> {
    let Some(paths) = args.remove("config") else {
        return Ok(args);
    };
    for path in paths {
        let content = std::fs::read_to_string(&path)?;
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value", path, lineno + 1))
            })?;
            let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
            args.insert(key.trim().to_string(), values);
        }
    }
    Ok(args)
}

fn log_invocation(command: &str, args: &ArgMap) {
    let rendered: Vec<String> = args
        .iter()
        .map(|(k, v)| format!("{}={}", k, v.join(",")))
        .collect();
    eprintln!("[textbudget] {} {}", command, rendered.join(" "));
}

fn req_str(args: &ArgMap, key: &str) -> Result<String> {
    args.get(key)
        .and_then(|v| v.last())
        .cloned()
        .ok_or_else(|| Error::Config(format!("missing required flag --{}", key)))
}

fn req_multi(args: &ArgMap, key: &str) -> Result<Vec<String>> {
    args.get(key)
        .cloned()
        .ok_or_else(|| Error::Config(format!("missing required flag --{}", key)))
}

fn opt_str(args: &ArgMap, key: &str) -> Option<String> {
    args.get(key).and_then(|v| v.last()).cloned()
}

fn opt_parse<T: std::str::FromStr>(args: &ArgMap, key: &str, default: T) -> Result<T> {
    match opt_str(args, key) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| Error::Config(format!("bad value {:?} for --{}", raw, key))),
    }
}

fn req_parse<T: std::str::FromStr>(args: &ArgMap, key: &str) -> Result<T> {
    let raw = req_str(args, key)?;
    raw.parse()
        .map_err(|_| Error::Config(format!("bad value {:?} for --{}", raw, key)))
}

fn reject_unknown(args: &ArgMap, known: &[&str]) -> Result<()> {
    for key in args.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown flag --{}", key)));
        }
    }
    Ok(())
}

fn load_corpus_with_vocab(path: &str, min_freq: usize) -> Result<(LabeledCorpus, Vocabulary)> {
    let raw = read_dataset(Path::new(path))?;
    if raw.is_empty() {
        return Err(Error::Format(format!("dataset {} is empty", path)));
    }
    let token_docs: Vec<Vec<String>> = raw.iter().map(|r| tokenize_raw(r).0).collect();
    let vocab = build_vocab(&token_docs, min_freq)?;
    let corpus = encode_corpus(&raw, &vocab)?;
    Ok((corpus, vocab))
}

fn load_corpus_against(path: &str, vocab: &Vocabulary) -> Result<LabeledCorpus> {
    let raw = read_dataset(Path::new(path))?;
    if raw.is_empty() {
        return Err(Error::Format(format!("dataset {} is empty", path)));
    }
    encode_corpus(&raw, vocab)
}

fn seeded_table(vocab_len: usize, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let rows = (0..vocab_len)
        .map(|_| (0..dim).map(|_| rng.random_range(-bound..=bound)).collect())
        .collect();
    EmbeddingTable::new(rows, dim)
}

fn tag_for(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

fn load_suite(paths: &[String], vocab: &Vocabulary, level: Level) -> Result<(SelectorSuite, bool)> {
    let mut entries = Vec::with_capacity(paths.len());
    let mut needs_embeddings = false;
    for path in paths {
        let selector = AnySelector::load(Path::new(path), vocab)?;
        if matches!(selector, AnySelector::We(_)) {
            needs_embeddings = true;
        }
        entries.push(SuiteEntry {
            selector,
            tag: tag_for(path),
        });
    }
    Ok((SelectorSuite::new(entries, level)?, needs_embeddings))
}

fn cmd_train_bow(args: &ArgMap) -> Result<()> {
    reject_unknown(
        args,
        &[
            "data",
            "budget",
            "target-rate",
            "out",
            "min-freq",
            "tol",
            "b-lo",
            "b-hi",
            "max-iters",
            "seed",
        ],
    )?;
    let data = req_str(args, "data")?;
    let out = req_str(args, "out")?;
    let min_freq = opt_parse(args, "min-freq", 1usize)?;
    let solver = bow::SolverConfig {
        max_iters: opt_parse(args, "max-iters", 2000usize)?,
        tol: 1e-8,
        seed: opt_parse(args, "seed", 0u64)?,
    };
    let (corpus, vocab) = load_corpus_with_vocab(&data, min_freq)?;

    let budget = opt_str(args, "budget");
    let target = opt_str(args, "target-rate");
    let selector = match (budget, target) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "--budget and --target-rate are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "one of --budget or --target-rate is required".into(),
            ))
        }
        (Some(_), None) => {
            let b: f64 = req_parse(args, "budget")?;
            let selector = bow::BowSelector::fit(&corpus, b, &solver)?;
            println!(
                "trained bag-of-words selector: budget {} selection_rate {:.4}",
                b,
                selector.trained_selection_rate.unwrap_or(f64::NAN)
            );
            selector
        }
        (None, Some(_)) => {
            let target: f64 = req_parse(args, "target-rate")?;
            let tol = opt_parse(args, "tol", 0.05f64)?;
            let lo = opt_parse(args, "b-lo", 1e-3f64)?;
            let hi = opt_parse(args, "b-hi", 1e3f64)?;
            let outcome = bow::tune_budget(&corpus, target, tol, (lo, hi), &solver)?;
            println!(
                "tuned budget {:.6}: achieved_rate {:.4} (target {}, reached: {}, monotonicity violations: {})",
                outcome.budget,
                outcome.achieved_rate,
                target,
                outcome.reached_target,
                outcome.monotonicity_violations
            );
            outcome.selector
        }
    };
    selector.save(Path::new(&out), &vocab)?;
    println!("wrote {}", out);
    Ok(())
}

fn cmd_train_we(args: &ArgMap) -> Result<()> {
    reject_unknown(
        args,
        &[
            "data",
            "emb",
            "lambda1",
            "lambda2",
            "out-selector",
            "out-classifier",
            "arch",
            "hidden",
            "epochs",
            "lr-c",
            "lr-s",
            "samples",
            "seed",
            "emb-seed",
            "min-freq",
        ],
    )?;
    let data = req_str(args, "data")?;
    let emb = req_str(args, "emb")?;
    let lambda1: f64 = req_parse(args, "lambda1")?;
    let lambda2: f64 = req_parse(args, "lambda2")?;
    let out_selector = req_str(args, "out-selector")?;
    let out_classifier = req_str(args, "out-classifier")?;
    let min_freq = opt_parse(args, "min-freq", 1usize)?;
    let seed = opt_parse(args, "seed", 0u64)?;
    let emb_seed = opt_parse(args, "emb-seed", 0u64)?;

    let (corpus, vocab) = load_corpus_with_vocab(&data, min_freq)?;
    let table = load_embeddings(Path::new(&emb), &vocab, emb_seed)?;
    let arch: Arch = opt_parse(args, "arch", "boe".to_string())?.parse()?;
    let hidden = opt_parse(args, "hidden", 16usize)?;
    let model = ClassifierModel::new(arch, &table, hidden, corpus.num_classes, seed)?;
    let cfg = JointConfig {
        lambda1,
        lambda2,
        lr_classifier: opt_parse(args, "lr-c", 0.1f64)?,
        lr_selector: opt_parse(args, "lr-s", 0.01f64)?,
        epochs: opt_parse(args, "epochs", 5usize)?,
        samples_per_doc: opt_parse(args, "samples", 1usize)?,
        seed,
    };
    let selector = WeSelector::new(table.dim(), lambda1, lambda2);
    let (model, selector, trace) = joint_train(model, selector, &corpus, &table, &cfg)?;
    if let Some(last) = trace.last() {
        println!(
            "joint training done: mean objective {:.4}, sampled selection rate {:.4}",
            last.mean_objective, last.mean_selection_rate
        );
    }
    selector.save(Path::new(&out_selector))?;
    save_model(Path::new(&out_classifier), &model, &vocab)?;
    println!("wrote {} and {}", out_selector, out_classifier);
    Ok(())
}

fn cmd_aggregate(args: &ArgMap) -> Result<()> {
    reject_unknown(
        args,
        &[
            "data",
            "selectors",
            "level",
            "out",
            "emb",
            "emb-seed",
            "min-freq",
        ],
    )?;
    let data = req_str(args, "data")?;
    let selector_paths = req_multi(args, "selectors")?;
    let level: Level = req_parse(args, "level")?;
    let out = req_str(args, "out")?;
    let min_freq = opt_parse(args, "min-freq", 1usize)?;

    let (corpus, vocab) = load_corpus_with_vocab(&data, min_freq)?;
    let (suite, needs_embeddings) = load_suite(&selector_paths, &vocab, level)?;
    let table = match (needs_embeddings, opt_str(args, "emb")) {
        (true, None) => {
            return Err(Error::Config(
                "a word-embedding selector in the suite requires --emb".into(),
            ))
        }
        (_, Some(path)) => Some(load_embeddings(
            Path::new(&path),
            &vocab,
            opt_parse(args, "emb-seed", 0u64)?,
        )?),
        (false, None) => None,
    };
    let aggregated = aggregate(&corpus, &suite, table.as_ref())?;
    write_aggregated(Path::new(&out), &aggregated, &vocab)?;
    println!(
        "aggregated {} documents x ({} selectors + 1) = {} instances -> {}",
        corpus.len(),
        suite.len(),
        aggregated.len(),
        out
    );
    Ok(())
}

fn cmd_train_dag(args: &ArgMap) -> Result<()> {
    reject_unknown(
        args,
        &[
            "aggregated",
            "arch",
            "epochs",
            "seed",
            "out",
            "emb",
            "emb-seed",
            "dim",
            "hidden",
            "lr",
            "batch-size",
            "min-freq",
        ],
    )?;
    let aggregated_path = req_str(args, "aggregated")?;
    let arch: Arch = req_parse(args, "arch")?;
    let epochs = req_parse(args, "epochs")?;
    let seed = req_parse(args, "seed")?;
    let out = req_str(args, "out")?;
    let min_freq = opt_parse(args, "min-freq", 1usize)?;

    let (corpus, vocab) = load_corpus_with_vocab(&aggregated_path, min_freq)?;
    let table = match opt_str(args, "emb") {
        Some(path) => {
            load_embeddings(Path::new(&path), &vocab, opt_parse(args, "emb-seed", 0u64)?)?
        }
        None => seeded_table(vocab.len(), opt_parse(args, "dim", 16usize)?, seed)?,
    };
    let hidden = opt_parse(args, "hidden", 16usize)?;
    let model = ClassifierModel::new(arch, &table, hidden, corpus.num_classes, seed)?;
    let cfg = TrainConfig {
        learning_rate: opt_parse(args, "lr", 0.1f64)?,
        epochs,
        batch_size: opt_parse(args, "batch-size", 16usize)?,
        seed,
        gradient_clip: None,
    };
    // The aggregated file is already the multiset; train directly over it.
    let aggregated = crate::aggregation::AggregatedCorpus {
        instances: corpus
            .documents
            .iter()
            .map(|d| crate::aggregation::AggregatedInstance {
                document: d.clone(),
                origin: crate::aggregation::Origin::Original,
            })
            .collect(),
        num_classes: corpus.num_classes,
        task: corpus.task,
    };
    let model = train_dag(model, &aggregated, &cfg)?;
    save_model(Path::new(&out), &model, &vocab)?;
    println!(
        "trained {} classifier on {} instances -> {}",
        arch_name(arch),
        corpus.len(),
        out
    );
    Ok(())
}

fn arch_name(arch: Arch) -> &'static str {
    match arch {
        Arch::BagOfEmbeddings => "bag-of-embeddings",
        Arch::SimpleRecurrent => "simple-recurrent",
    }
}

fn load_stopwords(path: &str, vocab: &Vocabulary) -> Result<HashSet<u32>> {
    let content = std::fs::read_to_string(path)?;
    let tokens: HashSet<String> = content
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect();
    Ok(vocab.id_set(&tokens))
}

fn cmd_eval(args: &ArgMap) -> Result<()> {
    reject_unknown(
        args,
        &[
            "model",
            "data",
            "report",
            "selector",
            "stopwords",
            "emb",
            "emb-seed",
            "repeats",
        ],
    )?;
    let model_path = req_str(args, "model")?;
    let data = req_str(args, "data")?;
    let report_path = req_str(args, "report")?;
    let repeats = opt_parse(args, "repeats", 3usize)?;

    let (model, vocab) = load_model(Path::new(&model_path))?;
    let corpus = load_corpus_against(&data, &vocab)?;

    let selector = match opt_str(args, "selector") {
        Some(path) => Some(AnySelector::load(Path::new(&path), &vocab)?),
        None => None,
    };
    let stopwords = match opt_str(args, "stopwords") {
        Some(path) => Some(load_stopwords(&path, &vocab)?),
        None => None,
    };
    if selector.is_some() && stopwords.is_some() {
        return Err(Error::Config(
            "--selector and --stopwords are mutually exclusive".into(),
        ));
    }
    let table = match opt_str(args, "emb") {
        Some(path) => Some(load_embeddings(
            Path::new(&path),
            &vocab,
            opt_parse(args, "emb-seed", 0u64)?,
        )?),
        None => None,
    };
    if matches!(selector, Some(AnySelector::We(_))) && table.is_none() {
        return Err(Error::Config(
            "a word-embedding selector requires --emb".into(),
        ));
    }

    let (filter, tag) = match (&selector, &stopwords) {
        (Some(s), None) => (
            Filter::Selector(s),
            tag_for(&opt_str(args, "selector").unwrap()),
        ),
        (None, Some(stop)) => (Filter::Stopwords(stop), "stopwords".to_string()),
        _ => (Filter::None, "baseline".to_string()),
    };
    let report = evaluate(&model, filter, &corpus, table.as_ref(), &tag, repeats, None)?;
    std::fs::write(
        Path::new(&report_path),
        serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "{}: accuracy {:.4} selection_rate {:.4} total_time_s {:.6}",
        report.budget_tag, report.accuracy, report.selection_rate, report.total_time_s
    );
    println!("wrote {}", report_path);
    Ok(())
}

fn cmd_curve(args: &ArgMap) -> Result<()> {
    reject_unknown(
        args,
        &[
            "model",
            "selectors",
            "data",
            "out",
            "emb",
            "emb-seed",
            "repeats",
            "level",
        ],
    )?;
    let model_path = req_str(args, "model")?;
    let selector_paths = req_multi(args, "selectors")?;
    let data = req_str(args, "data")?;
    let out = req_str(args, "out")?;
    let repeats = opt_parse(args, "repeats", 3usize)?;
    let level: Level = opt_parse(args, "level", "word".to_string())?.parse()?;

    let (model, vocab) = load_model(Path::new(&model_path))?;
    let corpus = load_corpus_against(&data, &vocab)?;
    let (suite, needs_embeddings) = load_suite(&selector_paths, &vocab, level)?;
    let table = match (needs_embeddings, opt_str(args, "emb")) {
        (true, None) => {
            return Err(Error::Config(
                "a word-embedding selector in the suite requires --emb".into(),
            ))
        }
        (_, Some(path)) => Some(load_embeddings(
            Path::new(&path),
            &vocab,
            opt_parse(args, "emb-seed", 0u64)?,
        )?),
        (false, None) => None,
    };

    let baseline = evaluate(
        &model,
        Filter::None,
        &corpus,
        table.as_ref(),
        "baseline",
        repeats,
        None,
    )?;
    let curve = tradeoff_curve(&model, &suite, &corpus, table.as_ref(), baseline, repeats)?;
    std::fs::write(Path::new(&out), curve.to_csv()?)?;
    println!("wrote {} ({} rows)", out, curve.reports.len());
    Ok(())
}

fn cmd_gradcheck(args: &ArgMap) -> Result<()> {
    reject_unknown(args, &["seed"])?;
    let seed = opt_parse(args, "seed", 0u64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let table = seeded_table(10, 4, rng.random())?;
    // scale rows up so gradients are well away from zero
    let rows: Vec<Vec<f64>> = table
        .rows()
        .iter()
        .map(|r| r.iter().map(|v| v * 8.0).collect())
        .collect();
    let table = EmbeddingTable::new(rows, 4)?;
    let tokens: Vec<u32> = (0..6).map(|_| rng.random_range(0..10)).collect();
    let mut worst: f64 = 0.0;

    for arch in [Arch::BagOfEmbeddings, Arch::SimpleRecurrent] {
        let mut model = ClassifierModel::new(arch, &table, 5, 3, rng.random())?;
        // keep every parameter well away from the tiny init range; a
        // coordinate with a near-zero gradient loses digits to central
        // differences and would report a spurious error
        for w in model
            .w_hidden
            .data
            .iter_mut()
            .chain(&mut model.b_hidden)
            .chain(&mut model.w_out.data)
            .chain(&mut model.b_out)
        {
            *w *= 6.0;
        }
        let err = model.grad_check(&tokens, crate::corpus::Label::Class(1), 1e-5)?;
        println!("{}: max relative error {:.3e}", arch_name(arch), err);
        worst = worst.max(err);
    }

    // gate selector log-likelihood gradient against central differences
    let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let selector = WeSelector {
        theta: theta.clone(),
        lambda1: 0.0,
        lambda2: 0.0,
        threshold: 0.5,
    };
    let doc = crate::corpus::Document::new(tokens.clone(), crate::corpus::Label::Class(0));
    let probs = selector.gate_probs(&doc, &table)?;
    let mask = crate::selector::we::threshold_mask(&probs, 0.5);
    let analytic = selector.logp_gradient(&doc, &mask, &table)?;
    let log_likelihood = |theta: &[f64]| -> f64 {
        doc.tokens
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let dot: f64 = theta.iter().zip(table.row(t)).map(|(a, b)| a * b).sum();
                let p = 1.0 / (1.0 + (-dot).exp());
                if mask.get(k) {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            })
            .sum()
    };
    let eps = 1e-5;
    let mut gate_worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut up = theta.clone();
        up[i] += eps;
        let mut down = theta.clone();
        down[i] -= eps;
        let numeric = (log_likelihood(&up) - log_likelihood(&down)) / (2.0 * eps);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
        gate_worst = gate_worst.max(rel);
    }
    println!("gate selector: max relative error {:.3e}", gate_worst);
    worst = worst.max(gate_worst);

    println!("max relative error {:.3e}", worst);
    if worst < 1e-4 {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "gradient check failed: max relative error {:.3e} >= 1e-4",
            worst
        )))
    }
}

fn cmd_synth(args: &ArgMap) -> Result<()> {
    reject_unknown(args, &["spec", "seed", "out", "keywords-out"])?;
    let spec_path = req_str(args, "spec")?;
    let seed = req_parse(args, "seed")?;
    let out = req_str(args, "out")?;

    let content = std::fs::read_to_string(&spec_path)?;
    let spec: SyntheticSpec =
        serde_json::from_str(&content).map_err(|e| Error::Config(format!("bad spec: {}", e)))?;
    let (corpus, keywords) = gen_synthetic(&spec, seed)?;
    let vocab = synthetic_vocab(spec.vocab_size);
    write_dataset(
        PathBuf::from(&out).as_path(),
        &corpus.documents,
        &vocab,
        None,
    )?;
    if let Some(kw_out) = opt_str(args, "keywords-out") {
        let readable: BTreeMap<usize, Vec<String>> = keywords
            .iter()
            .map(|(class, ids)| {
                (
                    *class,
                    ids.iter().map(|&id| vocab.token(id).to_string()).collect(),
                )
            })
            .collect();
        std::fs::write(Path::new(&kw_out), serde_json::to_string_pretty(&readable)?)?;
    }
    println!(
        "generated {} documents over {} classes -> {}",
        corpus.len(),
        spec.num_classes,
        out
    );
    Ok(())
}
