use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use helmholtz::bihm::checks::{run_suite, SuiteOptions};
use helmholtz::data_io::{load_mnist, Mnist};
use helmholtz::info_metrics::{curve_table, panel, DiscreteDistribution};
use helmholtz::stein_sim::{exponent_report, HypothesisPair};
use helmholtz::trainer::{evaluate, load_checkpoint, save_checkpoint, MetricsRow, Trainer};
use helmholtz::RngState;

use crate::config::{parse_layers, RunConfig};
use crate::{CliError, RunArgs};

pub const RESOLVED_CONFIG: &str = "resolved.conf";
pub const METRICS_JSONL: &str = "metrics.jsonl";
pub const METRICS_CSV: &str = "metrics.csv";
pub const TIMING_JSONL: &str = "timing.jsonl";
pub const CHECKPOINT: &str = "model.ckpt";

const EVAL_TAG: u64 = 0x4556_414c;

/// Config file first, then explicit flags.
pub fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::default();
    if let Some(path) = &args.config {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        c.apply_text(&text)?;
    }
    if let Some(v) = &args.layers {
        c.layers = parse_layers(v)?;
    }
    if let Some(v) = &args.objective {
        c.set("objective", v)?;
    }
    if let Some(v) = &args.binarization {
        c.set("binarization", v)?;
    }
    macro_rules! copy {
        ($($f:ident),*) => { $( if let Some(v) = args.$f.clone() { c.$f = v; } )* };
    }
    copy!(
        data_dir,
        out,
        seed,
        alpha,
        particles,
        epochs,
        lr,
        l1,
        batch_size,
        eval_every,
        eval_particles
    );
    if args.subset.is_some() {
        c.subset = args.subset;
    }
    Ok(c)
}

fn load_data(c: &RunConfig) -> Result<Mnist, CliError> {
    if !c.data_dir.is_dir() {
        return Err(CliError::MissingData(c.data_dir.clone()));
    }
    Ok(load_mnist(&c.data_dir, c.binarization, c.subset)?)
}

pub fn train(args: &RunArgs) -> Result<(), CliError> {
    let c = resolve(args)?;
    let tc = c.train_config()?;
    let data = load_data(&c)?;
    fs::create_dir_all(&c.out)?;
    fs::write(c.out.join(RESOLVED_CONFIG), c.to_text())?;

    let mut jsonl = BufWriter::new(File::create(c.out.join(METRICS_JSONL))?);
    let mut csv = BufWriter::new(File::create(c.out.join(METRICS_CSV))?);
    let mut timing = BufWriter::new(File::create(c.out.join(TIMING_JSONL))?);
    writeln!(csv, "{}", MetricsRow::CSV_HEADER)?;

    eprintln!(
        "training {:?} with {} on {} examples ({} binarization)",
        tc.layer_sizes,
        tc.objective,
        data.train.len(),
        c.binarization
    );
    let mut trainer = Trainer::new(tc.clone(), &data.train)?;
    for _ in 0..tc.epochs {
        let row = trainer.step_epoch(&data.train, Some(&data.valid))?;
        writeln!(jsonl, "{}", row.to_json())?;
        writeln!(csv, "{}", row.to_csv())?;
        writeln!(
            timing,
            "{{\"epoch\":{},\"wall_seconds\":{}}}",
            row.epoch, row.wall_seconds
        )?;
        for w in [&mut jsonl, &mut csv, &mut timing] {
            w.flush()?;
        }
        save_checkpoint(&trainer.checkpoint(), &c.out.join(CHECKPOINT))?;
        let nll = row.valid_nll.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        eprintln!(
            "epoch {:>3}  loss {:.4}  valid nll {nll}  ess {:.2}  {:.1}s",
            row.epoch, row.train_loss, row.mean_ess, row.wall_seconds
        );
    }
    Ok(())
}

pub fn eval(checkpoint: &Path, split: &str, args: &RunArgs) -> Result<(), CliError> {
    let c = resolve(args)?;
    let ck = load_checkpoint(checkpoint)?;
    let data = load_data(&c)?;
    let set = match split {
        "train" => &data.train,
        "valid" => &data.valid,
        "test" => &data.test,
        other => return Err(CliError::Config(format!("unknown split `{other}`"))),
    };
    let nll = evaluate(&ck.model, set, c.particles, &RngState::new(c.seed).fork(EVAL_TAG))?;
    println!(
        "split={split} examples={} particles={} mean_nll={nll}",
        set.len(),
        c.particles
    );
    Ok(())
}

/// Comma-separated probabilities, or `bern:p` for `(1−p, p)`.
pub fn parse_distribution(spec: &str) -> Result<DiscreteDistribution, CliError> {
    let bad = |e: String| CliError::Config(format!("distribution `{spec}`: {e}"));
    if let Some(p) = spec.strip_prefix("bern:") {
        let p: f64 = p.trim().parse().map_err(|_| bad("bad probability".into()))?;
        return DiscreteDistribution::bernoulli(p).map_err(|e| bad(e.to_string()));
    }
    let probs = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{v}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    DiscreteDistribution::new(probs).map_err(|e| bad(e.to_string()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn distances(p: &str, q: &str, alpha: f64) -> Result<(), CliError> {
    let panel = panel(&parse_distribution(p)?, &parse_distribution(q)?, alpha)?;
    println!("{}", serde_json::to_string(&panel).expect("plain data serializes"));
    Ok(())
}

pub fn curve_csv(p: &str, q: &str, n: usize) -> Result<String, CliError> {
    let rows = curve_table(&parse_distribution(p)?, &parse_distribution(q)?, n)?;
    let mut s = String::from("t,neg_log_z\n");
    for (t, v) in rows {
        s.push_str(&format!("{t},{v}\n"));
    }
    Ok(s)
}

pub fn curve(p: &str, q: &str, n: usize, out: Option<&Path>) -> Result<(), CliError> {
    emit(&curve_csv(p, q, n)?, out)
}

pub fn stein(p: &str, q: &str, n_grid: &str, beta: f64, prior: f64, out: Option<&Path>) -> Result<(), CliError> {
    let pair = HypothesisPair::new(parse_distribution(p)?, parse_distribution(q)?)?;
    let grid = n_grid
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad n `{v}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = exponent_report(&pair, &grid, beta, prior)?;
    emit(&report.to_csv(), out)
}

pub fn oracle_check(seed: u64, corrupt_gradient: bool) -> Result<(), CliError> {
    let mut opts = SuiteOptions::new(seed);
    opts.corrupt_gradient = corrupt_gradient;
    let outcomes = run_suite(&opts)?;
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}
