use std::io::Write;
use std::path::{Path, PathBuf};

use mmpad::synth::{generate, SynthConfig};
use mmpad::{estimate_period, evaluate, TimeSeries};

use crate::{CliError, EvalArgs, EvalWindow, ReportFormat, ScoreArgs, SynthArgs};

pub(crate) fn data_err(context: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{context}: {e}"))
}

fn default_output(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_owned());
    input.with_file_name(format!("{stem}.scores.csv"))
}

pub(crate) fn resolve_eval_window(ts: &TimeSeries, w: EvalWindow) -> usize {
    match w {
        EvalWindow::Fixed(w) => w,
        EvalWindow::Auto => estimate_period(ts.channel(0)).window,
    }
}

pub(crate) fn score(args: &ScoreArgs) -> Result<(), CliError> {
    let input = args.input.display();
    let ts = mmpad::read_csv(&args.input).map_err(|e| data_err(format!("--input {input}"), e))?;
    let det = mmpad::detect(&ts, &args.detector.config())
        .map_err(|e| data_err(format!("scoring {input}"), e))?;
    eprintln!(
        "window={} exclusion={} d_star={} factor={}",
        det.window, det.exclusion, det.d_star, det.factor
    );
    if det.over_budget {
        eprintln!("warning: series still exceeds the budget after downsampling");
    }
    let out = args
        .output
        .clone()
        .unwrap_or_else(|| default_output(&args.input));
    mmpad::write_scores(&det.scores, &out)
        .map_err(|e| data_err(format!("--output {}", out.display()), e))
}

pub(crate) fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let input = args.input.display();
    let ts = mmpad::read_csv(&args.input).map_err(|e| data_err(format!("--input {input}"), e))?;
    let labels = ts
        .labels()
        .ok_or_else(|| CliError::Data(format!("--input {input}: no `Label` column")))?;
    let scores = mmpad::read_scores(&args.scores)
        .map_err(|e| data_err(format!("--scores {}", args.scores.display()), e))?;
    if scores.len() != labels.len() {
        return Err(CliError::Data(format!(
            "--scores {} has {} values but --input {input} has {} rows",
            args.scores.display(),
            scores.len(),
            labels.len()
        )));
    }
    let window = resolve_eval_window(&ts, args.eval_window);
    let report = evaluate(scores.as_slice(), labels, window, &args.metrics)
        .map_err(|e| data_err("evaluation", e))?;
    let text = match args.format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    if args.output == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| data_err("stdout", e))
    } else {
        std::fs::write(&args.output, text)
            .map_err(|e| data_err(format!("--output {}", args.output), e))
    }
}

pub(crate) fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        n: args.n,
        d: args.d,
        k_anom: args.k_dims,
        anomaly_start: args.anomaly_start,
        anomaly_len: args.anomaly_len,
        base_period: args.period,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let ts = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    mmpad::write_csv(&ts, &args.out)
        .map_err(|e| data_err(format!("--out {}", args.out.display()), e))
}
