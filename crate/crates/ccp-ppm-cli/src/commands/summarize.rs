//! `summarize`: offline posterior summaries of a persisted fit.
//!
//! Reads a chains directory and writes `change_probs.csv`,
//! `partition_est.json`, `metrics.json`, and a tidy `plotdata.csv`
//! suitable for external plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ccp_ppm::posterior::{
    ari, change_prob_estimates, classify_threshold, confusion_metrics, estimate_partition,
    pairwise_ari_trace,
};
use ccp_ppm::{Chains, ChangeIndicators, LossConfig, PartitionRecord};

use crate::commands::{read_data_csv, to_json_bytes};
use crate::errors::{CliError, CliResult};
use crate::out::write_dir_atomically;

pub struct SummarizeArgsResolved {
    pub chains_dir: PathBuf,
    pub out_dir: PathBuf,
    pub loss: LossConfig,
    pub threshold: f64,
    pub truth: Option<PathBuf>,
}

#[derive(Serialize)]
struct NamedPartition {
    name: String,
    #[serde(flatten)]
    partition: PartitionRecord,
    change_times: Vec<usize>,
}

#[derive(Serialize)]
struct PartitionEstimates {
    loss: LossConfig,
    series: Vec<NamedPartition>,
}

#[derive(Serialize)]
struct TruthMetrics {
    series: String,
    ari: f64,
    misclassification: f64,
    sensitivity: Option<f64>,
    specificity: Option<f64>,
    partition_estimate_ari: f64,
}

#[derive(Serialize)]
struct PairSummary {
    series_a: String,
    series_b: String,
    mean_ari: f64,
}

#[derive(Serialize)]
struct MetricsReport {
    method: ccp_ppm::Method,
    n: usize,
    series: Vec<String>,
    threshold: f64,
    mean_acceptance_rate: f64,
    acceptance_rate_per_series: Vec<f64>,
    posterior_mean_change_count: Vec<f64>,
    threshold_change_times: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairwise_ari: Option<PairwiseSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_metrics: Option<Vec<TruthMetrics>>,
}

#[derive(Serialize)]
struct PairwiseSummary {
    grand_mean: f64,
    pairs: Vec<PairSummary>,
}

fn load_truth(path: &Path, n: usize, l: usize) -> CliResult<Vec<ChangeIndicators>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let records: Vec<PartitionRecord> = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if records.len() != l {
        return Err(CliError::data(format!(
            "truth file has {} partitions but the fit covers {l} series",
            records.len()
        )));
    }
    records
        .iter()
        .map(|r| {
            if r.n != n {
                return Err(CliError::data(format!(
                    "truth partition is over length {} but the fit used {n}",
                    r.n
                )));
            }
            ChangeIndicators::try_from(r).map_err(CliError::data)
        })
        .collect()
}

pub fn run(args: &SummarizeArgsResolved) -> CliResult<()> {
    args.loss.validate().map_err(CliError::config)?;
    let chains = Chains::load(&args.chains_dir).map_err(CliError::pipeline)?;
    let report = change_prob_estimates(&chains).map_err(CliError::pipeline)?;
    let thresholded =
        classify_threshold(&report, args.threshold).map_err(CliError::pipeline)?;
    let estimates: Vec<ChangeIndicators> = (0..chains.l)
        .map(|i| estimate_partition(&chains, &args.loss, i))
        .collect::<Result<_, _>>()
        .map_err(CliError::pipeline)?;

    let data_path = args.chains_dir.join("data.csv");
    let data = if data_path.exists() {
        Some(read_data_csv(&data_path)?)
    } else {
        None
    };

    let truth = match &args.truth {
        Some(path) => Some(load_truth(path, chains.n, chains.l)?),
        None => None,
    };

    // change_probs.csv
    let mut change_probs = String::from("series,time,prob\n");
    for (i, name) in chains.series_names.iter().enumerate() {
        for (t, p) in report.series_probs(i).iter().enumerate() {
            // Slot t (0-based) flags time t+2 as a change point.
            writeln!(change_probs, "{name},{},{p}", t + 2).expect("writing to String");
        }
    }

    // partition_est.json
    let partitions = PartitionEstimates {
        loss: args.loss,
        series: chains
            .series_names
            .iter()
            .zip(&estimates)
            .map(|(name, est)| NamedPartition {
                name: name.clone(),
                partition: PartitionRecord::from(est),
                change_times: est.change_times(),
            })
            .collect(),
    };

    // metrics.json
    let slots = chains.n - 1;
    let acceptance_rate_per_series: Vec<f64> = (0..chains.l)
        .map(|i| {
            (0..slots)
                .map(|t| chains.acceptance_rate(i, t))
                .sum::<f64>()
                / slots as f64
        })
        .collect();
    let posterior_mean_change_count: Vec<f64> = (0..chains.l)
        .map(|i| {
            report.series_probs(i).iter().sum::<f64>()
        })
        .collect();
    let pairwise = if chains.l >= 2 {
        let trace = pairwise_ari_trace(&chains).map_err(CliError::pipeline)?;
        Some(PairwiseSummary {
            grand_mean: trace.grand_mean,
            pairs: trace
                .pairs
                .iter()
                .zip(&trace.pair_means)
                .map(|(&(i, s), &mean)| PairSummary {
                    series_a: chains.series_names[i].clone(),
                    series_b: chains.series_names[s].clone(),
                    mean_ari: mean,
                })
                .collect(),
        })
    } else {
        None
    };
    let truth_metrics = match &truth {
        Some(truth) => {
            let mut rows = Vec::new();
            for i in 0..chains.l {
                let confusion = confusion_metrics(&thresholded[i], &truth[i])
                    .map_err(CliError::pipeline)?;
                rows.push(TruthMetrics {
                    series: chains.series_names[i].clone(),
                    ari: ari(&thresholded[i], &truth[i]).map_err(CliError::pipeline)?,
                    misclassification: confusion.misclassification,
                    sensitivity: confusion.sensitivity,
                    specificity: confusion.specificity,
                    partition_estimate_ari: ari(&estimates[i], &truth[i])
                        .map_err(CliError::pipeline)?,
                });
            }
            Some(rows)
        }
        None => None,
    };
    let metrics = MetricsReport {
        method: chains.method,
        n: chains.n,
        series: chains.series_names.clone(),
        threshold: args.threshold,
        mean_acceptance_rate: chains.mean_acceptance_rate(),
        acceptance_rate_per_series,
        posterior_mean_change_count,
        threshold_change_times: thresholded.iter().map(|c| c.change_times()).collect(),
        pairwise_ari: pairwise,
        truth_metrics,
    };

    // plotdata.csv (only when the data is available).
    let plotdata = data.as_ref().map(|data| {
        let mut out = String::from("series,time,value,prob,cluster\n");
        for (i, series) in data.iter().enumerate() {
            let labels = estimates[i].to_labels();
            for t in 1..=chains.n {
                // Time 1 is never a change point by construction.
                let prob = if t >= 2 { report.prob(i, t - 2) } else { 0.0 };
                writeln!(
                    out,
                    "{},{t},{},{prob},{}",
                    series.name(),
                    series.values()[t - 1],
                    labels.as_slice()[t - 1]
                )
                .expect("writing to String");
            }
        }
        out
    });

    write_dir_atomically(&args.out_dir, |staging| {
        std::fs::write(staging.join("change_probs.csv"), &change_probs)
            .map_err(CliError::data)?;
        std::fs::write(
            staging.join("partition_est.json"),
            to_json_bytes(&partitions)?,
        )
        .map_err(CliError::data)?;
        std::fs::write(staging.join("metrics.json"), to_json_bytes(&metrics)?)
            .map_err(CliError::data)?;
        if let Some(plotdata) = &plotdata {
            std::fs::write(staging.join("plotdata.csv"), plotdata).map_err(CliError::data)?;
        }
        Ok(())
    })
}
