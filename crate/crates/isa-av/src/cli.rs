//! Command-line entry point: one subcommand per pipeline stage plus
//! `pipeline` to chain them all.
//!
//! Configuration comes from an optional `--config` key=value file with
//! `--<key> <value>` flag overrides taking precedence. Exit codes: 0 on
//! success, 1 on usage errors, 2 on data errors.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::metadata::load_metadata;
use crate::pipeline::{self, RunConfig, CONFIG_KEYS};
use crate::prediction::{predict, TrainedModel};
use crate::preprocess::impute_missing;

const USAGE: &str = "\
usage: isa-av <subcommand> [--config FILE] [--<key> <value>]...

subcommands:
  extract     parse the input suite into metadata.csv
  preprocess  impute, z-score and prune the features
  select      pick the feature subset that best separates outcomes
  project     fit the 2D projection and place every instance
  coverage    boundary area, cluster footprints, coverage percentage
  train       fit the configured classifier on the selected features
  predict     label a metadata CSV with a trained model
              (flags: --model FILE --input FILE [--out FILE])
  compare     selected-vs-random classifier comparison with significance
  plot        SVG scatter plots of the instance space
  pipeline    run every stage in order and write manifest.json

config keys (file or flags): seed (required), input, dataset
(timeseries|road|metadata-csv), theta_redundant, theta_weak, theta_strong,
straight_angle, k_min, k_max, budget, restarts, repetitions, classifier,
out_dir, workers. The ISA_AV_OUT_DIR environment variable supplies the
default output directory.";

pub fn run(args: Vec<String>) -> i32 {
    match run_inner(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn run_inner(args: &[String]) -> Result<()> {
    let Some(subcommand) = args.first() else {
        return Err(Error::Usage(USAGE.into()));
    };
    if subcommand == "--help" || subcommand == "-h" || subcommand == "help" {
        println!("{USAGE}");
        return Ok(());
    }
    let rest = &args[1..];
    match subcommand.as_str() {
        "extract" => {
            let config = parse_config(rest)?;
            let table = pipeline::stage_extract(&config)?;
            println!(
                "extracted {} instances x {} features -> {}",
                table.n_instances(),
                table.n_features(),
                config.metadata_path().display()
            );
        }
        "preprocess" => {
            let config = parse_config(rest)?;
            let (table, _, report) = pipeline::stage_preprocess(&config)?;
            println!(
                "kept {} features ({} zero-variance, {} redundant, {} weak dropped) -> {}",
                table.n_features(),
                report.zero_variance.len(),
                report.redundant.len(),
                report.weak.len(),
                config.preprocessed_path().display()
            );
        }
        "select" => {
            let config = parse_config(rest)?;
            let selected = pipeline::stage_select(&config)?;
            println!(
                "selected [{}] (cv error {:.4}, {} combinations{}) -> {}",
                selected.names.join(", "),
                selected.winner.error,
                selected.evaluated,
                if selected.sampled { ", sampled" } else { "" },
                config.selection_path().display()
            );
        }
        "project" => {
            let config = parse_config(rest)?;
            let (model, space) = pipeline::stage_project(&config)?;
            println!(
                "projected {} instances (objective {:.6}) -> {}",
                space.coords.len(),
                model.objective,
                config.space_path().display()
            );
        }
        "coverage" => {
            let config = parse_config(rest)?;
            let report = pipeline::stage_coverage(&config)?;
            println!(
                "coverage {:.2}% (area_IS {:.4} / area_bound {:.4}, {} footprints, {} noise) -> {}",
                report.coverage_percent,
                report.area_is,
                report.area_bound,
                report.footprints.len(),
                report.noise_count,
                config.coverage_path().display()
            );
        }
        "train" => {
            let config = parse_config(rest)?;
            let model = pipeline::stage_train(&config)?;
            println!(
                "trained {} on [{}] -> {}",
                model.kind.as_str(),
                model.feature_names.join(", "),
                config.model_path().display()
            );
        }
        "predict" => cmd_predict(rest)?,
        "compare" => {
            let config = parse_config(rest)?;
            let report = pipeline::stage_compare(&config)?;
            for stat in &report.stats {
                println!(
                    "{}: p_f1 {:.4}{}",
                    stat.kind.as_str(),
                    stat.p_f1,
                    if stat.significant_f1 { " (significant)" } else { "" }
                );
            }
            println!("-> {}", config.comparison_path().display());
        }
        "plot" => {
            let config = parse_config(rest)?;
            let written = pipeline::stage_plot(&config)?;
            println!("wrote {} plots under {}", written.len(), config.plots_dir().display());
        }
        "pipeline" => {
            let config = parse_config(rest)?;
            let manifest = pipeline::run_pipeline(&config)?;
            println!(
                "pipeline done: selected [{}], objective {:.6}, coverage {:.2}% -> {}",
                manifest.selected_features.join(", "),
                manifest.pilot_objective,
                manifest.coverage_percent,
                config.manifest_path().display()
            );
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown subcommand {other:?}\n\n{USAGE}"
            )));
        }
    }
    Ok(())
}

/// Split `--config FILE` and `--<key> <value>` pairs, then build the config.
fn parse_config(args: &[String]) -> Result<RunConfig> {
    let (config_file, overrides) = parse_flags(args, &CONFIG_KEYS)?;
    RunConfig::from_sources(config_file.as_deref(), &overrides)
}

type Flags = (Option<PathBuf>, Vec<(String, String)>);

fn parse_flags(args: &[String], allowed: &[&str]) -> Result<Flags> {
    let mut config_file = None;
    let mut overrides = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::Usage(format!("unexpected argument {arg:?}")))?;
        let value = iter
            .next()
            .ok_or_else(|| Error::Usage(format!("flag --{key} needs a value")))?;
        if key == "config" {
            config_file = Some(PathBuf::from(value));
        } else if allowed.contains(&key) {
            overrides.push((key.to_string(), value.clone()));
        } else {
            return Err(Error::Usage(format!("unknown flag --{key}")));
        }
    }
    Ok((config_file, overrides))
}

fn cmd_predict(args: &[String]) -> Result<()> {
    let (_, flags) = parse_flags(args, &["model", "input", "out"])?;
    let get = |key: &str| {
        flags
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
    };
    let model_path = get("model")
        .ok_or_else(|| Error::Usage("predict needs --model <model.json>".into()))?;
    let input_path = get("input")
        .ok_or_else(|| Error::Usage("predict needs --input <metadata.csv>".into()))?;
    let out_path = get("out").unwrap_or_else(|| "predictions.csv".into());

    let model = TrainedModel::load(&model_path)?;
    let table = impute_missing(&load_metadata(&input_path)?)?;
    let cols: Vec<usize> = model
        .feature_names
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::UnknownFeature(name.clone()))
        })
        .collect::<Result<_>>()?;
    let x: Vec<Vec<f64>> = (0..table.n_instances())
        .map(|r| {
            let raw: Vec<f64> = cols.iter().map(|&c| table.value(r, c)).collect();
            match &model.normalization {
                Some(norm) => norm.apply(&raw),
                None => Ok(raw),
            }
        })
        .collect::<Result<_>>()?;
    let labels = predict(&model, &x)?;

    let mut out = String::from("id,predicted\n");
    for (id, label) in table.instance_ids().iter().zip(&labels) {
        out.push_str(&format!("{id},{}\n", label.as_str()));
    }
    std::fs::write(&out_path, out).map_err(|e| Error::io(out_path.clone(), e))?;
    let unsafe_count = labels
        .iter()
        .filter(|&&l| l == crate::metadata::Outcome::Unsafe)
        .count();
    println!(
        "predicted {} instances ({} unsafe) -> {}",
        labels.len(),
        unsafe_count,
        out_path
    );
    Ok(())
}
