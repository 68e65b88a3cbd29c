use std::path::{Path, PathBuf};

use ipslae::dataset::{
    generate_mnar, load_interactions, power_law_exposure, preprocess, split_strong_generalization,
    EvalSplit, InteractionMatrix, MnarConfig, Segment,
};
use ipslae::eval::{evaluate as eval_model, EvalReport};
use ipslae::grid::{grid_search, GridSpec};
use ipslae::propensity::{
    weight_curve, weight_curve_tsv, ItemCounts, PropensityFamily, PropensitySpec,
};
use ipslae::solver::{apply_item_weights, fit_ease, gram, SimilarityModel};
use serde_json::json;

use crate::config::RunConfig;
use crate::Failure;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| {
        Failure::Lib(ipslae::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(ipslae::Error::from)?;
    text.push('\n');
    write(path, text)
}

fn load_inputs(config: &RunConfig) -> Result<(InteractionMatrix, EvalSplit), Failure> {
    let x = InteractionMatrix::load(&config.matrix_path())?;
    let split = EvalSplit::load(&config.split_path())?;
    split.check_matrix(&x)?;
    Ok((x, split))
}

fn train_counts(x: &InteractionMatrix, split: &EvalSplit) -> ItemCounts {
    ItemCounts::from_matrix(&split.train_matrix(x))
}

fn config_json(config: &RunConfig) -> serde_json::Value {
    serde_json::to_value(config).unwrap_or(serde_json::Value::Null)
}

pub fn ingest(config: &RunConfig) -> Result<(), Failure> {
    let input = config
        .data
        .input
        .as_ref()
        .ok_or_else(|| Failure::Config("data.input (or --input) is required".into()))?;
    let records = load_interactions(input, &config.delimited())?;
    let x = preprocess(&records, &config.preprocess)?;
    x.save(&config.matrix_path())?;
    let stats = x.stats();
    write_json(
        &config.output_dir.join("stats.json"),
        &json!({ "config": config_json(config), "records": records.len(), "stats": stats }),
    )?;
    println!(
        "users {}  items {}  interactions {}  density {:.6}",
        stats.users, stats.items, stats.interactions, stats.density
    );
    Ok(())
}

pub fn split(config: &RunConfig) -> Result<(), Failure> {
    let x = InteractionMatrix::load(&config.matrix_path())?;
    let split = split_strong_generalization(&x, &config.split)?;
    split.save(&config.split_path())?;
    println!(
        "train {}  valid {} (+{} fold-in only)  test {} (+{} fold-in only)",
        split.train_users.len(),
        split.valid.users.len(),
        split.valid.foldin_only.len(),
        split.test.users.len(),
        split.test.foldin_only.len()
    );
    Ok(())
}

pub fn model_file_name(lambda: f64) -> String {
    format!("model_lambda-{lambda}.bin")
}

pub fn fit(config: &RunConfig) -> Result<(), Failure> {
    let (x, split) = load_inputs(config)?;
    let g = gram(&split.train_matrix(&x), config.memory_budget())?;
    for &lambda in &config.fit.lambdas {
        let mut model = fit_ease(&g, lambda)?;
        model.set_metadata(json!({ "config": config_json(config) }));
        let path = config.output_dir.join(model_file_name(lambda));
        model.save(&path)?;
        println!("lambda {lambda} -> {}", path.display());
    }
    Ok(())
}

fn family_tag(f: &PropensityFamily) -> String {
    match *f {
        PropensityFamily::PowerLaw { gamma } => format!("power-law_gamma-{gamma}"),
        PropensityFamily::PowerLawClipped { gamma, c } => {
            format!("power-law-clipped_gamma-{gamma}_c-{c}")
        }
        PropensityFamily::LogSigmoid { beta, .. } => format!("log-sigmoid_beta-{beta}"),
    }
}

pub fn weight(config: &RunConfig, model_path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let (x, split) = load_inputs(config)?;
    let model = SimilarityModel::load(model_path)?;
    let pv = config
        .weighting_spec()?
        .compute(&train_counts(&x, &split))?;
    let mut weighted = apply_item_weights(&model, &pv)?;
    weighted.set_metadata(json!({ "config": config_json(config), "source_model": model_path }));

    let stem = model_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("model");
    let tag = family_tag(pv.family());
    let out = out.unwrap_or_else(|| config.output_dir.join(format!("{stem}_{tag}.bin")));
    weighted.save(&out)?;
    let weights_path = out.with_extension("weights.tsv");
    pv.save_tsv(x.item_ids(), &weights_path)?;
    println!(
        "{} -> {} (weights in {})",
        pv.family().name(),
        out.display(),
        weights_path.display()
    );
    Ok(())
}

pub fn gridsearch(config: &RunConfig) -> Result<(), Failure> {
    let (x, split) = load_inputs(config)?;
    let g = gram(&split.train_matrix(&x), config.memory_budget())?;
    let counts = ItemCounts::from_gram(&g);
    let spec = GridSpec {
        lambdas: config.fit.lambdas.clone(),
        weightings: config.grid_specs()?,
        epsilon: config.selection.epsilon,
        ndcg_k: config.selection.ndcg_k,
        coverage_k: config.selection.coverage_k,
    };
    let result = grid_search(&g, &split, &counts, &spec, &config.eval)?;
    write(
        &config.output_dir.join("grid_cells.tsv"),
        result.cells_tsv(),
    )?;
    write_json(
        &config.output_dir.join("gridsearch.json"),
        &json!({ "config": config_json(config), "result": result }),
    )?;
    let c = result.chosen_cell();
    println!(
        "chosen cell {}: lambda {} {}  ndcg@{} {:.6}  coverage@{} {:.4}{}",
        result.chosen,
        c.lambda,
        c.family
            .as_ref()
            .map(family_tag)
            .unwrap_or_else(|| "unweighted".into()),
        spec.ndcg_k,
        c.ndcg,
        spec.coverage_k,
        c.coverage,
        if result.trace.fallback {
            "  (fallback)"
        } else {
            ""
        }
    );
    Ok(())
}

fn print_report(r: &EvalReport) {
    let fmt = |m: &std::collections::BTreeMap<usize, f64>, name: &str| {
        m.iter()
            .map(|(k, v)| format!("{name}@{k} {v:.6}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!(
        "{} users  {}  {}  {}",
        r.users_evaluated,
        fmt(&r.recall, "recall"),
        fmt(&r.ndcg, "ndcg"),
        fmt(&r.coverage, "coverage")
    );
}

pub fn evaluate(
    config: &RunConfig,
    model_path: &Path,
    name: Option<String>,
) -> Result<(), Failure> {
    let (x, split) = load_inputs(config)?;
    let counts = train_counts(&x, &split);
    let model = SimilarityModel::load(model_path)?;
    let report = eval_model(&model, &split, Segment::Test, &counts, &config.eval)?;
    let name = name.unwrap_or_else(|| {
        model_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("model")
            .to_string()
    });
    let out = |suffix: &str| config.output_dir.join(format!("{name}_{suffix}"));
    write_json(
        &out("report.json"),
        &json!({ "config": config_json(config), "model": model_path, "report": report }),
    )?;
    write(&out("metrics.tsv"), report.metrics_tsv())?;
    write(&out("bins.tsv"), report.bins_tsv())?;
    if let Some(t) = report.per_user_tsv() {
        write(&out("per_user.tsv"), t)?;
    }
    if let Some(family) = model.weights_applied().last().and_then(|a| a.family) {
        let curve = weight_curve(&counts, &spec_of(&family))?;
        write(&out("weight_curve.tsv"), weight_curve_tsv(&curve))?;
    }
    print_report(&report);
    Ok(())
}

fn spec_of(f: &PropensityFamily) -> PropensitySpec {
    match *f {
        PropensityFamily::PowerLaw { gamma } => PropensitySpec::PowerLaw { gamma },
        PropensityFamily::PowerLawClipped { gamma, c } => {
            PropensitySpec::PowerLawClipped { gamma, c }
        }
        PropensityFamily::LogSigmoid { beta, alpha } => PropensitySpec::LogSigmoid {
            beta,
            alpha: Some(alpha),
        },
    }
}

pub fn curve(config: &RunConfig) -> Result<(), Failure> {
    let (x, split) = load_inputs(config)?;
    let counts = train_counts(&x, &split);
    let spec = config.weighting_spec()?;
    let pv = spec.compute(&counts)?;
    let curve = weight_curve(&counts, &spec)?;
    let path = config
        .output_dir
        .join(format!("weight_curve_{}.tsv", family_tag(pv.family())));
    write(&path, weight_curve_tsv(&curve))?;
    println!("{} rows -> {}", curve.len(), path.display());
    Ok(())
}

pub fn synth(config: &RunConfig) -> Result<(), Failure> {
    let s = &config.synth;
    let mnar = MnarConfig {
        n_users: s.n_users,
        n_items: s.n_items,
        preference_density: s.preference_density,
        exposure: power_law_exposure(s.n_items, s.exposure_exponent, s.exposure_floor, s.seed),
        structure: s.structure,
        seed: s.seed,
    };
    let truth = generate_mnar(&mnar)?;
    let mut csv = String::from("user_id,item_id,value\n");
    for (u, row) in truth.observed.rows().iter().enumerate() {
        for &i in row {
            csv.push_str(&format!(
                "{},{},1\n",
                truth.observed.user_ids()[u],
                truth.observed.item_ids()[i as usize]
            ));
        }
    }
    write(&config.output_dir.join("interactions.csv"), csv)?;
    let mut tsv = String::from("item_id\texposure\ttrue_count\tobserved_count\n");
    for (i, ((e, t), o)) in truth
        .exposure
        .iter()
        .zip(&truth.true_counts)
        .zip(truth.observed_counts())
        .enumerate()
    {
        tsv.push_str(&format!(
            "{}\t{e}\t{t}\t{o}\n",
            truth.observed.item_ids()[i]
        ));
    }
    write(&config.output_dir.join("synth_truth.tsv"), tsv)?;
    println!(
        "{} users  {} items  {} preferences  {} observed",
        s.n_users,
        s.n_items,
        truth.full.nnz(),
        truth.observed.nnz()
    );
    Ok(())
}
