use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use cfikit::charts::{
    render_constellation_chart, render_countershapley_chart, render_greedy_chart, ChartDocument, ChartStyle,
};
use cfikit::countershapley::{countershapley_all, permutation_oracle, CoalitionOptions, ORACLE_MAX_K};
use cfikit::models::{load_model, CountingModel, LoadOptions, Model, ModelSpec};
use cfikit::{
    compute_delta, greedy_cfi, greedy_from_map, validate_counterfactual, Delta, Error, ExplanationCase, Instance,
    ValidationReport,
};
use serde::Serialize;

use crate::report::{CfiReport, SCHEMA_VERSION};
use crate::{
    CaseArgs, ChartArgs, ChartType, CliError, ExplainArgs, EXIT_NO_FLIP, EXIT_OK, EXIT_REDUCIBLE,
};

struct Prepared {
    case: ExplanationCase,
    delta: Delta,
    model: CountingModel<Box<dyn Model>>,
}

fn read_instance(path: &Path, role: &str) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {role} {}: {e}", path.display())))?;
    Instance::from_json_str(&text)
        .map_err(|e| CliError::usage(format!("invalid {role} {}: {e}", path.display())))
}

fn prepare(args: &CaseArgs) -> Result<Prepared, CliError> {
    let factual = read_instance(&args.factual, "factual")?;
    let counterfactual = read_instance(&args.counterfactual, "counterfactual")?;
    let delta = compute_delta(&factual, &counterfactual, args.epsilon)?;
    let spec: ModelSpec = args.model.parse()?;
    let options = LoadOptions::from_env()?;
    let mut model = CountingModel::new(load_model(&spec, &options)?);

    let scores = model.score_batch(&[factual.clone(), counterfactual.clone()])?;
    cfikit::models::check_scores(&scores, 2)?;
    let case = ExplanationCase::new(factual, counterfactual, args.threshold, scores[0], scores[1])?;
    model.reset();
    Ok(Prepared { case, delta, model })
}

fn coalition_options(args: &CaseArgs) -> CoalitionOptions {
    CoalitionOptions {
        max_k: args.max_k,
        ..CoalitionOptions::default()
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn exit_code(class_flip: bool, validation: Option<&ValidationReport>) -> i32 {
    if !class_flip {
        EXIT_NO_FLIP
    } else if validation.is_some_and(|v| !v.irreducible) {
        EXIT_REDUCIBLE
    } else {
        EXIT_OK
    }
}

pub fn cmd_explain(args: &ExplainArgs) -> Result<i32, CliError> {
    let Prepared {
        case,
        delta,
        mut model,
    } = prepare(&args.case)?;
    let options = coalition_options(&args.case);

    let mut greedy = None;
    let mut shapley = None;
    if args.method.greedy() && !args.share_cache {
        greedy = Some(greedy_cfi(&case, &delta, &mut model)?);
    }
    if args.method.countershapley() {
        shapley = Some(countershapley_all(&case, &delta, &mut model, &options)?);
    }
    if args.method.greedy() && greedy.is_none() {
        greedy = Some(match &shapley {
            Some((map, _)) => greedy_from_map(&case, &delta, map)?,
            None => greedy_cfi(&case, &delta, &mut model)?,
        });
    }
    let validation = shapley
        .as_ref()
        .map(|(map, phi)| validate_counterfactual(&case, &delta, map, phi));

    let mut decisions = BTreeMap::new();
    decisions.insert("orientation".to_owned(), case.orientation.as_str().to_owned());
    decisions.insert("greedy_tie_break".to_owned(), "lowest_feature_index".to_owned());
    decisions.insert("class_rule".to_owned(), "score >= threshold is class 1".to_owned());
    let cache = if args.share_cache && shapley.is_some() && greedy.is_some() {
        "greedy read from coalition map"
    } else {
        "off"
    };
    decisions.insert("score_cache".to_owned(), cache.to_owned());
    if shapley.is_none() {
        decisions.insert(
            "validation".to_owned(),
            "skipped: irreducibility needs the coalition map".to_owned(),
        );
    }

    let (coalition_scores, countershapley) = match shapley {
        Some((map, phi)) => (Some(map), Some(phi)),
        None => (None, None),
    };
    let code = exit_code(case.class_flip(), validation.as_ref());
    let report = CfiReport {
        schema_version: SCHEMA_VERSION,
        model: args.case.model.clone(),
        case,
        delta,
        greedy,
        countershapley,
        coalition_scores,
        validation,
        model_call_count: model.evaluations(),
        case_scoring_calls: 2,
        decisions,
    };
    emit(args.case.out.as_ref(), &report.to_json())?;
    Ok(code)
}

pub fn cmd_validate(args: &CaseArgs) -> Result<i32, CliError> {
    let Prepared {
        case,
        delta,
        mut model,
    } = prepare(args)?;
    let (map, phi) = countershapley_all(&case, &delta, &mut model, &coalition_options(args))?;
    let report = validate_counterfactual(&case, &delta, &map, &phi);
    emit(args.out.as_ref(), &to_json(&report))?;
    Ok(exit_code(report.class_flip, Some(&report)))
}

#[derive(Serialize)]
struct OracleOutput {
    oracle_phi: BTreeMap<usize, f64>,
    countershapley_phi: BTreeMap<usize, f64>,
    max_abs_deviation: f64,
}

pub fn cmd_oracle(args: &CaseArgs) -> Result<i32, CliError> {
    let factual = read_instance(&args.factual, "factual")?;
    let counterfactual = read_instance(&args.counterfactual, "counterfactual")?;
    let k = compute_delta(&factual, &counterfactual, args.epsilon)?.k();
    if k > ORACLE_MAX_K {
        return Err(Error::DeltaTooLarge { k, cap: ORACLE_MAX_K }.into());
    }
    let Prepared {
        case,
        delta,
        mut model,
    } = prepare(args)?;
    let oracle = permutation_oracle(&case, &delta, &mut model)?;
    let (_, phi) = countershapley_all(&case, &delta, &mut model, &coalition_options(args))?;
    let out = OracleOutput {
        max_abs_deviation: oracle.max_abs_deviation(&phi),
        oracle_phi: oracle.phi,
        countershapley_phi: phi.phi,
    };
    emit(args.out.as_ref(), &to_json(&out))?;
    Ok(EXIT_OK)
}

fn render(report: &CfiReport, kind: ChartType, style: &ChartStyle) -> Result<ChartDocument, CliError> {
    let missing = |what: &str| CliError::usage(format!("report has no {what}; rerun explain with the needed method"));
    match kind {
        ChartType::Greedy => {
            let greedy = report.greedy.as_ref().ok_or_else(|| missing("greedy result"))?;
            Ok(render_greedy_chart(greedy, report.case.threshold, style))
        }
        ChartType::Countershapley => {
            let phi = report
                .countershapley
                .as_ref()
                .ok_or_else(|| missing("CounterShapley values"))?;
            Ok(render_countershapley_chart(phi, &report.case, style)?)
        }
        ChartType::Constellation => {
            let map = report
                .coalition_scores
                .as_ref()
                .ok_or_else(|| missing("coalition_scores"))?;
            let phi = report
                .countershapley
                .as_ref()
                .ok_or_else(|| missing("CounterShapley values"))?;
            Ok(render_constellation_chart(map, &report.delta, phi, report.case.threshold, style)?)
        }
        ChartType::All => unreachable!("expanded by the caller"),
    }
}

fn chart_name(kind: ChartType) -> &'static str {
    match kind {
        ChartType::Greedy => "greedy",
        ChartType::Countershapley => "countershapley",
        ChartType::Constellation => "constellation",
        ChartType::All => "all",
    }
}

pub fn cmd_chart(args: &ChartArgs) -> Result<i32, CliError> {
    let report = CfiReport::from_path(&args.report).map_err(CliError::usage)?;
    let style = match &args.style {
        Some(path) => ChartStyle::from_path(path)?,
        None => ChartStyle::default(),
    };

    if args.chart_type != ChartType::All {
        let doc = render(&report, args.chart_type, &style)?;
        doc.write_to(&args.out)?;
        return Ok(EXIT_OK);
    }

    // render everything first so a missing section writes nothing
    let kinds = [ChartType::Greedy, ChartType::Countershapley, ChartType::Constellation];
    let docs = kinds
        .iter()
        .map(|&k| render(&report, k, &style))
        .collect::<Result<Vec<_>, _>>()?;
    let is_svg_path = args.out.extension().is_some_and(|e| e == "svg");
    let targets: Vec<PathBuf> = if is_svg_path {
        let stem = args.out.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        kinds
            .iter()
            .map(|&k| args.out.with_file_name(format!("{stem}-{}.svg", chart_name(k))))
            .collect()
    } else {
        std::fs::create_dir_all(&args.out)
            .map_err(|e| CliError::usage(format!("cannot create {}: {e}", args.out.display())))?;
        kinds
            .iter()
            .map(|&k| args.out.join(format!("{}.svg", chart_name(k))))
            .collect()
    };
    for (doc, path) in docs.iter().zip(&targets) {
        doc.write_to(path)?;
    }
    Ok(EXIT_OK)
}
