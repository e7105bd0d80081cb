use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use flexsum::aggregate::{
    disaggregate, exact_linear_cost, inside_signal, sample_population, synth_signal, Disaggregation, PopulationFile,
    SamplerConfig, SignalConfig, TrackingConfig, DISAGGREGATION_TOL,
};
use flexsum::baseline_homothet::{aggregate_homothets, fit_all, METHOD_LABEL};
use flexsum::experiment::{
    run_approx_error, run_tracking, summarize, uniform_cost, ApproxErrorConfig, ErrorSummary, RECORD_CSV_HEADER,
};
use flexsum::gpoly::{aggregate as aggregate_gpoly, compute_bounds, greedy_linmax, greedy_linmin, InnerApprox, SetFunctionPair, Subset};
use flexsum::polytope::OptSense;
use flexsum::validation::validate_population;

use crate::output::{emit, emit_json, parse_list, read_json, read_population, read_signal, version, Meta};
use crate::{
    AggregateArgs, ApproxArgs, ApproxErrorArgs, GenerateArgs, OptimizeArgs, SenseArg, TrackArgs, ValidateArgs,
    EXIT_VALIDATION,
};

fn sampler_config(path: Option<&std::path::PathBuf>) -> Result<SamplerConfig> {
    let cfg = match path {
        Some(p) => read_json(p)?,
        None => SamplerConfig::default(),
    };
    cfg.validate().context("invalid sampler configuration")?;
    Ok(cfg)
}

pub fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let cfg = sampler_config(a.config.as_ref())?;
    let pop = sample_population(a.n as usize, a.horizon as usize, &cfg, a.seed)?;
    emit_json(a.out.as_deref(), &PopulationFile::from_population(&pop, &version()))?;
    Ok(ExitCode::SUCCESS)
}

pub fn approx(a: ApproxArgs) -> Result<ExitCode> {
    let pop = read_population(&a.population)?;
    let approximations = pop
        .members
        .iter()
        .map(|m| compute_bounds(&m.device).map(|x| x.with_id(m.approx.device_id)))
        .collect::<Result<Vec<InnerApprox>, _>>()?;
    #[derive(Serialize)]
    struct Out<'a> {
        meta: Meta<&'a SamplerConfig>,
        horizon: usize,
        approximations: Vec<InnerApprox>,
    }
    emit_json(a.out.as_deref(), &Out { meta: Meta::new(pop.seed, &pop.config), horizon: pop.horizon, approximations })?;
    Ok(ExitCode::SUCCESS)
}

/// Largest horizon for which `aggregate` tabulates every subset.
const FULL_TABLE_HORIZON: usize = 6;

pub fn aggregate(a: AggregateArgs) -> Result<ExitCode> {
    let pop = read_population(&a.population)?;
    let agg = aggregate_gpoly(&pop.approximations())?;
    let sets: Vec<Subset> = if pop.horizon <= FULL_TABLE_HORIZON {
        Subset::all(pop.horizon).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        (0..a.audit_sets).map(|_| Subset::from_indices((0..pop.horizon).filter(|_| rng.gen_bool(0.5)))).collect()
    };
    #[derive(Serialize)]
    struct Entry {
        set: Vec<usize>,
        p: f64,
        b: f64,
    }
    #[derive(Serialize)]
    struct Config {
        population: String,
        audit_sets: usize,
    }
    #[derive(Serialize)]
    struct Out {
        meta: Meta<Config>,
        horizon: usize,
        members: Vec<InnerApprox>,
        table: Vec<Entry>,
    }
    let table = sets
        .into_iter()
        .map(|s| Entry { set: s.indices().map(|i| i + 1).collect(), p: agg.eval_p(s), b: agg.eval_b(s) })
        .collect();
    let config = Config { population: a.population.display().to_string(), audit_sets: a.audit_sets };
    let out = Out { meta: Meta::new(a.seed, config), horizon: pop.horizon, members: pop.approximations(), table };
    emit_json(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn optimize(a: OptimizeArgs) -> Result<ExitCode> {
    let pop = read_population(&a.population)?;
    let cost: Vec<f64> = match (&a.cost, a.cost_seed) {
        (Some(text), _) => parse_list(text, "cost")?,
        (None, Some(seed)) => uniform_cost(pop.horizon, seed),
        (None, None) => bail!("either --cost or --cost-seed is required"),
    };
    ensure!(cost.len() == pop.horizon, "cost has length {}, population horizon is {}", cost.len(), pop.horizon);
    let sense = match a.sense {
        SenseArg::Min => OptSense::Min,
        SenseArg::Max => OptSense::Max,
    };

    let exact = exact_linear_cost(&pop, &cost, sense)?;
    let agg = aggregate_gpoly(&pop.approximations())?;
    let gp = match sense {
        OptSense::Min => greedy_linmin(&agg, &cost),
        OptSense::Max => greedy_linmax(&agg, &cost),
    };
    let hom = aggregate_homothets(&fit_all(&pop.devices())?)?;
    let (hom_value, hom_point) = match sense {
        OptSense::Min => {
            let neg: Vec<f64> = cost.iter().map(|v| -v).collect();
            (hom.minimum(&cost), hom.maximize(&neg))
        }
        OptSense::Max => (hom.support(&cost), hom.maximize(&cost)),
    };
    let dispatch = if a.dispatch { Some(disaggregate(&pop, &gp.point, DISAGGREGATION_TOL)?) } else { None };

    #[derive(Serialize)]
    struct MethodOut {
        label: &'static str,
        value: f64,
        error: f64,
        point: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Config {
        population: String,
        sense: &'static str,
        cost_seed: Option<u64>,
    }
    #[derive(Serialize)]
    struct Out {
        meta: Meta<Config>,
        cost: Vec<f64>,
        exact: f64,
        gpoly: MethodOut,
        homothet: MethodOut,
        #[serde(skip_serializing_if = "Option::is_none")]
        dispatch: Option<Disaggregation>,
    }
    let rel = |v: f64| (v - exact) / exact;
    let out = Out {
        meta: Meta::new(
            pop.seed,
            Config {
                population: a.population.display().to_string(),
                sense: if sense == OptSense::Min { "min" } else { "max" },
                cost_seed: a.cost_seed,
            },
        ),
        exact,
        gpoly: MethodOut { label: "gpoly", value: gp.value, error: rel(gp.value), point: gp.point },
        homothet: MethodOut { label: METHOD_LABEL, value: hom_value, error: rel(hom_value), point: hom_point },
        cost,
        dispatch,
    };
    emit_json(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn track(a: TrackArgs) -> Result<ExitCode> {
    let pop = read_population(&a.population)?;
    let agg = aggregate_gpoly(&pop.approximations())?;
    let synth = SignalConfig { amplitude: a.amplitude, cycles: a.cycles, phase: a.phase };
    let (signal, source) = match (&a.signal, a.inside) {
        (Some(path), _) => (read_signal(path)?, format!("file:{}", path.display())),
        (None, Some(k)) => (inside_signal(&agg, k, a.seed), format!("inside:k={k},seed={}", a.seed)),
        (None, None) => (
            synth_signal(&agg, &synth),
            format!("sinusoid:amplitude={},cycles={},phase={}", a.amplitude, a.cycles, a.phase),
        ),
    };
    ensure!(signal.len() == pop.horizon, "signal has {} periods, population horizon is {}", signal.len(), pop.horizon);
    let cfg = TrackingConfig { max_iter: a.max_iter, gap_tol: a.gap_tol, variant: a.variant.into() };
    let report = run_tracking(&pop, &signal, &cfg)?;

    let mut csv = String::from("t,target,gpoly,homothet");
    for m in &pop.members {
        write!(csv, ",gpoly_dev_{}", m.approx.device_id)?;
    }
    csv.push('\n');
    for t in 0..pop.horizon {
        write!(csv, "{},{},{},{}", t + 1, signal[t], report.gpoly.aggregate[t], report.homothet.aggregate[t])?;
        for u in &report.gpoly.members {
            write!(csv, ",{}", u[t])?;
        }
        csv.push('\n');
    }
    emit(a.out_csv.as_deref(), &csv)?;

    #[derive(Serialize)]
    struct Config<'a> {
        population: String,
        signal: String,
        tracking: &'a TrackingConfig,
        homothet_label: &'static str,
    }
    #[derive(Serialize)]
    struct Summary {
        rmse: f64,
        objective: f64,
        gap: f64,
        iterations: usize,
        converged: bool,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        meta: Meta<Config<'a>>,
        signal: &'a [f64],
        gpoly: Summary,
        homothet: Summary,
        gpoly_result: &'a flexsum::aggregate::TrackingResult,
        homothet_result: &'a flexsum::aggregate::TrackingResult,
    }
    let summary = |r: &flexsum::aggregate::TrackingResult| Summary {
        rmse: r.rmse,
        objective: r.objective,
        gap: r.gap,
        iterations: r.iterations,
        converged: r.converged,
    };
    let out = Out {
        meta: Meta::new(
            a.seed,
            Config {
                population: a.population.display().to_string(),
                signal: source,
                tracking: &cfg,
                homothet_label: METHOD_LABEL,
            },
        ),
        signal: &signal,
        gpoly: summary(&report.gpoly),
        homothet: summary(&report.homothet),
        gpoly_result: &report.gpoly,
        homothet_result: &report.homothet,
    };
    let json_path = a.out_json.clone().or_else(|| a.out_csv.as_ref().map(|p| p.with_extension("json")));
    if let Some(path) = json_path {
        emit_json(Some(&path), &out)?;
    }
    eprintln!("gpoly    rmse {:.6e}  gap {:.3e}  iterations {}", out.gpoly.rmse, out.gpoly.gap, out.gpoly.iterations);
    eprintln!("homothet rmse {:.6e}  gap {:.3e}  iterations {}", out.homothet.rmse, out.homothet.gap, out.homothet.iterations);
    Ok(ExitCode::SUCCESS)
}

pub fn approx_error(a: ApproxErrorArgs) -> Result<ExitCode> {
    let horizons: Vec<usize> = parse_list(&a.horizons, "horizon")?;
    ensure!(!horizons.is_empty(), "no horizons given");
    ensure!(horizons.iter().all(|&t| (1..=64).contains(&t)), "horizons must lie in 1..=64");
    ensure!(a.trials >= 1, "at least one trial is required");
    let cfg = match &a.population {
        Some(path) => {
            let pop = read_population(path)?;
            ApproxErrorConfig { n: pop.len(), horizons, trials: a.trials, seed: pop.seed, sampler: pop.config }
        }
        None => {
            ensure!(a.n >= 1, "--n must be at least 1");
            ApproxErrorConfig {
                n: a.n,
                horizons,
                trials: a.trials,
                seed: a.seed,
                sampler: sampler_config(a.config.as_ref())?,
            }
        }
    };
    let records = run_approx_error(&cfg)?;
    let mut csv = format!("{RECORD_CSV_HEADER}\n");
    for r in &records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    emit(a.out_csv.as_deref(), &csv)?;

    let summary = summarize(&records);
    if let Some(path) = &a.summary_csv {
        let mut text = String::from("horizon,method,trials,mean_error,max_error\n");
        for s in &summary {
            writeln!(text, "{},{},{},{:.12e},{:.12e}", s.horizon, s.method.label(), s.trials, s.mean_error, s.max_error)?;
        }
        emit(Some(path), &text)?;
    }
    if let Some(path) = &a.summary_json {
        #[derive(Serialize)]
        struct Out<'a> {
            meta: Meta<&'a ApproxErrorConfig>,
            homothet_label: &'static str,
            summary: &'a [ErrorSummary],
        }
        emit_json(Some(path), &Out { meta: Meta::new(cfg.seed, &cfg), homothet_label: METHOD_LABEL, summary: &summary })?;
    }
    if let (Some(script), Some(data)) = (&a.gnuplot, &a.summary_csv) {
        emit(Some(script), &gnuplot_script(&data.display().to_string()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn gnuplot_script(data: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key top right\n\
         set xlabel 'horizon T'\n\
         set ylabel 'mean approximation error'\n\
         plot '{data}' using 1:(stringcolumn(2) eq 'gpoly' ? $4 : 1/0) with linespoints title 'g-polymatroid', \\\n\
         \x20    '{data}' using 1:(stringcolumn(2) eq 'homothet' ? $4 : 1/0) with linespoints title '{METHOD_LABEL}'\n"
    )
}

pub fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let pop = read_population(&a.population)?;
    let report = validate_population(&pop, a.seed, a.greedy_trials)?;
    #[derive(Serialize)]
    struct Config {
        population: String,
        greedy_trials: usize,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        meta: Meta<Config>,
        report: &'a flexsum::validation::ValidationReport,
    }
    let config = Config { population: a.population.display().to_string(), greedy_trials: a.greedy_trials };
    emit_json(a.out.as_deref(), &Out { meta: Meta::new(a.seed, config), report: &report })?;
    for s in &report.suites {
        eprintln!("{:<14} checked {:>6}  failed {:>4}", s.name, s.checked, s.failed);
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VALIDATION) })
}
