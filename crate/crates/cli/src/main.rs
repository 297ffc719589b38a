mod config;
mod output;

use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use bpcs_core::instance_gen::{generate, GeneratorParams, ModeSet};
use bpcs_core::model::{Instance, InstanceSpec};
use bpcs_core::search::{solve, Features, SearchConfig, SolveStatus};
use bpcs_core::simulate::{compare, evaluate, saa_scenario_count, solve_deterministic, BinRule, CompareOptions, SaaOptions, TravelStat};
use clap::Parser;

use config::{Cli, Command, FileConfig, SolverArgs};

enum Failure {
    /// Exit code 1: no feasible plan exists.
    Infeasible,
    /// Exit code 2: bad flags, files or instance data.
    Invalid(String),
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn write(path: Option<&Path>, bytes: &[u8]) -> Outcome {
    output::emit(path, bytes).map_err(|e| invalid(format!("writing {}: {e}", path.map_or("stdout".into(), |p| p.display().to_string()))))
}

fn load_instance(path: &Path, alpha: Option<f64>, gamma: Option<f64>) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let spec: InstanceSpec = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let inst = Instance::new(spec).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if alpha.is_none() && gamma.is_none() {
        return Ok(inst);
    }
    let (a, g) = (alpha.unwrap_or(inst.alpha), gamma.unwrap_or(inst.gamma));
    inst.with_levels(a, g).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn search_config(features: Option<&str>, time_limit: Option<f64>, threads: Option<usize>, file: &FileConfig) -> Result<SearchConfig, Failure> {
    let features: Features = features.or(file.features.as_deref()).unwrap_or("full").parse().map_err(invalid)?;
    let mut cfg = SearchConfig::with_features(features);
    let limit = time_limit.or(file.time_limit).unwrap_or(180.0);
    if !(limit >= 0.0 && limit.is_finite()) {
        return Err(invalid(format!("time limit {limit} must be a nonnegative number of seconds")));
    }
    cfg.time_limit = (limit > 0.0).then(|| Duration::from_secs_f64(limit));
    let threads = threads.or(file.threads).unwrap_or(1);
    if threads == 0 {
        return Err(invalid("threads must be at least 1"));
    }
    cfg.pricing.threads = threads;
    Ok(cfg)
}

fn prepare(args: &SolverArgs, file: &FileConfig) -> Result<(Instance, SearchConfig), Failure> {
    let inst = load_instance(&args.instance, args.alpha.or(file.alpha), args.gamma.or(file.gamma))?;
    let cfg = search_config(args.features.as_deref(), args.time_limit, args.threads, file)?;
    Ok((inst, cfg))
}

fn bin_rule(flag: Option<&str>, file: &FileConfig) -> Result<BinRule, Failure> {
    match flag.or(file.bins.as_deref()).unwrap_or("actual") {
        "actual" => Ok(BinRule::Actual),
        "median" => Ok(BinRule::Median),
        s => Err(invalid(format!("unknown bin rule `{s}`; expected actual or median"))),
    }
}

fn run(cli: Cli) -> Outcome {
    let file = FileConfig::load(cli.config.as_deref()).map_err(Failure::Invalid)?;
    match cli.command {
        Command::Generate(a) => {
            let modes: ModeSet = a.modes.as_deref().or(file.modes.as_deref()).unwrap_or("sif").parse().map_err(invalid)?;
            let params = GeneratorParams {
                horizon_minutes: a.horizon.or(file.horizon).unwrap_or(90),
                flights_per_hour: a.fph.or(file.fph).unwrap_or(20),
                worker_strength: a.strength.or(file.strength).unwrap_or(0.6),
                modes,
                seed: a.seed.or(file.seed).unwrap_or(0),
            };
            let inst = generate(&params).map_err(invalid)?;
            let mut bytes = serde_json::to_vec_pretty(inst.spec()).expect("instance serializes");
            bytes.push(b'\n');
            write(a.out.as_deref(), &bytes)
        }
        Command::Solve(a) => {
            let (inst, cfg) = prepare(&a.solver, &file)?;
            let res = solve(&inst, &cfg).map_err(invalid)?;
            write(a.out.as_deref(), &output::solution_json(&inst, &res))?;
            if let Some(p) = &a.stats {
                write(Some(p), &output::stats_csv(&inst, cfg.features.name(), &res))?;
            }
            if let Some(p) = &a.timings {
                write(Some(p), &output::timings_csv(&inst, &res))?;
            }
            if res.status == SolveStatus::Infeasible {
                return Err(Failure::Infeasible);
            }
            Ok(())
        }
        Command::Simulate(a) => {
            let (inst, cfg) = prepare(&a.solver, &file)?;
            let rule = bin_rule(a.sim.bins.as_deref(), &file)?;
            let mode = a.mode.as_deref().or(file.mode.as_deref()).unwrap_or("stochastic");
            let res = match mode {
                "stochastic" => solve(&inst, &cfg).map_err(invalid)?,
                m => solve_deterministic(&inst, m.parse::<TravelStat>().map_err(invalid)?, &cfg).map_err(invalid)?,
            };
            if let Some(p) = &a.solution {
                write(Some(p), &output::solution_json(&inst, &res))?;
            }
            let scenarios = a.sim.scenarios.or(file.scenarios).unwrap_or(500);
            let seed = a.sim.seed.or(file.seed).unwrap_or(0);
            let ev = res.incumbent.as_ref().map(|s| evaluate(&inst, s, scenarios, seed, rule));
            write(a.sim.out.as_deref(), &output::simulation_csv(&inst, mode, res.objective(), ev.as_ref()))?;
            if let Some(p) = &a.sim.histogram {
                write(Some(p), &output::histogram_csv(ev.as_ref().map(|e| (mode, &e.delay_histogram))))?;
            }
            if ev.is_none() {
                return Err(Failure::Infeasible);
            }
            Ok(())
        }
        Command::Compare(a) => {
            let (inst, search) = prepare(&a.solver, &file)?;
            let opts = CompareOptions {
                scenarios: a.sim.scenarios.or(file.scenarios).unwrap_or(500),
                pi_scenarios: a.pi_scenarios.or(file.pi_scenarios).unwrap_or(50),
                seed: a.sim.seed.or(file.seed).unwrap_or(0),
                rule: bin_rule(a.sim.bins.as_deref(), &file)?,
                search,
            };
            let (rows, _) = compare(&inst, &opts).map_err(invalid)?;
            write(a.sim.out.as_deref(), &output::comparison_csv(&inst, &rows))?;
            if let Some(p) = &a.sim.histogram {
                let hist = rows.iter().filter_map(|r| r.evaluation.as_ref().map(|e| (r.mode.as_str(), &e.delay_histogram)));
                write(Some(p), &output::histogram_csv(hist))?;
            }
            if rows.iter().all(|r| r.evaluation.is_none()) {
                return Err(Failure::Infeasible);
            }
            Ok(())
        }
        Command::Saa(a) => {
            let cfg = search_config(a.features.as_deref(), a.time_limit, a.threads, &file)?;
            let mut plans = Vec::new();
            for path in &a.instances {
                let inst = load_instance(path, file.alpha, file.gamma)?;
                let res = solve(&inst, &cfg).map_err(invalid)?;
                match res.incumbent {
                    Some(sol) => plans.push((inst, sol)),
                    None => eprintln!("{}: no plan, skipped", path.display()),
                }
            }
            if plans.is_empty() {
                return Err(Failure::Infeasible);
            }
            let opts = SaaOptions {
                max: a.max_scenarios.or(file.max_scenarios).unwrap_or(SaaOptions::default().max),
                ..SaaOptions::default()
            };
            let pairs: Vec<_> = plans.iter().map(|(i, s)| (i, s)).collect();
            let report = saa_scenario_count(&pairs, &opts, a.seed.or(file.seed).unwrap_or(0));
            let names: Vec<&str> = plans.iter().map(|(i, _)| i.name.as_str()).collect();
            write(a.out.as_deref(), &output::saa_csv(&names, &report))?;
            match report.scenarios {
                Some(n) => eprintln!("criterion met at {n} scenarios"),
                None => eprintln!("criterion not met up to {} scenarios", opts.max),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible) => {
            eprintln!("no feasible plan");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
