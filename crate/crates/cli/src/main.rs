use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cascade_core::dispatch::{build_load_map, solve_dispatch, to_current_domain, MapOptions};
use cascade_core::simulator::{
    compare_tagc, detect_steady_state, minimum_window, LoadSchedule, Simulation, SteadyTolerance, Trajectory,
};
use cascade_core::smallsignal::{root_locus, Sweep, SweepParameter};
use cascade_core::{parse_config, parse_schedule, selftest, Error, Scheme};

#[derive(Parser)]
#[command(name = "cascade", version, about = "Economical power sharing for cascaded-inverter microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Economical,
    Proportional,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Economical => Scheme::Economical,
            SchemeArg::Proportional => Scheme::Proportional,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MapDomain {
    /// ξ_i as a function of total load, W.
    Load,
    /// g_i as a function of loop current, A, at the rated PCC voltage.
    Current,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    #[value(name = "load_resistance")]
    LoadResistance,
    #[value(name = "w_c")]
    WC,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the economic dispatch, or export the optimal sharing map.
    Dispatch {
        #[arg(long)]
        config: PathBuf,
        /// Total load, W.
        #[arg(long, required_unless_present = "map")]
        load: Option<f64>,
        /// Enforce each unit's [p_min, p_max].
        #[arg(long)]
        bounds: bool,
        /// Export the sharing map instead of a single dispatch.
        #[arg(long)]
        map: bool,
        #[arg(long, value_enum, default_value = "load")]
        domain: MapDomain,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one control scheme through a load schedule.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Schedule file; defaults to the schedule embedded in the config.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both schemes and compare their generation cost.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: Option<f64>,
        /// Base path; `_economical` and `_proportional` are appended.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a parameter and export the eigenvalue loci.
    Rootlocus {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: ParamArg,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of swept values, endpoints included.
        #[arg(long)]
        steps: usize,
        /// Resistive load held while sweeping w_c, Ω.
        #[arg(long, default_value_t = 12.0)]
        load: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in oracle suites.
    Selftest {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

enum Failure {
    Core(Error),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn write_out(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_schedule(embedded: Option<LoadSchedule>, path: Option<&Path>) -> Result<LoadSchedule, Error> {
    match path {
        Some(p) => parse_schedule(p),
        None => embedded
            .ok_or_else(|| Error::Config("no --schedule given and the config has no embedded schedule".into())),
    }
}

fn dispatch(
    config: &Path,
    load: Option<f64>,
    bounds: bool,
    map: bool,
    domain: MapDomain,
    range: (Option<f64>, Option<f64>),
    samples: usize,
    out: Option<&Path>,
) -> Outcome {
    let (config, _) = parse_config(config)?;
    let costs = config.costs();
    if map {
        let (lo, hi) = config.map_domain();
        let options = MapOptions {
            samples: config.map_samples,
            enforce_bounds: bounds,
        };
        let load_map = build_load_map(&costs, (lo, hi), options)?;
        let (map, default_range) = match domain {
            MapDomain::Load => (load_map, (lo, hi)),
            MapDomain::Current => {
                let m = to_current_domain(&load_map, config.v_pcc_ref)?;
                let d = m.domain;
                (m, d)
            }
        };
        let from = range.0.unwrap_or(default_range.0);
        let to = range.1.unwrap_or(default_range.1);
        if !(from < to) {
            return Err(Error::validation("from", "must be < to").into());
        }
        let csv = map_csv(&map, from, to, samples);
        println!("{:?} map, {} units, {} samples on [{from}, {to}]", map.form(), map.units(), samples.max(2));
        match out {
            Some(p) => write_out(p, &csv)?,
            None => print!("{csv}"),
        }
        if load.is_none() {
            return Ok(());
        }
    }
    let Some(load) = load else { return Ok(()) };
    let result = solve_dispatch(&costs, load, bounds)?;
    println!("load {load} W, incremental cost {:.9}", result.lambda);
    println!("unit  power (W)          marginal cost   cost             bound");
    let mut csv = String::from("unit,power,marginal_cost,cost,at_bound\n");
    for (i, (c, &p)) in costs.iter().zip(&result.powers).enumerate() {
        let bound = result.active_bounds.contains(&i);
        println!(
            "{:<4}  {:<17.10}  {:<14.9}  {:<15.9}  {}",
            i + 1,
            p,
            c.marginal(p),
            c.cost(p),
            if bound { "yes" } else { "" }
        );
        csv.push_str(&format!(
            "{},{:.15e},{:.15e},{:.15e},{}\n",
            i + 1,
            p,
            c.marginal(p),
            c.cost(p),
            u8::from(bound)
        ));
    }
    println!("total cost {:.9}", result.total_cost);
    if let Some(p) = out.filter(|_| !map) {
        write_out(p, &csv)?;
    }
    Ok(())
}

fn map_csv(map: &cascade_core::dispatch::SharingMap, from: f64, to: f64, samples: usize) -> String {
    let samples = samples.max(2);
    let mut csv = String::from("x");
    for i in 1..=map.units() {
        csv.push_str(&format!(",g_{i}"));
    }
    csv.push('\n');
    for k in 0..samples {
        let x = from + (to - from) * k as f64 / (samples - 1) as f64;
        csv.push_str(&format!("{x:.15e}"));
        for v in map.eval(x) {
            csv.push_str(&format!(",{v:.15e}"));
        }
        csv.push('\n');
    }
    csv
}

fn settling_report(traj: &Trajectory) -> Result<(), Error> {
    let settled = detect_steady_state(traj, minimum_window(traj.w_c), SteadyTolerance::default())?;
    println!("scheme {}, {} samples, integrated TAGC {:.6}", traj.scheme, traj.samples.len(), traj.integrated_tagc);
    for (k, s) in settled.iter().enumerate() {
        let last = traj.segment_samples(k).last();
        let settle = s.t_settle.map_or("not reached".to_string(), |t| format!("{t:.4} s"));
        match last {
            Some(x) => println!(
                "segment {}: settled {settle}; f {:.6} Hz, spread {:.2e} Hz, Vpcc {:.4} V, P {:?} W, TAGC {:.6}",
                k + 1,
                x.frequency[0],
                x.frequency_spread(),
                x.v_pcc,
                x.p.iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>(),
                x.tagc
            ),
            None => println!("segment {}: no samples", k + 1),
        }
    }
    let saturated = traj.samples.iter().filter(|s| s.any_saturated()).count();
    println!("samples with a saturated frequency: {saturated}");
    Ok(())
}

fn simulate(config: &Path, schedule: Option<&Path>, scheme: Scheme, t_end: f64, dt: Option<f64>, out: Option<&Path>) -> Outcome {
    let (config, embedded) = parse_config(config)?;
    let schedule = load_schedule(embedded, schedule)?;
    let traj = Simulation::new(&config, scheme)?.run(&schedule, t_end, dt.unwrap_or(config.dt))?;
    settling_report(&traj)?;
    if let Some(p) = out {
        write_out(p, &traj.to_csv())?;
    }
    Ok(())
}

fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    base.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn compare(config: &Path, schedule: Option<&Path>, t_end: f64, dt: Option<f64>, out: Option<&Path>) -> Outcome {
    let (config, embedded) = parse_config(config)?;
    let schedule = load_schedule(embedded, schedule)?;
    let dt = dt.unwrap_or(config.dt);
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = [Scheme::Economical, Scheme::Proportional]
            .into_iter()
            .map(|scheme| {
                let (config, schedule) = (&config, &schedule);
                s.spawn(move || Simulation::new(config, scheme)?.run(schedule, t_end, dt))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let (eco, prop) = (&runs[0], &runs[1]);
    settling_report(eco)?;
    settling_report(prop)?;
    let cmp = compare_tagc(eco, prop)?;
    print!("{}", cmp.report("economical", "proportional"));
    if let Some(base) = out {
        write_out(&suffixed(base, "economical"), &eco.to_csv())?;
        write_out(&suffixed(base, "proportional"), &prop.to_csv())?;
    }
    Ok(())
}

fn rootlocus(config: &Path, param: ParamArg, from: f64, to: f64, steps: usize, load: f64, out: Option<&Path>) -> Outcome {
    let (config, _) = parse_config(config)?;
    let parameter = match param {
        ParamArg::LoadResistance => SweepParameter::LoadResistance,
        ParamArg::WC => SweepParameter::WC,
    };
    let mut sweep = Sweep::new(parameter, from, to, steps);
    sweep.load_resistance = load;
    let locus = root_locus(&config, sweep)?;
    println!("{:<14}  verdict   zero modes  slowest nonzero eigenvalue", parameter.name());
    for p in &locus.points {
        match (&p.verdict, &p.error) {
            (Some(v), _) => {
                let ball = cascade_core::smallsignal::ZERO_BALL * p.norm;
                let slowest = p
                    .eigenvalues
                    .iter()
                    .filter(|l| l.norm() > ball)
                    .max_by(|a, b| a.re.total_cmp(&b.re));
                let text = slowest.map_or("-".into(), |l| format!("{:.6e} {:+.6e}j", l.re, l.im));
                println!("{:<14.6}  {:<8}  {:<10}  {}", p.value, v.to_string(), p.zero_modes, text);
            }
            (None, Some(e)) => println!("{:<14.6}  failed    {e}", p.value),
            (None, None) => println!("{:<14.6}  failed", p.value),
        }
    }
    if let Some(p) = out {
        write_out(p, &locus.to_csv())?;
    }
    let failed = locus.failures().count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} sweep value(s) had no steady state")));
    }
    Ok(())
}

fn run_selftest(seed: u64) -> Outcome {
    let reports = selftest::run_all(seed)?;
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} suite(s) failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Dispatch {
            config,
            load,
            bounds,
            map,
            domain,
            from,
            to,
            samples,
            out,
        } => dispatch(&config, load, bounds, map, domain, (from, to), samples, out.as_deref()),
        Command::Simulate {
            config,
            schedule,
            scheme,
            t_end,
            dt,
            out,
        } => simulate(&config, schedule.as_deref(), scheme.into(), t_end, dt, out.as_deref()),
        Command::Compare {
            config,
            schedule,
            t_end,
            dt,
            out,
        } => compare(&config, schedule.as_deref(), t_end, dt, out.as_deref()),
        Command::Rootlocus {
            config,
            param,
            from,
            to,
            steps,
            load,
            out,
        } => rootlocus(&config, param, from, to, steps, load, out.as_deref()),
        Command::Selftest { seed } => run_selftest(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_keeps_directory_and_extension() {
        assert_eq!(suffixed(Path::new("out/run.csv"), "economical"), PathBuf::from("out/run_economical.csv"));
        assert_eq!(suffixed(Path::new("run"), "proportional"), PathBuf::from("run_proportional.csv"));
    }
}
