use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use serde_json::{json, Value};

use reconnect_core::report;
use reconnect_core::{load_scenario, Certifier, EquilibriumSet, SamplingDensity, ScenarioParameters, Verdict};

use crate::manifest::RunManifest;
use crate::{Command, Format, Shared};

const DEFAULT_OUT: &str = "out";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Input,
    Environment,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Input => 2,
            Kind::Environment => 3,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

type Outcome<T> = Result<T, Failure>;

/// Wraps an error from `stage` as an input failure.
fn input<E: Into<anyhow::Error>>(stage: &'static str) -> impl FnOnce(E) -> Failure {
    move |e| Failure {
        kind: Kind::Input,
        error: e.into().context(format!("stage `{stage}` failed")),
    }
}

fn environment(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure {
        kind: Kind::Environment,
        error: anyhow!(e).context(format!("cannot write {}", path.display())),
    }
}

fn usage(message: String) -> Failure {
    Failure {
        kind: Kind::Input,
        error: anyhow!(message),
    }
}

pub fn run(command: Command) -> Outcome<ExitCode> {
    match command {
        Command::Equilibria(shared) => equilibria(&shared),
        Command::Certify { shared, horizon } => certify(&shared, horizon),
        Command::Simulate {
            shared,
            reconnect_at,
            t_end,
        } => simulate(&shared, reconnect_at, t_end.unwrap_or(reconnect_at + 5.0)),
        Command::Sweep {
            shared,
            from,
            to,
            step,
            post_duration,
            horizon,
        } => sweep(&shared, from, to, step, post_duration, horizon),
    }
}

fn scenario(shared: &Shared) -> Outcome<ScenarioParameters> {
    if !(shared.dt > 0.0 && shared.dt.is_finite()) {
        return Err(usage(format!("--dt must be positive, got {}", shared.dt)));
    }
    if shared.grid == 0 {
        return Err(usage("--grid must be positive".into()));
    }
    match &shared.config {
        Some(path) => load_scenario(path).map_err(input("scenario")),
        None => Ok(ScenarioParameters::table1()),
    }
}

fn sampling(shared: &Shared) -> SamplingDensity {
    SamplingDensity {
        face_samples: shared.face_samples,
        boundary_samples: shared.boundary_samples,
    }
}

fn out_dir(shared: &Shared) -> Outcome<PathBuf> {
    let dir = shared.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(environment(&dir))?;
    Ok(dir)
}

/// Creates `dir/name`, hands a buffered writer to `body` and records the
/// file in the manifest.
fn write_artifact<F>(manifest: &mut RunManifest, dir: &Path, name: &str, body: F) -> Outcome<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let path = dir.join(name);
    let mut file = BufWriter::new(File::create(&path).map_err(environment(&path))?);
    body(&mut file).and_then(|_| file.flush()).map_err(environment(&path))?;
    manifest.record(&path);
    Ok(())
}

fn write_json(manifest: &mut RunManifest, dir: &Path, name: &str, value: &Value) -> Outcome<()> {
    write_artifact(manifest, dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn finish(mut manifest: RunManifest, dir: &Path) -> Outcome<()> {
    let path = dir.join("manifest.json");
    manifest.record(&path);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(environment(&path))
}

/// Prints a flat summary object either as JSON or as `key,value` rows.
fn print_summary(format: Format, summary: &Value) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(summary).expect("summary serializes")),
        Format::Csv => {
            println!("key,value");
            if let Value::Object(map) = summary {
                for (k, v) in map {
                    match v {
                        Value::String(s) => println!("{k},{s}"),
                        Value::Null => println!("{k},"),
                        other => println!("{k},{other}"),
                    }
                }
            }
        }
    }
}

fn equilibria(shared: &Shared) -> Outcome<ExitCode> {
    let params = scenario(shared)?;
    let eq = EquilibriumSet::compute(&params).map_err(input("equilibria"))?;
    let mut text = Vec::new();
    match shared.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut text, &report::equilibria_json(&params, &eq)).expect("json to memory");
            text.push(b'\n');
        }
        Format::Csv => report::write_equilibria_csv(&mut text, &eq).expect("csv to memory"),
    }
    io::stdout()
        .write_all(&text)
        .map_err(environment(Path::new("<stdout>")))?;

    if shared.out.is_some() {
        let dir = out_dir(shared)?;
        let mut manifest = RunManifest::new("equilibria", params.to_json_value());
        let name = match shared.format {
            Format::Json => "equilibria.json",
            Format::Csv => "equilibria.csv",
        };
        write_artifact(&mut manifest, &dir, name, |w| w.write_all(&text))?;
        finish(manifest, &dir)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn certify(shared: &Shared, horizon: f64) -> Outcome<ExitCode> {
    let params = scenario(shared)?;
    let dir = out_dir(shared)?;
    let mut manifest = RunManifest::new("certify", params.to_json_value());

    let certifier = manifest
        .time("certificate", || Certifier::new(&params, sampling(shared)))
        .map_err(input("certificate"))?;
    let grid = manifest
        .time("grid", || certifier.classify_grid(shared.grid))
        .map_err(input("grid"))?;
    let decision = manifest
        .time("reconnection", || certifier.earliest_reconnection(shared.dt, horizon))
        .map_err(input("reconnection"))?;

    let mut certificate = report::certificate_json(&certifier);
    certificate["grid"] = report::grid_summary_json(&grid);
    write_json(&mut manifest, &dir, "certificate.json", &certificate)?;
    write_artifact(&mut manifest, &dir, "grid.csv", |w| report::write_grid_csv(w, &grid))?;
    let decision_doc = report::decision_json(&certifier, &decision, shared.dt, horizon);
    write_json(&mut manifest, &dir, "decision.json", &decision_doc)?;
    finish(manifest, &dir)?;

    let c = &certifier.certificate;
    print_summary(
        shared.format,
        &json!({
            "e_crit_pre": c.e_crit_pre,
            "e_crit_post": c.e_crit_post,
            "safe_fraction": grid.safe_fraction,
            "t_star": decision.t_star,
            "omega_at_switch": decision.omega_at_switch,
            "audit_failures": decision.audit_failures,
        }),
    );
    if decision.entered_safe {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("no certified reconnection time within {horizon} s");
        Ok(ExitCode::from(1))
    }
}

fn simulate(shared: &Shared, reconnect_at: f64, t_end: f64) -> Outcome<ExitCode> {
    let params = scenario(shared)?;
    let dir = out_dir(shared)?;
    let mut manifest = RunManifest::new("simulate", params.to_json_value());

    let certifier = manifest
        .time("certificate", || Certifier::new(&params, sampling(shared)))
        .map_err(input("certificate"))?;
    let run = manifest
        .time("simulation", || {
            certifier.simulate_reconnection(reconnect_at, t_end, shared.dt)
        })
        .map_err(input("simulation"))?;

    write_artifact(&mut manifest, &dir, "waiting.csv", |w| {
        report::write_trajectory_csv(w, &certifier, &[&run.waiting])
    })?;
    write_artifact(&mut manifest, &dir, "post.csv", |w| {
        report::write_trajectory_csv(w, &certifier, &[&run.post])
    })?;

    let verdict = if run.flapped { Verdict::Flapped } else { Verdict::Safe };
    let last = run.post.last();
    let summary = json!({
        "verdict": verdict.as_str(),
        "reconnect_at": run.waiting.last().time,
        "t_end": last.time,
        "min_omega": run.post.min_omega(),
        "max_angle_deviation_deg": run.post.max_angle_deviation(certifier.delta_eq_load()).to_degrees(),
        "final_delta_deg": last.delta.to_degrees(),
        "final_omega": last.omega,
    });
    let mut doc = summary.clone();
    doc["scenario"] = params.to_json_value();
    doc["violations"] = json!(run.post.violations);
    doc["dt"] = json!(shared.dt);
    write_json(&mut manifest, &dir, "simulation.json", &doc)?;
    finish(manifest, &dir)?;

    print_summary(shared.format, &summary);
    Ok(ExitCode::SUCCESS)
}

fn sweep(shared: &Shared, from: f64, to: f64, step: f64, post_duration: f64, horizon: f64) -> Outcome<ExitCode> {
    if !(from >= 0.0 && from <= to) {
        return Err(usage(format!("empty sweep range: --from {from} --to {to}")));
    }
    if !(step > 0.0) {
        return Err(usage(format!("--step must be positive, got {step}")));
    }
    let params = scenario(shared)?;
    let dir = out_dir(shared)?;
    let mut manifest = RunManifest::new("sweep", params.to_json_value());

    let certifier = manifest
        .time("certificate", || Certifier::new(&params, sampling(shared)))
        .map_err(input("certificate"))?;
    let decision = manifest
        .time("reconnection", || certifier.earliest_reconnection(shared.dt, horizon))
        .map_err(input("reconnection"))?;
    let rows = manifest
        .time("sweep", || certifier.sweep(from, to, step, post_duration, shared.dt))
        .map_err(input("sweep"))?;

    write_artifact(&mut manifest, &dir, "sweep.csv", |w| report::write_sweep_csv(w, &rows))?;

    let earliest_safe = rows.iter().find(|r| r.verdict == Verdict::Safe).map(|r| r.t_reconnect);
    // first instant from which every later row is safe
    let safe_from = rows
        .iter()
        .rposition(|r| r.verdict != Verdict::Safe)
        .map_or(rows.first(), |k| rows.get(k + 1))
        .map(|r| r.t_reconnect);
    let unsafe_after_t_star = decision.t_star.map(|t| {
        rows.iter()
            .filter(|r| r.t_reconnect >= t && r.verdict != Verdict::Safe)
            .count()
    });
    let summary = json!({
        "rows": rows.len(),
        "safe_rows": rows.iter().filter(|r| r.verdict == Verdict::Safe).count(),
        "earliest_safe": earliest_safe,
        "safe_from": safe_from,
        "t_star": decision.t_star,
        "unsafe_after_t_star": unsafe_after_t_star,
    });
    let mut doc = summary.clone();
    doc["scenario"] = params.to_json_value();
    doc["post_duration"] = json!(post_duration);
    doc["dt"] = json!(shared.dt);
    write_json(&mut manifest, &dir, "sweep.json", &doc)?;
    finish(manifest, &dir)?;

    print_summary(shared.format, &summary);
    Ok(ExitCode::SUCCESS)
}
