//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each, and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rough_reduct::oracle::{audit_reducts, random_system, verify_slr, verify_sr, OracleBudget};
use rough_reduct::reduction::reduce_with;
use rough_reduct::{
    load_csv, synth, DecisionSystem, NeighborhoodConfig, Relation, Schema, SynthSpec, Variant,
};

const SEED: u64 = 20_240_601;

fn nbr(delta: f64) -> Relation {
    Relation::Neighborhood(NeighborhoodConfig::new(delta).unwrap())
}

fn relations() -> [Relation; 2] {
    [Relation::Equivalence, nbr(0.16)]
}

fn describe(rel: &Relation) -> String {
    match rel.radius() {
        Some(d) => format!("neighborhood δ={d}"),
        None => "classic".to_string(),
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Every `data/<name>.csv` with a schema at `data/<name>.schema` or
/// `data/schemas/<name>.schema`.
fn bundled_datasets() -> Vec<(String, DecisionSystem)> {
    let dir = data_dir();
    let mut out = Vec::new();
    let Ok(entries) = std::fs::read_dir(&dir) else { return out };
    let mut csvs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    for csv in csvs {
        let stem = csv.file_stem().unwrap().to_string_lossy().to_string();
        let schema = [dir.join(format!("{stem}.schema")), dir.join("schemas").join(format!("{stem}.schema"))]
            .into_iter()
            .find(|p| p.exists());
        let Some(schema) = schema else { continue };
        match Schema::load(&schema).and_then(|s| load_csv(&csv, &s)) {
            Ok(sys) => out.push((stem, sys)),
            Err(e) => eprintln!("  skipping {stem}: {e}"),
        }
    }
    out
}

fn criterion5_system() -> DecisionSystem {
    synth(&SynthSpec::new(SEED, 5000, 30, 0, 2).with_trailing_duplicates(4)).unwrap()
}

type Check = Result<String, String>;

type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

fn oracle_suite(suite: &str) -> Check {
    let budget = OracleBudget::default();
    let mut notes = Vec::new();
    for rel in relations() {
        let report = match suite {
            "sr" => verify_sr(SEED, 1000, &budget, &rel),
            _ => verify_slr(SEED, 1000, &budget, &rel),
        };
        if !report.passed() {
            return Err(format!(
                "{}: {} counterexamples, first: {:?}",
                describe(&rel),
                report.counterexamples.len(),
                report.counterexamples[0]
            ));
        }
        notes.push(format!("{}: 0/1000 (premise held {})", describe(&rel), report.premise_held));
    }
    Ok(notes.join("; "))
}

fn no_accuracy_loss() -> Check {
    let budget = OracleBudget { max_samples: 200, max_attributes: 12 };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut systems: Vec<(String, DecisionSystem)> =
        (0..40).map(|i| (format!("random-{i}"), random_system(&mut rng, &budget))).collect();
    for i in 0..20u64 {
        let n = 50 + 50 * (i as usize % 4);
        let numeric = i as usize % 9;
        let categorical = (12 - numeric).min(1 + i as usize % 5);
        let classes = 2 + i as usize % 3;
        let spec = SynthSpec::new(SEED + i, n, numeric, categorical, classes).with_trailing_duplicates(i as usize % 3);
        systems.push((format!("synth-{i}"), synth(&spec).unwrap()));
    }
    let bundled = bundled_datasets();
    let n_bundled = bundled.len();
    systems.extend(bundled);
    for (name, sys) in &systems {
        for rel in relations() {
            let reports: Vec<_> = Variant::ALL.iter().map(|&v| reduce_with(sys, rel, v)).collect();
            for r in &reports[1..] {
                if r.reduct != reports[0].reduct || r.final_pos_size != reports[0].final_pos_size {
                    return Err(format!(
                        "{name} ({}): {} gives {:?}/{} but plain gives {:?}/{}",
                        describe(&rel),
                        r.algorithm,
                        r.reduct,
                        r.final_pos_size,
                        reports[0].reduct,
                        reports[0].final_pos_size
                    ));
                }
            }
        }
    }
    Ok(format!("{} systems ({n_bundled} bundled), both modes", systems.len()))
}

fn oracle_consistency() -> Check {
    let budget = OracleBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let mut audited = 0;
    for i in 0..200 {
        let sys = random_system(&mut rng, &budget);
        for rel in relations() {
            let record = audit_reducts(&sys, &rel, &budget);
            if record.exhaustive_full_pos.is_none() {
                return Err(format!("system {i} fell outside the budget"));
            }
            if !record.passed() {
                return Err(format!("system {i} ({}): {:?}", describe(&rel), record.violations));
            }
            audited += 1;
        }
    }
    Ok(format!("{audited} audits against the exhaustive table"))
}

fn counter_dominance(sys: &DecisionSystem) -> Check {
    let touched: Vec<u64> = Variant::ALL
        .iter()
        .map(|&v| reduce_with(sys, nbr(0.16), v).counters.samples_touched)
        .collect();
    let [plain, fspa, farnemf, lra] = touched[..] else { unreachable!() };
    let line = format!("plain {plain}, fspa {fspa}, farnemf {farnemf}, lra {lra}");
    if lra <= farnemf && farnemf <= fspa && fspa <= plain && lra < plain {
        Ok(line)
    } else {
        Err(line)
    }
}

fn median_wall(sys: &DecisionSystem, variant: Variant) -> Duration {
    let mut times: Vec<Duration> = (0..3).map(|_| reduce_with(sys, nbr(0.16), variant).counters.wall_time).collect();
    times.sort();
    times[1]
}

fn speedup(sys: &DecisionSystem) -> Check {
    let plain = median_wall(sys, Variant::Plain);
    let lra = median_wall(sys, Variant::Lra);
    let line = format!(
        "plain {:.3}s, lra {:.3}s, speedup {:.2}x",
        plain.as_secs_f64(),
        lra.as_secs_f64(),
        plain.as_secs_f64() / lra.as_secs_f64()
    );
    if lra.as_secs_f64() <= 0.67 * plain.as_secs_f64() {
        Ok(line)
    } else {
        Err(line)
    }
}

fn growing_advantage() -> Check {
    let mut ratios: Vec<(usize, u64, u64)> = Vec::new();
    for n in [500, 2000, 8000] {
        let sys = synth(&SynthSpec::new(SEED, n, 30, 0, 2).with_trailing_duplicates(4)).unwrap();
        let plain = reduce_with(&sys, nbr(0.16), Variant::Plain).counters.samples_touched;
        let lra = reduce_with(&sys, nbr(0.16), Variant::Lra).counters.samples_touched;
        ratios.push((n, plain, lra));
    }
    let line = ratios
        .iter()
        .map(|(n, p, l)| format!("n={n}: {p}/{l} = {:.3}", *p as f64 / *l as f64))
        .collect::<Vec<_>>()
        .join(", ");
    // p1/l1 <= p2/l2  <=>  p1*l2 <= p2*l1
    let ok = ratios
        .windows(2)
        .all(|w| (w[0].1 as u128) * (w[1].2 as u128) <= (w[1].1 as u128) * (w[0].2 as u128));
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn large_radius() -> Check {
    let sys = synth(&SynthSpec::new(SEED, 1000, 30, 0, 2).with_trailing_duplicates(4)).unwrap();
    let plain = reduce_with(&sys, nbr(0.5), Variant::Plain);
    let lra = reduce_with(&sys, nbr(0.5), Variant::Lra);
    let line = format!(
        "final_pos_size plain {} lra {}, reduct length {}",
        plain.final_pos_size,
        lra.final_pos_size,
        lra.reduct.len()
    );
    if plain.final_pos_size == lra.final_pos_size {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() -> ExitCode {
    if let Err(e) = rough_reduct::harness::init_threads_from_env() {
        eprintln!("{e}");
        return ExitCode::FAILURE;
    }
    let big = criterion5_system();
    let criteria: Vec<Criterion> = vec![
        ("1 redundancy elimination suite", Duration::from_secs(120), Box::new(|| oracle_suite("sr"))),
        ("2 restricted refinement suite", Duration::from_secs(120), Box::new(|| oracle_suite("slr"))),
        ("3 no accuracy loss", Duration::from_secs(300), Box::new(no_accuracy_loss)),
        ("4 oracle consistency", Duration::from_secs(120), Box::new(oracle_consistency)),
        ("5 counter dominance", Duration::from_secs(180), Box::new(|| counter_dominance(&big))),
        ("6 qualitative speedup", Duration::from_secs(300), Box::new(|| speedup(&big))),
        ("7 growing advantage", Duration::from_secs(600), Box::new(growing_advantage)),
        ("8 large radius", Duration::from_secs(120), Box::new(large_radius)),
    ];
    let mut failed = 0;
    for (name, limit, check) in &criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {}s", limit.as_secs())),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {name} [{:.1}s]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
