use std::fs;
use std::path::{Path, PathBuf};

use qpuf_core::crp::{group_instances, CrpStore};
use qpuf_core::metrics::{compute_report, MetricsReport};
use qpuf_core::Error;

use crate::exit::{io_at, CmdResult, Failure};

pub const METRICS_CSV: &str = "metrics.csv";
pub const UNIQUENESS_CSV: &str = "uniqueness.csv";
pub const SUMMARY_JSON: &str = "metrics.json";

fn pct(x: f64) -> String {
    format!("{x:.2}")
}

fn load_all(stores: &[PathBuf]) -> Result<CrpStore, Failure> {
    let mut all = CrpStore::in_memory();
    for path in stores {
        let store = CrpStore::load(path).map_err(|e| match e {
            Error::Io(io) => Failure::Io(format!("{}: {io}", path.display())),
            other => Failure::Usage(format!("{}: {other}", path.display())),
        })?;
        for r in store.records() {
            all.append(r.clone()).map_err(|e| {
                Failure::Usage(format!(
                    "{}: record appears in more than one store: {e}",
                    path.display()
                ))
            })?;
        }
    }
    if all.is_empty() {
        return Err(Failure::Usage("the given stores contain no records".into()));
    }
    Ok(all)
}

fn write_csv(dir: &Path, report: &MetricsReport) -> CmdResult {
    let path = dir.join(METRICS_CSV);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "profile",
        "instances",
        "challenges",
        "randomness_pct",
        "diffuseness_pct",
        "reliability_pct",
        "all_instances_reliable_pct",
    ])?;
    for p in &report.profiles {
        let (rel, all) = match &p.reliability {
            Some(r) => (pct(r.mean_fraction_pct), pct(r.all_instances_pct)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            p.profile.clone(),
            p.instances.to_string(),
            p.challenges.to_string(),
            pct(p.randomness_pct),
            pct(p.diffuseness_pct),
            rel,
            all,
        ])?;
    }
    w.flush()?;

    if !report.uniqueness.is_empty() {
        let mut w = csv::Writer::from_path(dir.join(UNIQUENESS_CSV))?;
        w.write_record(["profile_a", "profile_b", "uniqueness_pct"])?;
        for u in &report.uniqueness {
            w.write_record([
                u.profile_a.clone(),
                u.profile_b.clone(),
                pct(u.uniqueness_pct),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn run(stores: &[PathBuf], output_dir: &Path) -> CmdResult {
    let all = load_all(stores)?;
    let instances = group_instances(all.records());
    let report = compute_report(&instances).map_err(|e| Failure::Usage(e.to_string()))?;

    fs::create_dir_all(output_dir).map_err(io_at(output_dir))?;
    write_csv(output_dir, &report)?;
    let summary = output_dir.join(SUMMARY_JSON);
    let json = serde_json::to_string_pretty(&report).expect("reports always serialize");
    fs::write(&summary, json + "\n").map_err(io_at(&summary))?;

    for p in &report.profiles {
        print!(
            "{}: {} instances x {} challenges, randomness {}%, diffuseness {}%",
            p.profile,
            p.instances,
            p.challenges,
            pct(p.randomness_pct),
            pct(p.diffuseness_pct)
        );
        match &p.reliability {
            Some(r) => println!(
                ", reliability {}% (all instances {}%)",
                pct(r.mean_fraction_pct),
                pct(r.all_instances_pct)
            ),
            None => {
                println!();
                eprintln!(
                    "warning: {} has a single instance; reliability needs at least two and is omitted",
                    p.profile
                );
            }
        }
    }
    if !report.uniqueness.is_empty() {
        println!("uniqueness:");
        for u in &report.uniqueness {
            println!(
                "  {} vs {}: {}%",
                u.profile_a,
                u.profile_b,
                pct(u.uniqueness_pct)
            );
        }
    }
    println!("wrote {}", output_dir.join(METRICS_CSV).display());
    Ok(())
}
