use std::fs;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};

use qpuf_core::circuit::parse_challenges;
use qpuf_core::crp::{generate_challenges, run_experiment, CrpStore, InstanceRecord};
use qpuf_core::Challenge;

use crate::exit::{io_at, CmdResult, Failure};
use crate::profiles;

pub const STORE_FILE: &str = "crp.jsonl";
pub const SERIES_FILE: &str = "p1.csv";
pub const PLOT_FILE: &str = "p1.gp";

pub struct RunConfig {
    pub profile: String,
    pub challenges: String,
    pub shots: u64,
    pub instances: u32,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
    pub gnuplot: bool,
}

/// OS-seeded entropy from the standard library's hasher keys.
pub fn fresh_seed() -> u64 {
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos()),
    );
    h.finish()
}

fn load_challenges(spec: &str, seed: u64) -> Result<Vec<Challenge>, Failure> {
    if let Ok(count) = spec.parse::<usize>() {
        if count == 0 {
            return Err(Failure::Usage("--challenges must be at least 1".into()));
        }
        return Ok(generate_challenges(count, seed));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::Usage(format!(
            "--challenges `{spec}` is neither a count nor an existing file"
        )));
    }
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let challenges =
        parse_challenges(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if challenges.is_empty() {
        return Err(Failure::Usage(format!(
            "{} contains no challenges",
            path.display()
        )));
    }
    Ok(challenges)
}

fn write_series(path: &Path, instances: &[InstanceRecord]) -> CmdResult {
    let mut w = csv::Writer::from_path(path)?;
    let n = instances[0].responses[0].p1.len();
    let mut header = vec![
        "profile".to_string(),
        "instance".into(),
        "challenge".into(),
        "init_bits".into(),
        "theta".into(),
    ];
    header.extend((0..n).map(|q| format!("p1_q{q}")));
    header.push("response".into());
    w.write_record(&header)?;
    for inst in instances {
        for (k, r) in inst.responses.iter().enumerate() {
            let mut row = vec![
                inst.profile_name.clone(),
                inst.instance_id.to_string(),
                k.to_string(),
                r.challenge.init_bits().to_string(),
                r.challenge.theta().to_string(),
            ];
            row.extend(r.p1.iter().map(|p| p.to_string()));
            row.push(r.bits.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn plot_script(profile: &str, qubits: usize) -> String {
    let mut s = format!(
        "set datafile separator ','\nset title 'P(1) per qubit, {profile}, instance 0'\n\
         set xlabel 'challenge'\nset ylabel 'P(1)'\nset yrange [0:1]\nset key outside right\n\
         set terminal pngcairo size 1200,600\nset output 'p1.png'\nplot "
    );
    let series: Vec<String> = (0..qubits)
        .map(|q| {
            format!(
                "'{SERIES_FILE}' every ::1 using ($2==0 ? $3 : 1/0):{} with linespoints title 'q{q}'",
                6 + q
            )
        })
        .collect();
    s.push_str(&series.join(", \\\n     "));
    s.push('\n');
    s
}

pub fn run(cfg: RunConfig) -> CmdResult {
    if cfg.shots == 0 {
        return Err(Failure::Usage("--shots must be at least 1".into()));
    }
    if cfg.instances == 0 {
        return Err(Failure::Usage("--instances must be at least 1".into()));
    }
    if cfg.jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let profile = profiles::resolve(&cfg.profile)?;
    let seed = match cfg.seed {
        Some(s) => s,
        None => {
            let s = fresh_seed();
            println!("seed: {s}");
            s
        }
    };
    let challenges = load_challenges(&cfg.challenges, seed)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    let instances =
        pool.install(|| run_experiment(&challenges, &profile, cfg.shots, cfg.instances, seed))?;

    fs::create_dir_all(&cfg.output_dir).map_err(io_at(&cfg.output_dir))?;
    let store_path = cfg.output_dir.join(STORE_FILE);
    // create truncates, so reruns overwrite the previous store
    let mut store = CrpStore::create(&store_path)?;
    for r in instances.iter().flat_map(|i| &i.responses) {
        store.append(r.clone())?;
    }
    write_series(&cfg.output_dir.join(SERIES_FILE), &instances)?;
    if cfg.gnuplot {
        let path = cfg.output_dir.join(PLOT_FILE);
        fs::write(&path, plot_script(&profile.name, profile.qubits.len())).map_err(io_at(&path))?;
    }
    println!(
        "{} instances x {} challenges on {} ({} shots, seed {seed}) -> {}",
        instances.len(),
        challenges.len(),
        profile.name,
        cfg.shots,
        store_path.display()
    );
    Ok(())
}
