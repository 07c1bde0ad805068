use std::path::{Path, PathBuf};

use qpuf_core::noise::{builtin_profile, builtin_profiles, load_profile, DeviceProfile};

use crate::exit::{io_at, CmdResult, Failure};

pub const PROFILE_DIR_VAR: &str = "QPUF_PROFILE_DIR";

fn search_dir() -> Option<PathBuf> {
    std::env::var_os(PROFILE_DIR_VAR).map(PathBuf::from)
}

fn load_file(path: &Path) -> Result<DeviceProfile, Failure> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    load_profile(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Built-in name, then `<name>.json` in the search directory, then a path.
pub fn resolve(name: &str) -> Result<DeviceProfile, Failure> {
    if let Some(p) = builtin_profile(name) {
        return Ok(p);
    }
    if let Some(dir) = search_dir() {
        let candidate = dir.join(format!("{name}.json"));
        if candidate.is_file() {
            return load_file(&candidate);
        }
    }
    let path = Path::new(name);
    if path.is_file() {
        return load_file(path);
    }
    Err(Failure::Usage(format!(
        "unknown profile `{name}` (built-ins: {})",
        builtin_profiles()
            .iter()
            .map(|p| p.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

fn extra_profiles() -> Vec<(PathBuf, String)> {
    let Some(dir) = search_dir() else {
        return Vec::new();
    };
    let Ok(entries) = std::fs::read_dir(&dir) else {
        return Vec::new();
    };
    let mut out: Vec<(PathBuf, String)> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| {
            let stem = p.file_stem()?.to_str()?.to_string();
            Some((p, stem))
        })
        .collect();
    out.sort();
    out
}

pub fn list() -> CmdResult {
    for p in builtin_profiles() {
        println!("{}", p.name);
    }
    for (path, stem) in extra_profiles() {
        if builtin_profile(&stem).is_none() {
            println!("{stem}\t({})", path.display());
        }
    }
    Ok(())
}

pub fn show(name: &str, json: bool) -> CmdResult {
    let p = resolve(name)?;
    if json {
        println!("{}", p.to_document());
        return Ok(());
    }
    println!("profile {}", p.name);
    println!("idle duration: {} us", p.idle_duration_us);
    for q in &p.qubits {
        println!(
            "qubit {}: t1={} t2={} f={} readout={}",
            q.index, q.t1_us, q.t2_us, q.frequency_ghz, q.readout_error
        );
    }
    Ok(())
}
