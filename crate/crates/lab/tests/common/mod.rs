#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use srf_core::experiments::{gen_gaussian_operator, gen_lowrank};
use srf_lab::io;

pub fn srf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srf"))
        .args(args)
        .env_remove("SRF_SEED")
        .output()
        .expect("run srf binary")
}

pub const TIMING_KEYS: [&str; 2] = ["wall_ms", "mean_wall_ms"];

fn zero_timing(value: &mut Value) {
    match value {
        Value::Object(map) => {
            for (k, v) in map.iter_mut() {
                if TIMING_KEYS.contains(&k.as_str()) {
                    *v = Value::from(0);
                } else {
                    zero_timing(v);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(zero_timing),
        _ => {}
    }
}

fn strip_timing_columns(text: &str) -> String {
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let keep: Vec<bool> = header.split(',').map(|h| !TIMING_KEYS.contains(&h)).collect();
    let filter = |line: &str| {
        line.split(',')
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(f, _)| f)
            .collect::<Vec<_>>()
            .join(",")
    };
    std::iter::once(filter(header))
        .chain(lines.map(filter))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Every file under `dir` with timing fields neutralized.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let bytes = std::fs::read(&path).unwrap();
            let name = path.to_string_lossy();
            let normalized = if name.ends_with(".json") {
                let mut v: Value = serde_json::from_slice(&bytes).unwrap();
                zero_timing(&mut v);
                serde_json::to_vec(&v).unwrap()
            } else if name.ends_with(".csv") {
                strip_timing_columns(std::str::from_utf8(&bytes).unwrap()).into_bytes()
            } else {
                bytes
            };
            out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), normalized);
        }
    }
    out
}

/// A seeded ARM instance on disk: operator.json (+ a.csv), b.csv, truth.csv.
pub fn write_arm_instance(dir: &Path, n: usize, r: usize, m: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let truth = gen_lowrank(n, n, r, seed).unwrap();
    let op = gen_gaussian_operator(m, n, n, seed + 1).unwrap();
    let b = op.apply(&truth).unwrap();
    io::write_operator(&dir.join("operator.json"), &op, "a.csv").unwrap();
    io::write_measurements(&dir.join("b.csv"), &b).unwrap();
    io::write_matrix(&dir.join("truth.csv"), &truth).unwrap();
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
