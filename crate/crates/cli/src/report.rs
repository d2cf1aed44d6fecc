use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{CliError, RunManifest};

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.flatten().map(|e| e.path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_manifests(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "manifest.json") {
            out.push(p);
        }
    }
    Ok(())
}

fn markdown_table(csv_path: &Path, max_rows: usize) -> Result<String, CliError> {
    let mut r = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut s = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    let mut shown = 0;
    let mut total = 0;
    for rec in r.records() {
        let rec = rec?;
        total += 1;
        if shown < max_rows {
            let cells: Vec<&str> = rec.iter().collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
            shown += 1;
        }
    }
    if total > shown {
        let _ = writeln!(s, "\n({} of {total} rows shown; full table in `{}`)", shown, csv_path.display());
    }
    Ok(s)
}

/// Merges every run under `dir` into `dir/report.md` plus a combined
/// `dir/gates.csv`. Returns the report path.
pub fn write_report(dir: &Path) -> Result<PathBuf, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!("run directory {} does not exist", dir.display())));
    }
    let mut manifests = Vec::new();
    find_manifests(dir, &mut manifests)?;
    if manifests.is_empty() {
        return Err(CliError::Validation(format!("no manifest.json under {}", dir.display())));
    }
    let mut md = String::from("# Run report\n");
    let mut gates = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join("gates.csv"))?;
    gates.write_record(["run", "kind", "gate", "pass", "detail"])?;
    for path in &manifests {
        let run_dir = path.parent().expect("file has a parent");
        let m = RunManifest::read(path)?;
        let name = run_dir.strip_prefix(dir).unwrap_or(run_dir).display().to_string();
        let name = if name.is_empty() { ".".to_string() } else { name };
        let _ = writeln!(
            md,
            "\n## {name}\n\nkind `{}`, status `{}`, config `{}`, seed {}, {} workers, {:.1} s\n",
            m.kind,
            m.status,
            &m.config_hash[..12],
            m.effective_config.master_seed,
            m.workers,
            m.wall_time_s
        );
        if let Some(e) = &m.error {
            let _ = writeln!(md, "error: {e}\n");
        }
        let missing = m.missing_files(run_dir);
        if !missing.is_empty() {
            let _ = writeln!(md, "missing files: {}\n", missing.join(", "));
        }
        if !m.gates.is_empty() {
            md.push_str("| gate | result | detail |\n|---|---|---|\n");
            for g in &m.gates {
                let _ = writeln!(md, "| {} | {} | {} |", g.name, if g.pass { "PASS" } else { "FAIL" }, g.detail);
                gates.write_record([name.as_str(), m.kind.as_str(), &g.name, &g.pass.to_string(), &g.detail])?;
            }
        }
        for f in &m.files {
            let p = run_dir.join(f);
            if f.ends_with(".csv") && !f.starts_with("path_") && p.is_file() {
                let _ = writeln!(md, "\n### {f}\n\n{}", markdown_table(&p, 40)?);
            }
        }
    }
    gates.flush()?;
    let out = dir.join("report.md");
    std::fs::write(&out, md)?;
    Ok(out)
}
