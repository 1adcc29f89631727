use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use super::{data_err, path_str, read_text, write_with_manifest, CliError, CliResult};
use crate::compare::{compare, Trial};
use crate::formats::report_from_json;
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory of reports for mode A.
    #[arg(long)]
    pub a: PathBuf,
    /// Directory of reports for mode B.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Report files directly in `dir` or as `dir/*/report.json`, sorted by path.
pub(crate) fn report_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let err = |e: std::io::Error| CliError::Data(format!("{}: {e}", dir.display()));
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        if path.is_dir() {
            let nested = path.join("report.json");
            if nested.is_file() {
                out.push(nested);
            }
        } else if path.extension().is_some_and(|e| e == "json")
            && !path.to_string_lossy().ends_with(".manifest.json")
            && path.file_name().is_some_and(|n| n != "manifest.json")
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn load_trials(dir: &Path) -> CliResult<Vec<Trial>> {
    report_files(dir)?
        .iter()
        .map(|p| Ok(Trial::from(&report_from_json(&read_text(p)?).map_err(data_err(p))?)))
        .collect()
}

pub fn run(a: CompareArgs) -> CliResult {
    let ta = load_trials(&a.a)?;
    let tb = load_trials(&a.b)?;
    let summary = compare(&ta, &tb).map_err(|e| CliError::Data(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    let manifest =
        Manifest::new("compare").flag("a", path_str(&a.a)).flag("b", path_str(&a.b)).flag("out", path_str(&a.out));
    write_with_manifest(&a.out, &text, &manifest)?;

    out!("metric\tmedian_a\tmedian_b\tdelta\twinner");
    let rows = [
        ("exec_to_first_crash", &summary.a.exec_to_first_crash, &summary.b.exec_to_first_crash, &summary.exec_to_first_crash),
        ("unique_crashes", &summary.a.unique_crashes, &summary.b.unique_crashes, &summary.unique_crashes),
        ("covered_blocks", &summary.a.covered_blocks, &summary.b.covered_blocks, &summary.covered_blocks),
    ];
    for (name, sa, sb, m) in rows {
        let winner = serde_json::to_value(m.winner).expect("winner serializes");
        out!("{name}\t{}\t{}\t{}\t{}", sa.median, sb.median, m.delta, winner.as_str().unwrap_or_default());
    }
    out!("found\t{}/{}\t{}/{}", summary.a.found, summary.a.trials, summary.b.found, summary.b.trials);
    Ok(())
}
