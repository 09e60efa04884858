//! Dataset directories: instance files plus `manifest.csv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const MANIFEST: &str = "manifest.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub file: String,
    pub split: String,
}

/// Parses `a,b,c` shares and assigns consecutive blocks of `count` items.
pub fn assign_splits(count: usize, shares_text: &str) -> Result<Vec<&'static str>, CliError> {
    let shares: Vec<f64> = shares_text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("bad --split `{shares_text}`")))?;
    if shares.len() != 3 || shares.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(CliError::Config(format!(
            "--split needs three shares in [0, 1], got `{shares_text}`"
        )));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(CliError::Config(format!("--split shares sum to {total}, not 1")));
    }
    let n_train = (shares[0] * count as f64).round() as usize;
    let n_val = ((shares[1] * count as f64).round() as usize).min(count - n_train.min(count));
    Ok((0..count)
        .map(|i| {
            if i < n_train {
                "train"
            } else if i < n_train + n_val {
                "val"
            } else {
                "test"
            }
        })
        .collect())
}

/// Manifest rows: `file,split,<extra columns>`.
pub fn write_manifest(dir: &Path, header_extra: &str, rows: &[(String, &str, String)]) -> Result<(), CliError> {
    let mut out = format!("file,split,{header_extra}\n");
    for (file, split, extra) in rows {
        let _ = writeln!(out, "{file},{split},{extra}");
    }
    std::fs::write(dir.join(MANIFEST), out)?;
    Ok(())
}

/// Files of `dir` in the requested split. Without a manifest every file with
/// one of `extensions` is returned, whatever the split.
pub fn list(dir: &Path, split: &str, extensions: &[&str]) -> Result<Vec<PathBuf>, CliError> {
    let manifest = dir.join(MANIFEST);
    let entries: Vec<Entry> = if manifest.exists() {
        let text = std::fs::read_to_string(&manifest)?;
        text.lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let mut parts = l.split(',');
                match (parts.next(), parts.next()) {
                    (Some(f), Some(s)) => Ok(Entry {
                        file: f.to_string(),
                        split: s.to_string(),
                    }),
                    _ => Err(CliError::Data(format!("malformed manifest line `{l}`"))),
                }
            })
            .collect::<Result<_, _>>()?
    } else {
        let mut names: Vec<String> = std::fs::read_dir(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| extensions.iter().any(|x| n.to_lowercase().ends_with(x)))
            .collect();
        names.sort();
        names
            .into_iter()
            .map(|file| Entry {
                file,
                split: "all".into(),
            })
            .collect()
    };
    let files: Vec<PathBuf> = entries
        .into_iter()
        .filter(|e| split == "all" || e.split == "all" || e.split == split)
        .map(|e| dir.join(e.file))
        .collect();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_blocks() {
        let s = assign_splits(10, "0.6,0.2,0.2").unwrap();
        assert_eq!(s.iter().filter(|&&x| x == "train").count(), 6);
        assert_eq!(s.iter().filter(|&&x| x == "val").count(), 2);
        assert_eq!(s[9], "test");
        assert!(assign_splits(10, "0.5,0.5").is_err());
        assert!(assign_splits(10, "0.5,0.6,0.1").is_err());
        assert!(assign_splits(10, "a,b,c").is_err());
    }

    #[test]
    fn manifest_filtering() {
        let d = tempfile::tempdir().unwrap();
        write_manifest(
            d.path(),
            "n",
            &[("a.mtx".into(), "train", "3".into()), ("b.mtx".into(), "test", "3".into())],
        )
        .unwrap();
        assert_eq!(list(d.path(), "test", &[]).unwrap(), vec![d.path().join("b.mtx")]);
        assert_eq!(list(d.path(), "all", &[]).unwrap().len(), 2);
        let e = tempfile::tempdir().unwrap();
        std::fs::write(e.path().join("x.off"), "").unwrap();
        std::fs::write(e.path().join("notes.txt"), "").unwrap();
        assert_eq!(list(e.path(), "train", &[".off"]).unwrap().len(), 1);
    }
}
