//! Gnuplot-ready whitespace-separated columns derived from run artifacts.
//!
//! | source              | file(s)                | columns                      |
//! |---------------------|------------------------|------------------------------|
//! | `solution.csv`      | `solution.dat`         | t x_1 .. x_m                 |
//! | `ldp_scan.csv`      | `ldp_scan.dat`         | epsilon eps_log_p ci_lo ci_hi|
//! | `flil.csv`          | `flil_seed<S>.dat`     | u dist                       |
//! | `fw_tube.csv`       | `fw_tube.dat`          | epsilon phat ci_lo ci_hi     |
//! | `yosida_converge.csv` | `yosida_converge.dat` | alpha mean_sup_dist         |
//! | `control.csv`       | `control.dat`          | t hdot_1 .. hdot_k           |

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

fn read(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

fn columns(header: &[String], names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::MissingInput(format!("column {n}")))
        })
        .collect()
}

fn write_dat(path: &Path, comment: &str, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# {comment}")?;
    for row in rows {
        writeln!(out, "{}", row.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn select<'a>(rows: &'a [Vec<String>], idx: &[usize]) -> impl Iterator<Item = Vec<String>> + 'a {
    let idx = idx.to_vec();
    rows.iter().map(move |r| {
        idx.iter()
            .map(|&i| {
                if r[i].is_empty() {
                    "nan".to_string()
                } else {
                    r[i].clone()
                }
            })
            .collect()
    })
}

/// Converts the known CSV artifacts in `dir` into `.dat` files and returns
/// their paths. Fails with `MissingInput` when none are present.
pub fn emit_plotdata(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let simple: [(&str, &[&str], Option<&str>); 4] = [
        (
            "ldp_scan",
            &["epsilon", "eps_log_p", "ci_lo", "ci_hi"],
            None,
        ),
        ("fw_tube", &["epsilon", "phat", "ci_lo", "ci_hi"], None),
        ("yosida_converge", &["alpha", "mean_sup_dist"], None),
        ("solution", &[], Some("x_")),
    ];
    for (stem, names, prefix) in simple {
        let src = dir.join(format!("{stem}.csv"));
        if !src.exists() {
            continue;
        }
        let (header, rows) = read(&src)?;
        let idx = match prefix {
            Some(p) => std::iter::once(0)
                .chain((0..header.len()).filter(|&i| header[i].starts_with(p)))
                .collect(),
            None => columns(&header, names)?,
        };
        let comment = idx
            .iter()
            .map(|&i| header[i].as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let dst = dir.join(format!("{stem}.dat"));
        write_dat(&dst, &comment, select(&rows, &idx))?;
        written.push(dst);
    }
    let control = dir.join("control.csv");
    if control.exists() {
        let (header, rows) = read(&control)?;
        let idx: Vec<usize> = (0..header.len()).collect();
        let dst = dir.join("control.dat");
        write_dat(&dst, &header.join(" "), select(&rows, &idx))?;
        written.push(dst);
    }
    let flil = dir.join("flil.csv");
    if flil.exists() {
        let (header, rows) = read(&flil)?;
        let idx = columns(&header, &["seed", "u", "dist"])?;
        let mut by_seed: BTreeMap<u64, Vec<Vec<String>>> = BTreeMap::new();
        for r in &rows {
            let seed = r[idx[0]]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad seed {}", r[idx[0]])))?;
            by_seed
                .entry(seed)
                .or_default()
                .push(vec![r[idx[1]].clone(), r[idx[2]].clone()]);
        }
        for (seed, rows) in by_seed {
            let dst = dir.join(format!("flil_seed{seed}.dat"));
            write_dat(&dst, "u dist", rows.into_iter())?;
            written.push(dst);
        }
    }
    if written.is_empty() {
        return Err(Error::MissingInput(format!(
            "no result files in {}",
            dir.display()
        )));
    }
    Ok(written)
}
