//! Flat-file outputs. Every file is written to a temporary sibling and
//! renamed into place, so readers never see a partial file.
//!
//! Schemas (version [`SCHEMA_VERSION`]):
//! - `trajectory.csv`: `k,t,node,opinion`
//! - `stages.csv`: `k,t,u1,u2,spend1,spend2,sup_distance,rms_distance`
//! - `sweep.csv`: `profile,k1,u1,u2,player1_improves,player2_improves,sustainable,certificate`
//! - `table1.csv`: `n_nodes,convergence_stage,sup_norm_stage,proposed_u1,proposed_u2,ne_u1,ne_u2,
//!   proposed_u1_rounded,proposed_u2_rounded,ne_u1_rounded,ne_u2_rounded`
//! - `history.json`, `summary.json`: JSON objects carrying `schema_version`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::experiment::{SweepRow, Table1Row, SCHEMA_VERSION};
use crate::strategy::History;

fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_csv<F>(path: &Path, header: &[&str], rows: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<&mut dyn Write>) -> Result<()>,
{
    write_atomic(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        rows(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")?;
        Ok(())
    })
}

#[derive(Serialize)]
struct HistoryFile<'a> {
    schema_version: u32,
    history: &'a History,
}

/// Full per-stage record; the sampled flow goes to the trajectory CSV instead.
pub fn write_history_json(path: &Path, history: &History) -> Result<()> {
    let mut slim = history.clone();
    slim.trajectory.clear();
    write_json(
        path,
        &HistoryFile {
            schema_version: SCHEMA_VERSION,
            history: &slim,
        },
    )
}

pub fn write_trajectory_csv(path: &Path, history: &History, nodes: &[usize]) -> Result<()> {
    write_csv(path, &["k", "t", "node", "opinion"], |w| {
        for s in &history.trajectory {
            for &n in nodes {
                let v = s.values.get(n - 1).ok_or(Error::Dimension {
                    expected: n,
                    actual: s.values.len(),
                })?;
                w.write_record([s.stage.to_string(), s.time.to_string(), n.to_string(), v.to_string()])?;
            }
        }
        Ok(())
    })
}

pub fn write_stages_csv(path: &Path, history: &History) -> Result<()> {
    let eta = history.params.eta();
    write_csv(
        path,
        &["k", "t", "u1", "u2", "spend1", "spend2", "sup_distance", "rms_distance"],
        |w| {
            for r in &history.records {
                w.write_record([
                    r.stage.to_string(),
                    r.time.to_string(),
                    r.u1.to_string(),
                    r.u2.to_string(),
                    r.a1.total().to_string(),
                    r.a2.total().to_string(),
                    r.pre_state.sup_distance(eta).to_string(),
                    r.pre_state.rms_distance(eta).to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv(
        path,
        &[
            "profile",
            "k1",
            "u1",
            "u2",
            "player1_improves",
            "player2_improves",
            "sustainable",
            "certificate",
        ],
        |w| {
            for r in rows {
                w.write_record([
                    r.profile.clone(),
                    opt(r.k1),
                    r.u1.to_string(),
                    r.u2.to_string(),
                    r.player1_improves.to_string(),
                    r.player2_improves.to_string(),
                    r.sustainable.to_string(),
                    opt(r.certificate),
                ])?;
            }
            Ok(())
        },
    )
}

pub fn write_table1_csv(path: &Path, rows: &[Table1Row]) -> Result<()> {
    write_csv(
        path,
        &[
            "n_nodes",
            "convergence_stage",
            "sup_norm_stage",
            "proposed_u1",
            "proposed_u2",
            "ne_u1",
            "ne_u2",
            "proposed_u1_rounded",
            "proposed_u2_rounded",
            "ne_u1_rounded",
            "ne_u2_rounded",
        ],
        |w| {
            for r in rows {
                let [a, b, c, d] = r.rounded();
                w.write_record([
                    r.n_nodes.to_string(),
                    r.convergence_stage.to_string(),
                    opt(r.sup_norm_stage),
                    r.proposed.0.to_string(),
                    r.proposed.1.to_string(),
                    r.repeated_ne.0.to_string(),
                    r.repeated_ne.1.to_string(),
                    a.to_string(),
                    b.to_string(),
                    c.to_string(),
                    d.to_string(),
                ])?;
            }
            Ok(())
        },
    )
}
