use super::{FieldPath, Scheme, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::kernel_series::RhoSpec;
use crate::stable_green::{InitialMeasure, StableParams};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// JSON sidecar of a path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    pub seed: u64,
    pub grid: SpaceTimeGrid,
    pub params: StableParams,
    pub rho: Option<RhoSpec>,
    pub measure: InitialMeasure,
    pub scheme: Scheme,
    pub warm_start_t: f64,
    pub times: Vec<f64>,
    /// Cells with u < 0 and the most negative value.
    pub negative_cells: usize,
    pub min_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<serde_json::Value>,
}

impl FieldPath {
    pub fn manifest(&self) -> FieldManifest {
        FieldManifest {
            seed: self.seed,
            grid: self.grid,
            params: self.params,
            rho: self.rho,
            measure: self.measure.clone(),
            scheme: self.scheme,
            warm_start_t: self.warm_start_t,
            times: self.times.clone(),
            negative_cells: self.u.iter().filter(|v| **v < 0.0).count(),
            min_value: self.u.iter().cloned().fold(f64::INFINITY, f64::min),
            violations: None,
        }
    }

    /// Rows `n,j,t,x,u`, floats in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "n,j,t,x,u")?;
        let m = self.grid.n_nodes();
        for (n, &t) in self.times.iter().enumerate() {
            for j in 0..m {
                writeln!(
                    w,
                    "{n},{j},{t:?},{:?},{:?}",
                    self.grid.x(j),
                    self.u[n * m + j]
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(stem.with_extension("csv"))?)?;
        let f = std::fs::File::create(stem.with_extension("json"))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &self.manifest())?;
        Ok(())
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let man: FieldManifest = serde_json::from_reader(BufReader::new(std::fs::File::open(
            stem.with_extension("json"),
        )?))?;
        let m = man.grid.n_nodes();
        let mut u = vec![f64::NAN; man.times.len() * m];
        let r = BufReader::new(std::fs::File::open(stem.with_extension("csv"))?);
        for (i, line) in r.lines().enumerate().skip(1) {
            let line = line?;
            let f: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("line {}: {e}", i + 1)))
            };
            if f.len() != 5 {
                return Err(Error::Io(format!("line {}: expected 5 fields", i + 1)));
            }
            let n: usize = f[0]
                .parse()
                .map_err(|_| Error::Io(format!("line {}: bad n", i + 1)))?;
            let j: usize = f[1]
                .parse()
                .map_err(|_| Error::Io(format!("line {}: bad j", i + 1)))?;
            if n >= man.times.len() || j >= m {
                return Err(Error::Io(format!("line {}: index out of range", i + 1)));
            }
            u[n * m + j] = parse(f[4])?;
        }
        if u.iter().any(|v| v.is_nan()) {
            return Err(Error::Io("path CSV is missing cells".into()));
        }
        Ok(FieldPath {
            grid: man.grid,
            params: man.params,
            rho: man.rho,
            measure: man.measure,
            seed: man.seed,
            scheme: man.scheme,
            warm_start_t: man.warm_start_t,
            times: man.times,
            u,
        })
    }
}
