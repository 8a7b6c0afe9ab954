//! In-memory run artifacts and their serialisation to CSV and legacy VTK.
//!
//! Everything is rendered before the first file is created, so a failing
//! run leaves the output directory untouched.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use varfrac_core::ExtensionSystem;

use crate::config::OutputConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the run in every output file.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub task: String,
}

impl Provenance {
    pub fn new(config_bytes: &[u8], task: &str) -> Self {
        Self {
            config_sha256: format!("{:x}", Sha256::digest(config_bytes)),
            task: task.to_string(),
        }
    }

    fn csv_header(&self) -> String {
        format!(
            "# varfrac {VERSION}\n# config_sha256 {}\n# task {}\n",
            self.config_sha256, self.task
        )
    }
}

/// A CSV table of preformatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Two-column `quantity,value` table.
    pub fn key_value(pairs: Vec<(&str, String)>) -> Self {
        let mut t = Self::new(&["quantity", "value"]);
        for (k, v) in pairs {
            t.push(vec![k.to_string(), v]);
        }
        t
    }

    fn render(&self, prov: &Provenance) -> Result<Vec<u8>, CliError> {
        let mut out = prov.csv_header().into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        drop(w);
        Ok(out)
    }
}

/// Shortest representation that round-trips, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Full-cylinder nodal field for the VTK dump.
#[derive(Debug, Clone)]
pub struct VolumeField {
    pub points: Vec<[f64; 3]>,
    pub dims: [usize; 3],
    pub scalars: Vec<(String, Vec<f64>)>,
}

impl VolumeField {
    /// `u` on the free nodes, with zeros on the Dirichlet nodes, plus the
    /// order field evaluated at each node.
    pub fn from_system(sys: &ExtensionSystem, u: &[f64]) -> Self {
        let mesh = &sys.mesh;
        let n_x = mesh.n_x();
        let n_y = mesh.n_y();
        let dims = if mesh.dim() == 1 {
            [n_x, n_y, 1]
        } else {
            [n_x, n_x, n_y]
        };
        let mut points = Vec::with_capacity(mesh.num_nodes());
        let mut order = Vec::with_capacity(mesh.num_nodes());
        for node in 0..mesh.num_nodes() {
            let (x, y) = mesh.coords(node);
            points.push(if x.len() == 1 { [x[0], y, 0.0] } else { [x[0], x[1], y] });
            // Mesh nodes lie in the closed unit box, where the order is defined.
            order.push(sys.spec.order.eval(&x).unwrap_or(f64::NAN));
        }
        Self {
            points,
            dims,
            scalars: vec![("u".into(), sys.to_global(u)), ("order".into(), order)],
        }
    }

    fn render(&self, prov: &Provenance) -> String {
        let mut s = String::new();
        let n = self.points.len();
        writeln!(s, "# vtk DataFile Version 3.0").unwrap();
        writeln!(
            s,
            "varfrac {VERSION} task {} config_sha256 {}",
            prov.task, prov.config_sha256
        )
        .unwrap();
        writeln!(s, "ASCII\nDATASET STRUCTURED_GRID").unwrap();
        writeln!(s, "DIMENSIONS {} {} {}", self.dims[0], self.dims[1], self.dims[2]).unwrap();
        writeln!(s, "POINTS {n} double").unwrap();
        for p in &self.points {
            writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(p[2])).unwrap();
        }
        writeln!(s, "POINT_DATA {n}").unwrap();
        for (name, values) in &self.scalars {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for v in values {
                writeln!(s, "{}", num(*v)).unwrap();
            }
        }
        s
    }
}

/// Everything a task produces.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub solution: Option<VolumeField>,
    pub trace: Option<Table>,
    pub report: Table,
}

impl Artifacts {
    pub fn write(&self, dir: &Path, names: &OutputConfig, prov: &Provenance) -> Result<Vec<String>, CliError> {
        let mut files: Vec<(std::path::PathBuf, Vec<u8>)> = Vec::new();
        if let (Some(name), Some(field)) = (&names.solution, &self.solution) {
            files.push((dir.join(name), field.render(prov).into_bytes()));
        }
        if let (Some(name), Some(table)) = (&names.trace, &self.trace) {
            files.push((dir.join(name), table.render(prov)?));
        }
        if let Some(name) = &names.report {
            files.push((dir.join(name), self.report.render(prov)?));
        }
        let mut written = Vec::new();
        for (path, bytes) in files {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_provenance() {
        let prov = Provenance::new(b"{}", "solve");
        let t = Table::key_value(vec![("energy", num(-0.25))]);
        let text = String::from_utf8(t.render(&prov).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# varfrac {VERSION}"));
        assert_eq!(
            lines.next().unwrap(),
            "# config_sha256 44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
        assert_eq!(lines.next().unwrap(), "# task solve");
        assert_eq!(lines.next().unwrap(), "quantity,value");
        assert_eq!(lines.next().unwrap(), "energy,-2.5e-1");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
