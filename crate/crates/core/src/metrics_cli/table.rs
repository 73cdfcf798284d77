//! Numeric CSV tables with `#` comment headers and 17 significant digits.

use std::io::{Read, Write};

use crate::epr_scheme::NoiseCurve;
use crate::error::{Error, Result};

use super::{Comparison, HorizonCurve};

pub const SENSITIVITY_COLUMNS: [&str; 7] =
    ["freq_hz", "asd_total", "asd_input_loss", "asd_readout_loss", "asd_src_loss", "asd_arm_loss", "asd_filter_loss"];
pub const EQUIVALENCE_COLUMNS: [&str; 3] = ["freq_hz", "theta_two_cavity_rad", "theta_coupled_rad"];

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest text that keeps all 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { comments: vec![], columns: columns.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| format_number(*x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let comments = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim().to_string())
            .collect();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| {
                rec?.iter()
                    .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number '{s}': {e}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { comments, columns, rows })
    }
}

/// Sensitivity (or, with `budget`, noise-budget) table in strain ASD.
pub fn noise_table(curve: &NoiseCurve, budget: bool) -> Table {
    let mut cols = SENSITIVITY_COLUMNS.to_vec();
    if budget {
        cols.push("asd_squeezed");
    }
    let mut t = Table::new(&cols);
    t.comments.push(format!("scheme {}; one-sided strain ASD [1/sqrt(Hz)]; frequency [Hz]", curve.scheme.name()));
    for (f, p) in curve.freq_hz.iter().zip(&curve.points) {
        let mut row = vec![*f, p.total, p.input_loss, p.readout_loss, p.src_loss, p.arm_loss, p.filter_loss];
        if budget {
            row.push(p.squeezed);
        }
        for x in &mut row[1..] {
            *x = x.sqrt();
        }
        t.rows.push(row);
    }
    t
}

/// Rotation angles of the two-cavity target and its coupled replacement.
pub fn equivalence_table(freq_hz: &[f64], two_cavity: &[f64], coupled: &[f64]) -> Table {
    let mut t = Table::new(&EQUIVALENCE_COLUMNS);
    t.comments.push("quadrature rotation angles [rad]; frequency [Hz]".into());
    t.rows = freq_hz.iter().zip(two_cavity.iter().zip(coupled)).map(|(f, (a, b))| vec![*f, *a, *b]).collect();
    t
}

pub fn horizon_table(h: &HorizonCurve) -> Table {
    let mut cols = vec!["mass_msun".to_string()];
    for x in &h.horizons {
        cols.push(format!("z_{}", x.label));
        cols.push(format!("dl_mpc_{}", x.label));
    }
    let mut t = Table { comments: vec![], columns: cols, rows: vec![] };
    t.comments.push(h.settings.describe());
    t.comments.push("total source-frame mass [M_sun]; horizon redshift; luminosity distance [Mpc]".into());
    for (i, m) in h.mass_msun.iter().enumerate() {
        let mut row = vec![*m];
        for x in &h.horizons {
            row.push(x.redshift[i]);
            row.push(x.distance_mpc[i]);
        }
        t.rows.push(row);
    }
    t
}

pub fn comparison_table(c: &Comparison) -> Table {
    let mut cols = vec!["freq_hz".to_string()];
    cols.extend(c.labels.iter().map(|l| format!("asd_{l}")));
    let mut t = Table {
        comments: vec!["one-sided strain ASD [1/sqrt(Hz)]; frequency [Hz]".into()],
        columns: cols,
        rows: vec![],
    };
    for (k, f) in c.freq_hz.iter().enumerate() {
        let mut row = vec![*f];
        row.extend(c.asd.iter().map(|a| a[k]));
        t.rows.push(row);
    }
    t
}
