//! Report types and their JSON/CSV rendering.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Rounds to 12 significant digits so the shortest round-trip form printed
/// by the serialisers carries no more than that.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn sig12_opt(x: Option<f64>) -> Option<f64> {
    x.map(sig12)
}

#[derive(Debug, Serialize)]
pub struct PriceReport {
    pub k: usize,
    pub state: String,
    pub cmax: f64,
}

#[derive(Debug, Serialize)]
pub struct NextValue {
    #[serde(rename = "move")]
    pub lambda: String,
    pub value: f64,
    pub cmax_next: f64,
    pub surplus: f64,
}

#[derive(Debug, Serialize)]
pub struct HedgeReport {
    pub k: usize,
    pub state: String,
    pub assets: Vec<String>,
    pub alpha: Vec<f64>,
    pub setup_cost: f64,
    pub cmax: f64,
    /// `all` when every joint move is listed, `rho` for the chain moves only.
    pub next_moves: &'static str,
    pub next_values: Vec<NextValue>,
}

#[derive(Debug, Serialize)]
pub struct BacktestRow {
    pub step: String,
    pub state: String,
    pub setup_cost: Option<f64>,
    pub cmax: Option<f64>,
    pub delta: Option<f64>,
    pub delta_carried: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BacktestReport {
    pub path: String,
    pub rows: Vec<BacktestRow>,
    pub accumulated: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifyRow {
    pub method: &'static str,
    pub k: usize,
    pub state: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_dev: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub tol: f64,
    pub max_abs_dev: f64,
    pub passed: bool,
    pub rows: Vec<VerifyRow>,
}

pub enum Report {
    Price(PriceReport),
    Hedge(HedgeReport),
    Backtest(BacktestReport),
    Verify(VerifyReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Report {
    /// Applies the 12-significant-digit rounding to every real.
    pub fn rounded(self) -> Self {
        match self {
            Report::Price(r) => Report::Price(PriceReport { cmax: sig12(r.cmax), ..r }),
            Report::Hedge(r) => Report::Hedge(HedgeReport {
                alpha: r.alpha.into_iter().map(sig12).collect(),
                setup_cost: sig12(r.setup_cost),
                cmax: sig12(r.cmax),
                next_values: r
                    .next_values
                    .into_iter()
                    .map(|v| NextValue {
                        value: sig12(v.value),
                        cmax_next: sig12(v.cmax_next),
                        surplus: sig12(v.surplus),
                        ..v
                    })
                    .collect(),
                ..r
            }),
            Report::Backtest(r) => Report::Backtest(BacktestReport {
                rows: r
                    .rows
                    .into_iter()
                    .map(|row| BacktestRow {
                        setup_cost: sig12_opt(row.setup_cost),
                        cmax: sig12_opt(row.cmax),
                        delta: sig12_opt(row.delta),
                        delta_carried: sig12_opt(row.delta_carried),
                        ..row
                    })
                    .collect(),
                accumulated: sig12(r.accumulated),
                ..r
            }),
            Report::Verify(r) => Report::Verify(VerifyReport {
                max_abs_dev: sig12(r.max_abs_dev),
                rows: r
                    .rows
                    .into_iter()
                    .map(|row| VerifyRow {
                        closed_form: sig12(row.closed_form),
                        oracle: sig12(row.oracle),
                        abs_dev: sig12(row.abs_dev),
                        ..row
                    })
                    .collect(),
                ..r
            }),
        }
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let mut sink: Box<dyn Write> = match out {
            Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
            None => Box::new(io::stdout().lock()),
        };
        match format {
            Format::Json => {
                match self {
                    Report::Price(r) => serde_json::to_writer_pretty(&mut sink, r)?,
                    Report::Hedge(r) => serde_json::to_writer_pretty(&mut sink, r)?,
                    Report::Backtest(r) => serde_json::to_writer_pretty(&mut sink, r)?,
                    Report::Verify(r) => serde_json::to_writer_pretty(&mut sink, r)?,
                }
                writeln!(sink)?;
            }
            Format::Csv => self.write_csv(&mut sink)?,
        }
        sink.flush()?;
        Ok(())
    }

    fn write_csv(&self, sink: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        match self {
            Report::Price(r) => w.serialize(r)?,
            Report::Hedge(r) => {
                w.write_record(["asset", "alpha"])?;
                for (name, a) in r.assets.iter().zip(&r.alpha) {
                    w.write_record([name.clone(), a.to_string()])?;
                }
            }
            Report::Backtest(r) => {
                for row in &r.rows {
                    w.serialize(row)?;
                }
                w.serialize(BacktestRow {
                    step: "accumulated".into(),
                    state: r.path.clone(),
                    setup_cost: None,
                    cmax: None,
                    delta: None,
                    delta_carried: Some(r.accumulated),
                })?;
            }
            Report::Verify(r) => {
                for row in &r.rows {
                    w.serialize(row)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(125.0 / 18.0).to_string(), "6.94444444444");
        assert_eq!(sig12(-108.0 / 225.0).to_string(), "-0.48");
        assert_eq!(sig12(4.0 / 9.0).to_string(), "0.444444444444");
        assert_eq!(sig12(-0.0).to_string(), "0");
        assert_eq!(sig12(1e-300), 1e-300);
    }
}
