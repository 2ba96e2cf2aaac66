//! Posterior sample archive and its on-disk formats.
//!
//! A fit produces a `Chains` value holding the saved indicator and
//! probability draws plus acceptance bookkeeping. Persisted as a
//! directory:
//!
//! * `meta.json` — dimensions, sampler configuration, seed, format;
//! * `c_draws.csv` / `p_draws.csv` — long format with header
//!   `draw,series,time,value` and 1-based indices; or
//! * `c_draws.bin` / `p_draws.bin` — dense row-major binary with the
//!   8-byte magic `CCPPPM01`, three little-endian u64 dimensions
//!   `(n_save, L, n-1)`, then `n_save * L * (n-1)` values (u8 for
//!   indicators, little-endian f64 for probabilities).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CcpError, Result};
use crate::partition::ChangeIndicators;
use crate::sampler::McmcConfig;

const BINARY_MAGIC: &[u8; 8] = b"CCPPPM01";

/// Which sampler produced the archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Correlated change point model: per-time probabilities tied across
    /// series by the logit-scale t law.
    Ccp,
    /// Independent per-series baseline with a constant Beta-distributed
    /// change probability.
    Indep,
}

/// On-disk encoding of the draw matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainsFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainsMeta {
    method: Method,
    n: usize,
    l: usize,
    n_save: usize,
    format: ChainsFormat,
    config: McmcConfig,
    series_names: Vec<String>,
    accept: Vec<u64>,
    n_sweeps: u64,
    loglik: Vec<f64>,
}

/// Thinned posterior draws of `(C, P)` with acceptance bookkeeping.
///
/// Draw matrices are stored flat in draw-major, then series-major, then
/// time order. For the independent baseline, `P` holds each series'
/// constant probability broadcast over time, and the acceptance counters
/// equal the sweep count (conjugate Gibbs draws are never rejected).
#[derive(Debug, Clone, PartialEq)]
pub struct Chains {
    pub method: Method,
    /// Series length; draws cover `n - 1` indicator slots.
    pub n: usize,
    /// Number of series.
    pub l: usize,
    pub n_save: usize,
    pub config: McmcConfig,
    pub series_names: Vec<String>,
    /// `n_save * l * (n-1)` saved indicators.
    pub c_draws: Vec<u8>,
    /// `n_save * l * (n-1)` saved change probabilities.
    pub p_draws: Vec<f64>,
    /// Per-coordinate Metropolis acceptance counts, `l * (n-1)`.
    pub accept: Vec<u64>,
    /// Total sweeps run (attempts per coordinate).
    pub n_sweeps: u64,
    /// Total log marginal likelihood at each saved draw.
    pub loglik: Vec<f64>,
}

impl Chains {
    fn slots(&self) -> usize {
        self.n - 1
    }

    pub fn validate(&self) -> Result<()> {
        let expect = self.n_save * self.l * self.slots();
        if self.c_draws.len() != expect || self.p_draws.len() != expect {
            return Err(CcpError::InvalidInput(format!(
                "draw buffers hold {}/{} values, expected {expect}",
                self.c_draws.len(),
                self.p_draws.len()
            )));
        }
        if self.accept.len() != self.l * self.slots() {
            return Err(CcpError::InvalidInput(
                "acceptance counter shape mismatch".into(),
            ));
        }
        if self.loglik.len() != self.n_save {
            return Err(CcpError::InvalidInput(
                "log-likelihood trace length mismatch".into(),
            ));
        }
        if self.series_names.len() != self.l {
            return Err(CcpError::InvalidInput("series name count mismatch".into()));
        }
        Ok(())
    }

    #[inline]
    fn offset(&self, draw: usize, series: usize, t: usize) -> usize {
        (draw * self.l + series) * self.slots() + t
    }

    /// Indicator value of `series` at slot `t` (0-based) in `draw`.
    pub fn c_at(&self, draw: usize, series: usize, t: usize) -> u8 {
        self.c_draws[self.offset(draw, series, t)]
    }

    pub fn p_at(&self, draw: usize, series: usize, t: usize) -> f64 {
        self.p_draws[self.offset(draw, series, t)]
    }

    /// The indicator row of one series in one draw.
    pub fn c_row(&self, draw: usize, series: usize) -> &[u8] {
        let start = self.offset(draw, series, 0);
        &self.c_draws[start..start + self.slots()]
    }

    /// Partition of one series in one draw.
    pub fn partition(&self, draw: usize, series: usize) -> ChangeIndicators {
        ChangeIndicators::new(self.c_row(draw, series).to_vec(), self.n)
            .expect("stored draws are valid indicators")
    }

    /// Acceptance rate of coordinate `(series, t)`.
    pub fn acceptance_rate(&self, series: usize, t: usize) -> f64 {
        self.accept[series * self.slots() + t] as f64 / self.n_sweeps as f64
    }

    /// Mean acceptance rate over every coordinate.
    pub fn mean_acceptance_rate(&self) -> f64 {
        let total: u64 = self.accept.iter().sum();
        total as f64 / (self.accept.len() as u64 * self.n_sweeps) as f64
    }

    /// Writes `meta.json` plus the two draw files into `dir` (which must
    /// already exist).
    pub fn save(&self, dir: &Path, format: ChainsFormat) -> Result<()> {
        self.validate()?;
        let meta = ChainsMeta {
            method: self.method,
            n: self.n,
            l: self.l,
            n_save: self.n_save,
            format,
            config: self.config,
            series_names: self.series_names.clone(),
            accept: self.accept.clone(),
            n_sweeps: self.n_sweeps,
            loglik: self.loglik.clone(),
        };
        let meta_file = File::create(dir.join("meta.json"))?;
        serde_json::to_writer_pretty(BufWriter::new(meta_file), &meta)?;
        match format {
            ChainsFormat::Csv => {
                self.write_csv(dir.join("c_draws.csv"), |w, off| {
                    write!(w, "{}", self.c_draws[off])
                })?;
                self.write_csv(dir.join("p_draws.csv"), |w, off| {
                    write!(w, "{}", self.p_draws[off])
                })?;
            }
            ChainsFormat::Bin => {
                let mut w = BufWriter::new(File::create(dir.join("c_draws.bin"))?);
                self.write_bin_header(&mut w)?;
                w.write_all(&self.c_draws)?;
                w.flush()?;
                let mut w = BufWriter::new(File::create(dir.join("p_draws.bin"))?);
                self.write_bin_header(&mut w)?;
                for v in &self.p_draws {
                    w.write_all(&v.to_le_bytes())?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    fn write_csv<F>(&self, path: std::path::PathBuf, mut cell: F) -> Result<()>
    where
        F: FnMut(&mut BufWriter<File>, usize) -> std::io::Result<()>,
    {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "draw,series,time,value")?;
        for draw in 0..self.n_save {
            for series in 0..self.l {
                for t in 0..self.slots() {
                    write!(w, "{},{},{},", draw + 1, series + 1, t + 1)?;
                    cell(&mut w, self.offset(draw, series, t))?;
                    writeln!(w)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    fn write_bin_header<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        for dim in [self.n_save as u64, self.l as u64, self.slots() as u64] {
            w.write_all(&dim.to_le_bytes())?;
        }
        Ok(())
    }

    /// Loads an archive previously written by [`Chains::save`].
    pub fn load(dir: &Path) -> Result<Chains> {
        let meta_file = File::open(dir.join("meta.json"))?;
        let meta: ChainsMeta = serde_json::from_reader(BufReader::new(meta_file))?;
        let slots = meta
            .n
            .checked_sub(1)
            .ok_or_else(|| CcpError::InvalidInput("meta.json declares n = 0".into()))?;
        let expect = meta.n_save * meta.l * slots;
        let (c_draws, p_draws) = match meta.format {
            ChainsFormat::Csv => {
                let c = read_csv_values(&dir.join("c_draws.csv"), expect, meta.l, slots)?;
                let p = read_csv_values(&dir.join("p_draws.csv"), expect, meta.l, slots)?;
                let c_u8 = c
                    .into_iter()
                    .map(|v| {
                        if v == 0.0 || v == 1.0 {
                            Ok(v as u8)
                        } else {
                            Err(CcpError::InvalidInput(format!(
                                "indicator draw {v} is not 0/1"
                            )))
                        }
                    })
                    .collect::<Result<Vec<u8>>>()?;
                (c_u8, p)
            }
            ChainsFormat::Bin => {
                let c = read_bin(&dir.join("c_draws.bin"), expect, meta.n_save, meta.l, slots)?;
                let p_raw =
                    read_bin_f64(&dir.join("p_draws.bin"), expect, meta.n_save, meta.l, slots)?;
                (c, p_raw)
            }
        };
        let chains = Chains {
            method: meta.method,
            n: meta.n,
            l: meta.l,
            n_save: meta.n_save,
            config: meta.config,
            series_names: meta.series_names,
            c_draws,
            p_draws,
            accept: meta.accept,
            n_sweeps: meta.n_sweeps,
            loglik: meta.loglik,
        };
        chains.validate()?;
        Ok(chains)
    }
}

fn read_csv_values(path: &Path, expect: usize, l: usize, slots: usize) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; expect];
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "draw,series,time,value" => {}
        _ => {
            return Err(CcpError::InvalidInput(format!(
                "{}: missing draw,series,time,value header",
                path.display()
            )))
        }
    }
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(4, ',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| {
                CcpError::InvalidInput(format!(
                    "{}: malformed row at line {}",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        let draw = parse(parts.next())? as usize;
        let series = parse(parts.next())? as usize;
        let time = parse(parts.next())? as usize;
        let value = parse(parts.next())?;
        if draw < 1 || series < 1 || series > l || time < 1 || time > slots {
            return Err(CcpError::InvalidInput(format!(
                "{}: index out of range at line {}",
                path.display(),
                lineno + 2
            )));
        }
        let off = ((draw - 1) * l + (series - 1)) * slots + (time - 1);
        if off >= expect {
            return Err(CcpError::InvalidInput(format!(
                "{}: draw index out of range at line {}",
                path.display(),
                lineno + 2
            )));
        }
        out[off] = value;
        seen += 1;
    }
    if seen != expect {
        return Err(CcpError::InvalidInput(format!(
            "{}: expected {expect} rows, found {seen}",
            path.display()
        )));
    }
    Ok(out)
}

fn read_bin_header<R: Read>(r: &mut R, n_save: usize, l: usize, slots: usize) -> Result<()> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(CcpError::InvalidInput(
            "binary draw file has wrong magic".into(),
        ));
    }
    let mut buf = [0u8; 8];
    for expect in [n_save as u64, l as u64, slots as u64] {
        r.read_exact(&mut buf)?;
        let got = u64::from_le_bytes(buf);
        if got != expect {
            return Err(CcpError::InvalidInput(format!(
                "binary draw file dimension {got} does not match meta.json value {expect}"
            )));
        }
    }
    Ok(())
}

fn read_bin(path: &Path, expect: usize, n_save: usize, l: usize, slots: usize) -> Result<Vec<u8>> {
    let mut r = BufReader::new(File::open(path)?);
    read_bin_header(&mut r, n_save, l, slots)?;
    let mut out = vec![0u8; expect];
    r.read_exact(&mut out)?;
    Ok(out)
}

fn read_bin_f64(
    path: &Path,
    expect: usize,
    n_save: usize,
    l: usize,
    slots: usize,
) -> Result<Vec<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    read_bin_header(&mut r, n_save, l, slots)?;
    let mut bytes = vec![0u8; expect * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}
