//! File formats: comma-separated tables with a header row and sample sidecars.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every finite double exactly.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use frv_core::ensembles::EnsembleConfig;
use frv_core::models::ModelSpec;
use frv_core::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SAMPLE_SCHEMA: &str = "frv-sample/1";
pub const REPORT_SCHEMA: &str = "frv-report/1";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Writes `bytes` to `path`, or to stdout for `-`.
pub fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if is_stdout(path) {
        let mut out = io::stdout().lock();
        out.write_all(bytes).and_then(|_| out.flush()).map_err(CliError::io("<stdout>"))
    } else {
        fs::write(path, bytes).map_err(CliError::io(path))
    }
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(CliError::io(path))
}

/// Builds a CSV document in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

/// Parses a CSV document, checking the header, into rows of fields.
pub fn parse_table(path: &Path, bytes: &[u8], header: &[&str]) -> CliResult<Vec<csv::StringRecord>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let got = reader.headers().map_err(csv_err)?.clone();
    if !got.iter().eq(header.iter().copied()) {
        return Err(CliError::Input(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader.records().collect::<Result<_, _>>().map_err(csv_err)
}

pub fn parse_field(path: &Path, line: usize, s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{}: row {line}: '{s}' is not a number", path.display())))
}

pub fn eigen_table(points: &[Complex]) -> Vec<u8> {
    let mut t = Table::new(&["re", "im"]);
    for z in points {
        t.row([fmt_f64(z.re), fmt_f64(z.im)]);
    }
    t.into_bytes()
}

pub fn parse_eigen_table(path: &Path, bytes: &[u8]) -> CliResult<Vec<Complex>> {
    parse_table(path, bytes, &["re", "im"])?
        .iter()
        .enumerate()
        .map(|(i, r)| Ok(Complex::new(parse_field(path, i + 1, &r[0])?, parse_field(path, i + 1, &r[1])?)))
        .collect()
}

/// The ensemble parameters fixed by a sample run, in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub model: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

impl SampleConfig {
    pub fn from_ensemble(cfg: &EnsembleConfig) -> Self {
        Self {
            model: cfg.model.to_string(),
            n: cfg.n,
            samples: cfg.samples,
            seed: cfg.seed,
        }
    }

    pub fn ensemble(&self) -> CliResult<EnsembleConfig> {
        let model: ModelSpec = self.model.parse()?;
        let cfg = EnsembleConfig {
            model,
            n: self.n,
            samples: self.samples,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sha256(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("plain struct").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: String,
    pub config: SampleConfig,
    pub config_sha256: String,
    pub data_sha256: String,
    pub rows: usize,
}

impl Sidecar {
    pub fn new(config: SampleConfig, data: &[u8], rows: usize) -> Self {
        Self {
            schema: SAMPLE_SCHEMA.into(),
            config_sha256: config.sha256(),
            config,
            data_sha256: sha256_hex(data),
            rows,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut s = serde_json::to_vec_pretty(self).expect("plain struct");
        s.push(b'\n');
        s
    }

    /// Checks the schema and both hashes against `data`.
    pub fn check(&self, data: &[u8]) -> CliResult<()> {
        if self.schema != SAMPLE_SCHEMA {
            return Err(CliError::Integrity(format!("unknown sidecar schema '{}'", self.schema)));
        }
        if self.config.sha256() != self.config_sha256 {
            return Err(CliError::Integrity("config hash does not match the recorded config".into()));
        }
        if sha256_hex(data) != self.data_sha256 {
            return Err(CliError::Integrity("data hash does not match the eigenvalue file".into()));
        }
        Ok(())
    }
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_sidecar(path: &Path) -> CliResult<Sidecar> {
    serde_json::from_slice(&read_bytes(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// A sampled cloud loaded and checked against its sidecar.
pub struct LoadedCloud {
    pub sidecar: Sidecar,
    pub config: EnsembleConfig,
    pub points: Vec<Complex>,
}

pub fn load_cloud(input: &Path, sidecar: Option<&Path>) -> CliResult<LoadedCloud> {
    let data = read_bytes(input)?;
    let side_path = sidecar.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(input));
    let side = read_sidecar(&side_path)?;
    side.check(&data)?;
    let config = side.config.ensemble()?;
    let points = parse_eigen_table(input, &data)?;
    if points.len() != side.rows || points.len() != config.n * config.samples {
        return Err(CliError::Integrity(format!(
            "{} rows, sidecar records {} for n = {} and {} samples",
            points.len(),
            side.rows,
            config.n,
            config.samples
        )));
    }
    Ok(LoadedCloud {
        sidecar: side,
        config,
        points,
    })
}
