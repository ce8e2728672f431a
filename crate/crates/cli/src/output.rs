//! Output files: CSV series, JSON reports and gnuplot scripts, each stamped
//! with the config hash and precision.

use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Stamp {
    pub hash: String,
    pub precision_bits: u32,
}

/// Doubles with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Out {
    dir: PathBuf,
    stamp: Stamp,
    pub written: Vec<PathBuf>,
}

impl Out {
    pub fn new(dir: &Path, stamp: Stamp) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Out { dir: dir.to_path_buf(), stamp, written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    /// CSV with two `#` comment lines carrying the stamp, then the header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let path = self.path(name);
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# config_sha256={}", self.stamp.hash)?;
        writeln!(f, "# precision_bits={}", self.stamp.precision_bits)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON object `{config_sha256, precision_bits, result}`.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Stamped<'a, T> {
            config_sha256: &'a str,
            precision_bits: u32,
            result: &'a T,
        }
        let path = self.path(name);
        let body = Stamped { config_sha256: &self.stamp.hash, precision_bits: self.stamp.precision_bits, result: value };
        let mut text = serde_json::to_string_pretty(&body).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }

    /// gnuplot script plotting columns of a CSV written by this run.
    pub fn gnuplot(&mut self, name: &str, csv_name: &str, plot: &str) -> std::io::Result<()> {
        let path = self.path(name);
        let text = format!(
            "# config_sha256={}\n# precision_bits={}\nset datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset grid\n{plot}\n",
            self.stamp.hash, self.stamp.precision_bits
        )
        .replace("DATA", &format!("'{csv_name}'"));
        std::fs::write(path, text)
    }
}
