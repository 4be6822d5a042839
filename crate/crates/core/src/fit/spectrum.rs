//! Impedance spectra: validation, synthesis and CSV/JSON ingestion.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{internal_impedance, SmallSignalModel};
use crate::schema;

/// Frequencies accepted for fitting, Hz.
pub const MIN_FREQUENCY: f64 = 0.1;
pub const MAX_FREQUENCY: f64 = 10e6;

pub const CSV_HEADER: [&str; 3] = ["f_hz", "re_ohm", "im_ohm"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedancePoint {
    pub frequency: f64,
    pub re: f64,
    pub im: f64,
}

impl ImpedancePoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Sidecar metadata for a spectrum file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumMetadata {
    #[serde(default = "schema::current")]
    pub schema_version: u32,
    #[serde(default)]
    pub illuminance_lux: Option<f64>,
    #[serde(default)]
    pub bias_v: Option<f64>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSpectrum {
    pub points: Vec<ImpedancePoint>,
    pub metadata: SpectrumMetadata,
}

impl ImpedanceSpectrum {
    pub fn new(points: Vec<ImpedancePoint>, metadata: SpectrumMetadata) -> Result<Self> {
        let s = Self { points, metadata };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Validation("spectrum has no points".into()));
        }
        let mut prev = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            if !(p.frequency.is_finite() && p.re.is_finite() && p.im.is_finite()) {
                return Err(Error::Validation(format!("row {i}: non-finite value")));
            }
            if !(MIN_FREQUENCY..=MAX_FREQUENCY).contains(&p.frequency) {
                return Err(Error::Validation(format!(
                    "row {i}: frequency {} Hz outside [{MIN_FREQUENCY}, {MAX_FREQUENCY}] Hz",
                    p.frequency
                )));
            }
            if p.frequency <= prev {
                return Err(Error::Validation(format!(
                    "row {i}: frequencies must be strictly increasing"
                )));
            }
            prev = p.frequency;
        }
        Ok(())
    }

    /// Noiseless spectrum of the internal impedance of `m`.
    pub fn synthesize(m: &SmallSignalModel, freqs: &[f64]) -> Result<Self> {
        let points = freqs
            .iter()
            .map(|&f| {
                let z = internal_impedance(m, f);
                ImpedancePoint {
                    frequency: f,
                    re: z.re,
                    im: z.im,
                }
            })
            .collect();
        Self::new(points, SpectrumMetadata::default())
    }

    /// Number of decades spanned by the frequency axis.
    pub fn decades(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => (b.frequency / a.frequency).log10(),
            _ => 0.0,
        }
    }

    /// Copy with `delta` added to every real part.
    pub fn shifted_re(&self, delta: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| ImpedancePoint { re: p.re + delta, ..*p })
            .collect();
        Self {
            points,
            metadata: self.metadata.clone(),
        }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Validation(format!(
                "expected header '{}', got '{}'",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Validation(format!("row {i}: expected 3 columns")));
            }
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .parse::<f64>()
                    .map_err(|_| Error::Validation(format!("row {i}: cannot parse '{}'", &rec[k])))
            };
            points.push(ImpedancePoint {
                frequency: num(0)?,
                re: num(1)?,
                im: num(2)?,
            });
        }
        Self::new(points, SpectrumMetadata::default())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([p.frequency.to_string(), p.re.to_string(), p.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `csv_path` and, when present, its JSON sidecar.
    pub fn load(csv_path: &Path, sidecar: Option<&Path>) -> Result<Self> {
        let file = std::fs::File::open(csv_path)
            .map_err(|e| Error::Io(format!("{}: {e}", csv_path.display())))?;
        let mut s = Self::read_csv(file)?;
        if let Some(meta) = sidecar {
            let text = std::fs::read_to_string(meta)
                .map_err(|e| Error::Io(format!("{}: {e}", meta.display())))?;
            let m: SpectrumMetadata = serde_json::from_str(&text)?;
            schema::check(m.schema_version, "spectrum metadata")?;
            s.metadata = m;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "f_hz,re_ohm,im_ohm\n1,2510,-0.5\n10,2500.1,-5.8\n100,2480,-58\n";

    #[test]
    fn reads_well_formed_csv() {
        let s = ImpedanceSpectrum::read_csv(CSV.as_bytes()).unwrap();
        assert_eq!(s.points.len(), 3);
        assert_eq!(s.points[1].re, 2500.1);
        assert_eq!(s.points[2].im, -58.0);
    }

    #[test]
    fn rejects_wrong_header() {
        let bad = "freq,re,im\n1,2,3\n";
        let err = ImpedanceSpectrum::read_csv(bad.as_bytes()).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn rejects_thousands_separator_and_out_of_range() {
        let bad = "f_hz,re_ohm,im_ohm\n1,\"2,510\",-1\n";
        assert!(ImpedanceSpectrum::read_csv(bad.as_bytes()).is_err());
        let low = "f_hz,re_ohm,im_ohm\n0.01,1,-1\n";
        assert!(ImpedanceSpectrum::read_csv(low.as_bytes()).is_err());
        let high = "f_hz,re_ohm,im_ohm\n2e7,1,-1\n";
        assert!(ImpedanceSpectrum::read_csv(high.as_bytes()).is_err());
        let unsorted = "f_hz,re_ohm,im_ohm\n10,1,-1\n5,1,-1\n";
        assert!(ImpedanceSpectrum::read_csv(unsorted.as_bytes()).is_err());
    }

    #[test]
    fn metadata_rejects_unknown_fields() {
        let ok: SpectrumMetadata =
            serde_json::from_str(r#"{"illuminance_lux": 200, "bias_v": 0.0, "label": "a"}"#).unwrap();
        assert_eq!(ok.illuminance_lux, Some(200.0));
        assert_eq!(ok.schema_version, 1);
        assert!(serde_json::from_str::<SpectrumMetadata>(r#"{"lux": 200}"#).is_err());
    }
}
