use std::fmt::Write as _;
use std::io::Read;

use crate::error::FitError;

/// Equal-width bins starting at `origin`. Counts are real so a histogram can
/// also carry synthetic or weighted mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    origin: f64,
    bin_width: f64,
    counts: Vec<f64>,
}

impl Histogram {
    pub fn new(origin: f64, bin_width: f64, counts: Vec<f64>) -> Result<Self, FitError> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(FitError::Histogram(format!("bin width must be > 0, got {bin_width}")));
        }
        if !origin.is_finite() {
            return Err(FitError::Histogram("origin must be finite".into()));
        }
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(FitError::Histogram(format!("counts must be finite and >= 0, got {c}")));
        }
        Ok(Self {
            origin,
            bin_width,
            counts,
        })
    }

    /// Unit-width bins `0..=max` over nonnegative integer values.
    pub fn from_counts<I: IntoIterator<Item = u64>>(values: I) -> Self {
        let mut counts: Vec<f64> = Vec::new();
        for v in values {
            let i = v as usize;
            if i >= counts.len() {
                counts.resize(i + 1, 0.0);
            }
            counts[i] += 1.0;
        }
        Self {
            origin: 0.0,
            bin_width: 1.0,
            counts,
        }
    }

    /// Bins real samples with the given width, starting at `origin`. Samples
    /// below the origin are rejected.
    pub fn from_samples(samples: &[f64], origin: f64, bin_width: f64) -> Result<Self, FitError> {
        let mut hist = Self::new(origin, bin_width, Vec::new())?;
        for &x in samples {
            if !x.is_finite() || x < origin {
                return Err(FitError::Histogram(format!("sample {x} lies outside [{origin}, inf)")));
            }
            let i = ((x - origin) / bin_width).floor() as usize;
            if i >= hist.counts.len() {
                hist.counts.resize(i + 1, 0.0);
            }
            hist.counts[i] += 1.0;
        }
        Ok(hist)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn lower_edge(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.bin_width
    }

    pub fn upper_edge(&self, i: usize) -> f64 {
        self.lower_edge(i + 1)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.bin_width
    }

    pub fn nonzero_bins(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0.0).count()
    }

    /// Index of the last bin with positive count.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.counts.iter().rposition(|c| *c > 0.0)
    }

    /// Bin with the largest count; ties go to the lower bin.
    pub fn mode(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &c) in self.counts.iter().enumerate() {
            if best.is_none_or(|b| c > self.counts[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Relative frequencies `count / total`.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total();
        self.counts
            .iter()
            .map(|c| if total > 0.0 { c / total } else { 0.0 })
            .collect()
    }

    /// Frequencies divided by the bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.frequencies().into_iter().map(|f| f / self.bin_width).collect()
    }

    /// Counts rise to a single peak and then fall (plateaus allowed, no
    /// second rise).
    pub fn is_unimodal(&self) -> bool {
        let mut falling = false;
        for w in self.counts.windows(2) {
            if w[1] < w[0] {
                falling = true;
            } else if w[1] > w[0] && falling {
                return false;
            }
        }
        true
    }

    /// CSV with columns `bin,count,frequency`; `bin` is the lower edge.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,count,frequency\n");
        for (i, (c, f)) in self.counts.iter().zip(self.frequencies()).enumerate() {
            let _ = writeln!(out, "{},{},{}", self.lower_edge(i), c, f);
        }
        out
    }

    /// Parses the `bin,count[,frequency]` format written by [`Histogram::to_csv`].
    /// Bins must be equally spaced and increasing.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, FitError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| FitError::Histogram(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (bin_col, count_col) = match (col("bin"), col("count")) {
            (Some(b), Some(c)) => (b, c),
            _ => {
                return Err(FitError::Histogram(
                    "expected header with `bin` and `count` columns".into(),
                ))
            }
        };
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| FitError::Histogram(e.to_string()))?;
            let parse = |i: usize| -> Result<f64, FitError> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| FitError::Histogram(format!("row {}: unreadable number", row + 2)))
            };
            edges.push(parse(bin_col)?);
            counts.push(parse(count_col)?);
        }
        if edges.is_empty() {
            return Err(FitError::Histogram("histogram has no bins".into()));
        }
        let width = if edges.len() > 1 { edges[1] - edges[0] } else { 1.0 };
        for (i, w) in edges.windows(2).enumerate() {
            let step = w[1] - w[0];
            if !(step > 0.0) || (step - width).abs() > 1e-9 * width.abs().max(1.0) {
                return Err(FitError::Histogram(format!(
                    "row {}: bins must be increasing with constant width",
                    i + 3
                )));
            }
        }
        Self::new(edges[0], width, counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_counting() {
        let h = Histogram::from_counts([0, 1, 1, 2]);
        assert_eq!(h.counts(), &[1.0, 2.0, 1.0]);
        assert_eq!(h.total(), 4.0);
        assert_eq!(h.mode(), Some(1));
        assert!(h.is_unimodal());
    }

    #[test]
    fn unimodality() {
        let mk = |c: Vec<f64>| Histogram::new(0.0, 1.0, c).unwrap();
        assert!(mk(vec![1.0, 3.0, 3.0, 2.0, 0.0]).is_unimodal());
        assert!(!mk(vec![3.0, 1.0, 2.0]).is_unimodal());
        assert!(mk(vec![5.0, 4.0, 1.0]).is_unimodal());
    }

    #[test]
    fn sample_binning() {
        let h = Histogram::from_samples(&[0.1, 0.9, 1.0, 2.5], 0.0, 1.0).unwrap();
        assert_eq!(h.counts(), &[2.0, 1.0, 1.0]);
        assert!(Histogram::from_samples(&[-1.0], 0.0, 1.0).is_err());
        assert!(Histogram::new(0.0, 0.0, vec![]).is_err());
        assert!(Histogram::new(0.0, 1.0, vec![-1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let h = Histogram::new(0.0, 0.5, vec![1.0, 0.0, 3.0]).unwrap();
        let csv = h.to_csv();
        assert_eq!(csv, "bin,count,frequency\n0,1,0.25\n0.5,0,0\n1,3,0.75\n");
        assert_eq!(Histogram::from_csv(csv.as_bytes()).unwrap(), h);
    }

    #[test]
    fn csv_rejects_uneven_bins() {
        let err = Histogram::from_csv("bin,count\n0,1\n1,2\n3,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 4"), "{err}");
        assert!(Histogram::from_csv("x,y\n1,2\n".as_bytes()).is_err());
    }
}
