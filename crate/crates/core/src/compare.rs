//! Distances between integer-binned distributions (an exact pmf against a
//! simulated or observed histogram).

use std::fmt::Write as _;
use std::io::Read;

use serde::Serialize;

/// Probability mass on consecutive integers starting at `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerDistribution {
    pub origin: i64,
    pub probs: Vec<f64>,
}

impl IntegerDistribution {
    /// Normalizes nonnegative weights. All-zero weights are rejected.
    pub fn from_weights(origin: i64, weights: Vec<f64>) -> Result<Self, String> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("weights must be finite and >= 0".into());
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err("distribution has no mass".into());
        }
        Ok(Self {
            origin,
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn prob(&self, n: i64) -> f64 {
        let i = n - self.origin;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    fn end(&self) -> i64 {
        self.origin + self.probs.len() as i64
    }

    /// Reads either `n,probability` (pmf) or `bin,count[,frequency]`
    /// (histogram) CSV. Labels must be consecutive integers.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, String> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (label_col, weight_col) = match (col("n"), col("probability"), col("bin"), col("count")) {
            (Some(n), Some(p), _, _) => (n, p),
            (_, _, Some(b), Some(c)) => (b, c),
            _ => return Err("expected `n,probability` or `bin,count` header".into()),
        };
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let row = i + 2;
            let label: f64 = rec
                .get(label_col)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("row {row}: unreadable bin label"))?;
            if label.fract() != 0.0 {
                return Err(format!("row {row}: bin label {label} is not an integer"));
            }
            let w: f64 = rec
                .get(weight_col)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("row {row}: unreadable weight"))?;
            labels.push(label as i64);
            weights.push(w);
        }
        let Some(&origin) = labels.first() else {
            return Err("no rows".into());
        };
        if labels.iter().enumerate().any(|(i, &l)| l != origin + i as i64) {
            return Err("bins are not consecutive unit-width integers".into());
        }
        Self::from_weights(origin, weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinResidual {
    pub bin: i64,
    pub expected: f64,
    pub empirical: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub total_variation: f64,
    pub ks: f64,
    pub bins: Vec<BinResidual>,
}

impl Comparison {
    pub fn residuals_csv(&self) -> String {
        let mut out = String::from("bin,expected,empirical,residual\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{},{}", b.bin, b.expected, b.empirical, b.residual);
        }
        out
    }
}

pub fn compare(expected: &IntegerDistribution, empirical: &IntegerDistribution) -> Comparison {
    let lo = expected.origin.min(empirical.origin);
    let hi = expected.end().max(empirical.end());
    let (mut tv, mut ks) = (0.0, 0.0f64);
    let (mut ce, mut cm) = (0.0, 0.0);
    let mut bins = Vec::with_capacity((hi - lo) as usize);
    for n in lo..hi {
        let (e, m) = (expected.prob(n), empirical.prob(n));
        tv += (e - m).abs();
        ce += e;
        cm += m;
        ks = ks.max((ce - cm).abs());
        bins.push(BinResidual {
            bin: n,
            expected: e,
            empirical: m,
            residual: m - e,
        });
    }
    Comparison {
        total_variation: (0.5 * tv).min(1.0),
        ks: ks.min(1.0),
        bins,
    }
}
