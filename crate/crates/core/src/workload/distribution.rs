use crate::error::{Error, Result};
use crate::predictor::WorkBin;

/// Groups work samples (in bunches) into bins of `bin_width` bunches. Each bin reports its
/// sample count and the mean of its samples, in increasing order of work.
pub fn measure_work_distribution(samples: &[f64], bin_width: f64) -> Result<Vec<WorkBin>> {
    if samples.is_empty() {
        return Err(Error::Argument("no work samples".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::Argument(format!("bin width must be > 0, got {bin_width}")));
    }
    if let Some(bad) = samples.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(Error::Argument(format!("invalid work sample {bad}")));
    }
    let mut acc: std::collections::BTreeMap<u64, (f64, f64)> = Default::default();
    for &s in samples {
        let e = acc.entry((s / bin_width).floor() as u64).or_default();
        e.0 += 1.0;
        e.1 += s;
    }
    Ok(acc.into_values().map(|(count, sum)| WorkBin { size: count, pw_e: sum / count }).collect())
}
