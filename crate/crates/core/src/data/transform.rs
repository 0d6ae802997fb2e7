use super::{Dataset, FeatureKind, Split};

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    })
}

/// Replaces missing numeric cells with the train-partition median of their
/// column (zero when the column has no observed train value).
pub fn impute_missing(ds: &Dataset, split: &Split) -> Dataset {
    if !ds.has_missing() {
        return ds.clone();
    }
    let mut x = ds.x().to_owned();
    for (c, kind) in ds.column_kinds().into_iter().enumerate() {
        if kind != FeatureKind::Numeric || !x.column(c).iter().any(|v| v.is_nan()) {
            continue;
        }
        let mut observed: Vec<f64> = split
            .train_indices
            .iter()
            .map(|&i| x[[i, c]])
            .filter(|v| !v.is_nan())
            .collect();
        let fill = median(&mut observed).unwrap_or(0.0);
        x.column_mut(c).mapv_inplace(|v| if v.is_nan() { fill } else { v });
    }
    ds.with_x(x)
}

/// Imputes, then centers and scales every numeric encoded column by its
/// train mean and population standard deviation. Zero-variance columns become
/// all zeros; one-hot columns are untouched.
pub fn standardize(ds: &Dataset, split: &Split) -> Dataset {
    let imputed = impute_missing(ds, split);
    let mut x = imputed.x().to_owned();
    let n = split.train_indices.len() as f64;
    for (c, kind) in ds.column_kinds().into_iter().enumerate() {
        if kind != FeatureKind::Numeric {
            continue;
        }
        let mean = split.train_indices.iter().map(|&i| x[[i, c]]).sum::<f64>() / n;
        let var = split
            .train_indices
            .iter()
            .map(|&i| (x[[i, c]] - mean).powi(2))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            x.column_mut(c).fill(0.0);
        } else {
            x.column_mut(c).mapv_inplace(|v| (v - mean) / sd);
        }
    }
    imputed.with_x(x)
}

/// Whether every numeric column is centered with unit (or zero) spread on the
/// train partition, within `tol`.
pub fn is_standardized(ds: &Dataset, split: &Split, tol: f64) -> bool {
    if ds.has_missing() {
        return false;
    }
    let x = ds.x();
    let n = split.train_indices.len() as f64;
    ds.column_kinds().into_iter().enumerate().all(|(c, kind)| {
        if kind != FeatureKind::Numeric {
            return true;
        }
        let mean = split.train_indices.iter().map(|&i| x[[i, c]]).sum::<f64>() / n;
        let var = split.train_indices.iter().map(|&i| (x[[i, c]] - mean).powi(2)).sum::<f64>() / n;
        let all_zero = x.column(c).iter().all(|v| *v == 0.0);
        mean.abs() <= tol && ((var.sqrt() - 1.0).abs() <= tol || all_zero)
    })
}
