use super::ParameterSet;

/// Central finite differences `(f(p + h·e_k) − f(p − h·e_k)) / 2h` for every
/// coordinate `k`, returned in the layout of `params`.
pub fn finite_diff_grad<F>(mut f: F, params: &ParameterSet, step: f64) -> ParameterSet
where
    F: FnMut(&ParameterSet) -> f64,
{
    let flat = params.flatten();
    let mut probe = flat.clone();
    let mut grad = alloc::vec![0.0; flat.len()];
    for k in 0..flat.len() {
        probe[k] = flat[k] + step;
        let plus = f(&params.unflatten(&probe).expect("layout is preserved"));
        probe[k] = flat[k] - step;
        let minus = f(&params.unflatten(&probe).expect("layout is preserved"));
        probe[k] = flat[k];
        grad[k] = (plus - minus) / (2.0 * step);
    }
    params.unflatten(&grad).expect("layout is preserved")
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}

/// Largest [`relative_error`] over paired coordinates.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| relative_error(x, y, floor))
        .fold(0.0, f64::max)
}
