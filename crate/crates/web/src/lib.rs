//! Browser bindings for the demo page in `www/`.
//!
//! The plain functions hold the logic and run natively in tests; the
//! `#[wasm_bindgen]` wrappers only convert errors into JS exceptions.

use shelfmix_core::exactnum::rat_to_f64;
use shelfmix_core::shelfmeasure::{q_table, shuffle_valley_pmf};
use shelfmix_core::tvmetrics::{self, tv_asymptotic, tv_exact_with};
use shelfmix_core::{Result, ValleyTable};
use wasm_bindgen::prelude::*;

/// Largest `m_max` the page may request in one call.
pub const MAX_CURVE_POINTS: u64 = 1000;

/// `[exact(1), asymptotic(1), exact(2), asymptotic(2), ...]` for m = 1..=m_max.
pub fn curve(n: usize, m_max: u64) -> Result<Vec<f64>> {
    if m_max == 0 || m_max > MAX_CURVE_POINTS {
        return Err(shelfmix_core::Error::InvalidArgument(format!(
            "m_max must lie in 1..={MAX_CURVE_POINTS}"
        )));
    }
    let vt = ValleyTable::new(n)?;
    let mut out = Vec::with_capacity(2 * m_max as usize);
    for m in 1..=m_max {
        out.push(tv_exact_with(&vt, m)?.tv_exact_f64());
        out.push(if n >= 2 {
            tv_asymptotic(n, m)?
        } else {
            f64::NAN
        });
    }
    Ok(out)
}

/// Limiting TV at `steps` evenly spaced window positions in `[from, to]`.
pub fn profile(n: usize, from: f64, to: f64, steps: u32) -> Result<Vec<f64>> {
    if steps < 2 || from.is_nan() || to.is_nan() || to <= from {
        return Err(shelfmix_core::Error::InvalidArgument(
            "need at least two steps over a nonempty range".into(),
        ));
    }
    let h = (to - from) / f64::from(steps - 1);
    let thetas: Vec<f64> = (0..steps).map(|i| from + h * f64::from(i)).collect();
    Ok(tvmetrics::cutoff_profile(n, &thetas)?
        .into_iter()
        .map(|(_, tv)| tv)
        .collect())
}

/// Valley-count laws: the shuffled pmf followed by the uniform pmf.
pub fn valley_laws(n: usize, m: u64) -> Result<Vec<f64>> {
    let vt = ValleyTable::new(n)?;
    let shuffled = shuffle_valley_pmf(&q_table(n, m)?, &vt)?;
    Ok(shuffled
        .iter()
        .chain(vt.pmf().iter())
        .map(rat_to_f64)
        .collect())
}

fn js(e: shelfmix_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = tvCurve)]
pub fn tv_curve(n: usize, m_max: u32) -> std::result::Result<Vec<f64>, JsError> {
    curve(n, u64::from(m_max)).map_err(js)
}

#[wasm_bindgen(js_name = cutoffProfile)]
pub fn cutoff_profile(
    n: usize,
    from: f64,
    to: f64,
    steps: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    profile(n, from, to, steps).map_err(js)
}

#[wasm_bindgen(js_name = valleyLaws)]
pub fn valley_laws_js(n: usize, m: u32) -> std::result::Result<Vec<f64>, JsError> {
    valley_laws(n, u64::from(m)).map_err(js)
}
