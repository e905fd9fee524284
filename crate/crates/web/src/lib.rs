//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Methods are chosen by `(family, order, beta)` with family one of `ab`, `hb`,
//! `ghvb` or `nesterov`; `beta` is ignored for `ab`.

use momentum_lmm::problems::toy_2x2;
use momentum_lmm::stability::{locus, stability_raster};
use momentum_lmm::{integrate, linear_multistep_form, MethodSpec};
use wasm_bindgen::prelude::*;

pub fn method(family: &str, order: usize, beta: f64) -> Result<MethodSpec, String> {
    let spec = match family {
        "ab" => MethodSpec::ab(order),
        "hb" => MethodSpec::heavy_ball(order, beta),
        "ghvb" => MethodSpec::ghvb(order, beta),
        "nesterov" => MethodSpec::nesterov(order, beta),
        other => return Err(format!("unknown family `{other}`")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Locus samples as interleaved `re, im` pairs; flagged samples are NaN.
pub fn locus_points(family: &str, order: usize, beta: f64, samples: usize) -> Result<Vec<f64>, String> {
    let form = linear_multistep_form(&method(family, order, beta)?).map_err(|e| e.to_string())?;
    let curve = locus(&form, samples).map_err(|e| e.to_string())?;
    Ok(curve.values.iter().flat_map(|z| [z.re, z.im]).collect())
}

/// Stability raster, row-major with rows of increasing imaginary part.
#[allow(clippy::too_many_arguments)]
pub fn region_cells(
    family: &str,
    order: usize,
    beta: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    resolution: usize,
) -> Result<Vec<u8>, String> {
    let form = linear_multistep_form(&method(family, order, beta)?).map_err(|e| e.to_string())?;
    let raster = stability_raster(&form, (re_min, re_max), (im_min, im_max), (resolution, resolution))
        .map_err(|e| e.to_string())?;
    Ok(raster.cells.iter().map(|c| u8::from(*c)).collect())
}

/// Toy 2x2 trajectory as `t, x0, x1` triples.
pub fn toy_points(family: &str, order: usize, beta: f64, steps: usize) -> Result<Vec<f64>, String> {
    let traj = integrate(&method(family, order, beta)?, &toy_2x2(), steps).map_err(|e| e.to_string())?;
    Ok(traj.times.iter().zip(&traj.states).flat_map(|(t, x)| [*t, x[0], x[1]]).collect())
}

#[wasm_bindgen]
pub fn locus_curve(family: &str, order: usize, beta: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    locus_points(family, order, beta, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn stability_region(
    family: &str,
    order: usize,
    beta: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    resolution: usize,
) -> Result<Vec<u8>, JsError> {
    region_cells(family, order, beta, re_min, re_max, im_min, im_max, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn toy_trajectory(family: &str, order: usize, beta: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    toy_points(family, order, beta, steps).map_err(|e| JsError::new(&e))
}
