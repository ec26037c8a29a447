//! WebAssembly bindings for the interactive demo in `www/`.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`.

pub mod demo;

use wasm_bindgen::prelude::*;

#[wasm_bindgen(js_name = fbmPath)]
pub fn fbm_path(h: f64, n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    demo::fbm_path(h, n, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct HurstFit(demo::CoverFit);

#[wasm_bindgen]
impl HurstFit {
    #[wasm_bindgen(getter)]
    pub fn h(&self) -> f64 {
        self.0.h
    }

    #[wasm_bindgen(getter, js_name = hErr)]
    pub fn h_err(&self) -> f64 {
        self.0.h_err
    }

    #[wasm_bindgen(getter)]
    pub fn degraded(&self) -> bool {
        self.0.degraded
    }

    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.0.slope
    }

    #[wasm_bindgen(getter)]
    pub fn intercept(&self) -> f64 {
        self.0.intercept
    }

    #[wasm_bindgen(getter, js_name = logWindows)]
    pub fn log_windows(&self) -> Vec<f64> {
        self.0.log_windows.clone()
    }

    #[wasm_bindgen(getter, js_name = logAmplitudes)]
    pub fn log_amplitudes(&self) -> Vec<f64> {
        self.0.log_amplitudes.clone()
    }
}

#[wasm_bindgen(js_name = hurstFit)]
pub fn hurst_fit(values: &[f64]) -> Result<HurstFit, JsError> {
    demo::cover_fit(values)
        .map(HurstFit)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = kellyCurve)]
pub fn kelly_curve(mean: f64, theta: f64, h: f64, max_days: u32) -> Result<Vec<f64>, JsError> {
    demo::kelly_curve(mean, theta, h, max_days).map_err(|e| JsError::new(&e))
}
