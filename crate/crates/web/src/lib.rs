//! Browser bindings for the demo page in `www/`.
//!
//! Matrices cross the boundary as JSON arrays of rows. Every export returns
//! a JSON string; errors come back as a thrown string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use nucstab::cones;
use nucstab::io;
use nucstab::linalg::Mat;
use nucstab::model::{self, AMap, FMap, Frames, PlantSpec, QRole};
use nucstab::nucops::{self, ProxPair, PsiMode};
use nucstab::stability;

fn parse_matrix(text: &str) -> Result<Mat, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| format!("matrix: {e}"))?;
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err("matrix must be a non-empty array of equal-length rows".into());
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows_of(x: &Mat) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

#[derive(Serialize)]
struct ProxView {
    sigma: Vec<f64>,
    prox: Vec<Vec<f64>>,
    projection: Vec<Vec<f64>>,
    a: Vec<usize>,
    b1: Vec<usize>,
    b2: Vec<usize>,
    b3: Vec<usize>,
    c: Vec<usize>,
}

pub fn prox_view(x: &str) -> Result<String, String> {
    let x = parse_matrix(x)?;
    let pp = ProxPair::new(&x).map_err(|e| e.to_string())?;
    let p = &pp.part;
    let view = ProxView {
        sigma: pp.dec.sigma.iter().cloned().collect(),
        prox: rows_of(&pp.prox),
        projection: rows_of(&pp.proj),
        a: p.a.clone(),
        b1: p.b1.clone(),
        b2: p.b2.clone(),
        b3: p.b3.clone(),
        c: p.c().collect(),
    };
    Ok(io::to_json_17(&view))
}

#[derive(Serialize)]
struct DirectionView {
    derivative: Vec<Vec<f64>>,
    finite_difference_error: f64,
    psi_star_omega: f64,
    psi_star_expanded: f64,
    theta_derivative: f64,
    in_critical_cone: bool,
    in_conjugate_critical_cone: bool,
}

pub fn direction_view(x: &str, h: &str) -> Result<String, String> {
    let x = parse_matrix(x)?;
    let h = parse_matrix(h)?;
    if x.shape() != h.shape() {
        return Err("X and H must have the same shape".into());
    }
    let pp = ProxPair::new(&x).map_err(|e| e.to_string())?;
    let d = pp.dir_deriv(&h).map_err(|e| e.to_string())?;
    let t = 1e-6;
    let p0 = nucops::svt(&x, 1.0).map_err(|e| e.to_string())?;
    let p1 = nucops::svt(&(&x + &h * t), 1.0).map_err(|e| e.to_string())?;
    let view = DirectionView {
        finite_difference_error: ((p1 - p0) / t - &d).norm(),
        derivative: rows_of(&d),
        psi_star_omega: pp.psi_star(&h, PsiMode::OmegaForm).map_err(|e| e.to_string())?,
        psi_star_expanded: pp.psi_star(&h, PsiMode::ExpandedForm).map_err(|e| e.to_string())?,
        theta_derivative: nucops::dir_deriv_nuclear(&pp.prox, &h).map_err(|e| e.to_string())?,
        in_critical_cone: cones::critical_cone_theta_membership(&pp, &h, 1e-9).map_err(|e| e.to_string())?,
        in_conjugate_critical_cone: cones::critical_cone_theta_conj_membership(&pp, &h, 1e-9)
            .map_err(|e| e.to_string())?,
    };
    Ok(io::to_json_17(&view))
}

/// Plant an instance with the given index-set sizes and constraint roles and
/// report every stability check at its reference point.
pub fn plant_report(m: usize, n: usize, counts: &[usize], qpattern: &str, gaussian_f: bool, seed: u64) -> Result<String, String> {
    if counts.len() != 4 {
        return Err("counts needs four entries".into());
    }
    let q_roles = qpattern.chars().map(QRole::from_char).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let spec = PlantSpec {
        m,
        n,
        d: if gaussian_f { m * n } else { 1 },
        counts: [counts[0], counts[1], counts[2], counts[3]],
        sigma: (0..counts[0]).map(|i| 1.5 + 0.75 * i as f64).collect(),
        w_interior: (0..counts[2]).map(|i| 0.3 + 0.2 * i as f64).collect(),
        q_roles,
        fmap: if gaussian_f { FMap::Gaussian } else { FMap::Zero },
        amap: AMap::Gaussian,
        frames: Frames::Random,
        mix_w: false,
    };
    let (inst, pt) = model::plant_instance(&spec, seed).map_err(|e| e.to_string())?;
    let report = stability::theorem53_report(&inst, &pt, None, seed).map_err(|e| e.to_string())?;
    let x = rows_of(&pt.x);
    Ok(io::to_json_17(&serde_json::json!({ "reference_x": x, "report": report })))
}

#[wasm_bindgen(js_name = proxView)]
pub fn prox_view_js(x: &str) -> Result<String, JsValue> {
    prox_view(x).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = directionView)]
pub fn direction_view_js(x: &str, h: &str) -> Result<String, JsValue> {
    direction_view(x, h).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = plantReport)]
pub fn plant_report_js(m: usize, n: usize, counts: Vec<usize>, qpattern: &str, gaussian_f: bool, seed: u64) -> Result<String, JsValue> {
    plant_report(m, n, &counts, qpattern, gaussian_f, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_example_through_the_bindings() {
        let out: serde_json::Value = serde_json::from_str(&prox_view("[[3, 0], [0, 0.5]]").unwrap()).unwrap();
        assert_eq!(out["prox"][0][0].as_f64(), Some(2.0));
        assert_eq!(out["a"], serde_json::json!([0]));
        let d: serde_json::Value =
            serde_json::from_str(&direction_view("[[3, 0], [0, 0.5]]", "[[0, 1], [-1, 0]]").unwrap()).unwrap();
        assert!((d["psi_star_expanded"].as_f64().unwrap() + 1.5).abs() < 1e-14);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(prox_view("[[1, 2], [3]]").is_err());
        assert!(direction_view("[[1]]", "[[1, 2]]").is_err());
        assert!(plant_report(2, 2, &[1, 0, 0, 0], "", true, 0).is_err());
    }

    #[test]
    fn plant_report_holds_with_injective_f() {
        let r: serde_json::Value = serde_json::from_str(&plant_report(2, 3, &[1, 0, 1, 0], "a", true, 1).unwrap()).unwrap();
        assert_eq!(r["report"]["sosc_primal"]["holds"], serde_json::json!(true));
    }
}
