//! JSON and CSV encodings shared with the command line and plotting scripts.
//!
//! Density matrices are written row-major with 17 significant digits so that
//! they round-trip exactly. Tabular sweep output uses 12 significant digits.

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::entanglement::{EntanglementReport, SeparabilityCertificate};
use crate::error::{FridgeError, Result};
use crate::model::{FridgeParams, HeatCurrents, SteadyState, WEAK_COUPLING_THRESHOLD};
use crate::scalar::ComplexMatrix;
use crate::state::{DensityMatrix, DIM};

/// `x` with 17 significant digits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `x` with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn raw(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(FridgeError::Format(format!("non-finite value {x}")));
    }
    RawValue::from_string(sig17(x)).map_err(|e| FridgeError::Format(e.to_string()))
}

/// Wire form of a density matrix.
#[derive(Debug, Serialize)]
pub struct DensityJson {
    pub dim: usize,
    pub re: Vec<Vec<Box<RawValue>>>,
    pub im: Vec<Vec<Box<RawValue>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityJsonIn {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl DensityJson {
    pub fn new(m: &ComplexMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for i in 0..n {
            re.push((0..n).map(|j| raw(m[(i, j)].re)).collect::<Result<_>>()?);
            im.push((0..n).map(|j| raw(m[(i, j)].im)).collect::<Result<_>>()?);
        }
        Ok(Self { dim: n, re, im })
    }
}

pub fn density_to_json(rho: &DensityMatrix<f64>) -> Result<String> {
    let body = DensityJson::new(rho.matrix())?;
    serde_json::to_string(&body).map_err(|e| FridgeError::Format(e.to_string()))
}

/// Parses a matrix without validating it as a state.
pub fn matrix_from_json(text: &str) -> Result<ComplexMatrix<f64>> {
    let parsed: DensityJsonIn =
        serde_json::from_str(text).map_err(|e| FridgeError::Format(e.to_string()))?;
    if parsed.dim != DIM {
        return Err(FridgeError::DimensionMismatch {
            expected: DIM,
            got: parsed.dim,
        });
    }
    let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == DIM && rows.iter().all(|r| r.len() == DIM);
    if !rows_ok(&parsed.re) || !rows_ok(&parsed.im) {
        return Err(FridgeError::Format(format!("\"re\" and \"im\" must be {DIM}x{DIM}")));
    }
    Ok(ComplexMatrix::from_fn(DIM, DIM, |i, j| {
        nalgebra::Complex::new(parsed.re[i][j], parsed.im[i][j])
    }))
}

/// Parses and validates a density matrix.
pub fn density_from_json(text: &str) -> Result<DensityMatrix<f64>> {
    DensityMatrix::new(matrix_from_json(text)?)
}

pub fn params_from_json(text: &str) -> Result<FridgeParams<f64>> {
    serde_json::from_str(text).map_err(|e| FridgeError::Format(e.to_string()))
}

pub fn params_to_json(params: &FridgeParams<f64>) -> Result<String> {
    serde_json::to_string(params).map_err(|e| FridgeError::Format(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcurrencesJson {
    #[serde(rename = "C_RH")]
    pub c_rh: f64,
    #[serde(rename = "R_CH")]
    pub r_ch: f64,
    #[serde(rename = "CR_H")]
    pub cr_h: f64,
    #[serde(rename = "GME")]
    pub gme: f64,
}

/// Wire form of an [`EntanglementReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntanglementJson {
    #[serde(rename = "W")]
    pub w: [f64; 4],
    #[serde(rename = "C")]
    pub c: ConcurrencesJson,
    pub x_form: bool,
}

impl From<&EntanglementReport<f64>> for EntanglementJson {
    fn from(r: &EntanglementReport<f64>) -> Self {
        Self {
            w: r.witnesses,
            c: ConcurrencesJson {
                c_rh: r.c_c_rh,
                r_ch: r.c_r_ch,
                cr_h: r.c_cr_h,
                gme: r.c_gme,
            },
            x_form: r.x_form,
        }
    }
}

impl From<EntanglementJson> for EntanglementReport<f64> {
    fn from(j: EntanglementJson) -> Self {
        Self {
            witnesses: j.w,
            c_c_rh: j.c.c_rh,
            c_r_ch: j.c.r_ch,
            c_cr_h: j.c.cr_h,
            c_gme: j.c.gme,
            x_form: j.x_form,
        }
    }
}

pub fn entanglement_to_json(report: &EntanglementReport<f64>) -> Result<String> {
    serde_json::to_string(&EntanglementJson::from(report))
        .map_err(|e| FridgeError::Format(e.to_string()))
}

pub fn entanglement_from_json(text: &str) -> Result<EntanglementReport<f64>> {
    let j: EntanglementJson =
        serde_json::from_str(text).map_err(|e| FridgeError::Format(e.to_string()))?;
    Ok(j.into())
}

#[derive(Debug, Serialize)]
struct WeakCouplingJson {
    g_ratio: f64,
    p_ratio: f64,
    within: bool,
}

/// Wire form of a solved stationary state.
#[derive(Debug, Serialize)]
pub struct SteadyStateJson {
    pub params: FridgeParams<f64>,
    pub rho: DensityJson,
    #[serde(rename = "TS")]
    pub ts: Option<f64>,
    pub gamma_hat: f64,
    pub residual: f64,
    pub kernel_ratio: f64,
    pub currents: HeatCurrents<f64>,
    pub efficiency: Option<f64>,
    weak_coupling: WeakCouplingJson,
}

impl SteadyStateJson {
    pub fn new(params: &FridgeParams<f64>, ss: &SteadyState<f64>) -> Result<Self> {
        let wc = params.weak_coupling(WEAK_COUPLING_THRESHOLD);
        Ok(Self {
            params: *params,
            rho: DensityJson::new(ss.rho.matrix())?,
            ts: ss.ts,
            gamma_hat: ss.gamma_hat,
            residual: ss.residual,
            kernel_ratio: ss.kernel_ratio,
            currents: ss.heat_currents,
            efficiency: ss.efficiency,
            weak_coupling: WeakCouplingJson {
                g_ratio: wc.g_ratio,
                p_ratio: wc.p_ratio,
                within: wc.within,
            },
        })
    }
}

pub fn steady_state_to_json(params: &FridgeParams<f64>, ss: &SteadyState<f64>) -> Result<String> {
    serde_json::to_string_pretty(&SteadyStateJson::new(params, ss)?)
        .map_err(|e| FridgeError::Format(e.to_string()))
}

/// Witness output: report plus certificate.
#[derive(Debug, Serialize)]
pub struct WitnessJson {
    pub report: EntanglementJson,
    pub certificate: SeparabilityCertificate<f64>,
}

pub fn witness_to_json(
    report: &EntanglementReport<f64>,
    certificate: &SeparabilityCertificate<f64>,
) -> Result<String> {
    serde_json::to_string_pretty(&WitnessJson {
        report: report.into(),
        certificate: *certificate,
    })
    .map_err(|e| FridgeError::Format(e.to_string()))
}

/// Joins pre-formatted fields into CSV text with a trailing newline per row.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{entanglement_report, ghz_state};
    use crate::model::steady_state;
    use crate::state::random_density_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn digits() {
        assert_eq!(sig17(1.0), "1.0000000000000000e0");
        assert_eq!(sig12(-0.25), "-2.50000000000e-1");
        assert_eq!(sig17(0.1).replace('.', "").trim_start_matches('1').len(), "0000000000000000e-1".len());
    }

    #[test]
    fn density_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let rho: DensityMatrix<f64> = random_density_matrix(&mut rng);
            let text = density_to_json(&rho).unwrap();
            let back = density_from_json(&text).unwrap();
            assert_eq!(back.matrix(), rho.matrix());
        }
    }

    #[test]
    fn density_json_shape() {
        let text = density_to_json(&ghz_state::<f64>()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 8);
        assert_eq!(v["re"].as_array().unwrap().len(), 8);
        assert_eq!(v["im"][2][5].as_f64().unwrap(), -0.5);
    }

    #[test]
    fn density_rejects_bad_input() {
        assert!(matches!(density_from_json("{"), Err(FridgeError::Format(_))));
        assert!(matches!(
            density_from_json(r#"{"dim":4,"re":[],"im":[]}"#),
            Err(FridgeError::DimensionMismatch { .. })
        ));
        let zeros = vec![vec![0.0; 8]; 8];
        let text = serde_json::json!({"dim": 8, "re": zeros, "im": zeros}).to_string();
        assert!(matches!(density_from_json(&text), Err(FridgeError::InvalidState(_))));
        let extra = serde_json::json!({"dim": 8, "re": zeros, "im": zeros, "x": 1}).to_string();
        assert!(matches!(density_from_json(&extra), Err(FridgeError::Format(_))));
    }

    #[test]
    fn params_round_trip_and_schema() {
        let p = FridgeParams::new(2.0, 300.0, 1e-4, [1e-5, 1e-3, 1e-5], [1.0, 1.1, 1e4]);
        let text = params_to_json(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["E1", "E3", "g", "p", "T"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(params_from_json(&text).unwrap(), p);
        assert!(params_from_json(r#"{"E1":1,"E3":2,"g":0,"p":[1,1,1],"T":[1,2,3],"E2":3}"#).is_err());
        assert!(params_from_json(r#"{"E1":1,"E3":2,"g":0,"p":[1,1],"T":[1,2,3]}"#).is_err());
    }

    #[test]
    fn entanglement_json_keys() {
        let r = entanglement_report(&ghz_state::<f64>());
        let text = entanglement_to_json(&r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["W"].as_array().unwrap().len(), 4);
        assert_eq!(v["C"]["GME"], 1.0);
        for key in ["C_RH", "R_CH", "CR_H", "GME"] {
            assert!(v["C"].get(key).is_some());
        }
        assert_eq!(v["x_form"], true);
        assert_eq!(entanglement_from_json(&text).unwrap(), r);
    }

    #[test]
    fn steady_state_json_fields() {
        let p = FridgeParams::new(2.0, 300.0, 1e-4, [1e-5, 1e-3, 1e-5], [1.0, 1.1, 1e4]);
        let ss = steady_state(&p).unwrap();
        let text = steady_state_to_json(&p, &ss).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["TS"].as_f64().unwrap() < 1.0);
        for key in ["rho", "gamma_hat", "residual", "currents", "efficiency", "params"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["currents"].get("QC").is_some());
        let rho = density_from_json(&v["rho"].to_string()).unwrap();
        assert_eq!(rho.matrix(), ss.rho.matrix());
    }

    #[test]
    fn csv_layout() {
        let t = csv_table(&["a", "b"], &[vec![sig12(1.0), sig12(2.0)]]);
        assert_eq!(t, "a,b\n1.00000000000e0,2.00000000000e0\n");
    }
}
