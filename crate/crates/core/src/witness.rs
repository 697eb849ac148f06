//! Linear witnesses over probability tables and the class bounds that turn
//! a witness value into a certification verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Dims, ProbabilityTable, NORMALIZATION_TOL};

/// Default significance (in standard errors) for excluding a class.
pub const DEFAULT_SIGNIFICANCE: f64 = 3.0;

/// Measurement classes a witness bound can refer to, from smallest to
/// largest. `EntangledMax` is the ceiling over all qubit measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundClass {
    Classical,
    Locc,
    Unentangled,
    EntangledMax,
}

impl BoundClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundClass::Classical => "classical",
            BoundClass::Locc => "locc",
            BoundClass::Unentangled => "unentangled",
            BoundClass::EntangledMax => "entangled_max",
        }
    }
}

/// Published upper bounds of a witness for each measurement class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassBounds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unentangled: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entangled_max: Option<f64>,
}

impl ClassBounds {
    /// Present bounds in class order.
    pub fn iter(&self) -> impl Iterator<Item = (BoundClass, f64)> {
        [
            (BoundClass::Classical, self.classical),
            (BoundClass::Locc, self.locc),
            (BoundClass::Unentangled, self.unentangled),
            (BoundClass::EntangledMax, self.entangled_max),
        ]
        .into_iter()
        .filter_map(|(c, b)| b.map(|b| (c, b)))
    }

    fn check_monotone(&self) -> Result<()> {
        let present: Vec<(BoundClass, f64)> = self.iter().collect();
        for (c, b) in &present {
            if !b.is_finite() {
                return Err(Error::InvalidWitness(format!(
                    "bound {} is not finite",
                    c.as_str()
                )));
            }
        }
        for pair in present.windows(2) {
            if pair[0].1 > pair[1].1 {
                return Err(Error::InvalidWitness(format!(
                    "bounds not monotone: {} = {} > {} = {}",
                    pair[0].0.as_str(),
                    pair[0].1,
                    pair[1].0.as_str(),
                    pair[1].1
                )));
            }
        }
        Ok(())
    }
}

/// Coefficient tensor `W[c,x,y,z]` plus class bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSpec {
    pub name: String,
    dims: Dims,
    coefficients: Vec<f64>,
    pub bounds: ClassBounds,
}

impl WitnessSpec {
    pub fn new(
        name: impl Into<String>,
        dims: Dims,
        coefficients: Vec<f64>,
        bounds: ClassBounds,
    ) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidWitness("all dimensions must be positive".into()));
        }
        if coefficients.len() != dims.len() {
            return Err(Error::InvalidWitness(format!(
                "{} coefficients for dims {dims}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWitness("non-finite coefficient".into()));
        }
        bounds.check_monotone()?;
        Ok(Self {
            name: name.into(),
            dims,
            coefficients,
            bounds,
        })
    }

    /// A witness with every coefficient zero.
    pub fn zero(dims: Dims) -> Self {
        Self {
            name: "zero".into(),
            dims,
            coefficients: vec![0.0; dims.len()],
            bounds: ClassBounds::default(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient for 0-based outcome `c`.
    pub fn coeff(&self, c: usize, x: usize, y: usize, z: usize) -> f64 {
        self.coefficients[self.dims.index(c, x, y, z)]
    }

    pub fn set_coeff(&mut self, c: usize, x: usize, y: usize, z: usize, value: f64) {
        let i = self.dims.index(c, x, y, z);
        self.coefficients[i] = value;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WitnessFile::from(self)).expect("witness serializes")
    }

    /// Parses the sparse JSON witness format; syntax errors carry the
    /// line and column reported by the parser.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: WitnessFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidWitness(e.to_string()))?;
        file.try_into()
    }
}

/// Entangled-measurement witness on 3 x 3 preparations, one ternary setting.
pub fn witness_w() -> WitnessSpec {
    const W1: [[f64; 3]; 3] = [[1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    const W2: [[f64; 3]; 3] = [[1.0, -1.0, -1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, -1.0]];
    let dims = Dims::new(3, 3, 1, 3);
    let mut spec = WitnessSpec::zero(dims);
    spec.name = "w".into();
    for x in 0..3 {
        for y in 0..3 {
            spec.set_coeff(0, x, y, 0, W1[x][y]);
            spec.set_coeff(1, x, y, 0, W2[x][y]);
        }
    }
    spec.bounds = ClassBounds {
        classical: Some(1.0),
        locc: Some(1.0),
        unentangled: Some(1.0),
        entangled_max: Some(1.5),
    };
    spec
}

/// Non-classical-measurement witness on 3 x 3 preparations, two binary
/// settings; only outcome `c = 1` carries weight.
pub fn witness_v() -> WitnessSpec {
    const V0: [[f64; 3]; 3] = [[2.0, 0.0, 0.0], [0.0, -2.0, -2.0], [0.0, -2.0, -2.0]];
    const V1: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [0.0, 1.0, -1.0], [0.0, -1.0, 1.0]];
    let dims = Dims::new(3, 3, 2, 2);
    let mut spec = WitnessSpec::zero(dims);
    spec.name = "v".into();
    for x in 0..3 {
        for y in 0..3 {
            spec.set_coeff(0, x, y, 0, V0[x][y]);
            spec.set_coeff(0, x, y, 1, V1[x][y]);
        }
    }
    spec.bounds = ClassBounds {
        classical: Some(2.0),
        unentangled: Some(3.0),
        ..Default::default()
    };
    spec
}

/// Looks up a built-in witness by name (`w` or `v`).
pub fn builtin(name: &str) -> Option<WitnessSpec> {
    match name {
        "w" => Some(witness_w()),
        "v" => Some(witness_v()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessValue {
    pub value: f64,
}

/// `sum W[c,x,y,z] p(c|x,y,z)` on a normalized table.
pub fn evaluate(spec: &WitnessSpec, table: &ProbabilityTable) -> Result<WitnessValue> {
    spec.dims.check_same(&table.dims())?;
    table.check_normalized(NORMALIZATION_TOL)?;
    Ok(WitnessValue {
        value: dot(&spec.coefficients, table.values()),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Signed distance of a witness value from one class bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundDistance {
    pub class: BoundClass,
    pub bound: f64,
    /// `(value - bound) / stderr`; infinite when `stderr == 0` and the
    /// value differs from the bound.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationVerdict {
    pub witness: String,
    pub value: f64,
    pub stderr: f64,
    pub significance: f64,
    pub distances: Vec<BoundDistance>,
    /// Largest class whose bound is violated at the requested significance.
    pub excluded: Option<BoundClass>,
    /// The value sits above the qubit quantum maximum at the requested
    /// significance, which no qubit model explains.
    pub exceeds_quantum_max: bool,
    pub label: String,
}

/// Compares a witness estimate against every available class bound.
pub fn verdict(
    spec: &WitnessSpec,
    value: WitnessValue,
    stderr: f64,
    significance: f64,
) -> CertificationVerdict {
    let v = value.value;
    let distances: Vec<BoundDistance> = spec
        .bounds
        .iter()
        .map(|(class, bound)| BoundDistance {
            class,
            bound,
            sigma: sigma_distance(v, bound, stderr),
        })
        .collect();
    let violated = |d: &BoundDistance| v > d.bound && d.sigma >= significance;
    let excluded = distances
        .iter()
        .filter(|d| d.class != BoundClass::EntangledMax && violated(d))
        .map(|d| d.class)
        .max();
    let exceeds_quantum_max = distances
        .iter()
        .any(|d| d.class == BoundClass::EntangledMax && violated(d));
    let sigma_of = |class| {
        distances
            .iter()
            .find(|d| d.class == class)
            .map(|d| d.sigma)
            .unwrap_or(f64::NAN)
    };
    let label = match excluded {
        None => "inconclusive".to_string(),
        Some(class) => {
            let what = match class {
                BoundClass::Unentangled => "entangled measurement certified",
                BoundClass::Locc => "non-LOCC measurement certified",
                _ => "non-classical measurement certified",
            };
            format!("{what} ({}σ)", format_sigma(sigma_of(class)))
        }
    };
    CertificationVerdict {
        witness: spec.name.clone(),
        value: v,
        stderr,
        significance,
        distances,
        excluded,
        exceeds_quantum_max,
        label,
    }
}

fn sigma_distance(value: f64, bound: f64, stderr: f64) -> f64 {
    let diff = value - bound;
    if stderr > 0.0 {
        diff / stderr
    } else if diff > 0.0 {
        f64::INFINITY
    } else if diff < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

fn format_sigma(s: f64) -> String {
    if !s.is_finite() {
        return "inf".into();
    }
    let text = format!("{s:.2}");
    let text = text.trim_end_matches('0');
    text.trim_end_matches('.').to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessFile {
    name: String,
    dims: Dims,
    coefficients: Vec<CoefficientEntry>,
    #[serde(default)]
    bounds: ClassBounds,
}

/// One sparse coefficient; `c` is 1-based.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientEntry {
    c: usize,
    x: usize,
    y: usize,
    z: usize,
    value: f64,
}

impl From<&WitnessSpec> for WitnessFile {
    fn from(spec: &WitnessSpec) -> Self {
        let d = spec.dims;
        let mut coefficients = Vec::new();
        for (x, y, z) in d.cells() {
            for c in 0..d.nc {
                let value = spec.coeff(c, x, y, z);
                if value != 0.0 {
                    coefficients.push(CoefficientEntry {
                        c: c + 1,
                        x,
                        y,
                        z,
                        value,
                    });
                }
            }
        }
        WitnessFile {
            name: spec.name.clone(),
            dims: d,
            coefficients,
            bounds: spec.bounds,
        }
    }
}

impl TryFrom<WitnessFile> for WitnessSpec {
    type Error = Error;

    fn try_from(file: WitnessFile) -> Result<Self> {
        let d = file.dims;
        if d.is_empty() {
            return Err(Error::InvalidWitness("all dimensions must be positive".into()));
        }
        let mut coefficients = vec![0.0; d.len()];
        let mut seen = vec![false; d.len()];
        for e in &file.coefficients {
            if e.c == 0 || e.c > d.nc || e.x >= d.nx || e.y >= d.ny || e.z >= d.nz {
                return Err(Error::InvalidWitness(format!(
                    "coefficient (c={}, x={}, y={}, z={}) outside dims {d}",
                    e.c, e.x, e.y, e.z
                )));
            }
            let i = d.index(e.c - 1, e.x, e.y, e.z);
            if seen[i] {
                return Err(Error::InvalidWitness(format!(
                    "duplicate coefficient (c={}, x={}, y={}, z={})",
                    e.c, e.x, e.y, e.z
                )));
            }
            seen[i] = true;
            coefficients[i] = e.value;
        }
        WitnessSpec::new(file.name, d, coefficients, file.bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        born_table, partial_bsm_ideal, partial_bsm_noisy, trigonal_preparations,
        unentangled_povm_pair, Party, VisibilityModel,
    };

    fn trigonal_table(m: &crate::model::MeasurementAssembly) -> ProbabilityTable {
        born_table(
            &trigonal_preparations(Party::A),
            &trigonal_preparations(Party::B),
            m,
        )
        .unwrap()
    }

    #[test]
    fn w_coefficients() {
        let w = witness_w();
        assert_eq!(w.dims(), Dims::new(3, 3, 1, 3));
        assert_eq!(w.coeff(0, 0, 0, 0), 1.0);
        assert_eq!(w.coeff(0, 0, 1, 0), -1.0);
        assert_eq!(w.coeff(1, 1, 2, 0), 1.0);
        assert_eq!(w.coeff(1, 1, 1, 0), -1.0);
        assert_eq!(w.coefficients().iter().sum::<f64>(), -6.0);
        assert!((0..3).all(|x| (0..3).all(|y| w.coeff(2, x, y, 0) == 0.0)));
    }

    #[test]
    fn v_coefficients() {
        let v = witness_v();
        assert_eq!(v.dims(), Dims::new(3, 3, 2, 2));
        assert_eq!(v.coeff(0, 0, 0, 0), 2.0);
        assert_eq!(v.coeff(0, 1, 2, 1), -1.0);
        assert_eq!(v.coefficients().iter().sum::<f64>(), -6.0);
        assert_eq!(v.bounds.classical, Some(2.0));
        assert_eq!(v.bounds.unentangled, Some(3.0));
    }

    #[test]
    fn paper_strategies() {
        let w = evaluate(&witness_w(), &trigonal_table(&partial_bsm_ideal())).unwrap();
        assert!((w.value - 1.5).abs() < 1e-12);
        let v = evaluate(&witness_v(), &trigonal_table(&unentangled_povm_pair())).unwrap();
        assert!((v.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_table() {
        let w = witness_w();
        let v = evaluate(&w, &ProbabilityTable::uniform(w.dims())).unwrap();
        assert!((v.value + 2.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_curve_matches_brute_force() {
        // Independent route: the noisy effect keeps the populations of the
        // Bell projector and scales its coherence, so
        // p(c|x,y) = (1 + cos a cos b +- V sin a sin b) / 4.
        let w = witness_w();
        let ang = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / 3.0;
        for v in [0.0, 0.5, 5.0 / 6.0, 1.0] {
            let mut brute = 0.0;
            for x in 0..3 {
                for y in 0..3 {
                    for c in 0..2 {
                        let sign = if c == 0 { 1.0 } else { -1.0 };
                        let (a, b) = (ang(x), ang(y));
                        let p = (1.0 + a.cos() * b.cos() + sign * v * a.sin() * b.sin()) / 4.0;
                        brute += w.coeff(c, x, y, 0) * p;
                    }
                }
            }
            let table = trigonal_table(&partial_bsm_noisy(VisibilityModel::new(v).unwrap()));
            let got = evaluate(&w, &table).unwrap().value;
            assert!((got - brute).abs() < 1e-12);
            assert!((got - 1.5 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_errors() {
        let w = witness_w();
        let wrong = ProbabilityTable::uniform(Dims::new(3, 3, 2, 2));
        assert!(matches!(evaluate(&w, &wrong), Err(Error::DimensionMismatch(_))));
        let mut bad = ProbabilityTable::uniform(w.dims());
        bad.set(0, 2, 2, 0, 0.5);
        assert!(matches!(evaluate(&w, &bad), Err(Error::UnnormalizedTable { .. })));
    }

    #[test]
    fn verdicts() {
        let v = verdict(&witness_w(), WitnessValue { value: 1.32 }, 0.07, 3.0);
        assert_eq!(v.excluded, Some(BoundClass::Unentangled));
        let d = v.distances.iter().find(|d| d.class == BoundClass::Unentangled).unwrap();
        assert!((d.sigma - 0.32 / 0.07).abs() < 1e-12);
        assert_eq!(v.label, "entangled measurement certified (4.57σ)");
        assert!(!v.exceeds_quantum_max);

        let v = verdict(&witness_v(), WitnessValue { value: 2.75 }, 0.06, 3.0);
        assert_eq!(v.excluded, Some(BoundClass::Classical));
        assert_eq!(v.label, "non-classical measurement certified (12.5σ)");

        let v = verdict(&witness_w(), WitnessValue { value: 1.0 }, 0.0, 3.0);
        assert_eq!(v.excluded, None);
        assert_eq!(v.label, "inconclusive");
        assert!(v.distances.iter().all(|d| d.class == BoundClass::EntangledMax || d.sigma == 0.0));
    }

    #[test]
    fn verdict_respects_significance() {
        let v = verdict(&witness_w(), WitnessValue { value: 1.32 }, 0.07, 5.0);
        assert_eq!(v.excluded, None);
        let v = verdict(&witness_w(), WitnessValue { value: 2.0 }, 0.01, 3.0);
        assert!(v.exceeds_quantum_max);
    }

    #[test]
    fn json_round_trip_and_errors() {
        for spec in [witness_w(), witness_v()] {
            let back = WitnessSpec::from_json(&spec.to_json()).unwrap();
            assert_eq!(back, spec);
        }
        let err = WitnessSpec::from_json("{\n  \"name\": \"x\",\n  \"dims\": oops }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");

        let out_of_range = r#"{"name":"x","dims":{"nx":1,"ny":1,"nz":1,"nc":2},
            "coefficients":[{"c":3,"x":0,"y":0,"z":0,"value":1.0}]}"#;
        assert!(WitnessSpec::from_json(out_of_range).is_err());
        let zero_c = r#"{"name":"x","dims":{"nx":1,"ny":1,"nz":1,"nc":2},
            "coefficients":[{"c":0,"x":0,"y":0,"z":0,"value":1.0}]}"#;
        assert!(WitnessSpec::from_json(zero_c).is_err());
        let non_monotone = r#"{"name":"x","dims":{"nx":1,"ny":1,"nz":1,"nc":2},
            "coefficients":[], "bounds":{"classical":2.0,"unentangled":1.0}}"#;
        assert!(WitnessSpec::from_json(non_monotone).is_err());
    }
}
