//! Python bindings for the simplex-geostat library.
//!
//! Exposes the log-ratio transforms, the mean estimators, covariance-model
//! validation, kriging of the mean, and the seeded dataset generator.
//! Structured results cross the boundary as plain dicts and lists; model
//! and generator configs are passed as JSON strings, matching the CLI file
//! formats.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::IntoPyObjectExt;
use pyo3::types::{PyDict, PyList};

use simplex_geostat::kriging::{self, KrigingWeights};
use simplex_geostat::means::MeanMethod;
use simplex_geostat::simplex::{aitchison_inner, Composition, CompositionalDataset, SiteSet};
use simplex_geostat::transforms::{GeneratingFunction, IlrCoordinates};
use simplex_geostat::{covariance, datagen, io, transforms, CovModel, Error};

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn composition(parts: Vec<f64>) -> PyResult<Composition> {
    Composition::new(parts).map_err(to_py_err)
}

fn dataset(rows: Vec<Vec<f64>>) -> PyResult<CompositionalDataset> {
    let rows = rows
        .into_iter()
        .map(|r| Composition::new(r).map_err(to_py_err))
        .collect::<PyResult<Vec<_>>>()?;
    CompositionalDataset::from_rows(rows).map_err(to_py_err)
}

fn site_set(sites: Vec<Vec<f64>>) -> PyResult<SiteSet> {
    SiteSet::new(sites).map_err(to_py_err)
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?
            }
        }
        Value::String(s) => s.into_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)?
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_py_any(py)?
        }
    })
}

type Rows = Vec<Vec<f64>>;

/// Rescales nonnegative parts to sum to one.
#[pyfunction]
fn closure(parts: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(simplex_geostat::closure(&parts)
        .map_err(to_py_err)?
        .parts()
        .to_vec())
}

/// Half the taxicab distance between two compositions.
#[pyfunction]
fn half_taxi_distance(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    simplex_geostat::half_taxi_distance(&composition(x)?, &composition(y)?).map_err(to_py_err)
}

/// Aitchison inner product of two strictly positive compositions.
#[pyfunction]
#[pyo3(name = "aitchison_inner")]
fn aitchison_inner_py(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    aitchison_inner(&composition(x)?, &composition(y)?).map_err(to_py_err)
}

/// Isometric log-ratio coordinates of a strictly positive composition.
#[pyfunction]
fn ilr(parts: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(transforms::ilr(&composition(parts)?)
        .map_err(to_py_err)?
        .coords()
        .to_vec())
}

/// Composition whose log-ratio coordinates are `coords`.
#[pyfunction]
fn ilr_inv(coords: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = coords.len() + 1;
    Ok(transforms::ilr_inv(&IlrCoordinates::new(coords), p)
        .map_err(to_py_err)?
        .parts()
        .to_vec())
}

fn parse_phi(text: Option<&str>) -> PyResult<GeneratingFunction> {
    let text = text.unwrap_or("identity");
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (text.trim(), None),
    };
    let need = |arg: Option<&str>| -> PyResult<f64> {
        arg.ok_or_else(|| PyValueError::new_err(format!("`{name}` needs a parameter")))?
            .parse()
            .map_err(|_| PyValueError::new_err(format!("bad parameter in `{text}`")))
    };
    match name {
        "identity" => Ok(GeneratingFunction::Identity),
        "log" => Ok(GeneratingFunction::Log),
        "reciprocal" => Ok(GeneratingFunction::Reciprocal),
        "power" => GeneratingFunction::power(need(arg)?).map_err(to_py_err),
        "symmetric-sine" => GeneratingFunction::symmetric_sine(need(arg)?).map_err(to_py_err),
        other => Err(PyValueError::new_err(format!(
            "unknown generating function `{other}`"
        ))),
    }
}

/// Compositional mean of `rows`. Methods: arith, geom, ilr, qam,
/// graph-median, l1-median; `phi` selects the generating function for qam,
/// e.g. "log" or "symmetric-sine:0.1".
#[pyfunction]
#[pyo3(signature = (rows, method, weights=None, phi=None))]
fn mean(
    py: Python<'_>,
    rows: Vec<Vec<f64>>,
    method: &str,
    weights: Option<Vec<f64>>,
    phi: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let ds = dataset(rows)?;
    let method = match method {
        "arith" => MeanMethod::WeightedArithmetic { weights },
        "geom" => MeanMethod::NormalizedGeometric,
        "ilr" => MeanMethod::IlrMean { weights },
        "qam" => MeanMethod::QuasiArithmeticComponentwise {
            phi: parse_phi(phi)?,
            weights,
        },
        "graph-median" => MeanMethod::GraphMedian,
        "l1-median" => MeanMethod::L1Median,
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let estimate = method.evaluate(&ds).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("method", estimate.method.name())?;
    out.set_item("point", &estimate.point)?;
    out.set_item("sum", estimate.sum())?;
    out.set_item("in_simplex", estimate.in_simplex(1e-9))?;
    out.set_item("weights_used", estimate.weights_used)?;
    out.into_py_any(py)
}

fn solution_dict(py: Python<'_>, sol: &kriging::KrigingSolution) -> PyResult<Py<PyAny>> {
    let out = PyDict::new(py);
    match &sol.weights {
        KrigingWeights::Shared(v) => out.set_item("lambda", v.as_slice().to_vec())?,
        KrigingWeights::Full(m) => {
            let cols: Vec<Vec<f64>> = (0..sol.p)
                .map(|l| m.column(l).as_slice().to_vec())
                .collect();
            out.set_item("lambda", cols)?;
        }
    }
    let mu: Vec<Vec<f64>> = (0..sol.mu.nrows())
        .map(|i| (0..sol.mu.ncols()).map(|j| sol.mu[(i, j)]).collect())
        .collect();
    out.set_item("mu", mu)?;
    out.set_item(
        "alpha",
        sol.alpha.as_ref().map(|a| a.as_slice().to_vec()),
    )?;
    out.set_item("active_set", sol.active_set.clone())?;
    out.set_item("variance", sol.variance.clone())?;
    let (equal, max_dev) = kriging::weights_equal_across_variables(sol, 1e-9);
    out.set_item("weights_equal", equal)?;
    out.set_item("max_deviation", max_dev)?;
    out.into_py_any(py)
}

/// Kriging of the mean. Modes: single (proportional model, one shared
/// weight vector), cokrige (simultaneous system), nonneg (shared weights
/// constrained to the simplex), walvoort (data-dependent compositional
/// weights; needs `data`).
#[pyfunction]
#[pyo3(signature = (model_json, sites, mode, data=None))]
fn krige(
    py: Python<'_>,
    model_json: &str,
    sites: Vec<Vec<f64>>,
    mode: &str,
    data: Option<Vec<Vec<f64>>>,
) -> PyResult<Py<PyAny>> {
    let model = io::read_model(model_json).map_err(to_py_err)?;
    let sites = site_set(sites)?;
    match mode {
        "single" => {
            let rho = match &model {
                CovModel::Proportional { rho, .. } => rho.clone(),
                CovModel::Lmc { .. } => {
                    return Err(PyValueError::new_err("single mode needs a proportional model"))
                }
            };
            let r = covariance::correlation_matrix(&rho, &sites).map_err(to_py_err)?;
            let sol = kriging::krige_mean_single_solution(&r).map_err(to_py_err)?;
            solution_dict(py, &sol)
        }
        "cokrige" => {
            let sol = kriging::cokrige_means(&model, &sites).map_err(to_py_err)?;
            solution_dict(py, &sol)
        }
        "nonneg" => {
            let sol = kriging::nonneg_cokrige_means(&model, &sites).map_err(to_py_err)?;
            solution_dict(py, &sol)
        }
        "walvoort" => {
            let data = data.ok_or_else(|| {
                PyValueError::new_err("walvoort mode needs data rows")
            })?;
            let ds = dataset(data)?;
            let ck = kriging::walvoort_compositional_krige(&model, &sites, &ds)
                .map_err(to_py_err)?;
            let out = PyDict::new(py);
            out.set_item(
                "lambda",
                ck.weights
                    .iter()
                    .map(|v| v.as_slice().to_vec())
                    .collect::<Vec<_>>(),
            )?;
            out.set_item("estimates", ck.estimates)?;
            out.set_item("active_parts", ck.active_parts)?;
            out.set_item("objective", ck.objective)?;
            out.into_py_any(py)
        }
        other => Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
}

/// Validates a covariance-model config over a site set.
#[pyfunction]
fn validate_model(py: Python<'_>, model_json: &str, sites: Vec<Vec<f64>>) -> PyResult<Py<PyAny>> {
    let model = io::read_model(model_json).map_err(to_py_err)?;
    let sites = site_set(sites)?;
    let report = covariance::validate_model(&model, &sites);
    let value = serde_json::to_value(&report)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

/// Generates a seeded dataset from a generator-spec JSON string; returns
/// (sites, rows). Identical specs produce identical output.
#[pyfunction]
fn simulate(model_json: &str) -> PyResult<(Vec<Vec<f64>>, Rows)> {
    let spec = io::read_generator_spec(model_json).map_err(to_py_err)?;
    let sites = datagen::gen_sites(&spec).map_err(to_py_err)?;
    let ds = datagen::gen_compositions(&spec, &sites).map_err(to_py_err)?;
    let rows = ds.rows().iter().map(|r| r.parts().to_vec()).collect();
    Ok((sites.sites().to_vec(), rows))
}

#[pymodule]
fn simplex_geostat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(closure, m)?)?;
    m.add_function(wrap_pyfunction!(half_taxi_distance, m)?)?;
    m.add_function(wrap_pyfunction!(aitchison_inner_py, m)?)?;
    m.add_function(wrap_pyfunction!(ilr, m)?)?;
    m.add_function(wrap_pyfunction!(ilr_inv, m)?)?;
    m.add_function(wrap_pyfunction!(mean, m)?)?;
    m.add_function(wrap_pyfunction!(krige, m)?)?;
    m.add_function(wrap_pyfunction!(validate_model, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
