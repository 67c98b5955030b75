//! Python bindings for `hazard-odds`.
//!
//! Usage errors (bad arguments, unparsable specs, malformed CSV) raise
//! `ValueError`; numerical and model failures raise `RuntimeError`.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hazard_odds::verify::{default_baselines, default_lambdas, run_verification as run_grid, VerifyOptions};
use hazard_odds::{
    between_group_concordance as core_between, cox_fit as core_cox_fit, explain as core_explain,
    harrell_c as core_harrell_c, hr_to_prob as core_hr_to_prob, kaplan_meier as core_kaplan_meier,
    prob_later as core_prob_later, prob_to_hr as core_prob_to_hr, simulate_trial as core_simulate, wald_ci,
    Arm, BaselineDistribution, CensoringSpec, ConcordanceResult, CoxOptions, HazardRatio, OddsRendering,
    PairRule, PrecedenceProbability, SurvivalDataset, Ties, TrialConfig,
};

fn to_py(e: hazard_odds::Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn ratio(hr: f64) -> PyResult<HazardRatio> {
    HazardRatio::new(hr).map_err(to_py)
}

/// Probability that the treatment subject's event comes first, `hr / (1 + hr)`.
#[pyfunction]
fn hr_to_prob(hr: f64) -> PyResult<f64> {
    Ok(core_hr_to_prob(ratio(hr)?).value())
}

/// Probability that the treatment subject's event comes later, `1 / (1 + hr)`.
#[pyfunction]
fn prob_later(hr: f64) -> PyResult<f64> {
    Ok(core_prob_later(ratio(hr)?).value())
}

#[pyfunction]
fn prob_to_hr(p: f64) -> PyResult<f64> {
    let p = PrecedenceProbability::new(p).map_err(to_py)?;
    Ok(core_prob_to_hr(p).value())
}

/// Odds string such as `"2:1"` or `"3.5:1"`.
#[pyfunction]
fn odds(hr: f64) -> PyResult<String> {
    Ok(OddsRendering::from_hr(ratio(hr)?).to_string())
}

#[pyfunction]
#[pyo3(signature = (hr, event = "heal"))]
fn explain(hr: f64, event: &str) -> PyResult<String> {
    Ok(core_explain(ratio(hr)?, event))
}

/// Control-arm time distribution, built from a spec such as `"weibull(shape=2,scale=1)"`.
#[pyclass(frozen, from_py_object, module = "hazard_odds_py")]
#[derive(Clone)]
struct Baseline {
    inner: BaselineDistribution,
}

#[pymethods]
impl Baseline {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Baseline { inner: spec.parse().map_err(to_py)? })
    }

    fn cumulative_hazard(&self, t: f64) -> PyResult<f64> {
        self.inner.cumulative_hazard(t).map_err(to_py)
    }

    fn survival(&self, t: f64) -> PyResult<f64> {
        self.inner.survival(t).map_err(to_py)
    }

    fn hazard(&self, t: f64) -> PyResult<f64> {
        self.inner.hazard(t).map_err(to_py)
    }

    fn density(&self, t: f64) -> PyResult<f64> {
        self.inner.density(t).map_err(to_py)
    }

    fn inverse_survival(&self, u: f64) -> PyResult<f64> {
        self.inner.inverse_survival(u).map_err(to_py)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Baseline('{}')", self.inner)
    }
}

/// Right-censored two-arm data: `time`, `event` (bool) and `arm` (0 control, 1 treatment).
#[pyclass(frozen, module = "hazard_odds_py")]
struct Dataset {
    inner: SurvivalDataset,
}

#[pymethods]
impl Dataset {
    #[new]
    fn new(times: Vec<f64>, events: Vec<bool>, arms: Vec<u8>) -> PyResult<Self> {
        Ok(Dataset { inner: SurvivalDataset::from_columns(&times, &events, &arms).map_err(to_py)? })
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Ok(Dataset { inner: SurvivalDataset::read_csv(BufReader::new(file)).map_err(to_py)? })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        self.inner.write_csv(BufWriter::new(file)).map_err(to_py)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    #[getter]
    fn events(&self) -> Vec<bool> {
        self.inner.observations().iter().map(|o| o.event).collect()
    }

    #[getter]
    fn arms(&self) -> Vec<u8> {
        self.inner.observations().iter().map(|o| o.arm.indicator()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, control={}, treatment={}, events={})",
            self.inner.len(),
            self.inner.count(Arm::Control),
            self.inner.count(Arm::Treatment),
            self.inner.event_count()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n_control, n_treatment, hr, baseline, seed, censor = "none"))]
fn simulate_trial(
    n_control: usize,
    n_treatment: usize,
    hr: f64,
    baseline: &Baseline,
    seed: u64,
    censor: &str,
) -> PyResult<Dataset> {
    let censoring: CensoringSpec = censor.parse().map_err(to_py)?;
    let config = TrialConfig {
        n_control,
        n_treatment,
        lambda: ratio(hr)?,
        baseline: baseline.inner.clone(),
        censoring,
        seed,
    };
    Ok(Dataset { inner: core_simulate(&config).map_err(to_py)? })
}

#[pyfunction]
#[pyo3(signature = (data, ties = "breslow", level = 0.95))]
fn cox_fit<'py>(py: Python<'py>, data: &Dataset, ties: &str, level: f64) -> PyResult<Bound<'py, PyDict>> {
    let ties: Ties = ties.parse().map_err(to_py)?;
    let fit = core_cox_fit(&data.inner, &CoxOptions { ties, ..CoxOptions::default() }).map_err(to_py)?;
    let (lo, hi) = wald_ci(&fit, level).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("beta_hat", fit.beta_hat)?;
    d.set_item("hr", fit.hazard_ratio())?;
    d.set_item("se", fit.se)?;
    d.set_item("ci_low", lo)?;
    d.set_item("ci_high", hi)?;
    d.set_item("loglik0", fit.loglik_at_zero)?;
    d.set_item("loglik1", fit.loglik_at_hat)?;
    d.set_item("iterations", fit.iterations)?;
    d.set_item("converged", fit.converged)?;
    d.set_item("ties", if ties == Ties::Efron { "efron" } else { "breslow" })?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (data, arm = None))]
fn kaplan_meier<'py>(py: Python<'py>, data: &Dataset, arm: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let arm = match arm {
        None => None,
        Some("control") => Some(Arm::Control),
        Some("treatment") => Some(Arm::Treatment),
        Some(other) => {
            return Err(PyValueError::new_err(format!("arm must be 'control' or 'treatment', got '{other}'")))
        }
    };
    let curve = core_kaplan_meier(&data.inner, arm).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("jump_times", curve.jump_times)?;
    d.set_item("values", curve.values)?;
    d.set_item("at_risk", curve.at_risk)?;
    d.set_item("events", curve.events)?;
    Ok(d)
}

fn concordance_dict<'py>(py: Python<'py>, r: ConcordanceResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("c", r.c)?;
    d.set_item("concordant", r.concordant)?;
    d.set_item("discordant", r.discordant)?;
    d.set_item("tied_prediction", r.tied_prediction)?;
    d.set_item("comparable", r.comparable)?;
    d.set_item(
        "pair_rule",
        match r.pair_rule {
            PairRule::BothEvents => "both_events",
            PairRule::HarrellStandard => "harrell",
        },
    )?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (data, scores, rule = "harrell"))]
fn harrell_c<'py>(py: Python<'py>, data: &Dataset, scores: Vec<f64>, rule: &str) -> PyResult<Bound<'py, PyDict>> {
    let rule: PairRule = rule.parse().map_err(to_py)?;
    concordance_dict(py, core_harrell_c(&data.inner, &scores, rule).map_err(to_py)?)
}

/// Concordance over treatment x control pairs; estimates P(treatment event first).
#[pyfunction]
#[pyo3(signature = (data, rule = "both-events"))]
fn between_group_concordance<'py>(py: Python<'py>, data: &Dataset, rule: &str) -> PyResult<Bound<'py, PyDict>> {
    let rule: PairRule = rule.parse().map_err(to_py)?;
    concordance_dict(py, core_between(&data.inner, rule).map_err(to_py)?)
}

/// Quadrature and Monte Carlo check over a grid of baselines and hazard ratios.
/// Returns one dict per cell, baseline-major.
#[pyfunction]
#[pyo3(signature = (seed, baselines = None, hrs = None, pairs = 100_000, tol = 1e-8, break_ph = false))]
fn verify<'py>(
    py: Python<'py>,
    seed: u64,
    baselines: Option<Vec<Baseline>>,
    hrs: Option<Vec<f64>>,
    pairs: u64,
    tol: f64,
    break_ph: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let baselines = match baselines {
        Some(b) => b.into_iter().map(|b| b.inner).collect(),
        None => default_baselines(),
    };
    let lambdas = match hrs {
        Some(h) => h.into_iter().map(ratio).collect::<PyResult<Vec<_>>>()?,
        None => default_lambdas(),
    };
    let options = VerifyOptions { n_pairs: pairs, seed, quadrature_tol: tol, late_onset: break_ph };
    let reports = py.detach(|| run_grid(&baselines, &lambdas, &options)).map_err(to_py)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("baseline", r.baseline.to_string())?;
            d.set_item("hr", r.lambda.value())?;
            d.set_item("onset", r.onset)?;
            d.set_item("analytic_p_before", r.analytic_p_before)?;
            d.set_item("analytic_p_after", r.analytic_p_after)?;
            d.set_item("quadrature_p_after", r.quadrature_p_after)?;
            d.set_item("quadrature_abs_error_estimate", r.quadrature_abs_error_estimate)?;
            d.set_item("mc_p_before", r.mc_p_before)?;
            d.set_item("mc_pairs", r.mc_pairs)?;
            d.set_item("mc_halfwidth_4sigma", r.mc_halfwidth_4sigma)?;
            d.set_item("pass", r.pass)?;
            d.set_item("seed", r.seed)?;
            d.set_item("error", r.error)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn hazard_odds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hr_to_prob, m)?)?;
    m.add_function(wrap_pyfunction!(prob_later, m)?)?;
    m.add_function(wrap_pyfunction!(prob_to_hr, m)?)?;
    m.add_function(wrap_pyfunction!(odds, m)?)?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trial, m)?)?;
    m.add_function(wrap_pyfunction!(cox_fit, m)?)?;
    m.add_function(wrap_pyfunction!(kaplan_meier, m)?)?;
    m.add_function(wrap_pyfunction!(harrell_c, m)?)?;
    m.add_function(wrap_pyfunction!(between_group_concordance, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_class::<Baseline>()?;
    m.add_class::<Dataset>()?;
    Ok(())
}
