use ::paragodel as core;
use core::oracle::{search, SearchOutcome, Target};
use core::tableau::{decide_sat, prove, SatMode, Verdict};
use core::translate::TranslationKind;
use core::{Mode, Rational01, SearchBounds, SourceFormula, ValuePair};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational01) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.to_string(),))
}

fn pair<'py>(py: Python<'py>, v: &ValuePair) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    Ok((fraction(py, &v.pos)?, fraction(py, &v.neg)?))
}

/// A parsed formula.
#[pyclass(name = "Formula", frozen, eq, hash, from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyFormula(core::Formula);

#[pymethods]
impl PyFormula {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        core::parse(text).map(PyFormula).map_err(value_err)
    }

    fn desugar(&self) -> Self {
        PyFormula(self.0.desugar())
    }

    /// `modal_count`, `modal_depth`, `size` and `atoms`.
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.0.metrics();
        let d = PyDict::new(py);
        d.set_item("modal_count", m.modal_count)?;
        d.set_item("modal_depth", m.modal_depth)?;
        d.set_item("size", m.size)?;
        d.set_item("atoms", m.atoms.into_iter().collect::<Vec<_>>())?;
        Ok(d)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.0.to_string())
    }
}

/// A finite bi-relational model.
#[pyclass(name = "Model", frozen, from_py_object)]
#[derive(Clone)]
struct PyModel(core::KripkeModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::KripkeModel::from_json(text).map(PyModel).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn worlds(&self) -> Vec<String> {
        self.0.worlds().to_vec()
    }

    /// The value pair of `formula` at `world`, as two `Fraction`s.
    fn eval<'py>(&self, py: Python<'py>, world: &str, formula: &PyFormula) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
        let v = self.0.eval(world, &formula.0).map_err(value_err)?;
        pair(py, &v)
    }

    /// Whether `formula` is valid in the model under `mode`.
    #[pyo3(signature = (formula, mode = "strong"))]
    fn is_valid(&self, formula: &PyFormula, mode: &str) -> PyResult<bool> {
        let mode: Mode = mode.parse().map_err(value_err)?;
        Ok(self.0.check_validity(&formula.0, mode).holds)
    }

    /// `crisp_plus`, `crisp_minus` and `mono_relational`.
    fn frame_predicates<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = self.0.frame_predicates();
        let d = PyDict::new(py);
        d.set_item("crisp_plus", p.crisp_plus)?;
        d.set_item("crisp_minus", p.crisp_minus)?;
        d.set_item("mono_relational", p.mono_relational)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Model(worlds={:?})", self.0.worlds())
    }
}

/// Outcome of a proof attempt. Refuted formulas carry a countermodel, the
/// falsifying world and coordinate, and the value pair there.
#[pyclass(name = "Verdict", frozen, get_all)]
struct PyVerdict {
    proved: bool,
    model: Option<PyModel>,
    world: Option<String>,
    coord: Option<u8>,
    value: Option<(Py<PyAny>, Py<PyAny>)>,
}

#[pymethods]
impl PyVerdict {
    fn __bool__(&self) -> bool {
        self.proved
    }

    fn __repr__(&self) -> String {
        match &self.world {
            None => "Verdict(proved=True)".to_string(),
            Some(w) => format!("Verdict(proved=False, world={w:?}, coord={})", self.coord.unwrap_or(0)),
        }
    }
}

fn parse_formula(formula: &Bound<'_, PyAny>) -> PyResult<core::Formula> {
    if let Ok(f) = formula.cast::<PyFormula>() {
        return Ok(f.get().0.clone());
    }
    core::parse(&formula.extract::<String>()?).map_err(value_err)
}

/// Decides validity under `pos`, `neg` or `strong`.
#[pyfunction(name = "prove")]
#[pyo3(signature = (formula, mode = "strong"))]
fn py_prove(py: Python<'_>, formula: &Bound<'_, PyAny>, mode: &str) -> PyResult<PyVerdict> {
    let phi = parse_formula(formula)?;
    let mode: Mode = mode.parse().map_err(value_err)?;
    let verdict = prove(&phi, mode).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(match verdict {
        Verdict::Proved => PyVerdict { proved: true, model: None, world: None, coord: None, value: None },
        Verdict::Countermodel(c) => {
            let (a, b) = pair(py, &c.value)?;
            PyVerdict {
                proved: false,
                model: Some(PyModel(c.model)),
                world: Some(c.world),
                coord: Some(c.coord.number()),
                value: Some((a.unbind(), b.unbind())),
            }
        }
    })
}

/// Decides satisfiability under `pos1` or `strong`. Returns the satisfying
/// model and world, or `None`.
#[pyfunction(name = "decide_sat")]
#[pyo3(signature = (formula, mode = "pos1"))]
fn py_decide_sat(formula: &Bound<'_, PyAny>, mode: &str) -> PyResult<Option<(PyModel, String)>> {
    let phi = parse_formula(formula)?;
    let mode: SatMode = mode.parse().map_err(value_err)?;
    let r = decide_sat(&phi, mode).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(r.model.map(|(m, w)| (PyModel(m), w)))
}

/// Bounded countermodel search. Returns the model and world of the first
/// hit, or `None` when the bounded space holds no countermodel. Raises
/// `RuntimeError` when the space exceeds `budget`.
#[pyfunction(name = "search_countermodel")]
#[pyo3(signature = (formula, mode = "strong", max_worlds = 2, grid = 2, budget = None))]
fn py_search_countermodel(
    formula: &Bound<'_, PyAny>,
    mode: &str,
    max_worlds: usize,
    grid: u32,
    budget: Option<u64>,
) -> PyResult<Option<(PyModel, String)>> {
    let phi = parse_formula(formula)?;
    let mode: Mode = mode.parse().map_err(value_err)?;
    let mut bounds = SearchBounds::new(max_worlds, grid);
    if let Some(b) = budget {
        bounds.budget = b;
    }
    let s = search(&phi, Target::Violation(mode), &bounds, false).map_err(value_err)?;
    match s.outcome {
        SearchOutcome::Found(h) => Ok(Some((PyModel(h.model), h.world))),
        SearchOutcome::NotFound { .. } => Ok(None),
        SearchOutcome::BudgetExceeded { required, budget } => {
            Err(PyRuntimeError::new_err(format!("search needs {required} models, budget is {budget}")))
        }
    }
}

/// Applies `plusbullet`, `minusbullet`, `nabla` or `partial` to a formula
/// of the box/diamond language.
#[pyfunction(name = "translate")]
fn py_translate(formula: &Bound<'_, PyAny>, kind: &str) -> PyResult<PyFormula> {
    let phi = parse_formula(formula)?;
    let kind: TranslationKind = kind.parse().map_err(value_err)?;
    let src = SourceFormula::try_from(&phi).map_err(value_err)?;
    Ok(PyFormula(kind.apply(&src)))
}

#[pymodule]
fn paragodel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFormula>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(py_prove, m)?)?;
    m.add_function(wrap_pyfunction!(py_decide_sat, m)?)?;
    m.add_function(wrap_pyfunction!(py_search_countermodel, m)?)?;
    m.add_function(wrap_pyfunction!(py_translate, m)?)?;
    Ok(())
}
