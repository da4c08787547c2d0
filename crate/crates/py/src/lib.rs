//! Python bindings. Rationals cross the boundary as `fractions.Fraction`;
//! elements as tuples of coordinates.

use std::sync::Arc;

use freiman_core::chang::{chang_iterate, energy_floor_steps};
use freiman_core::covering::{ruzsa_cover as core_ruzsa, statistical_cover as core_cover, verify_covered as core_verify};
use freiman_core::fourier::{annihilator as core_annihilator, spectrum as core_spectrum, CharSet};
use freiman_core::func::rational_to_f64;
use freiman_core::pipeline::{
    petridis_subset as core_petridis, run_pipeline as core_pipeline, CheckKind, PetridisMode, PipelineConfig,
    Quantity, DEFAULT_PETRIDIS_CAP,
};
use freiman_core::set::{generate_instance, Generators, InstanceKind};
use freiman_core::{Error, GroupSet, GroupSpec, Rational, RationalFunc};
use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn err(e: Error) -> PyErr {
    match e {
        Error::Internal(_) | Error::CheckFailed { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Accepts anything with integer `numerator`/`denominator` (int, Fraction).
/// Floats are refused so values stay exact.
fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    if obj.is_instance_of::<pyo3::types::PyFloat>() {
        return Err(PyValueError::new_err("pass an int or fractions.Fraction, not a float"));
    }
    let n: BigInt = obj.getattr("numerator")?.extract()?;
    let d: BigInt = obj.getattr("denominator")?.extract()?;
    if d == BigInt::from(0) {
        return Err(PyValueError::new_err("zero denominator"));
    }
    Ok(Rational::new(n, d))
}

fn fraction<'py>(py: Python<'py>, q: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((q.numer().clone(), q.denom().clone()))
}

/// Finite abelian group `Z_{m1} x ... x Z_{mk}`.
#[pyclass(name = "Group", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyGroup {
    inner: Arc<GroupSpec>,
}

#[pymethods]
impl PyGroup {
    #[new]
    fn new(moduli: Vec<u32>) -> PyResult<Self> {
        Ok(PyGroup { inner: Arc::new(GroupSpec::new(moduli).map_err(err)?) })
    }

    #[getter]
    fn moduli(&self) -> Vec<u32> {
        self.inner.moduli().to_vec()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn exponent(&self) -> u64 {
        self.inner.exponent()
    }

    fn index_of(&self, coords: Vec<u32>) -> PyResult<usize> {
        let e = self.inner.element(coords).map_err(err)?;
        self.inner.index_of(&e).map_err(err)
    }

    fn element_at(&self, index: usize) -> PyResult<Vec<u32>> {
        Ok(self.inner.element_at(index).map_err(err)?.into_coords())
    }

    fn add(&self, x: Vec<u32>, y: Vec<u32>) -> PyResult<Vec<u32>> {
        let x = self.inner.element(x).map_err(err)?;
        let y = self.inner.element(y).map_err(err)?;
        Ok(self.inner.add(&x, &y).map_err(err)?.into_coords())
    }

    fn __repr__(&self) -> String {
        let m: Vec<String> = self.inner.moduli().iter().map(|m| m.to_string()).collect();
        format!("Group({})", m.join("x"))
    }
}

/// Subset of a group.
#[pyclass(name = "Set", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PySet {
    inner: GroupSet,
}

impl PySet {
    fn wrap(inner: GroupSet) -> Self {
        PySet { inner }
    }
}

#[pymethods]
impl PySet {
    #[new]
    fn new(group: &PyGroup, elements: Vec<Vec<u32>>) -> PyResult<Self> {
        let g = &group.inner;
        let els = elements
            .into_iter()
            .map(|c| g.element(c))
            .collect::<freiman_core::Result<Vec<_>>>()
            .map_err(err)?;
        Ok(Self::wrap(GroupSet::from_elements(g.clone(), &els).map_err(err)?))
    }

    #[getter]
    fn group(&self) -> PyGroup {
        PyGroup { inner: self.inner.spec().clone() }
    }

    fn elements(&self) -> Vec<Vec<u32>> {
        self.inner.elements().into_iter().map(|e| e.into_coords()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, coords: Vec<u32>) -> PyResult<bool> {
        let e = self.inner.spec().element(coords).map_err(err)?;
        self.inner.contains(&e).map_err(err)
    }

    fn sumset(&self, other: &PySet) -> PyResult<PySet> {
        Ok(Self::wrap(self.inner.sumset(&other.inner).map_err(err)?))
    }

    fn difference_set(&self, other: &PySet) -> PyResult<PySet> {
        Ok(Self::wrap(self.inner.difference_set(&other.inner).map_err(err)?))
    }

    fn union(&self, other: &PySet) -> PyResult<PySet> {
        Ok(Self::wrap(self.inner.union(&other.inner).map_err(err)?))
    }

    fn intersection(&self, other: &PySet) -> PyResult<PySet> {
        Ok(Self::wrap(self.inner.intersection(&other.inner).map_err(err)?))
    }

    fn translate(&self, coords: Vec<u32>) -> PyResult<PySet> {
        let e = self.inner.spec().element(coords).map_err(err)?;
        Ok(Self::wrap(self.inner.translate(&e).map_err(err)?))
    }

    fn k_fold_sum(&self, k: usize) -> PySet {
        Self::wrap(self.inner.k_fold_sum(k))
    }

    fn closure(&self) -> PySet {
        Self::wrap(self.inner.closure())
    }

    fn is_subgroup(&self) -> bool {
        self.inner.is_subgroup()
    }

    fn is_subset(&self, other: &PySet) -> PyResult<bool> {
        self.inner.is_subset(&other.inner).map_err(err)
    }

    fn doubling_constant<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.doubling_constant().map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Set({} elements of {})", self.inner.len(), self.group().__repr__())
    }
}

/// Seeded instance: family is `random`, `subgroup`, `coset-union` or
/// `independent`.
#[pyfunction]
#[pyo3(signature = (group, family, seed, size=None, generators=2, cosets=2))]
fn generate(group: &PyGroup, family: &str, seed: u64, size: Option<usize>, generators: usize, cosets: usize) -> PyResult<PySet> {
    let kind = match family {
        "random" => InstanceKind::Random { size: size.unwrap_or(group.inner.order().div_ceil(4)) },
        "subgroup" => InstanceKind::Subgroup { generators: Generators::Random(generators) },
        "coset-union" => InstanceKind::CosetUnion { generators: Generators::Random(generators), cosets },
        "independent" => InstanceKind::Independent,
        other => return Err(PyValueError::new_err(format!("unknown family `{other}`"))),
    };
    Ok(PySet::wrap(generate_instance(&kind, group.inner.clone(), seed).map_err(err)?))
}

/// Greedy statistical cover of `a` by translates of `b` (default `a`).
#[pyfunction]
#[pyo3(signature = (a, delta, b=None))]
fn statistical_cover<'py>(py: Python<'py>, a: &PySet, delta: &Bound<'py, PyAny>, b: Option<&PySet>) -> PyResult<Bound<'py, PyDict>> {
    let b = b.unwrap_or(a);
    let c = core_cover(&a.inner, &b.inner, &rational(delta)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("x", PySet::wrap(c.x.clone()))?;
    d.set_item("k", fraction(py, &c.k)?)?;
    d.set_item("size_bound", fraction(py, &c.size_bound)?)?;
    d.set_item("sumset_sizes", c.sumset_sizes.clone())?;
    d.set_item("valid", c.is_valid())?;
    d.set_item("growth_ok", c.growth_ok())?;
    Ok(d)
}

/// Maximal `b`-separated subset of `a`.
#[pyfunction]
#[pyo3(signature = (a, b=None))]
fn ruzsa_cover<'py>(py: Python<'py>, a: &PySet, b: Option<&PySet>) -> PyResult<Bound<'py, PyDict>> {
    let b = b.unwrap_or(a);
    let r = core_ruzsa(&a.inner, &b.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("x", PySet::wrap(r.x.clone()))?;
    d.set_item("covered", r.covered)?;
    d.set_item("separated", r.separated)?;
    d.set_item("valid", r.is_valid())?;
    Ok(d)
}

/// `(holds, min_fraction)` for `a` being `(1 - delta)`-covered by `x`.
#[pyfunction]
fn verify_covered<'py>(py: Python<'py>, a: &PySet, x: &PySet, delta: &Bound<'py, PyAny>) -> PyResult<(bool, Bound<'py, PyAny>)> {
    let c = core_verify(&a.inner, &x.inner, &rational(delta)?).map_err(err)?;
    Ok((c.holds, fraction(py, &c.min_fraction)?))
}

/// Energy-decrement iteration on the indicator of `a`.
#[pyfunction]
#[pyo3(signature = (a, kappa, eta, k_max=None))]
fn chang<'py>(
    py: Python<'py>,
    a: &PySet,
    kappa: &Bound<'py, PyAny>,
    eta: &Bound<'py, PyAny>,
    k_max: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let kappa = rational(kappa)?;
    let set = &a.inner;
    let k_max = k_max.unwrap_or_else(|| energy_floor_steps(set.spec().order(), set.len(), rational_to_f64(&kappa)));
    let out = chang_iterate(&RationalFunc::indicator(set), set, &kappa, &rational(eta)?, k_max).map_err(err)?;
    let g = set.spec();
    let d = PyDict::new(py);
    d.set_item("invariant", out.is_invariant())?;
    let tuple: Vec<Vec<u32>> = out.tuple().iter().map(|&i| g.element_at(i).expect("in range").into_coords()).collect();
    d.set_item("tuple", tuple)?;
    let energies = PyList::empty(py);
    for e in out.energies() {
        energies.append(fraction(py, e)?)?;
    }
    d.set_item("energies", energies)?;
    if let freiman_core::chang::ChangOutcome::Invariant { witnesses, .. } = &out {
        d.set_item("witnesses", PySet::wrap(witnesses.clone()))?;
    }
    Ok(d)
}

/// Characters (as coordinate tuples) with `|1_A^| >= eps |A|`.
#[pyfunction]
fn spectrum(a: &PySet, eps: &Bound<'_, PyAny>) -> PyResult<Vec<Vec<u32>>> {
    let eps = rational_to_f64(&rational(eps)?);
    let s = core_spectrum(&RationalFunc::indicator(&a.inner), eps).map_err(err)?;
    Ok(s.characters().into_iter().map(|c| c.coords().to_vec()).collect())
}

/// Common kernel of the given characters.
#[pyfunction]
fn annihilator(group: &PyGroup, characters: Vec<Vec<u32>>) -> PyResult<PySet> {
    let g = &group.inner;
    let idx = characters
        .into_iter()
        .map(|c| g.element(c).and_then(|e| g.index_of(&e)))
        .collect::<freiman_core::Result<Vec<_>>>()
        .map_err(err)?;
    let cs = CharSet::from_indices(g.clone(), idx).map_err(err)?;
    Ok(PySet::wrap(core_annihilator(&cs)))
}

/// Non-empty `Z ⊆ A` minimising `|A + Z| / |Z|`.
#[pyfunction]
fn petridis_subset<'py>(py: Python<'py>, a: &PySet) -> PyResult<(PySet, Bound<'py, PyAny>)> {
    let p = core_petridis(&a.inner, PetridisMode::Exhaustive).map_err(err)?;
    Ok((PySet::wrap(p.z), fraction(py, &p.ratio)?))
}

fn quantity<'py>(py: Python<'py>, q: &Quantity) -> PyResult<Bound<'py, PyAny>> {
    match q {
        Quantity::Exact(r) => fraction(py, r),
        Quantity::Approx(v) => Ok(v.into_pyobject(py)?.into_any()),
    }
}

/// End-to-end structure pipeline; every check is returned.
#[pyfunction]
#[pyo3(signature = (a, cap=DEFAULT_PETRIDIS_CAP, seed=0))]
fn run_pipeline<'py>(py: Python<'py>, a: &PySet, cap: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = PipelineConfig { petridis_cap: cap, seed, ..PipelineConfig::default() };
    let rep = core_pipeline(&a.inner, &cfg).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("k", fraction(py, &rep.k)?)?;
    d.set_item("ratio", fraction(py, &rep.ratio)?)?;
    d.set_item("epsilon", fraction(py, &rep.epsilon)?)?;
    d.set_item("eta", fraction(py, &rep.eta)?)?;
    d.set_item("z", PySet::wrap(rep.z.z.clone()))?;
    d.set_item("subgroup", PySet::wrap(rep.v3.clone()))?;
    d.set_item("closure", PySet::wrap(rep.closure.clone()))?;
    d.set_item("all_hold", rep.all_hold())?;
    let checks = PyList::empty(py);
    for c in &rep.checks {
        let e = PyDict::new(py);
        e.set_item("name", &c.name)?;
        e.set_item("anchor", c.anchor)?;
        e.set_item("lhs", quantity(py, &c.lhs)?)?;
        e.set_item("relation", c.relation.symbol())?;
        e.set_item("rhs", quantity(py, &c.rhs)?)?;
        e.set_item("holds", c.holds)?;
        e.set_item("unconditional", c.kind == CheckKind::Unconditional)?;
        checks.append(e)?;
    }
    d.set_item("checks", checks)?;
    Ok(d)
}

#[pymodule]
fn freiman(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_class::<PySet>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(statistical_cover, m)?)?;
    m.add_function(wrap_pyfunction!(ruzsa_cover, m)?)?;
    m.add_function(wrap_pyfunction!(verify_covered, m)?)?;
    m.add_function(wrap_pyfunction!(chang, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(annihilator, m)?)?;
    m.add_function(wrap_pyfunction!(petridis_subset, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
