//! Python bindings: compile programs, inspect diagnostics, and drive the
//! reactive machine interactively.
//!
//! ```python
//! import asyncratt
//! m = asyncratt.Machine(SOURCE)
//! print(m.init())                     # [["x", 0]]
//! print(m.send("up", None))           # [["x", 1]]
//! ```
//!
//! Values cross the boundary in the JSON literal encoding: unit is `None`,
//! naturals and floats are numbers, pairs are two-element lists, injections
//! are `{"tag": 1|2, "val": …}`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use asyncratt::driver::{compile, default_buffer, CompileOptions, Compiled};
use asyncratt::eval::DEFAULT_FUEL;
use asyncratt::input::InputBuffer;
use asyncratt::literal::{decode_value, encode_value};
use asyncratt::reactive::{InputEvent, Machine as CoreMachine, MachineCfg, OutputBatch};
use asyncratt::syntax::Name;

fn compile_py(source: &str, use_prelude: bool) -> PyResult<Compiled> {
    compile(
        source,
        &CompileOptions {
            use_prelude,
        },
    )
    .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64()
                    .ok_or_else(|| PyValueError::new_err("bad number"))?
                    .into_pyobject(py)?
                    .unbind()
                    .into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn py_to_json(v: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    if v.is_none() {
        return Ok(serde_json::Value::Null);
    }
    if let Ok(b) = v.extract::<bool>() {
        return Ok(serde_json::Value::Bool(b));
    }
    if let Ok(u) = v.extract::<u64>() {
        return Ok(serde_json::json!(u));
    }
    if let Ok(f) = v.extract::<f64>() {
        return Ok(serde_json::json!(f));
    }
    if let Ok(s) = v.extract::<String>() {
        return Ok(serde_json::Value::String(s));
    }
    if let Ok(list) = v.cast::<PyList>() {
        let mut items = Vec::new();
        for item in list.iter() {
            items.push(py_to_json(&item)?);
        }
        return Ok(serde_json::Value::Array(items));
    }
    if let Ok(dict) = v.cast::<PyDict>() {
        let mut map = serde_json::Map::new();
        for (k, val) in dict.iter() {
            map.insert(k.extract::<String>()?, py_to_json(&val)?);
        }
        return Ok(serde_json::Value::Object(map));
    }
    Err(PyValueError::new_err("unsupported value literal"))
}

fn batch_to_py(py: Python<'_>, batch: &OutputBatch) -> PyResult<Py<PyAny>> {
    let list = PyList::empty(py);
    for (name, v) in batch {
        let value = encode_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let pair = PyList::empty(py);
        pair.append(name.as_str())?;
        pair.append(json_to_py(py, &value)?)?;
        list.append(pair)?;
    }
    Ok(list.unbind().into())
}

/// Parse, elaborate and typecheck a program; raises ValueError with the
/// diagnostic on failure.
#[pyfunction]
#[pyo3(signature = (source, use_prelude = true))]
fn check(source: &str, use_prelude: bool) -> PyResult<()> {
    compile_py(source, use_prelude).map(|_| ())
}

/// The input channels of a program: `[(name, class, type)]` with the type
/// rendered in surface syntax.
#[pyfunction]
#[pyo3(signature = (source, use_prelude = true))]
fn channels(source: &str, use_prelude: bool) -> PyResult<Vec<(String, String, String)>> {
    let compiled = compile_py(source, use_prelude)?;
    Ok(compiled
        .elab
        .delta
        .iter()
        .map(|(n, c, ty)| {
            (
                n.to_string(),
                c.keyword().to_string(),
                asyncratt::pretty::type_to_string(ty),
            )
        })
        .collect())
}

/// A running reactive machine.
#[pyclass]
struct Machine {
    compiled: Compiled,
    machine: CoreMachine,
    started: bool,
}

#[pymethods]
impl Machine {
    /// Compile `source` and set up the machine. `buffer` maps buffered
    /// channel names to initial value literals; buffered channels missing
    /// from it default to zero-like values.
    #[new]
    #[pyo3(signature = (source, buffer = None, fuel = DEFAULT_FUEL, seed = 0, use_prelude = true))]
    fn new(
        source: &str,
        buffer: Option<&Bound<'_, PyDict>>,
        fuel: u64,
        seed: u64,
        use_prelude: bool,
    ) -> PyResult<Self> {
        let compiled = compile_py(source, use_prelude)?;
        let mut init_buffer: InputBuffer = default_buffer(&compiled);
        if let Some(dict) = buffer {
            for (k, v) in dict.iter() {
                let name = Name::new(k.extract::<String>()?);
                let ty = compiled
                    .lookup_channel_type(&name)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown channel `{name}`")))?;
                let value = decode_value(&py_to_json(&v)?, &ty)
                    .map_err(|e| PyValueError::new_err(e.to_string()))?;
                init_buffer.set(name, value);
            }
        }
        let cfg = MachineCfg {
            fuel_per_step: fuel,
            seed,
            skip_gc: false,
        };
        let machine = compiled
            .machine(init_buffer, cfg)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Machine {
            compiled,
            machine,
            started: false,
        })
    }

    /// The initialisation transition; returns the step-0 batch.
    fn init(&mut self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let batch = self
            .machine
            .init()
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        self.started = true;
        batch_to_py(py, &batch)
    }

    /// Feed one event and return the resulting batch.
    fn send(&mut self, py: Python<'_>, channel: &str, value: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
        if !self.started {
            return Err(PyRuntimeError::new_err("call init() first"));
        }
        let name = Name::new(channel);
        let ty = self
            .compiled
            .lookup_channel_type(&name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown channel `{channel}`")))?;
        let value = decode_value(&py_to_json(value)?, &ty)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let batch = self
            .machine
            .step(InputEvent {
                channel: name,
                value,
            })
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        batch_to_py(py, &batch)
    }

    /// The machine state: output map, live heap locations with clocks, and
    /// the buffer.
    fn state(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let dict = PyDict::new(py);
        let outputs = PyDict::new(py);
        for (n, l) in self.machine.output_map() {
            outputs.set_item(n.as_str(), format!("l{}", l.id))?;
        }
        dict.set_item("outputs", outputs)?;
        let heap = PyList::empty(py);
        for l in self.machine.live_locations() {
            let entry = PyDict::new(py);
            entry.set_item("loc", format!("l{}", l.id))?;
            entry.set_item(
                "clock",
                l.clock.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            )?;
            heap.append(entry)?;
        }
        dict.set_item("heap", heap)?;
        let buffer = PyDict::new(py);
        for (n, v) in self.machine.buffer().iter() {
            let value = encode_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
            buffer.set_item(n.as_str(), json_to_py(py, &value)?)?;
        }
        dict.set_item("buffer", buffer)?;
        Ok(dict.unbind().into())
    }

    /// Number of completed output transitions (init is step 0).
    fn steps(&self) -> usize {
        self.machine.steps().saturating_sub(1)
    }
}

/// Compile and run a program over a list of `(channel, value)` events.
/// Returns the batches, including the init batch at index 0.
#[pyfunction]
#[pyo3(signature = (source, events, buffer = None, fuel = DEFAULT_FUEL, seed = 0, use_prelude = true))]
fn run(
    py: Python<'_>,
    source: &str,
    events: Vec<(String, Py<PyAny>)>,
    buffer: Option<&Bound<'_, PyDict>>,
    fuel: u64,
    seed: u64,
    use_prelude: bool,
) -> PyResult<Py<PyAny>> {
    let mut machine = Machine::new(source, buffer, fuel, seed, use_prelude)?;
    let out = PyList::empty(py);
    out.append(machine.init(py)?)?;
    for (ch, v) in events {
        out.append(machine.send(py, &ch, v.bind(py))?)?;
    }
    Ok(out.unbind().into())
}

#[pymodule]
fn asyncratt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(channels, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_class::<Machine>()?;
    Ok(())
}
