//! Python bindings. Structured values cross the boundary as plain dicts and
//! lists, in the same JSON shapes the HTTP API uses.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use sentinel_core::command::{self, DialogEvent, DialogState, LanguageSet, StubTranslator};
use sentinel_core::detection::{self, Detection, DetectionTensor, GridConfig, LetterboxMap, OracleBackend};
use sentinel_core::geometry::BBox;
use sentinel_core::harness::Harness as CoreHarness;
use sentinel_core::kinematics::{self, DriveGeometry, Pose, Twist, WheelSpeeds};
use sentinel_core::protocol::{self, WireMessage};
use sentinel_core::server::{CentralConfig, EventLog};
use sentinel_core::sim::Scenario;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

type Box4 = (f64, f64, f64, f64);

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

fn bbox(b: Box4) -> PyResult<BBox> {
    BBox::new(b.0, b.1, b.2, b.3).map_err(err)
}

#[pyfunction]
fn iou(a: Box4, b: Box4) -> PyResult<f64> {
    Ok(sentinel_core::geometry::iou(&bbox(a)?, &bbox(b)?))
}

fn grid(s: usize, b: usize, c: usize, score_threshold: f64, iou_threshold: f64) -> PyResult<GridConfig> {
    let mut cfg = GridConfig::with_dims(s, b, c);
    cfg.score_threshold = score_threshold;
    cfg.nms_iou_threshold = iou_threshold;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Scored candidates for a flat `S*S*(B*5+C)` tensor, before suppression.
#[pyfunction]
#[pyo3(signature = (values, s, b, c, score_threshold = 0.5))]
fn decode<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    s: usize,
    b: usize,
    c: usize,
    score_threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = grid(s, b, c, score_threshold, 0.45)?;
    let t = DetectionTensor::new(s, b, c, values).map_err(err)?;
    let cands = detection::decode_grid(&t, &cfg).map_err(err)?;
    to_py(py, &detection::score_candidates(&cands, &cfg))
}

#[pyfunction]
#[pyo3(signature = (detections, iou_threshold = 0.45))]
fn nms<'py>(py: Python<'py>, detections: &Bound<'py, PyAny>, iou_threshold: f64) -> PyResult<Bound<'py, PyAny>> {
    let dets: Vec<Detection> = from_py(detections)?;
    to_py(py, &detection::nms(&dets, iou_threshold))
}

/// decode, score and suppress in one call.
#[pyfunction]
#[pyo3(signature = (values, s = 13, b = 3, c = 80, score_threshold = 0.5, iou_threshold = 0.45))]
fn detect<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    s: usize,
    b: usize,
    c: usize,
    score_threshold: f64,
    iou_threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = grid(s, b, c, score_threshold, iou_threshold)?;
    let t = DetectionTensor::new(s, b, c, values).map_err(err)?;
    let cands = detection::decode_grid(&t, &cfg).map_err(err)?;
    to_py(py, &detection::nms(&detection::score_candidates(&cands, &cfg), iou_threshold))
}

#[pyclass(name = "Letterbox", frozen)]
struct PyLetterbox(LetterboxMap);

#[pymethods]
impl PyLetterbox {
    #[new]
    fn new(src_w: u32, src_h: u32, net_w: u32, net_h: u32) -> PyResult<Self> {
        LetterboxMap::new(src_w, src_h, net_w, net_h).map(PyLetterbox).map_err(err)
    }

    /// Normalized network box to integer source pixels.
    fn to_image(&self, b: Box4) -> PyResult<(u32, u32, u32, u32)> {
        let p = self.0.to_image(&bbox(b)?);
        Ok((p.x0, p.y0, p.x1, p.y1))
    }

    fn to_network(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Box4 {
        let b = self.0.to_network(x0, y0, x1, y1);
        (b.x_min, b.y_min, b.x_max, b.y_max)
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.0.scale
    }

    #[getter]
    fn padding(&self) -> (f64, f64) {
        (self.0.pad_x, self.0.pad_y)
    }
}

fn geometry(wheel_radius: f64, track_width: f64, max_wheel_speed: f64) -> PyResult<DriveGeometry> {
    let g = DriveGeometry { wheel_radius, track_width, max_wheel_speed };
    if !g.is_valid() {
        return Err(err("drive geometry values must be positive and finite"));
    }
    Ok(g)
}

#[pyfunction]
#[pyo3(signature = (left, right, wheel_radius = 0.05, track_width = 0.2, max_wheel_speed = 10.0))]
fn forward_kinematics(left: f64, right: f64, wheel_radius: f64, track_width: f64, max_wheel_speed: f64) -> PyResult<(f64, f64)> {
    let t = kinematics::forward_kinematics(WheelSpeeds { left, right }, &geometry(wheel_radius, track_width, max_wheel_speed)?);
    Ok((t.linear, t.angular))
}

/// Wheel speeds for a twist, scaled down together to respect the wheel limit.
#[pyfunction]
#[pyo3(signature = (linear, angular, wheel_radius = 0.05, track_width = 0.2, max_wheel_speed = 10.0))]
fn inverse_kinematics(linear: f64, angular: f64, wheel_radius: f64, track_width: f64, max_wheel_speed: f64) -> PyResult<(f64, f64)> {
    let w = kinematics::inverse_kinematics(Twist { linear, angular }, &geometry(wheel_radius, track_width, max_wheel_speed)?);
    Ok((w.left, w.right))
}

#[pyfunction]
fn integrate_pose(pose: (f64, f64, f64), linear: f64, angular: f64, dt: f64) -> PyResult<(f64, f64, f64)> {
    if !(dt >= 0.0) {
        return Err(err("dt must be non-negative"));
    }
    let p = kinematics::integrate_pose(Pose::new(pose.0, pose.1, pose.2), Twist { linear, angular }, dt);
    Ok((p.x, p.y, p.theta))
}

fn message_to_py<'py>(py: Python<'py>, m: &WireMessage) -> PyResult<Bound<'py, PyAny>> {
    let obj = to_py(py, m)?;
    if let WireMessage::FrameData { payload, .. } = m {
        obj.set_item("payload", PyBytes::new(py, payload))?;
    }
    Ok(obj)
}

/// Encodes a message dict such as `{"type": "ping", "nonce": 1}`.
/// `frame_data` takes its bytes from `payload`.
#[pyfunction]
#[pyo3(signature = (message, payload = None))]
fn encode_frame<'py>(py: Python<'py>, message: &Bound<'py, PyAny>, payload: Option<Vec<u8>>) -> PyResult<Bound<'py, PyBytes>> {
    let mut m: WireMessage = from_py(message)?;
    if let (WireMessage::FrameData { payload: p, .. }, Some(bytes)) = (&mut m, payload) {
        *p = bytes;
    }
    let bytes = protocol::encode_frame(&m).map_err(err)?;
    Ok(PyBytes::new(py, &bytes))
}

#[pyclass(name = "FrameDecoder")]
#[derive(Default)]
struct PyFrameDecoder(protocol::FrameDecoder);

#[pymethods]
impl PyFrameDecoder {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    fn feed(&mut self, data: &[u8]) {
        self.0.feed(data);
    }

    /// The next complete message, or None. Raises ValueError on corruption.
    fn next<'py>(&mut self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyAny>>> {
        match self.0.next_message() {
            Ok(Some(m)) => Ok(Some(message_to_py(py, &m)?)),
            Ok(None) => Ok(None),
            Err(e) => Err(err(e)),
        }
    }

    #[getter]
    fn buffered(&self) -> usize {
        self.0.buffered()
    }
}

#[pyfunction]
fn parse_intent<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    match command::parse_intent(text) {
        Ok(i) => to_py(py, &i),
        Err(e) => Err(PyValueError::new_err((e.kind(), e.to_string()))),
    }
}

/// The language dialog as a standalone state machine.
#[pyclass(name = "Dialog")]
struct PyDialog {
    state: DialogState,
    langs: LanguageSet,
}

#[pymethods]
impl PyDialog {
    #[new]
    #[pyo3(signature = (languages = None))]
    fn new(languages: Option<&str>) -> PyResult<Self> {
        let langs = match languages {
            Some(text) => LanguageSet::parse(text).map_err(err)?,
            None => LanguageSet::default(),
        };
        Ok(PyDialog { state: DialogState::idle(), langs })
    }

    #[getter]
    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.state)
    }

    #[getter]
    fn prompt<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.state.current_prompt(&self.langs))
    }

    /// Applies an event, e.g. `{"UserAck": True}` or `"Reset"`, and returns the action.
    fn advance<'py>(&mut self, py: Python<'py>, event: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let ev: DialogEvent = from_py(event)?;
        let (next, action) = command::advance_dialog(&self.state, &ev, &self.langs);
        self.state = next;
        to_py(py, &action)
    }
}

/// A scenario run: simulated front node and central session on one clock.
#[pyclass(name = "Harness", unsendable)]
struct PyHarness(CoreHarness);

#[pymethods]
impl PyHarness {
    /// `scenario` is scenario file text; `phrases` is a phrase table in TSV form.
    #[new]
    #[pyo3(signature = (scenario, seed = None, phrases = None))]
    fn new(scenario: &str, seed: Option<u64>, phrases: Option<&str>) -> PyResult<Self> {
        let sc = Scenario::parse(scenario).map_err(err)?;
        let tr = match phrases {
            Some(t) => StubTranslator::parse(t).map_err(err)?,
            None => StubTranslator::default(),
        };
        let h = CoreHarness::new(&sc, seed, CentralConfig::default(), Box::new(OracleBackend), Box::new(tr), EventLog::memory())
            .map_err(err)?;
        Ok(PyHarness(h))
    }

    fn step(&mut self) {
        self.0.step();
    }

    fn run_until(&mut self, t_s: f64) {
        self.0.run_until(t_s);
    }

    fn run(&mut self) {
        self.0.run();
    }

    /// Operator command body as for `POST /command`; returns `(status, body)`.
    fn command<'py>(&mut self, py: Python<'py>, body: &Bound<'py, PyAny>) -> PyResult<(u16, Bound<'py, PyAny>)> {
        let v: Value = from_py(body)?;
        let r = self.0.command(v);
        Ok((r.status, to_py(py, &r.body)?))
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.central().snapshot(self.0.now_ms()))
    }

    #[getter]
    fn now_ms(&self) -> u64 {
        self.0.now_ms()
    }

    #[getter]
    fn pose(&self) -> (f64, f64, f64) {
        let p = self.0.front().world().robot;
        (p.x, p.y, p.theta)
    }

    /// `(time_s, linear, angular, x, y, theta)` per tick.
    fn trace(&self) -> Vec<(f64, f64, f64, f64, f64, f64)> {
        self.0
            .trace()
            .iter()
            .map(|t| (t.time_s, t.applied.linear, t.applied.angular, t.pose.x, t.pose.y, t.pose.theta))
            .collect()
    }

    fn events_jsonl(&self) -> String {
        self.0.central().log().since_jsonl(0)
    }
}

#[pymodule]
fn sentinel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("COCO_CLASSES", detection::COCO_CLASSES.to_vec())?;
    m.add("PROTO_VERSION", protocol::PROTO_VERSION)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(nms, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_pose, m)?)?;
    m.add_function(wrap_pyfunction!(encode_frame, m)?)?;
    m.add_function(wrap_pyfunction!(parse_intent, m)?)?;
    m.add_class::<PyLetterbox>()?;
    m.add_class::<PyFrameDecoder>()?;
    m.add_class::<PyDialog>()?;
    m.add_class::<PyHarness>()?;
    Ok(())
}
