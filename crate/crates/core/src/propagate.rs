//! Repeated convolution + activation on 1D signals and 2D fields.
//!
//! Convolution is the mathematical one: the impulse response of a kernel is
//! the kernel itself, with its +x axis on the field's +x axis. In 1D the
//! output grows by `m - 1` samples per step; in 2D the canvas is fixed and
//! zero padded, and any activation reaching the border band is an error
//! rather than being clipped.

use std::borrow::Cow;

use crate::error::{EimError, Result};
use crate::kernel::{Kernel1D, Kernel2D};
use crate::kernelspace::{decompose, embed_2x2, Parity};

/// Minimum distance (px) live activations must keep from the canvas edge.
pub const BOUNDARY_GUARD: usize = 2;

/// Extra margin added around the reachable region when sizing a canvas.
pub const CANVAS_MARGIN: usize = 4;

/// Values below this fraction of the field maximum count as empty when
/// measuring support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Modulus,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::Modulus => v.abs(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Modulus => "modulus",
        }
    }
}

pub fn activation(values: &[f64], kind: Activation) -> Vec<f64> {
    values.iter().map(|&v| kind.apply(v)).collect()
}

/// Full convolution, output length `n + m - 1`.
pub fn conv_full_1d(signal: &Kernel1D, kernel: &Kernel1D) -> Result<Kernel1D> {
    let (s, k) = (signal.values(), kernel.values());
    if s.is_empty() || k.is_empty() {
        return Err(EimError::Shape("convolution of an empty signal".into()));
    }
    let mut out = vec![0.0; s.len() + k.len() - 1];
    for (i, a) in s.iter().enumerate() {
        for (j, b) in k.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    Ok(Kernel1D::from_raw(out))
}

/// Applies `activation(signal * kernel)` `steps` times; returns every state
/// including the initial one. No renormalisation.
pub fn propagate_1d(initial: &Kernel1D, kernel: &Kernel1D, steps: usize, act: Activation) -> Result<Vec<Kernel1D>> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    for _ in 0..steps {
        let next = conv_full_1d(states.last().unwrap(), kernel)?;
        states.push(Kernel1D::from_raw(activation(next.values(), act)));
    }
    Ok(states)
}

fn abs_moments_1d(values: &[f64]) -> Result<(f64, f64, f64)> {
    let mass: f64 = values.iter().map(|v| v.abs()).sum();
    if mass == 0.0 {
        return Err(EimError::ZeroMass("signal has no mass".into()));
    }
    let mu = values.iter().enumerate().map(|(i, v)| i as f64 * v.abs()).sum::<f64>() / mass;
    let var = values
        .iter()
        .enumerate()
        .map(|(i, v)| v.abs() * (i as f64 - mu).powi(2))
        .sum::<f64>()
        / mass;
    Ok((mass, mu, var))
}

/// Centre of mass of `|f|` with sample `i` at position `i`.
pub fn centroid_1d(values: &[f64]) -> Result<f64> {
    abs_moments_1d(values).map(|(_, mu, _)| mu)
}

/// Standard deviation of `|f|` about its centre of mass.
pub fn spread_1d(values: &[f64]) -> Result<f64> {
    abs_moments_1d(values).map(|(_, _, var)| var.sqrt())
}

/// A fixed-size activation canvas. Coordinates reported by the measurement
/// functions are relative to `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    width: usize,
    height: usize,
    values: Vec<f64>,
    origin: (usize, usize),
}

impl Field {
    pub fn zeros(width: usize, height: usize, origin: (usize, usize)) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(EimError::Shape("field must be at least 1x1".into()));
        }
        if origin.0 >= width || origin.1 >= height {
            return Err(EimError::Range(format!(
                "origin {origin:?} outside a {width}x{height} canvas"
            )));
        }
        Ok(Self {
            width,
            height,
            values: vec![0.0; width * height],
            origin,
        })
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>, origin: (usize, usize)) -> Result<Self> {
        let mut f = Self::zeros(width, height, origin)?;
        if values.len() != width * height {
            return Err(EimError::CountMismatch {
                shape: vec![width, height],
                expected: width * height,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EimError::NonFinite(i));
        }
        f.values = values;
        Ok(f)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    /// Value at centred coordinates, zero outside the canvas.
    pub fn at(&self, dx: i64, dy: i64) -> f64 {
        let x = self.origin.0 as i64 + dx;
        let y = self.origin.1 as i64 + dy;
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.get(x as usize, y as usize)
        }
    }

    /// L1 mass, `sum |f|`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.values.iter_mut().for_each(|v| *v *= s);
        f
    }

    /// Smallest and largest centred x holding a value above
    /// `SUPPORT_THRESHOLD * max |f|`.
    pub fn support_x(&self) -> Option<(i64, i64)> {
        let cut = self.max_abs() * SUPPORT_THRESHOLD;
        let mut range: Option<(i64, i64)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y).abs() > cut {
                    let cx = x as i64 - self.origin.0 as i64;
                    range = Some(match range {
                        None => (cx, cx),
                        Some((lo, hi)) => (lo.min(cx), hi.max(cx)),
                    });
                }
            }
        }
        range
    }

    fn check_border(&self, band: usize) -> Result<()> {
        if band == 0 {
            return Ok(());
        }
        for y in 0..self.height {
            for x in 0..self.width {
                let inside = x >= band && y >= band && x + band < self.width && y + band < self.height;
                if !inside && self.get(x, y) != 0.0 {
                    return Err(EimError::BoundaryOverflow {
                        x,
                        y,
                        band,
                        width: self.width,
                        height: self.height,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pattern {
    Impulse,
    Circle { radius: usize },
}

impl Pattern {
    pub fn radius(self) -> usize {
        match self {
            Pattern::Impulse => 0,
            Pattern::Circle { radius } => radius,
        }
    }
}

/// Draws a pattern centred on the canvas; the pattern must stay
/// `BOUNDARY_GUARD` pixels clear of every edge.
pub fn rasterize_pattern(pattern: Pattern, width: usize, height: usize) -> Result<Field> {
    let origin = (width / 2, height / 2);
    let mut field = Field::zeros(width, height, origin)?;
    let r = pattern.radius();
    let room = origin
        .0
        .min(origin.1)
        .min(width - 1 - origin.0)
        .min(height - 1 - origin.1);
    if r + BOUNDARY_GUARD > room {
        return Err(EimError::Shape(format!(
            "a radius-{r} pattern does not fit a {width}x{height} canvas"
        )));
    }
    match pattern {
        Pattern::Impulse => field.set(origin.0, origin.1, 1.0),
        Pattern::Circle { radius } => {
            let r = radius as i64;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy <= r * r {
                        field.set((origin.0 as i64 + dx) as usize, (origin.1 as i64 + dy) as usize, 1.0);
                    }
                }
            }
        }
    }
    Ok(field)
}

/// Square canvas side for a pattern after `steps` applications of a
/// `kernel_size` kernel.
pub fn canvas_side(pattern: Pattern, kernel_size: usize, steps: usize) -> usize {
    let half = pattern.radius() + steps * ((kernel_size - 1) / 2) + CANVAS_MARGIN;
    2 * half + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    /// Only the row through the origin; `mu_y` is 0 by definition.
    CentralRow,
    Full2D,
}

struct Moments {
    mu_x: f64,
    mu_y: f64,
    var_x: f64,
}

fn moments(field: &Field, mode: MeasureMode) -> Result<Moments> {
    let (ox, oy) = (field.origin.0 as f64, field.origin.1 as f64);
    let rows = match mode {
        MeasureMode::CentralRow => field.origin.1..field.origin.1 + 1,
        MeasureMode::Full2D => 0..field.height,
    };
    let (mut m, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for y in rows.clone() {
        for x in 0..field.width {
            let a = field.get(x, y).abs();
            m += a;
            sx += a * (x as f64 - ox);
            sy += a * (y as f64 - oy);
        }
    }
    if m == 0.0 {
        return Err(EimError::ZeroMass("field has no mass in the measured region".into()));
    }
    let mu_x = sx / m;
    let mu_y = match mode {
        MeasureMode::CentralRow => 0.0,
        MeasureMode::Full2D => sy / m,
    };
    let mut vx = 0.0;
    for y in rows {
        for x in 0..field.width {
            vx += field.get(x, y).abs() * (x as f64 - ox - mu_x).powi(2);
        }
    }
    Ok(Moments {
        mu_x,
        mu_y,
        var_x: vx / m,
    })
}

/// Centre of mass of `|f|` in centred coordinates.
pub fn centroid(field: &Field, mode: MeasureMode) -> Result<(f64, f64)> {
    moments(field, mode).map(|m| (m.mu_x, m.mu_y))
}

/// Horizontal standard deviation of `|f|`.
pub fn spread(field: &Field, mode: MeasureMode) -> Result<f64> {
    moments(field, mode).map(|m| m.var_x.sqrt())
}

/// Convolution + activation without renormalisation.
fn convolve_activate(field: &Field, kernel: &Kernel2D, act: Activation) -> Result<Field> {
    let k = kernel.size();
    if k.is_multiple_of(2) {
        return Err(EimError::Shape(format!(
            "{k}x{k} kernel has no centre pixel; embed even-size kernels in an odd canvas"
        )));
    }
    if k > field.width || k > field.height {
        return Err(EimError::Shape(format!(
            "{k}x{k} kernel does not fit a {}x{} field",
            field.width, field.height
        )));
    }
    let h = (k - 1) / 2;
    field.check_border(h)?;
    let (w, ht) = (field.width as i64, field.height as i64);
    let hi = h as i64;
    let mut out = vec![0.0; field.values.len()];
    for y in 0..ht {
        for x in 0..w {
            let mut acc = 0.0;
            for j in 0..k {
                let sy = y - (j as i64 - hi);
                if sy < 0 || sy >= ht {
                    continue;
                }
                let row = sy as usize * field.width;
                for i in 0..k {
                    let sx = x - (i as i64 - hi);
                    if sx < 0 || sx >= w {
                        continue;
                    }
                    acc += kernel.get(i, j) * field.values[row + sx as usize];
                }
            }
            out[y as usize * field.width + x as usize] = act.apply(acc);
        }
    }
    let next = Field {
        values: out,
        ..field.clone()
    };
    next.check_border(BOUNDARY_GUARD.max(h))?;
    Ok(next)
}

fn step_with_mass(field: &Field, kernel: &Kernel2D, act: Activation) -> Result<(Field, f64)> {
    let next = convolve_activate(field, kernel, act)?;
    let mass = next.mass();
    if mass == 0.0 {
        return Err(EimError::ZeroMass("activation removed all mass".into()));
    }
    Ok((next.scaled(1.0 / mass), mass))
}

/// One layer: zero-padded convolution, activation, then L1 renormalisation.
pub fn step(field: &Field, kernel: &Kernel2D, act: Activation) -> Result<Field> {
    step_with_mass(field, kernel, act).map(|(f, _)| f)
}

/// Which kernel is applied at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(Kernel2D),
    /// Even part fixed, odd part multiplied by `(-1)^t` (t from 0).
    AlternatingOdd {
        even: Kernel2D,
        odd: Kernel2D,
    },
    /// A 2x2 kernel embedded in a 3x3 canvas, corner alternating per step.
    AlternatingEmbedding(Kernel2D),
}

impl Schedule {
    pub fn alternating_odd(kernel: &Kernel2D) -> Self {
        let split = decompose(kernel);
        Schedule::AlternatingOdd {
            even: split.even,
            odd: split.odd,
        }
    }

    pub fn alternating_embedding(block: &Kernel2D) -> Result<Self> {
        if block.size() != 2 {
            return Err(EimError::Shape(format!(
                "embedding schedule needs a 2x2 kernel, got {0}x{0}",
                block.size()
            )));
        }
        Ok(Schedule::AlternatingEmbedding(block.clone()))
    }

    /// Size of every kernel this schedule produces.
    pub fn kernel_size(&self) -> usize {
        match self {
            Schedule::Constant(k) => k.size(),
            Schedule::AlternatingOdd { even, .. } => even.size(),
            Schedule::AlternatingEmbedding(_) => 3,
        }
    }

    /// Kernel applied at step `t` (0-based).
    pub fn kernel_at(&self, t: usize) -> Cow<'_, Kernel2D> {
        match self {
            Schedule::Constant(k) => Cow::Borrowed(k),
            Schedule::AlternatingOdd { even, odd } => {
                if t.is_multiple_of(2) {
                    Cow::Owned(even + odd)
                } else {
                    Cow::Owned(even - odd)
                }
            }
            Schedule::AlternatingEmbedding(block) => {
                Cow::Owned(embed_2x2(block, Parity::of_step(t)).expect("block is 2x2"))
            }
        }
    }

    /// Maximum centroid displacement per layer, in pixels.
    pub fn speed_limit(&self) -> f64 {
        match self {
            Schedule::AlternatingEmbedding(_) => 0.5,
            _ => (self.kernel_size() as f64 - 1.0) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub steps: usize,
    pub activation: Activation,
    pub mode: MeasureMode,
    pub keep_frames: bool,
}

impl RunOptions {
    pub fn new(steps: usize, activation: Activation) -> Self {
        Self {
            steps,
            activation,
            mode: MeasureMode::Full2D,
            keep_frames: false,
        }
    }

    pub fn with_mode(mut self, mode: MeasureMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_frames(mut self) -> Self {
        self.keep_frames = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub sigma_x: f64,
    /// L1 mass after activation, before renormalisation.
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationTrace {
    pub records: Vec<TraceRecord>,
    pub frames: Option<Vec<Field>>,
}

impl PropagationTrace {
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn centroids_x(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.centroid_x).collect()
    }
}

fn record(t: usize, field: &Field, mass: f64, mode: MeasureMode) -> Result<TraceRecord> {
    let m = moments(field, mode)?;
    Ok(TraceRecord {
        t,
        centroid_x: m.mu_x,
        centroid_y: m.mu_y,
        sigma_x: m.var_x.sqrt(),
        mass,
    })
}

/// Runs a schedule from an explicit initial field.
pub fn run_field(initial: &Field, schedule: &Schedule, opts: RunOptions) -> Result<PropagationTrace> {
    let mass0 = initial.mass();
    if mass0 == 0.0 {
        return Err(EimError::ZeroMass("initial field is empty".into()));
    }
    let mut field = initial.scaled(1.0 / mass0);
    let mut records = vec![record(0, &field, mass0, opts.mode)?];
    let mut frames = opts.keep_frames.then(|| vec![field.clone()]);
    for t in 0..opts.steps {
        let kernel = schedule.kernel_at(t);
        let (next, mass) = step_with_mass(&field, &kernel, opts.activation)?;
        field = next;
        records.push(record(t + 1, &field, mass, opts.mode)?);
        if let Some(f) = frames.as_mut() {
            f.push(field.clone());
        }
    }
    Ok(PropagationTrace { records, frames })
}

/// Runs a schedule on a pattern drawn on an automatically sized canvas.
pub fn run(pattern: Pattern, schedule: &Schedule, opts: RunOptions) -> Result<PropagationTrace> {
    let side = canvas_side(pattern, schedule.kernel_size(), opts.steps);
    let field = rasterize_pattern(pattern, side, side)?;
    run_field(&field, schedule, opts)
}
