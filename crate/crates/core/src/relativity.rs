//! Speed of information under rectified convolution, compared with the
//! Lorentz relation `v / c = beta`.
//!
//! A kernel with odd-energy share `beta_sq` is expected to move the centre
//! of mass at `beta * c`, where `c` is the largest displacement one layer can
//! produce. [`sweep`] measures that speed by simulation over a grid of
//! `beta_sq` values.

use rayon::prelude::*;

use crate::error::{EimError, Result};
use crate::kernel::Kernel2D;
use crate::kernelspace::{mix, standard_kernel, EvenOddSplit, StandardKernel};
use crate::propagate::{run, Activation, Pattern, PropagationTrace, RunOptions, Schedule};

pub const MIN_VELOCITY_STEPS: usize = 8;
pub const MIN_SWEEP_STEPS: usize = 16;
pub const DEFAULT_GRID_POINTS: usize = 21;
pub const DEFAULT_SWEEP_STEPS: usize = 24;

/// `1 / sqrt(1 - beta^2)` for `0 <= beta < 1`.
pub fn gamma(beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(EimError::Domain(format!(
            "Lorentz factor needs 0 <= beta < 1, got {beta}"
        )));
    }
    Ok(1.0 / (1.0 - beta * beta).sqrt())
}

/// `gamma^2 = 1 + |f_o|^2 / |f_e|^2`, computed from the energies directly.
pub fn gamma_sq_from_split(split: &EvenOddSplit) -> Result<f64> {
    if split.energy_even == 0.0 {
        return Err(EimError::Domain("kernel has no even energy; gamma diverges".into()));
    }
    Ok(1.0 + split.energy_odd / split.energy_even)
}

/// Momentum-to-rest energy ratio `|f_o| / |f_e|`.
pub fn energy_ratio(split: &EvenOddSplit) -> Result<f64> {
    if split.energy_even == 0.0 {
        return Err(EimError::Domain("kernel has no even energy".into()));
    }
    Ok((split.energy_odd / split.energy_even).sqrt())
}

/// Centroid of `max(kernel, 0)` in centred coordinates: where one ReLU layer
/// moves an impulse.
pub fn expected_displacement(kernel: &Kernel2D) -> Result<(f64, f64)> {
    let pos = kernel.positive_part();
    let k = kernel.size();
    let mut m = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    for y in 0..k {
        for x in 0..k {
            let w = pos.get(x, y);
            let (cx, cy) = kernel.centered(x, y);
            m += w;
            sx += w * cx;
            sy += w * cy;
        }
    }
    if m == 0.0 {
        return Err(EimError::ZeroMass("kernel has no positive weights".into()));
    }
    Ok((sx / m, sy / m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityEstimator {
    /// Net centroid displacement over the whole trace divided by its
    /// length, i.e. `dx / dx_max`.
    #[default]
    TotalDistance,
    /// Least-squares slope of `centroid_x` over the final half of the trace.
    FinalHalfFit,
}

/// Horizontal centroid speed relative to `speed_limit` px/layer.
pub fn measure_velocity(trace: &PropagationTrace, speed_limit: f64, estimator: VelocityEstimator) -> Result<f64> {
    let steps = trace.steps();
    if steps < MIN_VELOCITY_STEPS {
        return Err(EimError::Range(format!(
            "velocity needs at least {MIN_VELOCITY_STEPS} steps, trace has {steps}"
        )));
    }
    if speed_limit.is_nan() || speed_limit <= 0.0 {
        return Err(EimError::Range(format!(
            "speed limit must be positive, got {speed_limit}"
        )));
    }
    let xs = trace.centroids_x();
    let v = match estimator {
        VelocityEstimator::TotalDistance => (xs[steps] - xs[0]) / steps as f64,
        VelocityEstimator::FinalHalfFit => {
            let start = steps / 2;
            let pts: Vec<(f64, f64)> = (start..=steps).map(|t| (t as f64, xs[t])).collect();
            least_squares_slope(&pts)?
        }
    };
    Ok(v / speed_limit)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Result<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EimError::Domain("degenerate velocity fit".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Constant,
    AlternatingOdd,
    /// 2x2 kernels applied in alternating corners of a 3x3 canvas.
    Embedded2x2,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::AlternatingOdd => "alternating",
            ScheduleKind::Embedded2x2 => "embedded2x2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub size: usize,
    pub activation: Activation,
    pub schedule: ScheduleKind,
    pub steps: usize,
    pub estimator: VelocityEstimator,
}

impl SweepConfig {
    /// Size 2 implies the embedding schedule; other sizes run unchanged.
    pub fn new(size: usize, activation: Activation) -> Self {
        let schedule = if size == 2 {
            ScheduleKind::Embedded2x2
        } else {
            ScheduleKind::Constant
        };
        Self {
            size,
            activation,
            schedule,
            steps: DEFAULT_SWEEP_STEPS,
            estimator: VelocityEstimator::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: ScheduleKind) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_estimator(mut self, estimator: VelocityEstimator) -> Self {
        self.estimator = estimator;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.steps < MIN_SWEEP_STEPS {
            return Err(EimError::Range(format!(
                "sweep needs at least {MIN_SWEEP_STEPS} steps, got {}",
                self.steps
            )));
        }
        let embedded = self.schedule == ScheduleKind::Embedded2x2;
        if embedded != (self.size == 2) {
            return Err(EimError::Range(format!(
                "size {} cannot use the {} schedule; size 2 runs only as an embedding",
                self.size,
                self.schedule.name()
            )));
        }
        Ok(())
    }

    /// `mix(unit DC, unit GradX, beta, 1)` wrapped in this config's schedule.
    pub fn schedule_for(&self, beta_sq: f64) -> Result<Schedule> {
        if !(0.0..=1.0).contains(&beta_sq) {
            return Err(EimError::Range(format!("beta^2 = {beta_sq} is outside [0, 1]")));
        }
        let dc = standard_kernel(StandardKernel::Dc, self.size)?;
        let gx = standard_kernel(StandardKernel::GradX, self.size)?;
        let kernel = mix(&dc, &gx, beta_sq.sqrt(), 1.0)?;
        Ok(match self.schedule {
            ScheduleKind::Constant => Schedule::Constant(kernel),
            ScheduleKind::AlternatingOdd => Schedule::alternating_odd(&kernel),
            ScheduleKind::Embedded2x2 => Schedule::alternating_embedding(&kernel)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub beta_sq: f64,
    pub kernel_size: usize,
    pub activation: Activation,
    /// Signed `v / c`.
    pub measured_speed_ratio: f64,
    pub measured_speed_ratio_sq: f64,
    pub predicted_speed_ratio_sq: f64,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub config: SweepConfig,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn point(&self, beta_sq: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| (p.beta_sq - beta_sq).abs() < 1e-12)
    }
}

/// `n` evenly spaced values covering `[0, 1]`.
pub fn beta_sq_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(EimError::Range(format!("grid needs at least 2 points, got {n}")));
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

pub fn sweep_point(config: &SweepConfig, beta_sq: f64) -> Result<SweepPoint> {
    config.validate()?;
    let schedule = config.schedule_for(beta_sq)?;
    let trace = run(
        Pattern::Impulse,
        &schedule,
        RunOptions::new(config.steps, config.activation),
    )?;
    let v = measure_velocity(&trace, schedule.speed_limit(), config.estimator)?;
    Ok(SweepPoint {
        beta_sq,
        kernel_size: config.size,
        activation: config.activation,
        measured_speed_ratio: v,
        measured_speed_ratio_sq: v * v,
        predicted_speed_ratio_sq: beta_sq,
    })
}

/// Runs one simulation per grid point. Points are evaluated in parallel on
/// the current rayon pool and assembled in grid order.
pub fn sweep(config: &SweepConfig, grid: &[f64]) -> Result<SweepTable> {
    config.validate()?;
    if grid.is_empty() {
        return Err(EimError::Range("empty beta^2 grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EimError::Range("beta^2 grid must be strictly increasing".into()));
    }
    let points = grid
        .par_iter()
        .map(|&b| sweep_point(config, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        config: *config,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzReport {
    pub max_abs_dev_from_identity: f64,
    pub is_monotone: bool,
    pub argmax_beta_sq: f64,
}

/// Slack for float noise when judging monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-12;

pub fn lorentz_compare(table: &SweepTable) -> Result<LorentzReport> {
    let pts = &table.points;
    if pts.is_empty() {
        return Err(EimError::Range("empty sweep table".into()));
    }
    let max_abs_dev_from_identity = pts
        .iter()
        .map(|p| (p.measured_speed_ratio_sq - p.predicted_speed_ratio_sq).abs())
        .fold(0.0, f64::max);
    let is_monotone = pts
        .windows(2)
        .all(|w| w[1].measured_speed_ratio_sq >= w[0].measured_speed_ratio_sq - MONOTONE_SLACK);
    let argmax = pts.iter().fold(&pts[0], |best, p| {
        if p.measured_speed_ratio_sq > best.measured_speed_ratio_sq {
            p
        } else {
            best
        }
    });
    Ok(LorentzReport {
        max_abs_dev_from_identity,
        is_monotone,
        argmax_beta_sq: argmax.beta_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspace::{decompose, Direction};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(gamma(0.6).unwrap(), 1.25, epsilon = 1e-15);
        assert!(matches!(gamma(1.0), Err(EimError::Domain(_))));
        assert!(gamma(-0.1).is_err());
    }

    #[test]
    fn expected_displacements() {
        let dc = standard_kernel(StandardKernel::Dc, 3).unwrap();
        let (dx, dy) = expected_displacement(&dc).unwrap();
        assert_abs_diff_eq!(dx, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dy, 0.0, epsilon = 1e-15);
        let gx = standard_kernel(StandardKernel::GradX, 3).unwrap();
        let (dx, dy) = expected_displacement(&gx).unwrap();
        assert_abs_diff_eq!(dx, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dy, 0.0, epsilon = 1e-15);
        let g5 = standard_kernel(StandardKernel::GradX, 5).unwrap();
        // positives at x = 1 (weight 1) and x = 2 (weight 2)
        let (dx, _) = expected_displacement(&g5).unwrap();
        assert_abs_diff_eq!(dx, (1.0 * 1.0 + 2.0 * 2.0) / 3.0, epsilon = 1e-12);
        assert!(expected_displacement(&dc.scale(-1.0)).is_err());
    }

    #[test]
    fn energy_ratios() {
        let dc = standard_kernel(StandardKernel::Dc, 3).unwrap();
        let gx = standard_kernel(StandardKernel::GradX, 3).unwrap();
        let half = mix(&dc, &gx, 0.5f64.sqrt(), 1.0).unwrap();
        assert_abs_diff_eq!(energy_ratio(&decompose(&half)).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(energy_ratio(&decompose(&dc)).unwrap(), 0.0);
        let t = standard_kernel(StandardKernel::OffsetImpulse(Direction::PosX), 3).unwrap();
        assert_abs_diff_eq!(energy_ratio(&decompose(&t)).unwrap(), 3f64.sqrt(), epsilon = 1e-12);
        assert!(energy_ratio(&decompose(&gx)).is_err());
    }

    #[test]
    fn velocity_examples() {
        let cases = [
            (StandardKernel::Dc, Activation::Relu, 0.0),
            (StandardKernel::GradX, Activation::Relu, 1.0),
            (StandardKernel::GradX, Activation::Identity, 0.0),
        ];
        for (kind, act, want) in cases {
            let s = Schedule::Constant(standard_kernel(kind, 3).unwrap());
            let trace = run(Pattern::Impulse, &s, RunOptions::new(16, act)).unwrap();
            for est in [VelocityEstimator::TotalDistance, VelocityEstimator::FinalHalfFit] {
                let v = measure_velocity(&trace, s.speed_limit(), est).unwrap();
                assert_abs_diff_eq!(v, want, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn velocity_needs_enough_steps() {
        let s = Schedule::Constant(standard_kernel(StandardKernel::Dc, 3).unwrap());
        let trace = run(Pattern::Impulse, &s, RunOptions::new(4, Activation::Relu)).unwrap();
        assert!(measure_velocity(&trace, 1.0, VelocityEstimator::TotalDistance).is_err());
    }

    #[test]
    fn sweep_validation() {
        let grid = beta_sq_grid(5).unwrap();
        let cfg = SweepConfig::new(3, Activation::Relu).with_steps(8);
        assert!(sweep(&cfg, &grid).is_err());
        let cfg = SweepConfig::new(3, Activation::Relu).with_schedule(ScheduleKind::Embedded2x2);
        assert!(sweep(&cfg, &grid).is_err());
        let cfg = SweepConfig::new(3, Activation::Relu);
        assert!(sweep(&cfg, &[0.0, 0.5, 0.5]).is_err());
        assert!(sweep(&cfg, &[0.0, 1.5]).is_err());
        assert!(beta_sq_grid(1).is_err());
    }

    #[test]
    fn compare_identity_table() {
        let cfg = SweepConfig::new(3, Activation::Relu);
        let points = beta_sq_grid(5)
            .unwrap()
            .into_iter()
            .map(|b| SweepPoint {
                beta_sq: b,
                kernel_size: 3,
                activation: Activation::Relu,
                measured_speed_ratio: b.sqrt(),
                measured_speed_ratio_sq: b,
                predicted_speed_ratio_sq: b,
            })
            .collect();
        let r = lorentz_compare(&SweepTable { config: cfg, points }).unwrap();
        assert_eq!(r.max_abs_dev_from_identity, 0.0);
        assert!(r.is_monotone);
        assert_eq!(r.argmax_beta_sq, 1.0);
        assert!(lorentz_compare(&SweepTable {
            config: cfg,
            points: vec![]
        })
        .is_err());
    }

    #[test]
    fn two_by_two_sweep_endpoints() {
        let cfg = SweepConfig::new(2, Activation::Relu);
        let t = sweep(&cfg, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(t.points[0].measured_speed_ratio, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t.points[1].measured_speed_ratio, 1.0, epsilon = 1e-9);
    }
}
