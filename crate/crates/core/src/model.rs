//! Domain types shared by the solver, the controllers and the diagnostics.
//!
//! The plant state holds the superheat `u = T − Tm` (K) on the immobilized
//! grid `ξ_i = i/N`, so `u[i]` belongs to `x = ξ_i s(t)`. Storing the
//! deviation rather than the absolute temperature, and the interface position
//! as a rounded value plus remainder, keeps rounding relative to the decaying
//! solution late in a run. All times are in seconds.

use crate::error::{Result, StefanError};

/// Material constants plus the two derived diffusivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Density (kg/m³)
    pub rho: f64,
    /// Heat capacity (J/(kg·K))
    pub cp: f64,
    /// Thermal conductivity (W/(m·K))
    pub k: f64,
    /// Latent heat of fusion (J/kg)
    pub dh: f64,
    /// Thermal diffusivity k/(ρ c_p) (m²/s)
    pub alpha: f64,
    /// Stefan coefficient k/(ρ ΔH) (m²/(s·K))
    pub beta: f64,
    /// Melting temperature (K)
    pub tm: f64,
}

/// Melting point of zinc (K). The material table only lists ρ, c_p, k, ΔH;
/// the absolute level does not enter the dynamics, which depend on T − Tm.
pub const ZINC_MELTING_POINT: f64 = 692.68;

impl PhysicalParams {
    /// Builds the parameter set, deriving `alpha` and `beta` from the two ratios.
    pub fn derive(rho: f64, cp: f64, k: f64, dh: f64, tm: f64) -> Result<Self> {
        for (field, value) in [("rho", rho), ("cp", cp), ("k", k), ("dH", dh)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(StefanError::domain(field, format!("must be positive, got {value}")));
            }
        }
        if !(tm > 0.0) || !tm.is_finite() {
            return Err(StefanError::domain("Tm", format!("must be a positive absolute temperature, got {tm}")));
        }
        Ok(Self {
            rho,
            cp,
            k,
            dh,
            alpha: k / (rho * cp),
            beta: k / (rho * dh),
            tm,
        })
    }

    /// Zinc strip used in all reference scenarios.
    pub fn zinc() -> Self {
        Self::derive(6570.0, 389.5687, 116.0, 111_961.0, ZINC_MELTING_POINT)
            .expect("zinc constants are positive")
    }

    /// Volumetric heat capacity k/α = ρ c_p (J/(m³·K)).
    pub fn heat_capacity_per_volume(&self) -> f64 {
        self.k / self.alpha
    }

    /// Latent heat per volume k/β = ρ ΔH (J/m³).
    pub fn latent_per_volume(&self) -> f64 {
        self.k / self.beta
    }
}

/// Superheat profile on the immobilized grid plus the interface position.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    /// `N + 1` superheats `T − Tm` at `ξ_i = i/N` (K); `u[N] == 0`
    pub u: Vec<f64>,
    /// Interface position (m), rounded
    pub s: f64,
    /// Rounding remainder of the interface position: the carried value is `s + s_lo`
    pub s_lo: f64,
    /// Simulation time (s)
    pub t: f64,
}

impl PlantState {
    pub fn new(u: Vec<f64>, s: f64, t: f64) -> Self {
        Self { u, s, s_lo: 0.0, t }
    }

    /// Zero superheat on `n` cells.
    pub fn melted(n: usize, s: f64) -> Self {
        Self::new(vec![0.0; n + 1], s, 0.0)
    }

    /// Number of grid cells.
    pub fn cells(&self) -> usize {
        self.u.len() - 1
    }

    /// Immobilized grid spacing 1/N.
    pub fn dxi(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// Physical abscissae `x_i = ξ_i s`.
    pub fn positions(&self) -> Vec<f64> {
        let n = self.cells() as f64;
        (0..self.u.len()).map(|i| self.s * i as f64 / n).collect()
    }

    /// Absolute temperatures `Tm + u` (K).
    pub fn temperatures(&self, tm: f64) -> Vec<f64> {
        self.u.iter().map(|&v| tm + v).collect()
    }

    /// ∫₀^s (T − Tm) dx by the trapezoid rule on the immobilized grid.
    pub fn superheat_integral(&self) -> f64 {
        let n = self.cells();
        let inner: f64 = self.u[1..n].iter().sum();
        let ends = 0.5 * (self.u[0] + self.u[n]);
        self.s * self.dxi() * (inner + ends)
    }

    pub fn min_superheat(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// T(0, t) (K).
    pub fn boundary_temperature(&self, tm: f64) -> f64 {
        tm + self.u[0]
    }

    /// `s − s_r` including the rounding remainder (m).
    pub fn x_err(&self, s_r: f64) -> f64 {
        (self.s - s_r) + self.s_lo
    }

    /// Moves the interface by `ds`, carrying the rounding error in `s_lo`.
    pub fn shift_interface(&mut self, ds: f64) {
        let inc = ds + self.s_lo;
        let next = self.s + inc;
        self.s_lo = inc - (next - self.s);
        self.s = next;
    }
}

/// Which boundary feedback drives the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlLaw {
    /// Feedback including the in-transit input integral over the compensated delay.
    Compensated,
    /// Delay-free design applied to the delayed plant.
    Nominal,
}

impl ControlLaw {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlLaw::Compensated => "compensated",
            ControlLaw::Nominal => "nominal",
        }
    }
}

impl std::str::FromStr for ControlLaw {
    type Err = StefanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compensated" => Ok(ControlLaw::Compensated),
            "nominal" | "uncompensated" => Ok(ControlLaw::Nominal),
            other => Err(StefanError::Config(format!(
                "law must be `compensated` or `nominal`, got `{other}`"
            ))),
        }
    }
}

/// Delays, gain, setpoint, initial data and numerics for one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Delay compensated by the controller (s)
    pub d: f64,
    /// Plant-side mismatch; the plant sees the input after `d + delta_d` seconds
    pub delta_d: f64,
    /// Control gain (1/s)
    pub c: f64,
    /// Interface setpoint (m)
    pub s_r: f64,
    /// Initial interface position (m)
    pub s0: f64,
    /// Initial superheat amplitude at x = 0 (K)
    pub t_bar: f64,
    /// Constant flux applied before t = 0 (W/m)
    pub q_past: f64,
    /// Grid cells on the immobilized interval
    pub n: usize,
    /// Solver step; `None` picks half the stability limit at `s = s_r`,
    /// shortened to divide `sample_interval`
    pub dt: Option<f64>,
    /// Final time (s)
    pub horizon: f64,
    pub law: ControlLaw,
    /// Cells on the delay interval used by the transforms
    pub delay_cells: usize,
    /// Time between recorded trace rows (s)
    pub sample_interval: f64,
    /// Lyapunov weight; `None` means 1/D
    pub lyapunov_m: Option<f64>,
    /// Tabulated initial profile `(x, T)`; `None` means the linear profile
    pub profile: Option<Vec<(f64, f64)>>,
}

impl ScenarioConfig {
    /// Exact-compensation defaults for a zinc strip.
    pub fn reference() -> Self {
        Self {
            d: 120.0,
            delta_d: 0.0,
            c: 0.01,
            s_r: 0.15,
            s0: 0.1,
            t_bar: 50.0,
            q_past: 500.0,
            n: 200,
            dt: None,
            horizon: 10_000.0,
            law: ControlLaw::Compensated,
            delay_cells: 200,
            sample_interval: 0.5,
            lyapunov_m: None,
            profile: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(StefanError::domain(field, format!("must be finite, got {v}")))
            }
        };
        finite("D", self.d)?;
        finite("deltaD", self.delta_d)?;
        finite("c", self.c)?;
        finite("s_r", self.s_r)?;
        finite("s0", self.s0)?;
        finite("Tbar", self.t_bar)?;
        finite("q_past", self.q_past)?;
        finite("horizon", self.horizon)?;
        if !(self.d > 0.0) {
            return Err(StefanError::domain("D", format!("must be positive, got {}", self.d)));
        }
        if self.d + self.delta_d < 0.0 {
            return Err(StefanError::domain(
                "deltaD",
                format!("plant delay D + deltaD = {} is negative", self.d + self.delta_d),
            ));
        }
        if !(self.c > 0.0) {
            return Err(StefanError::domain("c", format!("must be positive, got {}", self.c)));
        }
        if !(self.s0 > 0.0) {
            return Err(StefanError::domain("s0", format!("must be positive, got {}", self.s0)));
        }
        if !(self.s0 < self.s_r) {
            return Err(StefanError::domain(
                "s_r",
                format!("setpoint {} must exceed s0 = {}", self.s_r, self.s0),
            ));
        }
        if self.n < 2 {
            return Err(StefanError::domain("N", format!("need at least 2 cells, got {}", self.n)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(StefanError::domain("dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.horizon >= 0.0) {
            return Err(StefanError::domain("horizon", "must be non-negative"));
        }
        if self.delay_cells < 2 {
            return Err(StefanError::domain("delay_cells", "need at least 2 cells"));
        }
        if !(self.sample_interval > 0.0) {
            return Err(StefanError::domain("sample_interval", "must be positive"));
        }
        if let Some(m) = self.lyapunov_m {
            if !(m > 0.0) {
                return Err(StefanError::domain("lyapunov_m", "must be positive"));
            }
        }
        Ok(())
    }

    /// Delay seen by the plant.
    pub fn plant_delay(&self) -> f64 {
        self.d + self.delta_d
    }

    /// Length of input history the controller and diagnostics need.
    pub fn history_span(&self) -> f64 {
        self.d + self.delta_d.max(0.0)
    }

    /// Resolved solver step.
    pub fn time_step(&self, params: &PhysicalParams) -> f64 {
        self.dt.unwrap_or_else(|| {
            let h = default_time_step(params, self.n, self.s_r);
            self.sample_interval / (self.sample_interval / h).ceil()
        })
    }

    pub fn lyapunov_weight(&self) -> f64 {
        self.lyapunov_m.unwrap_or(1.0 / self.d)
    }
}

/// Half of the explicit stability limit `α dt N²/s² ≤ 1/2` evaluated at `s`.
pub fn default_time_step(params: &PhysicalParams, n: usize, s: f64) -> f64 {
    0.25 * s * s / (params.alpha * (n * n) as f64)
}

/// Material plus scenario: everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: PhysicalParams,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn new(params: PhysicalParams, config: ScenarioConfig) -> Self {
        Self { params, config }
    }
}

/// Builds the initial plant state: linear superheat `T̄(1 − x/s0) + Tm` unless a
/// tabulated profile is supplied, in which case it is interpolated onto the grid.
pub fn init_state(config: &ScenarioConfig, params: &PhysicalParams) -> Result<PlantState> {
    if !(config.s0 > 0.0) {
        return Err(StefanError::domain("s0", format!("must be positive, got {}", config.s0)));
    }
    if config.n < 2 {
        return Err(StefanError::domain("N", format!("need at least 2 cells, got {}", config.n)));
    }
    let n = config.n;
    let mut u: Vec<f64> = match &config.profile {
        None => {
            if !(config.t_bar >= 0.0) {
                return Err(StefanError::domain(
                    "Tbar",
                    format!("initial superheat must be non-negative, got {}", config.t_bar),
                ));
            }
            (0..=n)
                .map(|i| config.t_bar * (1.0 - i as f64 / n as f64))
                .collect()
        }
        Some(table) => tabulated_profile(table, config.s0, n, params.tm)?,
    };
    u[n] = 0.0;
    Ok(PlantState::new(u, config.s0, 0.0))
}

fn tabulated_profile(table: &[(f64, f64)], s0: f64, n: usize, tm: f64) -> Result<Vec<f64>> {
    if table.len() < 2 {
        return Err(StefanError::domain("profile", "need at least two (x, T) pairs"));
    }
    if table.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(StefanError::domain("profile", "x values must be strictly increasing"));
    }
    let (x_first, x_last) = (table[0].0, table[table.len() - 1].0);
    if x_first > 0.0 || x_last < s0 {
        return Err(StefanError::domain(
            "profile",
            format!("table covers [{x_first}, {x_last}] but [0, {s0}] is required"),
        ));
    }
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = s0 * i as f64 / n as f64;
        let j = table.partition_point(|p| p.0 <= x).clamp(1, table.len() - 1);
        let (x0, t0) = table[j - 1];
        let (x1, t1) = table[j];
        let value = t0 + (t1 - t0) * (x - x0) / (x1 - x0);
        if value < tm {
            return Err(StefanError::domain(
                "profile",
                format!("temperature {value} K at x = {x} m is below the melting point"),
            ));
        }
        out.push(value - tm);
    }
    Ok(out)
}

/// One recorded row of a closed-loop run. Extremes cover every solver step
/// since the previous row so that short-lived violations are never missed.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub s: f64,
    pub sdot: f64,
    pub qc_cmd: f64,
    pub qc_applied: f64,
    /// Boundary temperature T(0, t)
    pub t0: f64,
    /// Plant energy plus stored input over the compensated delay (J/m)
    pub energy: f64,
    /// ∫₀ᵗ q_c dt of the commanded input (J/m)
    pub injected: f64,
    pub lyapunov: Option<crate::diagnostics::LyapunovSample>,
    pub xi: Option<f64>,
    pub qc_min: f64,
    /// Smallest T − Tm (K)
    pub superheat_min: f64,
    pub sdot_min: f64,
    pub s_min: f64,
    /// Largest s − s_r (m)
    pub x_err_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn push(&mut self, row: TraceRow) {
        debug_assert!(self.rows.last().map_or(true, |r| r.t < row.t));
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}
