//! Domain types shared by every other module: grid, model parameters,
//! concentration fields, initial data and run configuration.
//!
//! Concentrations live at cell centers of a uniform grid in `y` (gravity
//! points toward decreasing `y`). The far field is `(-1,-1)` below and
//! `(+1,+1)` above: the heavier fluid sits on top.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Transverse flow equilibrium closure, `u1 = (c2 - c1)/2`.
    Tfe,
    /// Two-tubes incompressible porous medium closure with tube spacing `l`.
    Ipm,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Tfe => "tfe",
            Model::Ipm => "ipm",
        })
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tfe" => Ok(Model::Tfe),
            "ipm" => Ok(Model::Ipm),
            other => Err(format!("unknown model '{other}' (expected tfe or ipm)")),
        }
    }
}

/// Physical parameters. Diffusion is fixed to one by the nondimensionalization
/// and therefore not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    /// Tube spacing. Only enters the IPM dynamics.
    pub l: f64,
}

impl ModelParams {
    pub const DIFFUSION: f64 = 1.0;

    pub fn tfe() -> Self {
        ModelParams { model: Model::Tfe, l: 0.0 }
    }

    pub fn ipm(l: f64) -> Self {
        ModelParams { model: Model::Ipm, l }
    }
}

/// Uniform cell-centered grid on `[y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub y_min: f64,
    pub y_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 8;

    pub fn new(y_min: f64, y_max: f64, n_cells: usize) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();
        check_grid(y_min, y_max, n_cells, &mut errs);
        if errs.is_empty() {
            Ok(Grid1D { y_min, y_max, n_cells })
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        (self.y_max - self.y_min) / self.n_cells as f64
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.h()
    }

    /// Face `k` separates cells `k-1` and `k`; faces 0 and `n_cells` are the
    /// domain boundaries.
    #[inline]
    pub fn face(&self, k: usize) -> f64 {
        self.y_min + k as f64 * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.y_max - self.y_min
    }
}

fn check_grid(y_min: f64, y_max: f64, n_cells: usize, errs: &mut Vec<String>) {
    if !(y_min.is_finite() && y_max.is_finite()) {
        errs.push("domain bounds must be finite".into());
    } else if y_min >= y_max {
        errs.push(format!("empty domain: y_min = {y_min} must be below y_max = {y_max}"));
    }
    if n_cells < Grid1D::MIN_CELLS {
        errs.push(format!("n_cells = {n_cells} must be at least {}", Grid1D::MIN_CELLS));
    }
}

/// Concentrations `(c1, c2)` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TubesField {
    pub grid: Grid1D,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl TubesField {
    pub fn new(grid: Grid1D, c1: Vec<f64>, c2: Vec<f64>) -> Self {
        assert_eq!(c1.len(), grid.n_cells);
        assert_eq!(c2.len(), grid.n_cells);
        TubesField { grid, c1, c2 }
    }

    pub fn uniform(grid: Grid1D, c1: f64, c2: f64) -> Self {
        TubesField::new(grid, vec![c1; grid.n_cells], vec![c2; grid.n_cells])
    }

    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }

    /// Exchange the two tubes.
    pub fn swapped(&self) -> Self {
        TubesField { grid: self.grid, c1: self.c2.clone(), c2: self.c1.clone() }
    }

    /// Index of the first non-finite cell, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.c1
            .iter()
            .zip(&self.c2)
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
    }

    /// Boundary-adjacent cells lie within `[-1 - slack, 1 + slack]`.
    pub fn boundary_values_ok(&self, slack: f64) -> bool {
        let n = self.len();
        [0, n - 1].iter().all(|&j| {
            self.c1[j].abs() <= 1.0 + slack && self.c2[j].abs() <= 1.0 + slack
        })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.c1.iter().chain(&self.c2).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
            (lo.min(c), hi.max(c))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    SharpStep,
    TanhStep { width: f64 },
}

/// Gaussian bump added to the base profile. `asymmetry = +1` raises tube 1
/// and lowers tube 2, `-1` the reverse, `0` perturbs both tubes equally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub width: f64,
    pub asymmetry: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub profile: Profile,
    pub interface_position: f64,
    pub perturbation: Perturbation,
}

impl InitialDataSpec {
    pub fn sharp_step(at: f64) -> Self {
        InitialDataSpec {
            profile: Profile::SharpStep,
            interface_position: at,
            perturbation: Perturbation { amplitude: 0.0, width: 1.0, asymmetry: 0 },
        }
    }

    pub fn tanh_step(at: f64, width: f64) -> Self {
        InitialDataSpec {
            profile: Profile::TanhStep { width },
            interface_position: at,
            perturbation: Perturbation { amplitude: 0.0, width: 1.0, asymmetry: 0 },
        }
    }

    pub fn with_perturbation(mut self, amplitude: f64, width: f64, asymmetry: i8) -> Self {
        self.perturbation = Perturbation { amplitude, width, asymmetry };
        self
    }
}

/// Build the initial concentrations on `grid`.
pub fn make_initial_data(grid: &Grid1D, spec: &InitialDataSpec) -> Result<TubesField, ConfigError> {
    if let Profile::TanhStep { width } = spec.profile {
        if width > grid.length() {
            return Err(ConfigError::InterfaceNotResolved { width, length: grid.length() });
        }
    }
    let y0 = spec.interface_position;
    let p = spec.perturbation;
    let n = grid.n_cells;
    let mut c1 = Vec::with_capacity(n);
    let mut c2 = Vec::with_capacity(n);
    for j in 0..n {
        let y = grid.center(j) - y0;
        let base = match spec.profile {
            Profile::SharpStep => {
                if y > 0.0 {
                    1.0
                } else if y < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Profile::TanhStep { width } => (y / width).tanh(),
        };
        let bump = if p.amplitude > 0.0 { p.amplitude * (-(y / p.width).powi(2)).exp() } else { 0.0 };
        let (d1, d2) = match p.asymmetry.signum() {
            1 => (bump, -bump),
            -1 => (-bump, bump),
            _ => (bump, bump),
        };
        c1.push((base + d1).clamp(-1.0, 1.0));
        c2.push((base + d2).clamp(-1.0, 1.0));
    }
    Ok(TubesField::new(*grid, c1, c2))
}

/// Time-integration and output controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunControl {
    pub t_max: f64,
    pub cfl: f64,
    pub output_every: f64,
    pub output_dir: String,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: Grid1D,
    pub initial: InitialDataSpec,
    pub control: RunControl,
}

/// Unvalidated flat key/value configuration.
pub type RawConfig = BTreeMap<String, toml::Value>;

pub const CONFIG_KEYS: [&str; 15] = [
    "model",
    "l",
    "y_min",
    "y_max",
    "n_cells",
    "profile",
    "tanh_width",
    "interface_position",
    "perturb_amplitude",
    "perturb_width",
    "perturb_asymmetry",
    "t_max",
    "cfl",
    "output_every",
    "output_dir",
];

/// Parse TOML-compatible flat key/value text.
pub fn parse_config(text: &str) -> Result<RawConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    Ok(table.into_iter().collect())
}

/// Apply a `key=value` override. Values are read as TOML scalars; anything
/// that does not parse is kept as a bare string.
pub fn apply_override(raw: &mut RawConfig, assignment: &str) -> Result<(), ConfigError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    raw.insert(key.to_string(), parsed);
    Ok(())
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams { model: Model::Tfe, l: 0.1 },
            grid: Grid1D { y_min: -200.0, y_max: 200.0, n_cells: 4000 },
            initial: InitialDataSpec::tanh_step(0.0, 1.0).with_perturbation(0.1, 5.0, 1),
            control: RunControl {
                t_max: 100.0,
                cfl: 0.8,
                output_every: 10.0,
                output_dir: "out".into(),
            },
        }
    }
}

impl RunConfig {
    /// Canonical raw form; `validate_config(&cfg.to_raw())` returns `cfg`.
    pub fn to_raw(&self) -> RawConfig {
        use toml::Value as V;
        let mut m = RawConfig::new();
        m.insert("model".into(), V::String(self.params.model.to_string()));
        m.insert("l".into(), V::Float(self.params.l));
        m.insert("y_min".into(), V::Float(self.grid.y_min));
        m.insert("y_max".into(), V::Float(self.grid.y_max));
        m.insert("n_cells".into(), V::Integer(self.grid.n_cells as i64));
        match self.initial.profile {
            Profile::SharpStep => {
                m.insert("profile".into(), V::String("sharp_step".into()));
            }
            Profile::TanhStep { width } => {
                m.insert("profile".into(), V::String("tanh_step".into()));
                m.insert("tanh_width".into(), V::Float(width));
            }
        }
        m.insert("interface_position".into(), V::Float(self.initial.interface_position));
        let p = self.initial.perturbation;
        m.insert("perturb_amplitude".into(), V::Float(p.amplitude));
        m.insert("perturb_width".into(), V::Float(p.width));
        m.insert("perturb_asymmetry".into(), V::Integer(p.asymmetry as i64));
        m.insert("t_max".into(), V::Float(self.control.t_max));
        m.insert("cfl".into(), V::Float(self.control.cfl));
        m.insert("output_every".into(), V::Float(self.control.output_every));
        m.insert("output_dir".into(), V::String(self.control.output_dir.clone()));
        m
    }

    pub fn to_toml_string(&self) -> String {
        let table: toml::Table = self.to_raw().into_iter().collect();
        toml::to_string(&table).expect("flat table serializes")
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    errs: Vec<String>,
}

impl Reader<'_> {
    fn float(&mut self, key: &str, default: f64) -> f64 {
        match self.raw.get(key) {
            None => default,
            Some(toml::Value::Float(x)) => *x,
            Some(toml::Value::Integer(i)) => *i as f64,
            Some(other) => {
                self.errs.push(format!("{key} must be a number, got {other}"));
                default
            }
        }
    }

    fn int(&mut self, key: &str, default: i64) -> i64 {
        match self.raw.get(key) {
            None => default,
            Some(toml::Value::Integer(i)) => *i,
            Some(toml::Value::Float(x)) if x.fract() == 0.0 => *x as i64,
            Some(other) => {
                self.errs.push(format!("{key} must be an integer, got {other}"));
                default
            }
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        match self.raw.get(key) {
            None => default.to_string(),
            Some(toml::Value::String(s)) => s.clone(),
            Some(other) => {
                self.errs.push(format!("{key} must be a string, got {other}"));
                default.to_string()
            }
        }
    }
}

/// Validate a raw configuration, reporting every violated constraint.
/// Missing keys take the values of [`RunConfig::default`].
pub fn validate_config(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
    let d = RunConfig::default();
    let mut r = Reader { raw, errs: Vec::new() };

    for key in raw.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            r.errs.push(format!("unknown key '{key}'"));
        }
    }

    let model_s = r.string("model", &d.params.model.to_string());
    let model = match model_s.parse::<Model>() {
        Ok(m) => m,
        Err(e) => {
            r.errs.push(e);
            d.params.model
        }
    };
    let l = r.float("l", d.params.l);
    if !l.is_finite() {
        r.errs.push("l must be finite".into());
    } else if model == Model::Ipm && l <= 0.0 {
        r.errs.push(format!("l must be positive for IPM (got {l})"));
    }

    let y_min = r.float("y_min", d.grid.y_min);
    let y_max = r.float("y_max", d.grid.y_max);
    let n_cells = r.int("n_cells", d.grid.n_cells as i64);
    let n_cells_u = if n_cells < 0 { 0 } else { n_cells as usize };
    check_grid(y_min, y_max, n_cells_u, &mut r.errs);

    let d_width = match d.initial.profile {
        Profile::TanhStep { width } => width,
        Profile::SharpStep => 1.0,
    };
    let profile_s = r.string("profile", "tanh_step");
    let tanh_width = r.float("tanh_width", d_width);
    let profile = match profile_s.as_str() {
        "sharp_step" | "sharp" => Profile::SharpStep,
        "tanh_step" | "tanh" => {
            if !(tanh_width > 0.0 && tanh_width.is_finite()) {
                r.errs.push(format!("tanh_width must be positive (got {tanh_width})"));
            }
            Profile::TanhStep { width: tanh_width }
        }
        other => {
            r.errs.push(format!("unknown profile '{other}' (expected sharp_step or tanh_step)"));
            d.initial.profile
        }
    };
    let interface_position = r.float("interface_position", d.initial.interface_position);
    if !interface_position.is_finite() {
        r.errs.push("interface_position must be finite".into());
    }
    let amplitude = r.float("perturb_amplitude", d.initial.perturbation.amplitude);
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        r.errs.push(format!("negative perturbation amplitude ({amplitude})"));
    }
    let pwidth = r.float("perturb_width", d.initial.perturbation.width);
    if !(pwidth > 0.0 && pwidth.is_finite()) {
        r.errs.push(format!("perturb_width must be positive (got {pwidth})"));
    }
    let asym = r.int("perturb_asymmetry", d.initial.perturbation.asymmetry as i64);
    if !(-1..=1).contains(&asym) {
        r.errs.push(format!("perturb_asymmetry must be -1, 0 or 1 (got {asym})"));
    }

    let t_max = r.float("t_max", d.control.t_max);
    if !(t_max >= 0.0 && t_max.is_finite()) {
        r.errs.push(format!("t_max must be non-negative (got {t_max})"));
    }
    let cfl = r.float("cfl", d.control.cfl);
    if !(cfl > 0.0 && cfl <= 1.0) {
        r.errs.push(format!("cfl must lie in (0, 1] (got {cfl})"));
    }
    let output_every = r.float("output_every", d.control.output_every);
    if !(output_every > 0.0 && output_every.is_finite()) {
        r.errs.push(format!("output_every must be positive (got {output_every})"));
    }
    let output_dir = r.string("output_dir", &d.control.output_dir);

    if !r.errs.is_empty() {
        return Err(ConfigError::Invalid(r.errs));
    }
    Ok(RunConfig {
        params: ModelParams { model, l },
        grid: Grid1D { y_min, y_max, n_cells: n_cells_u },
        initial: InitialDataSpec {
            profile,
            interface_position,
            perturbation: Perturbation { amplitude, width: pwidth, asymmetry: asym as i8 },
        },
        control: RunControl { t_max, cfl, output_every, output_dir },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn valid_tfe_config() {
        let cfg = validate_config(&raw(
            "model = \"tfe\"\ny_min = -200\ny_max = 200\nn_cells = 4000\nprofile = \"sharp_step\"\ninterface_position = 0",
        ))
        .unwrap();
        assert_eq!(cfg.params.model, Model::Tfe);
        assert_eq!(cfg.grid.n_cells, 4000);
        assert!((cfg.grid.h() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ipm_needs_positive_l() {
        let err = validate_config(&raw("model = \"ipm\"\nl = 0")).unwrap_err();
        let ConfigError::Invalid(msgs) = err else { panic!() };
        assert!(msgs.iter().any(|m| m.contains("l must be positive for IPM")));
    }

    #[test]
    fn reversed_domain_is_empty() {
        let err = validate_config(&raw("y_min = 100\ny_max = -100")).unwrap_err();
        assert!(err.to_string().contains("empty domain"));
    }

    #[test]
    fn every_violation_is_listed() {
        let err = validate_config(&raw(
            "model = \"ipm\"\nl = -1\nn_cells = 4\nperturb_amplitude = -0.5\ny_min = 1\ny_max = 0",
        ))
        .unwrap_err();
        let ConfigError::Invalid(msgs) = err else { panic!() };
        assert_eq!(msgs.len(), 4, "{msgs:?}");
    }

    #[test]
    fn validation_is_idempotent() {
        let cfg = validate_config(&raw("model = \"ipm\"\nl = 0.1\ncfl = 0.5")).unwrap();
        assert_eq!(validate_config(&cfg.to_raw()).unwrap(), cfg);
        let again = validate_config(&parse_config(&cfg.to_toml_string()).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn overrides_parse_scalars_and_bare_strings() {
        let mut r = RawConfig::new();
        apply_override(&mut r, "l=0.05").unwrap();
        apply_override(&mut r, "model=ipm").unwrap();
        apply_override(&mut r, "n_cells = 64").unwrap();
        let cfg = validate_config(&r).unwrap();
        assert_eq!(cfg.params, ModelParams { model: Model::Ipm, l: 0.05 });
        assert_eq!(cfg.grid.n_cells, 64);
        assert!(apply_override(&mut r, "nonsense").is_err());
    }

    #[test]
    fn sharp_step_is_sign_of_y() {
        let g = Grid1D::new(-4.0, 4.0, 16).unwrap();
        let f = make_initial_data(&g, &InitialDataSpec::sharp_step(0.0)).unwrap();
        for j in 0..16 {
            let s = g.center(j).signum();
            assert_eq!(f.c1[j], s);
            assert_eq!(f.c2[j], s);
        }
    }

    #[test]
    fn tanh_step_far_field() {
        let g = Grid1D::new(-50.0, 50.0, 1000).unwrap();
        let f = make_initial_data(&g, &InitialDataSpec::tanh_step(0.0, 2.0)).unwrap();
        assert!((f.c1[0] + 1.0).abs() < 1e-6 && (f.c2[999] - 1.0).abs() < 1e-6);
        assert_eq!(f.c1, f.c2);
        for j in 0..1000 {
            assert!((f.c1[j] - (g.center(j) / 2.0).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn asymmetric_perturbation_keeps_limits() {
        let g = Grid1D::new(-100.0, 100.0, 2000).unwrap();
        let spec = InitialDataSpec::tanh_step(0.0, 1.0).with_perturbation(0.3, 3.0, 1);
        let f = make_initial_data(&g, &spec).unwrap();
        assert!((f.c1[0] + 1.0).abs() < 1e-6 && (f.c2[0] + 1.0).abs() < 1e-6);
        assert!((f.c1[1999] - 1.0).abs() < 1e-6 && (f.c2[1999] - 1.0).abs() < 1e-6);
        let (lo, hi) = f.min_max();
        assert!(lo >= -1.0 && hi <= 1.0);
        let mid = 1000;
        assert!(f.c1[mid] > f.c2[mid]);
        let mirrored = make_initial_data(&g, &spec.with_perturbation(0.3, 3.0, -1)).unwrap();
        assert_eq!(mirrored, f.swapped());
    }

    #[test]
    fn wide_tanh_is_rejected() {
        let g = Grid1D::new(-1.0, 1.0, 8).unwrap();
        assert!(matches!(
            make_initial_data(&g, &InitialDataSpec::tanh_step(0.0, 5.0)),
            Err(ConfigError::InterfaceNotResolved { .. })
        ));
    }
}
