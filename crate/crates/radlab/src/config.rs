//! JSON run configuration. Unknown keys are rejected; every field has a default.

use std::path::{Path, PathBuf};

use radlab_core::closure::{Closure, DEFAULT_ALPHA_MAX, DEFAULT_N, MAX_N, MIN_N};
use radlab_core::limit::{InitialData, Profile, StudyConfig};
use radlab_core::model::{Model, ThermoRadiationModel};
use radlab_core::solver::{SolverConfig, Splitting, MAX_CFL};
use radlab_core::stability::{SamplingBox, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub solver: SolverBlock,
    pub study: StudyBlock,
    pub stability: StabilityBlock,
    pub tables: TablesBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanckForm {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for PlanckForm {
    fn default() -> Self {
        Self { coefficient: 1.0, exponent: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub gamma: f64,
    /// `b(theta) = coefficient * theta^exponent`.
    pub planck: PlanckForm,
    pub sigma_a: f64,
    pub sigma_s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha_max: f64,
    pub epsilon0: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        let t = ThermoRadiationModel::default();
        Self {
            gamma: t.gamma,
            planck: PlanckForm::default(),
            sigma_a: t.sigma_a,
            sigma_s: t.sigma_s,
            n: DEFAULT_N,
            alpha_max: DEFAULT_ALPHA_MAX,
            epsilon0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingName {
    Lie,
    Strang,
}

impl From<SplittingName> for Splitting {
    fn from(s: SplittingName) -> Self {
        match s {
            SplittingName::Lie => Splitting::Lie,
            SplittingName::Strang => Splitting::Strang,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub cfl: f64,
    pub splitting: SplittingName,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub cells: usize,
    pub tfinal: f64,
    /// Relaxation parameter of `simulate`.
    pub eps: f64,
    /// Snapshot cadence in steps; 0 writes only the final state.
    pub snapshot_every: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            cfl: s.cfl,
            splitting: SplittingName::Strang,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            cells: 256,
            tfinal: 0.1,
            eps: 0.1,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyBlock {
    pub eps_list: Vec<f64>,
    pub profile: String,
    pub amplitude: f64,
    /// Start on the equilibrium closure of the profile.
    pub prepared: bool,
    /// Add `eps w_1` to prepared data.
    pub corrected: bool,
    /// Radiation perturbation of unprepared data.
    pub perturbation: f64,
    /// Splitting used by the sweep (the solver block's applies to `simulate`).
    pub splitting: SplittingName,
    pub grid_guard: bool,
    /// Profile amplitude of the layer comparison.
    pub layer_amplitude: f64,
    /// Epsilon of the layer comparison.
    pub layer_eps: f64,
}

impl Default for StudyBlock {
    fn default() -> Self {
        let s = StudyConfig::default();
        Self {
            eps_list: s.eps_list,
            profile: s.profile.as_str().into(),
            amplitude: s.amplitude,
            prepared: true,
            corrected: false,
            perturbation: s.perturbation,
            splitting: SplittingName::Lie,
            grid_guard: true,
            layer_amplitude: radlab_core::limit::layer_study_config().amplitude,
            layer_eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityBlock {
    pub seed: u64,
    /// Equilibrium states per closure order.
    pub states: usize,
    pub n_list: Vec<usize>,
    /// Non-equilibrium states of the symmetry sweep.
    pub off_equilibrium: usize,
    pub a_fraction: f64,
    pub rho: [f64; 2],
    pub theta: [f64; 2],
    pub v: [f64; 2],
}

impl Default for StabilityBlock {
    fn default() -> Self {
        let b = SamplingBox::default();
        Self {
            seed: 20240607,
            states: 100,
            n_list: vec![2, 3, 4],
            off_equilibrium: 100,
            a_fraction: Tolerances::default().a_fraction,
            rho: [b.rho.0, b.rho.1],
            theta: [b.theta.0, b.theta.1],
            v: [b.v.0, b.v.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TablesBlock {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
}

impl Default for TablesBlock {
    fn default() -> Self {
        Self { alpha_min: -0.9, alpha_max: 0.9, alpha_step: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("radlab-out") }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelBlock::default(),
            solver: SolverBlock::default(),
            study: StudyBlock::default(),
            stability: StabilityBlock::default(),
            tables: TablesBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

fn field(path: &str, ok: bool, why: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config { path: path.into(), message: why() })
    }
}

fn positive(path: &str, x: f64) -> Result<(), CliError> {
    field(path, x > 0.0 && x.is_finite(), || format!("must be positive and finite, got {x}"))
}

fn interval(path: &str, r: [f64; 2]) -> Result<(), CliError> {
    field(path, r[0].is_finite() && r[1].is_finite() && r[0] <= r[1], || format!("[{}, {}] is not an interval", r[0], r[1]))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config { path: if path == "." { String::new() } else { path }, message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        field("model.gamma", m.gamma > 1.0 && m.gamma.is_finite(), || format!("must exceed 1, got {}", m.gamma))?;
        field("model.planck.coefficient", m.planck.coefficient >= 0.0 && m.planck.coefficient.is_finite(), || {
            format!("must be nonnegative, got {}", m.planck.coefficient)
        })?;
        field("model.planck.exponent", m.planck.exponent >= 1.0 && m.planck.exponent.is_finite(), || {
            format!("must be at least 1, got {}", m.planck.exponent)
        })?;
        positive("model.sigma_a", m.sigma_a)?;
        field("model.sigma_s", m.sigma_s >= 0.0 && m.sigma_s.is_finite(), || format!("must be nonnegative, got {}", m.sigma_s))?;
        field("model.N", (MIN_N..=MAX_N).contains(&m.n), || format!("must lie in {MIN_N}..={MAX_N}, got {}", m.n))?;
        field("model.alpha_max", m.alpha_max > 0.0 && m.alpha_max < 1.0, || format!("must lie in (0, 1), got {}", m.alpha_max))?;
        positive("model.epsilon0", m.epsilon0)?;

        let s = &self.solver;
        field("solver.cfl", s.cfl > 0.0 && s.cfl <= MAX_CFL, || format!("must lie in (0, {MAX_CFL}], got {}", s.cfl))?;
        positive("solver.newton_tol", s.newton_tol)?;
        field("solver.newton_max_iter", s.newton_max_iter > 0, || "must be positive".into())?;
        field("solver.cells", s.cells >= 8, || format!("need at least 8 cells, got {}", s.cells))?;
        positive("solver.tfinal", s.tfinal)?;
        positive("solver.eps", s.eps)?;
        field("solver.eps", s.eps <= m.epsilon0, || format!("{} exceeds model.epsilon0 = {}", s.eps, m.epsilon0))?;

        let st = &self.study;
        field("study.eps_list", !st.eps_list.is_empty(), || "must not be empty".into())?;
        for (i, e) in st.eps_list.iter().enumerate() {
            positive(&format!("study.eps_list[{i}]"), *e)?;
            field(&format!("study.eps_list[{i}]"), *e <= m.epsilon0, || format!("{e} exceeds model.epsilon0 = {}", m.epsilon0))?;
        }
        field("study.eps_list", st.eps_list.windows(2).all(|w| w[1] < w[0]), || {
            "must be strictly decreasing".into()
        })?;
        field("study.profile", st.profile.parse::<Profile>().is_ok(), || {
            let names: Vec<_> = Profile::ALL.iter().map(|p| p.as_str()).collect();
            format!("unknown profile '{}', expected one of {}", st.profile, names.join(", "))
        })?;
        field("study.amplitude", st.amplitude >= 0.0 && st.amplitude < 0.5, || format!("must lie in [0, 0.5), got {}", st.amplitude))?;
        field("study.layer_amplitude", st.layer_amplitude >= 0.0 && st.layer_amplitude < 0.5, || {
            format!("must lie in [0, 0.5), got {}", st.layer_amplitude)
        })?;
        field("study.perturbation", st.perturbation >= 0.0 && st.perturbation < 0.5, || {
            format!("must lie in [0, 0.5), got {}", st.perturbation)
        })?;
        field("study.corrected", !(st.corrected && !st.prepared), || "requires prepared data".into())?;
        positive("study.layer_eps", st.layer_eps)?;
        field("study.layer_eps", st.layer_eps <= m.epsilon0, || format!("exceeds model.epsilon0 = {}", m.epsilon0))?;

        let sb = &self.stability;
        field("stability.states", sb.states > 0, || "must be positive".into())?;
        field("stability.n_list", !sb.n_list.is_empty(), || "must not be empty".into())?;
        for (i, n) in sb.n_list.iter().enumerate() {
            field(&format!("stability.n_list[{i}]"), (MIN_N..=MAX_N).contains(n), || format!("must lie in {MIN_N}..={MAX_N}, got {n}"))?;
        }
        field("stability.a_fraction", sb.a_fraction > 0.0 && sb.a_fraction <= 1.0, || {
            format!("must lie in (0, 1], got {}", sb.a_fraction)
        })?;
        interval("stability.rho", sb.rho)?;
        interval("stability.theta", sb.theta)?;
        interval("stability.v", sb.v)?;
        field("stability.rho", sb.rho[0] > 0.0, || "density must be positive".into())?;
        field("stability.theta", sb.theta[0] > 0.0, || "temperature must be positive".into())?;

        let t = &self.tables;
        interval("tables", [t.alpha_min, t.alpha_max])?;
        field("tables.alpha_min", t.alpha_min.abs() <= m.alpha_max, || format!("outside |alpha| <= {}", m.alpha_max))?;
        field("tables.alpha_max", t.alpha_max.abs() <= m.alpha_max, || format!("outside |alpha| <= {}", m.alpha_max))?;
        positive("tables.alpha_step", t.alpha_step)?;
        Ok(())
    }

    pub fn thermo(&self) -> ThermoRadiationModel {
        let m = &self.model;
        ThermoRadiationModel {
            gamma: m.gamma,
            planck_coefficient: m.planck.coefficient,
            planck_exponent: m.planck.exponent,
            sigma_a: m.sigma_a,
            sigma_s: m.sigma_s,
        }
    }

    pub fn build_model(&self, n: usize) -> Result<Model, CliError> {
        Ok(Model::new(self.thermo(), n, self.model.alpha_max, self.model.epsilon0)?)
    }

    pub fn closure(&self) -> Result<Closure, CliError> {
        Ok(Closure::new(self.model.n, self.model.alpha_max)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            cfl: s.cfl,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            splitting: s.splitting.into(),
            snapshot_every: s.snapshot_every,
            ..SolverConfig::default()
        }
    }

    pub fn profile(&self) -> Profile {
        self.study.profile.parse().unwrap_or_default()
    }

    pub fn study_config(&self) -> StudyConfig {
        let st = &self.study;
        StudyConfig {
            eps_list: st.eps_list.clone(),
            cells: self.solver.cells,
            length: 1.0,
            t_final: self.solver.tfinal,
            profile: self.profile(),
            amplitude: st.amplitude,
            data: match (st.prepared, st.corrected) {
                (true, false) => InitialData::Equilibrium,
                (true, true) => InitialData::Corrected,
                (false, _) => InitialData::Unprepared,
            },
            perturbation: st.perturbation,
            solver: SolverConfig { splitting: st.splitting.into(), ..self.solver_config() },
            grid_guard: st.grid_guard,
        }
    }

    pub fn layer_config(&self) -> StudyConfig {
        StudyConfig { amplitude: self.study.layer_amplitude, data: InitialData::Unprepared, ..self.study_config() }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { a_fraction: self.stability.a_fraction, ..Tolerances::default() }
    }

    pub fn sampling_box(&self) -> SamplingBox {
        let s = &self.stability;
        SamplingBox { rho: (s.rho[0], s.rho[1]), theta: (s.theta[0], s.theta[1]), v: (s.v[0], s.v[1]) }
    }

    /// Grid of `alpha_min + k * alpha_step` up to `alpha_max`, endpoint included within rounding.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let t = &self.tables;
        let count = ((t.alpha_max - t.alpha_min) / t.alpha_step + 1e-9).floor() as usize;
        (0..=count)
            .map(|k| t.alpha_min + k as f64 * t.alpha_step)
            // -0.9 + 3 * 0.3 is not exactly zero, and the odd coefficients vanish there
            .map(|a| if a.abs() < 1e-9 * t.alpha_step { 0.0 } else { a })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::default().study_config().solver.splitting, Splitting::Lie);
        assert_eq!(RunConfig::default().solver_config().splitting, Splitting::Strang);
    }

    #[test]
    fn alpha_grid_hits_zero_exactly() {
        let g = RunConfig::default().alpha_grid();
        assert_eq!(g.len(), 7);
        assert_eq!(g[3], 0.0);
        assert!((g[6] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn corrected_requires_prepared() {
        let mut c = RunConfig::default();
        c.study.prepared = false;
        c.study.corrected = true;
        assert!(matches!(c.validate(), Err(CliError::Config { path, .. }) if path == "study.corrected"));
    }

    #[test]
    fn study_data_choice() {
        let mut c = RunConfig::default();
        assert_eq!(c.study_config().data, InitialData::Equilibrium);
        c.study.corrected = true;
        assert_eq!(c.study_config().data, InitialData::Corrected);
        c.study.prepared = false;
        c.study.corrected = false;
        assert_eq!(c.study_config().data, InitialData::Unprepared);
    }
}
