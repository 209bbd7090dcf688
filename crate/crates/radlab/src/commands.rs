//! One function per subcommand. Each writes its files and returns an [`Outcome`].

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use radlab_core::closure::{closed_form_kappa, closed_form_r1, KappaName, TableCache, WeightFamily, DEFAULT_CACHE_NODES};
use radlab_core::limit::{self, InitialData, LimitField, MemberResult, StudyResult, MIN_ORDER};
use radlab_core::model::Model;
use radlab_core::solver::{Grid1D, Solver};
use radlab_core::stability::{self, StabilityReport, StateRecord};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, snapshot_table, write_text, Table};
use crate::threads;

/// Result of a subcommand: the scientific verdict and a one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            crate::error::EXIT_FAILURE
        }
    }
}

pub const KAPPA_TOLERANCE: f64 = 1e-10;
pub const MASS_TOLERANCE: f64 = 1e-12;
pub const LIMIT_DRIFT_TOLERANCE: f64 = 1e-12;
pub const ALPHA_IDENTITY_TOLERANCE: f64 = 1e-6;
pub const LAYER_RATE_TOLERANCE: f64 = 0.2;
pub const LAYER_DECAY: f64 = 1e6;
pub const LAYER_REDUCTION: f64 = 2.0;

fn echo_config(cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
    write_text(dir, "config.json", &(cfg.to_json() + "\n"))
}

fn rel(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}

/// All closure coefficients on the configured alpha grid, plus the closed-form oracles.
pub fn closure_tables(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = &cfg.output.dir;
    let closure = cfg.closure()?;
    let mut t = Table::new(&["alpha", "name", "i", "j", "value"]);
    let mut worst = 0.0f64;
    let alphas = cfg.alpha_grid();
    for &alpha in &alphas {
        let tab = closure.tables(alpha)?;
        let a = num(alpha);
        let mut matrix = |name: &str, m: &radlab_core::nalgebra::DMatrix<f64>| {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    t.row(&[a.clone(), name.into(), i.to_string(), j.to_string(), num(m[(i, j)])]);
                }
            }
        };
        matrix("kappa", &tab.kappa);
        matrix("kappa_tilde", &tab.kappa_tilde);
        matrix("m_tilde", &tab.m_tilde);
        let mut vector = |name: &str, v: &[f64]| {
            for (i, x) in v.iter().enumerate() {
                t.row(&[a.clone(), name.into(), i.to_string(), "0".into(), num(*x)]);
            }
        };
        vector("r", &tab.r);
        vector("beta", &tab.beta);
        vector("lambda_tilde", tab.lambda_tilde.as_slice());
        for name in KappaName::ALL {
            let (fam, j, k) = name.index();
            let got = match fam {
                WeightFamily::Mp => tab.kappa[(j, k)],
                WeightFamily::Hmp => tab.kappa_tilde[(j, k)],
            };
            worst = worst.max(rel(got, closed_form_kappa(name, alpha)?));
        }
        worst = worst.max(rel(tab.r[0], 2.0));
        if tab.r.len() > 1 {
            worst = worst.max(rel(tab.r[1], closed_form_r1(alpha)));
        }
    }
    let pass = worst <= KAPPA_TOLERANCE;
    let summary = format!(
        "{} closed forms over {} alpha values, worst relative error {worst:.3e}",
        if pass { "PASS" } else { "FAIL" },
        alphas.len()
    );
    let files = vec![echo_config(cfg, dir)?, t.write(dir, "closure_tables.csv")?, write_text(dir, "summary.txt", &(summary.clone() + "\n"))?];
    Ok(Outcome { pass, summary, files })
}

/// Certification over sampled equilibria for every closure order in `n_list`.
pub fn stability_report(cfg: &RunConfig) -> Result<StabilityReport, CliError> {
    let tol = cfg.tolerances();
    let bx = cfg.sampling_box();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.stability.seed);
    let pool = threads::pool()?;
    let mut records = Vec::new();
    let mut off = 0.0f64;
    for &n in &cfg.stability.n_list {
        let model = cfg.build_model(n)?;
        // draw serially so the sample does not depend on the worker count
        let states = stability::sample_equilibria(&mut rng, cfg.stability.states, &bx);
        let eps = [0.0, 0.1 * cfg.model.epsilon0, 0.5 * cfg.model.epsilon0];
        if cfg.stability.off_equilibrium > 0 {
            off = off.max(stability::condition_ii_sweep(&mut rng, &model, cfg.stability.off_equilibrium, &eps, &bx)?);
        }
        let recs: Vec<StateRecord> = pool.install(|| {
            states
                .par_iter()
                .map(|&(rho, v, theta)| stability::certify_state(&model, rho, v, theta, &tol))
                .collect::<Result<_, _>>()
        })?;
        records.extend(recs);
    }
    Ok(StabilityReport { records, off_equilibrium_symmetry: off, tolerances: tol })
}

pub fn stability_table(report: &StabilityReport) -> Table {
    let mut t = Table::new(&[
        "n",
        "rho",
        "v",
        "theta",
        "a",
        "a_max",
        "cond_i_block",
        "cond_i_min_sv",
        "cond_i_sv_bound",
        "cond_ii",
        "cond_iii_lambda_max",
        "cond_iii_scale",
        "jacobian_error",
        "rank_gap",
        "a11_norm",
        "a11_derivative",
        "a21_sigma2_over_sigma1",
        "largest_certifiable_a",
        "rescaled_lambda_max",
        "rescaled_scale",
        "pass",
    ]);
    for r in &report.records {
        let mut fields = vec![r.n.to_string()];
        fields.extend(
            [
                r.rho,
                r.v,
                r.theta,
                r.a,
                r.a_max,
                r.condition_i.block_residual,
                r.condition_i.min_singular,
                r.condition_i.singular_bound,
                r.condition_ii,
                r.condition_iii.lambda_max,
                r.condition_iii.scale,
                r.jacobian_error,
                r.rank_gap,
                r.tilde.a11_norm,
                r.tilde.a11_derivative,
                r.tilde.a21_sigma2 / r.tilde.a21_sigma1,
                r.largest_certifiable_a,
                r.rescaled_lambda_max,
                r.rescaled_scale,
            ]
            .iter()
            .map(|x| num(*x)),
        );
        fields.push(if r.pass { "1" } else { "0" }.into());
        t.row(&fields);
    }
    t.comment(&format!("off_equilibrium_symmetry={}", num(report.off_equilibrium_symmetry)));
    t.comment(&report.summary());
    t
}

pub fn stability_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = &cfg.output.dir;
    let report = stability_report(cfg)?;
    let summary = report.summary();
    let files = vec![
        echo_config(cfg, dir)?,
        stability_table(&report).write(dir, "stability.csv")?,
        write_text(dir, "summary.txt", &(summary.clone() + "\n"))?,
    ];
    Ok(Outcome { pass: report.all_pass(), summary, files })
}

fn cache_for(model: &Model) -> Result<TableCache, CliError> {
    Ok(TableCache::new(&model.closure, DEFAULT_CACHE_NODES)?)
}

/// Relaxation run from the configured profile at `solver.eps`.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = &cfg.output.dir;
    let model = cfg.build_model(cfg.model.n)?;
    let cache = cache_for(&model)?;
    let sc = cfg.study_config();
    let grid = Grid1D::new(cfg.solver.cells, sc.length)?;
    let limit0 = LimitField::from_profile(&model, grid, sc.profile, sc.amplitude);
    let data = if cfg.study.prepared { sc.data } else { InitialData::Unprepared };
    let init = limit::relaxation_initial(&model, &limit0, cfg.solver.eps, data, sc.perturbation)?;
    let solver = Solver::new(&model, &cache, cfg.solver_config())?;
    let run = solver.run(init, cfg.solver.tfinal)?;

    let mut files = vec![echo_config(cfg, dir)?];
    for (k, s) in run.snapshots.iter().enumerate() {
        files.push(snapshot_table(&model, s)?.write(dir, &format!("snapshot_{k:05}.csv"))?);
    }
    files.push(snapshot_table(&model, &run.final_state)?.write(dir, "final.csv")?);
    let d = &run.diagnostics;
    let mut diag = Table::new(&["quantity", "value"]);
    for (name, value) in [
        ("eps", cfg.solver.eps),
        ("t_final", run.final_state.t),
        ("steps", d.steps as f64),
        ("newton_iterations", d.newton_iterations as f64),
        ("halvings", d.halvings as f64),
        ("mass_initial", d.mass_initial),
        ("max_mass_drift", d.max_mass_drift),
        ("momentum_initial", d.momentum_initial),
        ("momentum_final", d.momentum_final),
        ("energy_initial", d.energy_initial),
        ("energy_final", d.energy_final),
    ] {
        diag.row(&[name.into(), num(value)]);
    }
    files.push(diag.write(dir, "diagnostics.csv")?);
    let pass = d.max_mass_drift <= MASS_TOLERANCE;
    let summary = format!(
        "{} {} steps to t={}, relative mass drift {:.3e}",
        if pass { "PASS" } else { "FAIL" },
        d.steps,
        run.final_state.t,
        d.max_mass_drift
    );
    files.push(write_text(dir, "summary.txt", &(summary.clone() + "\n"))?);
    Ok(Outcome { pass, summary, files })
}

/// Checks of the limit objects, also used by the acceptance suite.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitChecks {
    pub integral_drift: f64,
    pub alpha_identity: f64,
    pub layer_rate: f64,
    pub layer_linear_rate: f64,
    pub layer_decay: f64,
    pub layer_comparison: limit::LayerComparison,
}

impl LimitChecks {
    pub fn rate_error(&self) -> f64 {
        rel(self.layer_rate, self.layer_linear_rate)
    }

    pub fn pass(&self) -> bool {
        self.integral_drift <= LIMIT_DRIFT_TOLERANCE
            && self.alpha_identity <= ALPHA_IDENTITY_TOLERANCE
            && self.rate_error() <= LAYER_RATE_TOLERANCE
            && self.layer_decay >= LAYER_DECAY
            && self.layer_comparison.reduction() >= LAYER_REDUCTION
    }
}

/// Largest relative gap between the two alpha_1 computations where `d_x b` is not negligible.
pub fn alpha_identity_error(w1: &[radlab_core::nalgebra::DVector<f64>], a1: &[f64]) -> f64 {
    let scale = a1.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    w1.iter()
        .zip(a1)
        .filter(|(_, a)| a.abs() > 1e-6 * scale)
        .map(|(w, a)| rel(w[1], *a))
        .fold(0.0, f64::max)
}

/// Limit run, corrector, initial layer and the layer-corrected comparison.
pub fn limit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = &cfg.output.dir;
    let model = cfg.build_model(cfg.model.n)?;
    let cache = cache_for(&model)?;
    let sc = cfg.study_config();
    let grid = Grid1D::new(cfg.solver.cells, sc.length)?;
    let f0 = LimitField::from_profile(&model, grid, sc.profile, sc.amplitude);
    let mut files = vec![echo_config(cfg, dir)?];

    let w1 = limit::corrector_w1(&model, &f0)?;
    let a1 = limit::alpha1_identity(&model, &f0)?;
    let mut header = vec!["x".to_string()];
    header.extend((0..=model.n()).map(|k| format!("w1_{k}")));
    header.push("alpha1_identity".into());
    let mut ct = Table::with_header(header);
    for i in 0..grid.cells() {
        let mut row = vec![grid.x(i)];
        row.extend(w1[i].iter());
        row.push(a1[i]);
        ct.numbers(&row);
    }
    files.push(ct.write(dir, "corrector.csv")?);

    let run = limit::limit_run(&model, f0.clone(), cfg.solver.tfinal, cfg.solver.cfl, 0)?;
    let mut lt = Table::new(&["x", "rho", "v", "E", "theta", "Z"]);
    let f = &run.final_field;
    for i in 0..grid.cells() {
        let [rho, m, z] = f.data[i];
        let theta = f.theta(&model, i)?;
        let e = (z - model.thermo.planck(theta)) / rho;
        lt.numbers(&[grid.x(i), rho, m / rho, e, theta, z]);
    }
    lt.comment(&format!("t={} steps={} integral_drift={}", num(f.t), run.steps, num(run.max_integral_drift())));
    files.push(lt.write(dir, "limit.csv")?);

    // initial layer of unprepared data over fifty e-folds of the slowest mode
    let lc = cfg.layer_config();
    let lgrid = Grid1D::new(lc.cells, lc.length)?;
    let lf = LimitField::from_profile(&model, lgrid, lc.profile, lc.amplitude);
    let init = limit::relaxation_initial(&model, &lf, cfg.study.layer_eps, InitialData::Unprepared, lc.perturbation)?;
    let cells: Vec<Vec<f64>> = (0..init.cells()).map(|i| init.cell(i).to_vec()).collect();
    let probe = limit::integrate_layer(&model, &cache, &cells[..1], 1.0, &lgrid)?;
    let tau_max = 50.0 / probe.linear_rate;
    let layer = limit::initial_layer(&model, &cache, &cells, tau_max, &lgrid)?;
    let mut tt = Table::new(&["tau", "norm"]);
    for (t, n) in layer.tau.iter().zip(&layer.norms) {
        tt.numbers(&[*t, *n]);
    }
    tt.comment(&format!("rate={} linear_rate={}", num(layer.rate), num(layer.linear_rate)));
    files.push(tt.write(dir, "layer.csv")?);

    let comparison = limit::layer_comparison(&model, &cache, &lc, cfg.study.layer_eps)?;
    let mut cmp = Table::new(&["eps", "err_plain", "err_layer", "reduction"]);
    cmp.numbers(&[comparison.eps, comparison.plain, comparison.corrected, comparison.reduction()]);
    files.push(cmp.write(dir, "layer_comparison.csv")?);

    let checks = LimitChecks {
        integral_drift: run.max_integral_drift(),
        alpha_identity: alpha_identity_error(&w1, &a1),
        layer_rate: layer.rate,
        layer_linear_rate: layer.linear_rate,
        layer_decay: layer.norms[0] / layer.norms.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE),
        layer_comparison: comparison,
    };
    let pass = checks.pass();
    let summary = format!(
        "{} drift={:.3e} alpha_identity={:.3e} layer_rate={:.4} (linear {:.4}) decay={:.3e} layer_reduction={:.3}",
        if pass { "PASS" } else { "FAIL" },
        checks.integral_drift,
        checks.alpha_identity,
        checks.layer_rate,
        checks.layer_linear_rate,
        checks.layer_decay,
        checks.layer_comparison.reduction()
    );
    files.push(write_text(dir, "summary.txt", &(summary.clone() + "\n"))?);
    Ok(Outcome { pass, summary, files })
}

/// The epsilon sweep, members run on the worker pool.
pub fn convergence(cfg: &RunConfig) -> Result<StudyResult, CliError> {
    let model = cfg.build_model(cfg.model.n)?;
    let cache = cache_for(&model)?;
    let sc = cfg.study_config();
    sc.validate()?;
    let pool = threads::pool()?;
    let m = sc.cells;
    let grids: Vec<usize> = if sc.grid_guard { vec![m, 2 * m] } else { vec![m] };
    let limits: Vec<LimitField> =
        pool.install(|| grids.par_iter().map(|&c| limit::study_limit(&model, &sc, c)).collect::<Result<_, _>>())?;
    let mut jobs: Vec<(f64, usize)> = sc.eps_list.iter().map(|&e| (e, 0)).collect();
    if sc.grid_guard {
        jobs.push((*sc.eps_list.last().unwrap(), 1));
    }
    let results: Vec<MemberResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(e, g)| limit::study_member(&model, &cache, &sc, e, grids[g], &limits[g]))
            .collect::<Result<_, _>>()
    })?;
    let rows = results[..sc.eps_list.len()].to_vec();
    let guard = sc.grid_guard.then(|| (rows[rows.len() - 1], results[rows.len()]));
    Ok(limit::assemble_study(rows, guard))
}

pub fn convergence_tables(study: &StudyResult) -> (Table, String) {
    let mut t = Table::new(&["eps", "err_L2", "err_H1", "order_pairwise"]);
    for (k, r) in study.rows.iter().enumerate() {
        let order = if k == 0 { String::new() } else { num(study.pairwise_l2[k - 1]) };
        t.row(&[num(r.eps), num(r.err_l2), num(r.err_h1), order]);
    }
    let fmt = |o: Option<f64>| o.map(num).unwrap_or_else(|| "none".into());
    if let Some(g) = &study.guard {
        t.comment(&format!(
            "grid_guard eps={} cells={}->{} change_L2={} change_H1={} {}",
            num(g.eps),
            g.coarse.cells,
            g.fine.cells,
            num(g.rel_change_l2),
            num(g.rel_change_h1),
            if g.pass() { "ok" } else { "inconclusive" }
        ));
    }
    t.comment(&format!("global_order L2={} H1={}", fmt(study.order_l2), fmt(study.order_h1)));
    let mut dat = String::from("# eps err_L2 err_H1 (plot with logscale xy)\n");
    for r in &study.rows {
        dat.push_str(&format!("{} {} {}\n", num(r.eps), num(r.err_l2), num(r.err_h1)));
    }
    (t, dat)
}

pub fn converge(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = &cfg.output.dir;
    let study = convergence(cfg)?;
    let (table, dat) = convergence_tables(&study);
    let files = vec![echo_config(cfg, dir)?, table.write(dir, "convergence.csv")?, write_text(dir, "convergence.dat", &dat)?];
    let prepared = cfg.study.prepared;
    let pass = if prepared { study.pass(MIN_ORDER) } else { !study.inconclusive() };
    let verdict = if study.inconclusive() {
        "INCONCLUSIVE"
    } else if pass {
        "PASS"
    } else {
        "FAIL"
    };
    let fmt = |o: Option<f64>| o.map(|x| format!("{x:.4}")).unwrap_or_else(|| "none".into());
    let summary = format!(
        "{verdict} order L2={} H1={} monotone={} over {} eps values",
        fmt(study.order_l2),
        fmt(study.order_h1),
        study.monotone,
        study.rows.len()
    );
    let mut files = files;
    files.push(write_text(dir, "summary.txt", &(summary.clone() + "\n"))?);
    Ok(Outcome { pass, summary, files })
}
