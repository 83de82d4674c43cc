//! Batch experiment runner: parses a flat key/value config with one level of
//! sections, dispatches to the modules, and writes reproducible CSV/JSON
//! artifacts plus a manifest with content hashes.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 solver/numerical
//! failure (partial artifacts plus error.json are left in the run
//! directory). All floating-point output uses 17 significant digits so
//! certificates reproduce byte-identically for a fixed config and seed.

use crate::barrier::{
    build_barrier, default_layer_distances, verify_scaled_estimate, verify_upper_estimate,
    BarrierSpec,
};
use crate::critical::{
    build_bubble, energy_e_mu, estimate_sobolev_constant, mountain_pass_solve, nehari_residual,
    ps_threshold_check, BubbleSpec, PathConfig, SobolevConfig,
};
use crate::dirichlet::{principal_eigenpair, solve_k_with, SolveConfig};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, DomainKind, DomainSpec, Grading, Mesh};
use crate::moser::{
    check_lemma_a1, check_lemma_a2, effective_pstar, growth_constant_semipositone,
    verify_bound_on_solution, ConvexTest,
};
use crate::operator::{
    eval_fplap_pointwise, fractional_gradient, ClosedForm, Discretization, GridFunction, Params,
    Profile, QuadratureConfig,
};
use crate::semipositone::{continue_in_gamma, solve_lane_emden, ContinuationConfig};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// Parsed experiment configuration: top-level keys plus one section level.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    pub raw: String,
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        sections.entry(current.clone()).or_default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Parse(format!("line {}: malformed section header", lineno + 1)));
                }
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse(format!("line {}: expected key = value", lineno + 1)));
            };
            sections
                .get_mut(&current)
                .unwrap()
                .insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ExperimentConfig { raw: text.to_string(), sections })
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("field [{section}] {key}: not a number: {v}"))
            }),
        }
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("field [{section}] {key}: not an integer: {v}"))
            }),
        }
    }

    fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    fn f64_list(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                if let Some((start, rest)) = v.split_once(':') {
                    // start:step:end
                    let (step, end) = rest.split_once(':').ok_or_else(|| {
                        Error::Config(format!("field [{section}] {key}: want a,b,c or start:step:end"))
                    })?;
                    let (s, st, e): (f64, f64, f64) = (
                        start.trim().parse().map_err(|_| bad_field(section, key))?,
                        step.trim().parse().map_err(|_| bad_field(section, key))?,
                        end.trim().parse().map_err(|_| bad_field(section, key))?,
                    );
                    if st <= 0.0 {
                        return Err(bad_field(section, key));
                    }
                    let mut out = Vec::new();
                    let mut x = s;
                    while x <= e + 1e-12 * st {
                        out.push(x);
                        x += st;
                    }
                    Ok(out)
                } else {
                    v.split(',')
                        .map(|t| t.trim().parse().map_err(|_| bad_field(section, key)))
                        .collect()
                }
            }
        }
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let kind = self.str_or("domain", "kind", "interval");
        let delta = self.f64_or("domain", "delta", 0.2)?;
        match kind {
            "interval" => DomainSpec::interval(
                self.f64_or("domain", "a", -1.0)?,
                self.f64_or("domain", "b", 1.0)?,
                delta,
            ),
            "ball" => DomainSpec::origin_ball(
                self.f64_or("domain", "radius", 1.0)?,
                self.usize_or("domain", "dim", 2)?,
                delta,
            ),
            other => Err(Error::Config(format!("field [domain] kind: unknown value {other}"))),
        }
    }

    pub fn params(&self, dim: usize) -> Result<Params> {
        let s = self.f64_or("params", "s", 0.5)?;
        let p = self.f64_or("params", "p", 2.0)?;
        let mut prm = Params::new(s, p, dim)?;
        prm.r = self.f64_or("params", "r", prm.r)?;
        prm.q = self.f64_or("params", "q", prm.q)?;
        prm.lambda = self.f64_or("params", "lambda", prm.lambda)?;
        prm.mu = self.f64_or("params", "mu", prm.mu)?;
        prm.gamma = self.f64_or("params", "gamma", prm.gamma)?;
        prm.beta = self.f64_or("params", "beta", prm.beta)?;
        prm.theta_exp = self.f64_or("params", "theta_exp", prm.theta_exp)?;
        prm.theta_ratio = self.f64_or("params", "theta_ratio", prm.theta_ratio)?;
        Ok(prm)
    }

    pub fn mesh(&self, dom: &DomainSpec) -> Result<Mesh> {
        let n = self.usize_or("mesh", "n", 257)?;
        let grading = match self.str_or("mesh", "grading", "graded") {
            "uniform" => Grading::Uniform,
            "graded" => Grading::BoundaryGraded {
                exponent: self.f64_or("mesh", "exponent", 2.0)?,
            },
            other => return Err(Error::Config(format!("field [mesh] grading: unknown value {other}"))),
        };
        build_mesh(dom, n, grading)
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig> {
        let mut qc = QuadratureConfig::default();
        qc.tol = self.f64_or("quadrature", "tol", qc.tol)?;
        qc.gl_order = self.usize_or("quadrature", "gl_order", qc.gl_order)?;
        qc.graded_levels = self.usize_or("quadrature", "graded_levels", qc.graded_levels)?;
        qc.far_field_factor = self.f64_or("quadrature", "far_field_factor", qc.far_field_factor)?;
        qc.validate()?;
        Ok(qc)
    }

    pub fn solve(&self) -> Result<SolveConfig> {
        let mut cfg = SolveConfig::default();
        cfg.max_iter = self.usize_or("solve", "max_iter", cfg.max_iter)?;
        cfg.tol = self.f64_or("solve", "tol", cfg.tol)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.usize_or("", "seed", 0)? as u64)
    }

    pub fn subcommand(&self) -> Result<&str> {
        self.get("", "subcommand")
            .ok_or_else(|| Error::Config("field subcommand: missing".into()))
    }
}

fn bad_field(section: &str, key: &str) -> Error {
    Error::Config(format!("field [{section}] {key}: malformed value"))
}

/// Artifact writer: collects files and hashes for the manifest.
struct RunDir {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl RunDir {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(RunDir { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        let mut h = Sha256::new();
        h.update(contents.as_bytes());
        self.files.push((name.to_string(), format!("{:x}", h.finalize())));
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> Result<()> {
        let s = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
        self.write(name, &s)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn solution_csv(u: &GridFunction, prm: &Params) -> String {
    let mut out = String::from("x,u,d,u_over_ds\n");
    let mesh = u.mesh();
    for (i, &x) in mesh.nodes.iter().enumerate() {
        let d = mesh.node_boundary_distance(i);
        let q = if d > 0.0 { u.values()[i] / d.powf(prm.s) } else { 0.0 };
        out.push_str(&format!("{},{},{},{}\n", fmt(x), fmt(u.values()[i]), fmt(d), fmt(q)));
    }
    out
}

/// Run one experiment config; returns the run directory on success.
///
/// The output root is the config's `out_dir` (default `runs/<subcommand>`),
/// overridden by the FPLAB_OUT environment variable when set.
pub fn run(config_path: &Path) -> Result<PathBuf> {
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ExperimentConfig::parse(&text)?;
    let sub = cfg.subcommand()?.to_string();
    let out_dir = match std::env::var("FPLAB_OUT") {
        Ok(root) => PathBuf::from(root).join(cfg.str_or("", "out_dir", &sub)),
        Err(_) => PathBuf::from(cfg.str_or("", "out_dir", &format!("runs/{sub}"))),
    };
    let mut run_dir = RunDir::new(out_dir)?;
    let started = Instant::now();

    let result = dispatch(&cfg, &sub, &mut run_dir);

    let status = match &result {
        Ok(()) => "ok",
        Err(err) => {
            write_error_json(&run_dir.dir, err);
            "error"
        }
    };
    let manifest = json!({
        "subcommand": sub,
        "status": status,
        "seed": cfg.seed()?,
        "config": cfg.raw,
        "version": env!("CARGO_PKG_VERSION"),
        "elapsed_ms": started.elapsed().as_millis() as u64,
        "files": run_dir.files.iter().map(|(n, h)| json!({"name": n, "sha256": h})).collect::<Vec<_>>(),
    });
    let manifest_str =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(run_dir.dir.join("manifest.json"), manifest_str)?;
    result.map(|()| run_dir.dir.clone())
}

fn dispatch(cfg: &ExperimentConfig, sub: &str, run_dir: &mut RunDir) -> Result<()> {
    match sub {
        "eval-op" => run_eval_op(cfg, run_dir),
        "verify-barrier" => run_verify_barrier(cfg, run_dir),
        "solve-dirichlet" => run_solve_dirichlet(cfg, run_dir),
        "eigen" => run_eigen(cfg, run_dir),
        "semipositone-branch" => run_branch(cfg, run_dir),
        "critical-mp" => run_critical(cfg, run_dir),
        "moser-certify" => run_moser(cfg, run_dir),
        other => Err(Error::Config(format!("field subcommand: unknown value {other}"))),
    }
}

fn profile_from_name<'a>(
    name: &str,
    dom: &DomainSpec,
    prm: &Params,
) -> Result<Box<dyn Profile + 'a>> {
    let (lo, hi) = match &dom.kind {
        DomainKind::Interval { a, b } => (*a, *b),
        DomainKind::Ball { radius, .. } => (0.0, *radius),
    };
    match name {
        "sqrt-bump" => {
            // (1 - |x|^2)^s_+ style bump with the domain scaled to unit size
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let s = prm.s;
            Ok(Box::new(ClosedForm::new(
                move |c: f64| {
                    let t = (c - mid) / half;
                    (1.0 - t * t).max(0.0).powf(s)
                },
                (lo, hi),
                vec![],
            )))
        }
        "hat" => {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            Ok(Box::new(ClosedForm::new(
                move |c: f64| (1.0 - ((c - mid) / half).abs()).max(0.0),
                (lo, hi),
                vec![mid],
            )))
        }
        other => Err(Error::Config(format!("field [eval] profile: unknown value {other}"))),
    }
}

fn run_eval_op(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let n_pts = cfg.usize_or("eval", "points", 100)?;
    let which = cfg.str_or("eval", "op", "fplap");
    let profile = profile_from_name(cfg.str_or("eval", "profile", "sqrt-bump"), &dom, &prm)?;
    let (lo, hi) = match &dom.kind {
        DomainKind::Interval { a, b } => (*a, *b),
        DomainKind::Ball { radius, .. } => (0.0, *radius),
    };
    let margin = 0.01 * (hi - lo);
    let mut out = String::from("x,value\n");
    for i in 0..n_pts {
        let x = lo + margin + (hi - lo - 2.0 * margin) * i as f64 / (n_pts - 1).max(1) as f64;
        let v = match which {
            "fplap" => eval_fplap_pointwise(profile.as_ref(), &dom, x, &prm, &qc)?,
            "gradient" => fractional_gradient(profile.as_ref(), &dom, x, &prm, &qc)?,
            other => return Err(Error::Config(format!("field [eval] op: unknown value {other}"))),
        };
        out.push_str(&format!("{},{}\n", fmt(x), fmt(v)));
    }
    run_dir.write("eval.csv", &out)
}

fn run_verify_barrier(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let slope_tol = cfg.f64_or("barrier", "slope_tol", 0.05)?;
    let spread_tol = cfg.f64_or("barrier", "spread_tol", 2.0)?;
    let taus = cfg.f64_list("barrier", "taus", &[1.0, 0.5, 0.25])?;
    let distances = default_layer_distances(dom.delta);

    let spec = BarrierSpec::new(dom.clone(), prm.beta);
    let barrier = build_barrier(&spec, &prm)?;
    let upper = verify_upper_estimate(&barrier, &prm, &qc, &distances, slope_tol)?;
    let mut csv = String::from("d,value,bound\n");
    for &(d, v) in &upper.samples {
        let bound = -upper.fitted_c * d.powf(upper.target_slope);
        csv.push_str(&format!("{},{},{}\n", fmt(d), fmt(v), fmt(bound)));
    }
    run_dir.write("barrier_estimate.csv", &csv)?;

    let x0 = match &dom.kind {
        DomainKind::Interval { b, .. } => vec![*b],
        DomainKind::Ball { center, radius, .. } => {
            let mut x = center.clone();
            x[0] += radius;
            x
        }
    };
    let scaled = verify_scaled_estimate(&dom, x0, &prm, &qc, &taus, &distances, spread_tol)?;
    let mut scsv = String::from("tau,c0\n");
    for &(t, c) in &scaled.c0_by_tau {
        scsv.push_str(&format!("{},{}\n", fmt(t), fmt(c)));
    }
    run_dir.write("barrier_scaled.csv", &scsv)?;

    run_dir.write_json(
        "barrier_summary.json",
        &json!({
            "slope": upper.fitted_slope,
            "target_slope": upper.target_slope,
            "C": upper.fitted_c,
            "all_negative": upper.all_negative,
            "c0": scaled.c0_by_tau.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min),
            "spread": scaled.spread,
            "pass": upper.pass && scaled.pass,
        }),
    )
}

fn run_solve_dirichlet(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let mesh = Arc::new(cfg.mesh(&dom)?);
    let disc = Discretization::new(mesh, prm, qc)?;
    let rhs_const = cfg.f64_or("dirichlet", "rhs_const", 1.0)?;
    let f = disc.grid_fn(|_| rhs_const);
    let rep = solve_k_with(&disc, &f, &cfg.solve()?)?;
    run_dir.write("solution.csv", &solution_csv(&rep.solution, &prm))?;
    run_dir.write_json(
        "solve_report.json",
        &serde_json::to_value(rep.summary()).map_err(|e| Error::Parse(e.to_string()))?,
    )
}

fn run_eigen(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let mesh = Arc::new(cfg.mesh(&dom)?);
    let disc = Discretization::new(mesh, prm, qc)?;
    let (lam, phi) = principal_eigenpair(&disc, &cfg.solve()?)?;
    run_dir.write_json(
        "lambda1.json",
        &json!({"lambda1": lam, "norm": "lp-normalized", "p": prm.p, "s": prm.s}),
    )?;
    run_dir.write("phi1.csv", &solution_csv(&phi, &prm))
}

fn run_branch(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let mesh = Arc::new(cfg.mesh(&dom)?);
    let disc = Discretization::new(mesh, prm, qc)?;
    let mut ccfg = ContinuationConfig {
        gammas: cfg.f64_list("continuation", "gammas", &[0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3])?,
        solve: cfg.solve()?,
        ..Default::default()
    };
    ccfg.omega = cfg.f64_or("continuation", "omega", ccfg.omega)?;
    ccfg.bracket_rel = cfg.f64_or("continuation", "bracket_rel", ccfg.bracket_rel)?;
    let res = continue_in_gamma(&disc, &ccfg)?;
    let mut csv = String::from("gamma,sup_norm,hopf_min,residual,positive_flag\n");
    for bp in &res.points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(bp.gamma),
            fmt(bp.sup_norm),
            fmt(bp.hopf_min),
            fmt(bp.residual),
            if bp.positive { 1 } else { 0 }
        ));
    }
    run_dir.write("branch.csv", &csv)?;
    for (k, bp) in res.points.iter().enumerate() {
        run_dir.write(&format!("w_{k:04}.csv"), &solution_csv(&bp.w, &prm))?;
    }
    run_dir.write_json(
        "branch_summary.json",
        &json!({
            "gamma_star": res.gamma_star,
            "points": res.points.len(),
            "all_positive_up_to_gamma_star": res.points.iter().filter(|p| p.gamma <= res.gamma_star).all(|p| p.positive),
        }),
    )
}

fn run_critical(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let mut prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let mesh = Arc::new(cfg.mesh(&dom)?);
    // lambda defaults to lambda_1 / 2 when not set explicitly
    let solve_cfg = cfg.solve()?;
    if prm.lambda == 0.0 {
        let disc0 = Discretization::new(mesh.clone(), prm, qc)?;
        let (lam1, _) = principal_eigenpair(&disc0, &solve_cfg)?;
        prm.lambda = 0.5 * lam1;
    }
    if prm.mu == 0.0 {
        prm.mu = 0.01;
    }
    let disc = Discretization::new(mesh, prm, qc)?;

    let sob_cfg = SobolevConfig {
        base_radius: cfg.f64_or("sobolev", "base_radius", 16.0)?,
        levels: cfg.usize_or("sobolev", "levels", 3)?,
        core_nodes: cfg.usize_or("sobolev", "core_nodes", 161)?,
        ..Default::default()
    };
    let sob = estimate_sobolev_constant(&prm, &qc, &sob_cfg)?;

    let bspec = BubbleSpec {
        epsilon: cfg.f64_or("bubble", "epsilon", 0.1)?,
        delta_cut: cfg.f64_or("bubble", "delta_cut", 0.25)?,
        theta_ratio: prm.theta_ratio,
        center: cfg.f64_or("bubble", "center", 0.0)?,
        amplitude: cfg.f64_or("bubble", "amplitude", 1.0)?,
    };
    let bubble = build_bubble(&bspec, &prm, disc.mesh())?;
    let pc = PathConfig {
        path_nodes: cfg.usize_or("path", "nodes", 33)?,
        max_sweeps: cfg.usize_or("path", "max_sweeps", 260)?,
        grad_tol: cfg.f64_or("path", "grad_tol", 1e-5)?,
        seed: cfg.seed()?,
        ..Default::default()
    };
    let rep = mountain_pass_solve(&disc, &pc, &bubble)?;

    let mut path_csv = String::from("t,energy\n");
    for &(t, e) in &rep.path_profile {
        path_csv.push_str(&format!("{},{}\n", fmt(t), fmt(e)));
    }
    run_dir.write("path.csv", &path_csv)?;
    run_dir.write("u_mu.csv", &solution_csv(&rep.u_mu, &prm))?;

    let threshold_ok = ps_threshold_check(rep.c_mu, prm.mu, sob.value, &prm, dom.volume())?;
    let nehari = nehari_residual(&rep.u_mu, &disc).unwrap_or(f64::NAN);
    let e_check = energy_e_mu(&rep.u_mu, &disc)?;
    run_dir.write_json(
        "critical_report.json",
        &json!({
            "c_mu": rep.c_mu,
            "energy_recomputed": e_check,
            "gradient_norm": rep.gradient_norm,
            "rho": rep.rho,
            "c0": rep.c0,
            "endpoint_scale": rep.endpoint_scale,
            "lambda": prm.lambda,
            "mu": prm.mu,
            "s_est": sob.value,
            "s_est_by_radius": sob.by_radius,
            "ps_threshold_ok": threshold_ok,
            "nehari_residual": nehari,
            "hopf_min": crate::dirichlet::hopf_quotient(&rep.u_mu, &prm).map(|x| x.0).unwrap_or(f64::NAN),
        }),
    )
}

fn run_moser(cfg: &ExperimentConfig, run_dir: &mut RunDir) -> Result<()> {
    let dom = cfg.domain()?;
    let prm = cfg.params(dom.dim())?;
    let qc = cfg.quadrature()?;
    let mesh = Arc::new(cfg.mesh(&dom)?);
    let disc = Discretization::new(mesh, prm, qc)?;
    let solve_cfg = cfg.solve()?;

    // lemma property suites
    let seed = cfg.seed()?;
    let samples = cfg.usize_or("moser", "samples", 100_000)?;
    let mut lemma = Vec::new();
    for &p in &[2.0, 2.5, 3.0] {
        let a1 = check_lemma_a1(samples, p, 2.0, seed ^ 0xa1)?;
        let a2 = check_lemma_a2(samples, p, ConvexTest::SmoothAbs { eps: 0.1 }, seed ^ 0xa2)?;
        lemma.push(json!({"p": p, "a1_violation": a1, "a2_violation": a2}));
    }

    // certify the Lane-Emden solution of this configuration
    let le = solve_lane_emden(&disc, &solve_cfg)?;
    let w = le.solution;
    let pstar = effective_pstar(&prm, prm.r);
    let s_est = crate::critical::domain_embedding_constant(&disc, pstar)?;
    let c1 = growth_constant_semipositone(&prm, 0.0, pstar)?;
    let rhs = w.map(|t| crate::operator::sgn_pow(t.max(0.0), prm.r));
    let rep = verify_bound_on_solution(&w, &rhs, &disc, c1, s_est, pstar)?;

    run_dir.write_json(
        "moser.json",
        &json!({
            "C1": rep.constants.c1,
            "Lambda": rep.constants.lambda,
            "S_est": rep.constants.s_est,
            "C_star": rep.constants.c_star,
            "C_upper_star": rep.constants.c_upper_star,
            "bound": rep.constants.bound,
            "sup_norm": rep.sup_norm,
            "pass": rep.pass,
            "pstar": rep.constants.pstar,
            "steps": rep.steps.iter().map(|s| json!({
                "k": s.k,
                "norm_lhs": s.norm_lhs,
                "norm_rhs": s.norm_rhs,
                "eq_lhs": s.eq_lhs,
                "eq_rhs": s.eq_rhs,
                "pass": s.pass,
            })).collect::<Vec<_>>(),
            "lemma_suites": lemma,
        }),
    )
}

/// Derive plot-ready CSVs from a completed run directory.
pub fn emit_plotdata(dir: &Path) -> Result<()> {
    let mut produced = 0;
    let barrier = dir.join("barrier_estimate.csv");
    if barrier.exists() {
        let text = std::fs::read_to_string(&barrier)?;
        let mut out = String::from("log_d,log_neg_value\n");
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 2 {
                let d: f64 = cols[0].parse().map_err(|_| Error::Parse("bad barrier csv".into()))?;
                let v: f64 = cols[1].parse().map_err(|_| Error::Parse("bad barrier csv".into()))?;
                if v < 0.0 {
                    out.push_str(&format!("{},{}\n", fmt(d.ln()), fmt((-v).ln())));
                }
            }
        }
        std::fs::write(dir.join("barrier_fit.csv"), out)?;
        produced += 1;
    }
    let branch = dir.join("branch.csv");
    if branch.exists() {
        let text = std::fs::read_to_string(&branch)?;
        let mut out = String::from("gamma,hopf_min\n");
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 3 {
                out.push_str(&format!("{},{}\n", cols[0], cols[2]));
            }
        }
        std::fs::write(dir.join("branch_plot.csv"), out)?;
        produced += 1;
    }
    let path = dir.join("path.csv");
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let mut out = String::from("t,energy\n");
        for line in text.lines().skip(1) {
            out.push_str(line);
            out.push('\n');
        }
        std::fs::write(dir.join("path_plot.csv"), out)?;
        produced += 1;
    }
    if produced == 0 {
        return Err(Error::Config(format!(
            "no plottable artifacts found in {}",
            dir.display()
        )));
    }
    Ok(())
}

/// Map an error to the documented process exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Domain(_) => 2,
        _ => 3,
    }
}

/// Write the machine-readable error artifact next to the partial outputs.
pub fn write_error_json(dir: &Path, err: &Error) {
    let _ = std::fs::create_dir_all(dir);
    if let Ok(mut f) = std::fs::File::create(dir.join("error.json")) {
        let _ = writeln!(
            f,
            "{}",
            json!({"error": err.to_string(), "exit_code": exit_code_for(err)})
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_sections_and_lists() {
        let text = "subcommand = eigen\nseed = 7\n[params]\ns = 0.5\np = 2.0\n[barrier]\ntaus = 1, 0.5, 0.25\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.subcommand().unwrap(), "eigen");
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.f64_or("params", "s", 0.0).unwrap(), 0.5);
        assert_eq!(cfg.f64_list("barrier", "taus", &[]).unwrap(), vec![1.0, 0.5, 0.25]);
        let range = ExperimentConfig::parse("[c]\ngammas = 0:0.1:0.3\n").unwrap();
        assert_eq!(range.f64_list("c", "gammas", &[]).unwrap().len(), 4);
    }

    #[test]
    fn unknown_subcommand_is_config_error() {
        let text = "subcommand = frobnicate\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let err = dispatch(&cfg, "frobnicate", &mut RunDir::new(std::env::temp_dir().join("fplab_test_unknown")).unwrap());
        assert!(matches!(err, Err(Error::Config(_))));
        assert_eq!(exit_code_for(&err.unwrap_err()), 2);
    }
}
