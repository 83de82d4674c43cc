//! End-to-end runs of the batch binary: exit codes, artifact layout,
//! manifest hashes, and derived plot data.

use std::process::Command;

fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

#[test]
fn eigen_run_exits_zero_with_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("eigen");
    let cfg = tmp.path().join("eigen.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = eigen\nseed = 1\nout_dir = {}\n[domain]\ndelta = 0.2\n[params]\ns = 0.5\np = 2.0\n[mesh]\nn = 65\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("lambda1.json").exists());
    assert!(out.join("phi1.csv").exists());

    // manifest lists every artifact with its content hash
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"lambda1.json") && names.contains(&"phi1.csv"));
    for f in files {
        let body = std::fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&body), "hash mismatch");
    }

    // phi1.csv carries the solution schema
    let phi = std::fs::read_to_string(out.join("phi1.csv")).unwrap();
    assert!(phi.starts_with("x,u,d,u_over_ds\n"));
}

#[test]
fn unknown_subcommand_exits_two_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(
        &cfg,
        format!("subcommand = frobnicate\nout_dir = {}\n", out.display()),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert!(err["error"].as_str().unwrap().contains("subcommand"));
}

#[test]
fn branch_run_starts_at_gamma_zero_and_plotdata_follows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("branch");
    let cfg = tmp.path().join("branch.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = semipositone-branch\nseed = 3\nout_dir = {}\n[domain]\ndelta = 0.2\n[params]\ns = 0.5\np = 2.0\nr = 3.0\nq = 3.0\n[mesh]\nn = 65\n[continuation]\ngammas = 0, 0.1\nbracket_rel = 0\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let branch = std::fs::read_to_string(out.join("branch.csv")).unwrap();
    let mut lines = branch.lines();
    assert_eq!(lines.next().unwrap(), "gamma,sup_norm,hopf_min,residual,positive_flag");
    let first: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, 0.0, "first branch row must be gamma = 0");
    let rows = branch.lines().count() - 1;

    let res = run_bin(&["plotdata", out.to_str().unwrap()]);
    assert!(res.status.success());
    let plot = std::fs::read_to_string(out.join("branch_plot.csv")).unwrap();
    assert!(plot.starts_with("gamma,hopf_min\n"));
    assert_eq!(plot.lines().count() - 1, rows, "plot rows must equal branch points");
}

#[test]
fn barrier_run_produces_fit_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("barrier");
    let cfg = tmp.path().join("barrier.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = verify-barrier\nseed = 5\nout_dir = {}\n[domain]\ndelta = 0.1\n[params]\ns = 0.4\np = 3.0\nbeta = 0.2\ntheta_exp = 1.1\n[barrier]\ntaus = 1, 0.5\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("barrier_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["pass"].as_bool().unwrap());

    let res = run_bin(&["plotdata", out.to_str().unwrap()]);
    assert!(res.status.success());
    let fit = std::fs::read_to_string(out.join("barrier_fit.csv")).unwrap();
    assert!(fit.starts_with("log_d,log_neg_value\n"));
    assert!(fit.lines().count() > 20);
}

#[test]
fn solve_dirichlet_run_writes_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("torsion");
    let cfg = tmp.path().join("torsion.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = solve-dirichlet\nout_dir = {}\n[domain]\ndelta = 0.2\n[params]\ns = 0.5\np = 2.0\n[mesh]\nn = 65\n[dirichlet]\nrhs_const = 1.0\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("solve_report.json")).unwrap())
            .unwrap();
    // torsion solution peaks at sqrt(1-0) = 1
    let sup = report["sup_norm"].as_f64().unwrap();
    assert!((sup - 1.0).abs() < 0.01, "sup {sup}");
}

#[test]
fn moser_certify_run_emits_certificate_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("moser");
    let cfg = tmp.path().join("moser.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = moser-certify\nseed = 9\nout_dir = {}\n[domain]\ndelta = 0.2\n[params]\ns = 0.5\np = 2.0\nr = 3.0\n[mesh]\nn = 65\n[moser]\nsamples = 20000\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("moser.json")).unwrap()).unwrap();
    for key in ["C1", "Lambda", "S_est", "C_star", "C_upper_star", "bound", "sup_norm", "pass"] {
        assert!(!cert[key].is_null(), "missing certificate key {key}");
    }
    assert!(cert["pass"].as_bool().unwrap());
    assert!(cert["bound"].as_f64().unwrap() >= cert["sup_norm"].as_f64().unwrap());
}

#[test]
fn critical_mp_run_reports_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("critical");
    let cfg = tmp.path().join("critical.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = critical-mp\nseed = 2\nout_dir = {}\n[domain]\nkind = ball\nradius = 1.0\ndim = 2\ndelta = 0.2\n[params]\ns = 0.5\np = 2.0\n[mesh]\nn = 65\n[sobolev]\nlevels = 2\ncore_nodes = 65\n[bubble]\nepsilon = 0.1\ndelta_cut = 0.25\n[path]\nnodes = 17\nmax_sweeps = 80\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("critical_report.json")).unwrap())
            .unwrap();
    assert!(report["c_mu"].as_f64().unwrap() > 0.0);
    assert!(report["ps_threshold_ok"].as_bool().unwrap());
    assert!(report["gradient_norm"].as_f64().unwrap() <= 1e-5);
    let path_csv = std::fs::read_to_string(out.join("path.csv")).unwrap();
    assert!(path_csv.starts_with("t,energy\n"));
    assert!(out.join("u_mu.csv").exists());
}

#[test]
fn plotdata_on_empty_directory_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let res = run_bin(&["plotdata", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn eval_op_writes_value_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("eval");
    let cfg = tmp.path().join("eval.cfg");
    std::fs::write(
        &cfg,
        format!(
            "subcommand = eval-op\nout_dir = {}\n[domain]\ndelta = 0.2\n[params]\ns = 0.5\np = 2.0\n[eval]\nprofile = sqrt-bump\npoints = 20\n",
            out.display()
        ),
    )
    .unwrap();
    let res = run_bin(&["run", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(out.join("eval.csv")).unwrap();
    assert!(table.starts_with("x,value\n"));
    assert_eq!(table.lines().count(), 21);
    // the sqrt bump is the constant-image profile at s = 1/2, p = 2
    for line in table.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-4, "eval value {v}");
    }
}
