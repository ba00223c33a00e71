//! Command-line front end: one process, flag-driven, reproducible outputs.
//!
//! The subcommand and every numeric option live in the configuration file;
//! the flags only locate it, override the seed and output path, and cap the
//! worker threads. Outputs are written atomically (temp file + rename) and
//! each table header embeds the version, the seed and the config hash, so
//! identical (config, seed) runs produce byte-identical files.

use crate::config::{parse_config, RunConfig};
use crate::energy::{convergence_sweep, SurfaceQuad, SweepConfig};
use crate::envelope::{quasiconvex_upper_estimate, rank_one_envelope, QcOpts, SearchOpts};
use crate::linalg::{v2, v3, Matrix33};
use crate::maps::tilt::{incompressible_correct, TiltMap};
use crate::membrane::parse_scene;
use crate::quad::PrismGrid;
use crate::recovery::{assemble_recovery, partition_jump};
use crate::reduce::{reduce_bulk, reduce_surface, ReduceOpts, ReducedBulk};
use crate::validate::{validate_bulk, validate_surface};
use crate::{Error, Result};
use clap::Parser;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "memfrac", version, about = "membrane fracture energy toolkit")]
struct Flags {
    /// Configuration file (structured text).
    #[arg(long)]
    config: PathBuf,
    /// Output path override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
}

/// Entry point; returns the process exit code (0 ok, 1 numerical failure,
/// 2 config error).
pub fn main() -> i32 {
    let flags = Flags::parse();
    if let Some(n) = flags.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let text = match std::fs::read_to_string(&flags.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", flags.config.display());
            return 2;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(seed) = flags.seed {
        cfg.numeric.seed = seed;
    }
    let hash = {
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        h.update(cfg.numeric.seed.to_le_bytes());
        let d = h.finalize();
        let mut s = String::new();
        for b in d.iter().take(8) {
            let _ = write!(s, "{b:02x}");
        }
        s
    };
    let out_path = flags
        .out
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("memfrac_{}.out", cfg.command)));

    match run(&cfg, &hash, &out_path) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::InvalidScene(_) => 2,
                _ => 1,
            }
        }
    }
}

fn header(cfg: &RunConfig, hash: &str) -> String {
    format!(
        "# memfrac v{} seed={} config=sha256:{}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.numeric.seed,
        hash
    )
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

fn fmt_ext(v: crate::density::ExtReal) -> String {
    match v.finite() {
        Some(x) => fmt_num(x),
        None => "inf".into(),
    }
}

/// Dispatch a validated configuration.
pub fn run(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    match cfg.command.as_str() {
        "validate" => run_validate(cfg, hash, out),
        "reduce" => run_reduce(cfg, hash, out),
        "envelope" => run_envelope(cfg, hash, out),
        "maps" => run_maps(cfg, hash, out),
        "recover" => run_recover(cfg, hash, out),
        "sweep" => run_sweep(cfg, hash, out),
        other => Err(Error::Parse(format!("unknown command {other}"))),
    }
}

fn run_validate(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let mut body = header(cfg, hash);
    let mut reports = Vec::new();
    if let Ok(w) = cfg.bulk_density() {
        reports.push(validate_bulk(&w, cfg.numeric.samples, cfg.numeric.seed).to_string());
    }
    if let Ok(psi) = cfg.surface_density() {
        reports.push(
            validate_surface(&psi, cfg.numeric.samples, cfg.numeric.seed, false).to_string(),
        );
    }
    if reports.is_empty() {
        // no densities selected: validate the whole catalog
        for name in crate::density::BULK_CATALOG {
            let w = crate::density::bulk_by_name(name, 2.0).unwrap();
            reports.push(validate_bulk(&w, cfg.numeric.samples, cfg.numeric.seed).to_string());
        }
        for name in crate::density::SURFACE_CATALOG {
            let psi = crate::density::surface_by_name(name, None, 1.0).unwrap();
            reports.push(
                validate_surface(&psi, cfg.numeric.samples, cfg.numeric.seed, false).to_string(),
            );
        }
    }
    for r in reports {
        body.push_str(&r);
        body.push('\n');
    }
    print!("{body}");
    write_atomic(out, &body)
}

fn run_reduce(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let opts = ReduceOpts::default();
    let mut body = header(cfg, hash);
    body.push_str("kind,e11,e12,e21,e22,e31,e32,w0,xi1,xi2,xi3,psi0,zeta\n");
    if !cfg.matrices.is_empty() {
        let w = cfg.bulk_density()?;
        for entry in &cfg.matrices {
            let e = entry.matrix();
            let r = reduce_bulk(&w, &e, &opts);
            let xi = r.minimizer.unwrap_or(v3(f64::NAN, f64::NAN, f64::NAN));
            let _ = writeln!(
                body,
                "bulk,{},{},{},{},{},{},{},{},{},{},,",
                fmt_num(e.0[0][0]),
                fmt_num(e.0[0][1]),
                fmt_num(e.0[1][0]),
                fmt_num(e.0[1][1]),
                fmt_num(e.0[2][0]),
                fmt_num(e.0[2][1]),
                fmt_ext(r.value),
                fmt_num(xi.x),
                fmt_num(xi.y),
                fmt_num(xi.z),
            );
        }
    }
    if !cfg.jump_data.is_empty() {
        let psi = cfg.surface_density()?;
        for d in &cfg.jump_data {
            let z = v3(d.z[0], d.z[1], d.z[2]);
            let nu = v2(d.nu[0], d.nu[1]).normalized();
            let r = reduce_surface(&psi, z, nu, &opts)?;
            let _ = writeln!(
                body,
                "surface,{},{},{},{},{},,,,,,{},{}",
                fmt_num(z.x),
                fmt_num(z.y),
                fmt_num(z.z),
                fmt_num(nu.x),
                fmt_num(nu.y),
                fmt_num(r.value),
                fmt_num(r.zeta_star),
            );
        }
    }
    print!("{body}");
    write_atomic(out, &body)
}

fn run_envelope(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let w = ReducedBulk::new(cfg.bulk_density()?);
    let search = SearchOpts::default();
    let deep = SearchOpts::micro();
    let qc = QcOpts {
        mesh: cfg.numeric.mesh,
        ..Default::default()
    };
    let mut body = header(cfg, hash);
    body.push_str("e11,e12,e21,e22,e31,e32,w0,rk,qc\n");
    for entry in &cfg.matrices {
        let e = entry.matrix();
        let w0 = w.eval(&e);
        let rk = if cfg.numeric.depth <= 1 {
            rank_one_envelope(&w, &e, cfg.numeric.depth, &search)
        } else {
            rank_one_envelope(&w, &e, cfg.numeric.depth, &deep)
        };
        let qc_est = quasiconvex_upper_estimate(&w, &e, &qc);
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(e.0[0][0]),
            fmt_num(e.0[0][1]),
            fmt_num(e.0[1][0]),
            fmt_num(e.0[1][1]),
            fmt_num(e.0[2][0]),
            fmt_num(e.0[2][1]),
            fmt_ext(w0),
            fmt_ext(rk),
            fmt_num(qc_est.value),
        );
    }
    print!("{body}");
    write_atomic(out, &body)
}

fn run_maps(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let zeta = cfg.numeric.zeta;
    let mut body = header(cfg, hash);
    body.push_str("rho,isometry_residual,tilt_bound_ratio,det_residual,w1inf_distance\n");
    for &rho in &cfg.numeric.rho {
        let map = TiltMap::new(v2(0.0, 0.0), v2(1.0, 0.0), zeta, rho, 0.3, 0.55);
        let o = map.rotation();
        let iso = (o.transpose().matmul(o) - Matrix33::IDENTITY).max_abs();
        // worst vertical-entry ratio and distance to the identity over a
        // sample grid
        let mut tilt_ratio: f64 = 0.0;
        let mut w1inf: f64 = 0.0;
        for i in 0..24 {
            for j in 0..24 {
                for k in 0..7 {
                    let x = v3(
                        -0.6 + 1.2 * i as f64 / 23.0,
                        -0.6 + 1.2 * j as f64 / 23.0,
                        -0.6 + 1.2 * k as f64 / 6.0,
                    );
                    let (v, jac) = map.value_jacobian(x);
                    for r in 0..2 {
                        tilt_ratio = tilt_ratio.max(jac.0[r][2].abs() / rho / zeta.abs());
                    }
                    w1inf = w1inf
                        .max((v - x).norm() + (jac - Matrix33::IDENTITY).max_abs());
                }
            }
        }
        let det_residual = match incompressible_correct(map, 1e-10) {
            Ok(corr) => {
                let mut worst: f64 = 0.0;
                for i in 0..16 {
                    for j in 0..16 {
                        for k in 0..5 {
                            let x = v3(
                                -0.6 + 1.2 * i as f64 / 15.0,
                                -0.6 + 1.2 * j as f64 / 15.0,
                                -0.5 + 1.0 * k as f64 / 4.0,
                            );
                            let (_, jc) = corr.value_jacobian(x);
                            worst = worst.max((crate::linalg::det3(&jc) - 1.0).abs());
                        }
                    }
                }
                worst
            }
            Err(_) => f64::NAN,
        };
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            fmt_num(rho),
            fmt_num(iso),
            fmt_num(tilt_ratio),
            fmt_num(det_residual),
            fmt_num(w1inf),
        );
    }
    print!("{body}");
    write_atomic(out, &body)
}

fn load_scene(cfg: &RunConfig) -> Result<crate::membrane::CrackedMembrane> {
    let path = cfg
        .scene
        .as_ref()
        .ok_or_else(|| Error::Parse("missing scene path".into()))?;
    let text = std::fs::read_to_string(path)?;
    let membrane = parse_scene(&text)?;
    membrane.validate(1e-9)?;
    Ok(membrane)
}

fn sweep_config(cfg: &RunConfig, membrane: &crate::membrane::CrackedMembrane) -> SweepConfig {
    SweepConfig {
        rhos: cfg.numeric.rho.clone(),
        partition_n: cfg.numeric.partition_n,
        partition_eps: cfg.numeric.partition_eps,
        grid: PrismGrid::new(membrane.domain, cfg.numeric.grid_n, cfg.numeric.grid_m),
        surface_quad: SurfaceQuad::default(),
        det_tol: cfg.numeric.det_tol,
        reduce: ReduceOpts::default(),
        qc: QcOpts {
            mesh: cfg.numeric.mesh.min(8),
            sweeps: 6,
            ..Default::default()
        },
    }
}

fn run_recover(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let membrane = load_scene(cfg)?;
    let w = cfg.bulk_density()?;
    let psi = cfg.surface_density()?;
    let sc = sweep_config(cfg, &membrane);
    let mut summary = Vec::new();
    let mut last_def = None;
    for &rho in &cfg.numeric.rho {
        let partition = partition_jump(&membrane, sc.partition_n, sc.partition_eps)?;
        let def = assemble_recovery(&membrane, &w, &psi, rho, partition, &sc.reduce)?;
        let breakdown = crate::energy::evaluate_deformation(
            &def,
            &w,
            &psi,
            &sc.grid,
            &sc.surface_quad,
            sc.det_tol,
            &sc.reduce,
        )?;
        summary.push(serde_json::json!({
            "rho": rho,
            "bulk": breakdown.bulk,
            "surface": breakdown.surface,
            "total": breakdown.total,
            "budget_surface": breakdown.budget_surface,
            "budget_bulk": breakdown.budget_bulk,
            "quad_error": breakdown.quad_error,
        }));
        last_def = Some(def);
    }
    // deformation samples at the finest thickness
    let def = last_def.expect("rho list is nonempty");
    let mut body = header(cfg, hash);
    body.push_str("x,y,x3,u1,u2,u3\n");
    let n = 24;
    let [x0, y0, x1, y1] = membrane.domain;
    for i in 0..n {
        for j in 0..n {
            for k in 0..5 {
                let x = v3(
                    x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64,
                    y0 + (y1 - y0) * (j as f64 + 0.5) / n as f64,
                    -0.5 + (k as f64 + 0.5) / 5.0,
                );
                let u = def.value(x)?;
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{}",
                    fmt_num(x.x),
                    fmt_num(x.y),
                    fmt_num(x.z),
                    fmt_num(u.x),
                    fmt_num(u.y),
                    fmt_num(u.z),
                );
            }
        }
    }
    let json = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.numeric.seed,
        "config": format!("sha256:{hash}"),
        "rows": summary,
    });
    write_atomic(out, &body)?;
    write_atomic(
        &out.with_extension("summary.json"),
        &format!("{:#}\n", json),
    )?;
    println!("wrote {} and {}", out.display(), out.with_extension("summary.json").display());
    Ok(())
}

fn run_sweep(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let membrane = load_scene(cfg)?;
    let w = cfg.bulk_density()?;
    let psi = cfg.surface_density()?;
    let sc = sweep_config(cfg, &membrane);
    let sweep = convergence_sweep(&membrane, &w, &psi, &sc)?;

    let mut body = header(cfg, hash);
    let csv = cfg.output.format == "csv";
    if csv {
        body.push_str(
            "rho,energy,target,gap,bulk,surface,budget_surface,budget_bulk,budget,lower_ok,quad_error\n",
        );
    } else {
        body.push_str(
            "rho          energy       target       gap          budget       lower_ok\n",
        );
    }
    for row in &sweep.rows {
        if csv {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_num(row.rho),
                fmt_num(row.energy),
                fmt_num(row.target),
                fmt_num(row.gap),
                fmt_num(row.breakdown.bulk),
                fmt_num(row.breakdown.surface),
                fmt_num(row.breakdown.budget_surface),
                fmt_num(row.breakdown.budget_bulk),
                fmt_num(row.breakdown.budget),
                row.lower_ok,
                fmt_num(row.breakdown.quad_error),
            );
        } else {
            let _ = writeln!(
                body,
                "{:<12.6} {:<12.8} {:<12.8} {:<12.4e} {:<12.4e} {}",
                row.rho, row.energy, row.target, row.gap, row.breakdown.budget, row.lower_ok
            );
        }
    }
    let json = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.numeric.seed,
        "config": format!("sha256:{hash}"),
        "target": sweep.target,
        "lower_estimate": sweep.lower_estimate,
        "monotone_gap": sweep.monotone,
        "final_gap": sweep.rows.last().map(|r| r.gap),
        "final_budget": sweep.rows.last().map(|r| r.breakdown.budget),
        "rows": sweep.rows.iter().map(|r| serde_json::json!({
            "rho": r.rho,
            "energy": r.energy,
            "gap": r.gap,
            "budget_surface": r.breakdown.budget_surface,
            "budget_bulk": r.breakdown.budget_bulk,
            "lower_ok": r.lower_ok,
        })).collect::<Vec<_>>(),
    });
    print!("{body}");
    write_atomic(out, &body)?;
    write_atomic(
        &out.with_extension("summary.json"),
        &format!("{:#}\n", json),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("memfrac_test_{}_{name}", std::process::id()))
    }

    #[test]
    fn validate_command_writes_report() {
        let cfg = parse_config(
            "command = \"validate\"\n[bulk]\nfamily = \"incomp_power\"\n[numeric]\nsamples = 500\n",
        )
        .unwrap();
        let out = tmp("validate.txt");
        run(&cfg, "deadbeef", &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("seed=42"));
        assert!(text.contains("At2"));
        std::fs::remove_file(&out).ok();
    }

    #[test]
    fn reduce_command_emits_oracle_rows() {
        let cfg = parse_config(
            "command = \"reduce\"\n\
             [bulk]\nfamily = \"incomp_power\"\n\
             [surface]\nfamily = \"surf_quad\"\nq = [[2.0,0.0,1.0],[0.0,1.0,0.0],[1.0,0.0,1.0]]\n\
             [[matrix]]\nentries = [[1.0,0.0],[0.0,1.0],[0.0,0.0]]\n\
             [[jump_datum]]\nz = [0.0, 0.0, 1.0]\nnu = [1.0, 0.0]\n",
        )
        .unwrap();
        let out = tmp("reduce.csv");
        run(&cfg, "deadbeef", &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let bulk_line = text.lines().find(|l| l.starts_with("bulk")).unwrap();
        assert!(bulk_line.contains("3.000000000000e0"), "{bulk_line}");
        let surf_line = text.lines().find(|l| l.starts_with("surface")).unwrap();
        assert!(surf_line.contains("1.5"), "{surf_line}");
        std::fs::remove_file(&out).ok();
    }

    #[test]
    fn byte_identical_reruns() {
        let cfg = parse_config(
            "command = \"maps\"\n[numeric]\nrho = [0.1, 0.05]\nzeta = 1.5\n",
        )
        .unwrap();
        let out1 = tmp("maps1.csv");
        let out2 = tmp("maps2.csv");
        run(&cfg, "cafe", &out1).unwrap();
        run(&cfg, "cafe", &out2).unwrap();
        let a = std::fs::read(&out1).unwrap();
        let b = std::fs::read(&out2).unwrap();
        assert_eq!(a, b);
        std::fs::remove_file(&out1).ok();
        std::fs::remove_file(&out2).ok();
    }
}
