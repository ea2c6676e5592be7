//! Command dispatch and CSV report writers.
//!
//! CSV schemas (floats printed with 17 significant digits):
//!
//! * `dini`:           kind,c,exponent,verdict,value,error_bound,lower_cutoff
//! * `classify`:       domain,parameter,theta_lo,theta_hi,residual,class,cone_ok
//! * `barrier-verify`: property,region,pass,min_slack,argmin,aux_slack
//! * `iterate-*`:      m,k,K,b,B,gap,bound
//! * `solve`:          x1,x2,u
//! * `probe`:          k,t_k,q_k,verdict
//! * `sharpness`:      family,parameter,dini_verdict,probe_verdict

use crate::config::ExperimentConfig;
use gconvex_core::barriers::{default_constants, verify_barrier, BarrierParams};
use gconvex_core::coeffs::EllipticCoefficients;
use gconvex_core::domain::{
    blow_up_cone, classify_point, cone_check_seeded, default_scales, BoundaryGraph, GraphDomain,
    PointClass,
};
use gconvex_core::iteration::{
    corner_bound, corner_run, fit_dominance_constant, flat_run, gap_bound, Branch, BranchOracle,
    IterationInputs, Profile,
};
use gconvex_core::modulus::{dini_classify, DiniVerdict, Modulus, ModulusKind};
use gconvex_core::solver::{
    discretize, probe_quotient, sharpness_experiment, solve, ProbeConfig, Rect, Region,
};
use std::error::Error;
use std::fmt::Write as _;
use std::path::Path;

pub enum Outcome {
    Success,
    VerdictFailure(String),
}

type DynResult<T> = Result<T, Box<dyn Error>>;

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_report(out_dir: &str, cfg: &ExperimentConfig, body: &str) -> DynResult<String> {
    let name = cfg.get("out").map(str::to_string).unwrap_or(format!("{}.csv", cfg.command));
    let path = Path::new(out_dir).join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, body)?;
    Ok(path.display().to_string())
}

pub fn run_suite(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    match cfg.command.as_str() {
        "dini" => cmd_dini(cfg, out_dir),
        "classify" => cmd_classify(cfg, out_dir),
        "barrier-verify" => cmd_barrier(cfg, out_dir),
        "iterate-corner" => cmd_corner(cfg, out_dir),
        "iterate-flat" => cmd_flat(cfg, out_dir),
        "solve" => cmd_solve(cfg, out_dir),
        "probe" => cmd_probe(cfg, out_dir),
        "sharpness" => cmd_sharpness(cfg, out_dir),
        other => Err(format!("unknown command '{other}'").into()),
    }
}

fn build_modulus(cfg: &ExperimentConfig) -> DynResult<(Modulus, String, f64, f64)> {
    let kind = cfg.get("kind").unwrap_or("zero");
    let c = cfg.get_f64("c", 1.0)?;
    let r0 = cfg.get_f64("r0", 1.0)?;
    match kind {
        "zero" => Ok((Modulus { kind: ModulusKind::Zero, r0 }, "zero".into(), 0.0, 0.0)),
        "power" => {
            let p = cfg.get_f64("p", 2.0)?;
            Ok((Modulus::new(ModulusKind::Power { c, p }, r0)?, "power".into(), c, p))
        }
        "logpower" => {
            let q = cfg.get_f64("q", 2.0)?;
            Ok((Modulus::new(ModulusKind::LogPower { c, q }, r0)?, "logpower".into(), c, q))
        }
        "tabulated" => {
            let raw = cfg.get("samples").ok_or("tabulated modulus needs 'samples'")?;
            let mut samples = Vec::new();
            for pair in raw.split(',') {
                let (r, g) = pair
                    .split_once(':')
                    .ok_or_else(|| format!("bad sample '{pair}', expected r:value"))?;
                samples.push((r.trim().parse::<f64>()?, g.trim().parse::<f64>()?));
            }
            Ok((Modulus::tabulated(samples, r0)?, "tabulated".into(), c, 0.0))
        }
        other => Err(format!("unknown modulus kind '{other}'").into()),
    }
}

fn cmd_dini(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let (gamma, kind, c, expo) = build_modulus(cfg)?;
    let tol = cfg.get_f64("tol", 1e-10)?;
    let report = dini_classify(&gamma, tol)?;
    let (verdict, value, err) = match report.verdict {
        DiniVerdict::Convergent { value, error_bound } => ("Convergent", value, error_bound),
        DiniVerdict::Divergent => ("Divergent", f64::NAN, f64::NAN),
        DiniVerdict::Inconclusive => ("Inconclusive", f64::NAN, f64::NAN),
    };
    let mut body = String::from("kind,c,exponent,verdict,value,error_bound,lower_cutoff\n");
    writeln!(
        body,
        "{kind},{},{},{verdict},{},{},{}",
        fmt17(c),
        fmt17(expo),
        fmt17(value),
        fmt17(err),
        fmt17(report.lower_cutoff_used)
    )?;
    let path = write_report(out_dir, cfg, &body)?;
    println!("dini: {verdict} (value {value:.12}, error {err:.3e}) -> {path}");
    Ok(Outcome::Success)
}

fn build_graph(cfg: &ExperimentConfig) -> DynResult<(BoundaryGraph, f64)> {
    let name = cfg.get("domain").ok_or("missing 'domain'")?;
    let q = cfg.get_f64("q", 2.0)?;
    let alpha = cfg.get_f64("alpha", 0.5)?;
    let graph = match name {
        "flat" => BoundaryGraph::Flat,
        "wedge" => BoundaryGraph::Wedge,
        "neg_wedge" => BoundaryGraph::NegWedge,
        "parabola" => BoundaryGraph::Parabola,
        "slope" => BoundaryGraph::Slope(cfg.get_f64("slope", 0.5)?),
        "log_cusp" => BoundaryGraph::LogCusp { q },
        "pos_log_cusp" => BoundaryGraph::PosLogCusp { q },
        "power_cusp" => BoundaryGraph::PowerCusp { alpha },
        other => return Err(format!("unknown domain '{other}'").into()),
    };
    let param = match name {
        "log_cusp" | "pos_log_cusp" => q,
        "power_cusp" => alpha,
        "slope" => cfg.get_f64("slope", 0.5)?,
        _ => 0.0,
    };
    Ok((graph, param))
}

fn cmd_classify(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let (graph, param) = build_graph(cfg)?;
    let domain = GraphDomain::new(graph)?;
    let probes = cfg.get_usize("probes", 500)?;
    let seed = cfg.get_u64("seed", 1)?;
    let cone = blow_up_cone(&domain, [0.0, 0.0], &default_scales())?;
    let class = classify_point(&domain, [0.0, 0.0])?;
    let ok = cone_check_seeded(&cone.sector, probes, seed)?;
    let mut body = String::from("domain,parameter,theta_lo,theta_hi,residual,class,cone_ok\n");
    writeln!(
        body,
        "{},{},{},{},{},{},{}",
        cfg.get("domain").unwrap(),
        fmt17(param),
        fmt17(cone.sector.theta_lo),
        fmt17(cone.sector.theta_hi),
        fmt17(cone.residual),
        match class {
            PointClass::Corner => "Corner",
            PointClass::Flat => "Flat",
        },
        ok
    )?;
    let path = write_report(out_dir, cfg, &body)?;
    println!(
        "classify: sector [{:.6}, {:.6}] {:?} cone_ok={ok} -> {path}",
        cone.sector.theta_lo, cone.sector.theta_hi, class
    );
    Ok(Outcome::Success)
}

fn cmd_barrier(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let n = cfg.get_usize("n", 2)?;
    let lambda = cfg.get_f64("lambda", 1.0)?;
    let budget = cfg.get_usize("budget", 20_000)?;
    let seed = cfg.get_u64("seed", 1)?;
    let consts = default_constants(n, lambda)?;
    let delta = cfg.get_f64("delta", consts.delta1)?;
    let m = cfg.get_f64("m", consts.m1)?;
    let gamma = match cfg.get("gamma_kind") {
        None | Some("zero") => Modulus::zero(),
        Some("power") => {
            Modulus::power(cfg.get_f64("gamma_c", 1.0)?, cfg.get_f64("gamma_p", 2.0)?)?
        }
        Some("logpower") => {
            Modulus::log_power(cfg.get_f64("gamma_c", 1.0)?, cfg.get_f64("gamma_q", 2.0)?)?
        }
        Some(other) => return Err(format!("unknown gamma_kind '{other}'").into()),
    };
    let params = BarrierParams::new(n, lambda, m, delta, &gamma)?;
    let report = verify_barrier(&params, &gamma, budget, seed)?;
    let mut body = String::from("property,region,pass,min_slack,argmin,aux_slack\n");
    for p in &report.properties {
        let argmin =
            p.argmin.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(";");
        writeln!(
            body,
            "{},{},{},{},{argmin},{}",
            p.id,
            p.region,
            p.passed,
            fmt17(p.min_slack),
            p.aux_slack.map(fmt17).unwrap_or_default()
        )?;
    }
    let path = write_report(out_dir, cfg, &body)?;
    let failed: Vec<&str> =
        report.properties.iter().filter(|p| !p.passed).map(|p| p.id).collect();
    println!(
        "barrier-verify: n={n} lambda={lambda} M={m} delta={delta}: {}/{} pass -> {path}",
        report.properties.len() - failed.len(),
        report.properties.len()
    );
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::VerdictFailure(format!("properties failed: {}", failed.join(", "))))
    }
}

fn parse_profile(spec: Option<&str>) -> DynResult<Profile> {
    match spec.unwrap_or("zero") {
        "zero" => Ok(Profile::zero()),
        s if s.starts_with("power:") => {
            let rest: Vec<&str> = s["power:".len()..].split(':').collect();
            if rest.len() != 2 {
                return Err(format!("profile '{s}' must be power:<coef>:<beta>").into());
            }
            Ok(Profile::power(rest[0].parse()?, rest[1].parse()?))
        }
        s if s.starts_with("const:") => Ok(Profile::constant(s["const:".len()..].parse()?)),
        other => Err(format!("unknown profile '{other}'").into()),
    }
}

fn build_inputs(cfg: &ExperimentConfig) -> DynResult<IterationInputs> {
    let n = cfg.get_usize("n", 2)?;
    let lambda = cfg.get_f64("lambda", 1.0)?;
    let mut inputs = IterationInputs::defaults(n, lambda)?;
    inputs.delta = cfg.get_f64("delta", inputs.delta)?;
    inputs.mu = cfg.get_f64("mu", inputs.mu)?;
    inputs.m_big = cfg.get_f64("m", inputs.m_big)?;
    inputs.a1 = cfg.get_f64("a1", inputs.a1)?;
    inputs.a2 = cfg.get_f64("a2", inputs.a2)?;
    inputs.f_profile = parse_profile(cfg.get("f_profile"))?;
    inputs.sigma_profile = parse_profile(cfg.get("sigma_profile"))?;
    if cfg.command == "iterate-flat" {
        inputs.d_profile = Some(parse_profile(cfg.get("d_profile"))?);
    }
    Ok(inputs)
}

fn cmd_corner(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let inputs = build_inputs(cfg)?;
    let steps = cfg.get_usize("steps", 50)?;
    let states = corner_run(&inputs, steps)?;
    let lambda_big = 1.0 / (inputs.delta * inputs.delta);
    let mut values = Vec::new();
    let mut env = Vec::new();
    for s in states.iter().filter(|s| s.m >= 2) {
        let r = inputs.delta.powi(s.m as i32);
        values.push(s.big_k * r + s.big_b);
        env.push(corner_bound(r, &inputs, 1.0, lambda_big)?);
    }
    let c_fit = fit_dominance_constant(&values, &env);
    let mut body = String::from("m,k,K,b,B,gap,bound\n");
    for s in &states {
        let bound = if s.m >= 2 {
            c_fit * corner_bound(inputs.delta.powi(s.m as i32), &inputs, 1.0, lambda_big)?
        } else {
            f64::NAN
        };
        writeln!(
            body,
            "{},{},{},{},{},{},{}",
            s.m,
            fmt17(0.0),
            fmt17(s.big_k),
            fmt17(0.0),
            fmt17(s.big_b),
            fmt17(s.big_k),
            fmt17(bound)
        )?;
    }
    let path = write_report(out_dir, cfg, &body)?;
    println!("iterate-corner: {steps} steps, fitted C = {c_fit:.6e} -> {path}");
    Ok(Outcome::Success)
}

fn cmd_flat(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let inputs = build_inputs(cfg)?;
    let steps = cfg.get_usize("steps", 200)?;
    let mut oracle = match cfg.get("oracle").unwrap_or("random:1") {
        "adversarial" => BranchOracle::Adversarial,
        s if s.starts_with("random:") => BranchOracle::random(s["random:".len()..].parse()?),
        s if s.starts_with("fixed:") => {
            let pattern: Result<Vec<Branch>, String> = s["fixed:".len()..]
                .chars()
                .map(|c| match c {
                    'A' | 'a' => Ok(Branch::A),
                    'B' | 'b' => Ok(Branch::B),
                    other => Err(format!("bad branch '{other}' in fixed oracle")),
                })
                .collect();
            BranchOracle::Fixed(pattern?)
        }
        other => return Err(format!("unknown oracle '{other}'").into()),
    };
    let run = flat_run(&inputs, &mut oracle, steps)?;
    let gaps: Vec<f64> = run.states.iter().skip(1).map(|s| s.gap()).collect();
    let env: Vec<f64> =
        (1..=steps).map(|m| gap_bound(&inputs, m, 1.0)).collect::<Result<_, _>>()?;
    let c6 = fit_dominance_constant(&gaps, &env);
    let mut body = String::from("m,k,K,b,B,gap,bound\n");
    for s in &run.states {
        let bound =
            if s.m >= 1 { c6 * gap_bound(&inputs, s.m, 1.0)? } else { f64::NAN };
        writeln!(
            body,
            "{},{},{},{},{},{},{}",
            s.m,
            fmt17(s.k),
            fmt17(s.big_k),
            fmt17(s.b),
            fmt17(s.big_b),
            fmt17(s.gap()),
            fmt17(bound)
        )?;
    }
    let path = write_report(out_dir, cfg, &body)?;
    let claims = run.claim_summary(inputs.delta);
    println!(
        "iterate-flat: {steps} steps, gap {:.3e}, limit {:?}, fitted C6 = {c6:.6e} -> {path}",
        claims.final_gap, claims.mean_limit
    );
    Ok(Outcome::Success)
}

fn build_region(cfg: &ExperimentConfig) -> DynResult<Region> {
    let name = cfg.get("domain").ok_or("missing 'domain'")?;
    Ok(match name {
        "disk" => Region::Disk { radius: 1.0 },
        "half_disk" => Region::UpperHalfDisk { radius: 1.0 },
        "square" => Region::All,
        _ => {
            let (graph, _) = build_graph(cfg)?;
            Region::AboveGraph(GraphDomain::new(graph)?)
        }
    })
}

fn build_coeffs(cfg: &ExperimentConfig) -> DynResult<EllipticCoefficients> {
    match cfg.get("coeffs").unwrap_or("identity") {
        "identity" => Ok(EllipticCoefficients::identity()),
        s if s.starts_with("diag:") => {
            let parts: Vec<&str> = s["diag:".len()..].split(':').collect();
            if parts.len() != 3 {
                return Err(format!("'{s}' must be diag:<a11>:<a22>:<lambda>").into());
            }
            Ok(EllipticCoefficients::constant(
                parts[0].parse()?,
                0.0,
                parts[1].parse()?,
                parts[2].parse()?,
            )?)
        }
        s if s.starts_with("full:") => {
            let parts: Vec<&str> = s["full:".len()..].split(':').collect();
            if parts.len() != 4 {
                return Err(format!("'{s}' must be full:<a11>:<a12>:<a22>:<lambda>").into());
            }
            Ok(EllipticCoefficients::constant(
                parts[0].parse()?,
                parts[1].parse()?,
                parts[2].parse()?,
                parts[3].parse()?,
            )?)
        }
        other => Err(format!("unknown coeffs '{other}'").into()),
    }
}

fn cmd_solve(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let region = build_region(cfg)?;
    let coeffs = build_coeffs(cfg)?;
    let h = cfg.get_f64("h", 1.0 / 64.0)?;
    let tol = cfg.get_f64("tol", 1e-10)?;
    let f_spec = cfg.get("f").unwrap_or("one").to_string();
    let f = move |_: f64, _: f64| if f_spec == "zero" { 0.0 } else { 1.0 };
    let bbox = region.bbox();
    let rect = Rect { x0: bbox.x0, x1: bbox.x1, y0: bbox.y0, y1: bbox.y1 };
    let problem = discretize(&region, rect, &coeffs, &f, &|_, _, _| 0.0, h)?;
    let mut field = solve(&problem, tol)?;
    if let Some(spec) = cfg.get("corrupt") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err("corrupt must be <x>:<y>:<amount>".into());
        }
        field.corrupt_at(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
    }
    let mut body = String::from("x1,x2,u\n");
    for j in 0..=field.ny {
        for i in 0..=field.nx {
            if let Some(u) = field.value_at_node(i, j) {
                let (x, y) = field.node_pos(i, j);
                writeln!(body, "{},{},{}", fmt17(x), fmt17(y), fmt17(u))?;
            }
        }
    }
    let path = write_report(out_dir, cfg, &body)?;
    let center = field.bilinear(0.0, 0.0);
    println!(
        "solve: {} nodes, u(0) = {:?}, range [{:.3e}, {:.3e}], residual {:.3e} -> {path}",
        problem.unknowns.len(),
        center,
        field.min_u,
        field.max_u,
        field.residual
    );
    // Verdict checks: residual target and the maximum principle.
    let target = tol * (1.0 + problem.f_max);
    let mut u_vec = vec![0.0; problem.unknowns.len()];
    for (r, &(i, j)) in problem.unknowns.iter().enumerate() {
        u_vec[r] = field.value_at_node(i as usize, j as usize).unwrap_or(0.0);
    }
    let mut residual = 0.0f64;
    for r in 0..u_vec.len() {
        let mut s = problem.diag[r] * u_vec[r];
        for k in problem.row_ptr[r] as usize..problem.row_ptr[r + 1] as usize {
            s += problem.vals[k] * u_vec[problem.cols[k] as usize];
        }
        residual = residual.max((problem.rhs[r] - s).abs());
    }
    if residual > 10.0 * target {
        return Ok(Outcome::VerdictFailure(format!(
            "solution residual {residual:.3e} exceeds target {target:.3e}"
        )));
    }
    if problem.rhs_nonneg && field.min_u < 0.0 {
        return Ok(Outcome::VerdictFailure(format!(
            "maximum principle violated: min u = {:.3e}",
            field.min_u
        )));
    }
    Ok(Outcome::Success)
}

fn probe_config(cfg: &ExperimentConfig) -> DynResult<ProbeConfig> {
    let mut pc = ProbeConfig::default();
    pc.h_factor = cfg.get_f64("h_factor", pc.h_factor)?;
    pc.window_factor = cfg.get_f64("window_factor", pc.window_factor)?;
    pc.solver_tol = cfg.get_f64("tol", pc.solver_tol)?;
    Ok(pc)
}

fn cmd_probe(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let region = build_region(cfg)?;
    let coeffs = build_coeffs(cfg)?;
    let k_min = cfg.get_usize("k_min", 3)? as u32;
    let k_max = cfg.get_usize("k_max", 8)? as u32;
    let pc = probe_config(cfg)?;
    let dir = match cfg.get("direction").unwrap_or("e2") {
        "e2" => (0.0, 1.0),
        other => return Err(format!("unknown direction '{other}'").into()),
    };
    let report =
        probe_quotient(&region, &coeffs, &|_, _| 1.0, (0.0, 0.0), dir, (k_min, k_max), &pc)?;
    let label = report.verdict.label();
    let mut body = String::from("k,t_k,q_k,verdict\n");
    for (k, &(t, q)) in report.entries.iter().enumerate() {
        writeln!(body, "{},{},{},{label}", k_min as usize + k, fmt17(t), fmt17(q))?;
    }
    let path = write_report(out_dir, cfg, &body)?;
    println!("probe: {label} (residual {:.3e}) -> {path}", report.residual);
    Ok(Outcome::Success)
}

fn cmd_sharpness(cfg: &ExperimentConfig, out_dir: &str) -> DynResult<Outcome> {
    let alpha_grid = cfg.get_list("alpha_grid")?;
    let q_grid = cfg.get_list("q_grid")?;
    let k_min = cfg.get_usize("k_min", 3)? as u32;
    let k_max = cfg.get_usize("k_max", 8)? as u32;
    let pc = probe_config(cfg)?;
    let outcome = sharpness_experiment(&alpha_grid, &q_grid, (k_min, k_max), &pc)?;
    let mut body = String::from("family,parameter,dini_verdict,probe_verdict\n");
    for row in &outcome.rows {
        let dini = match row.dini {
            DiniVerdict::Convergent { value, .. } => format!("Convergent({})", fmt17(value)),
            DiniVerdict::Divergent => "Divergent".into(),
            DiniVerdict::Inconclusive => "Inconclusive".into(),
        };
        writeln!(body, "{},{},{dini},{}", row.family, fmt17(row.parameter), row.probe.label())?;
    }
    let path = write_report(out_dir, cfg, &body)?;
    println!("sharpness: {} rows, {} violations -> {path}", outcome.rows.len(), outcome.violations.len());
    for v in &outcome.violations {
        eprintln!("  violation: {v}");
    }
    if outcome.violations.is_empty() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::VerdictFailure(outcome.violations.join("; ")))
    }
}
