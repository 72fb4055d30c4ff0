use std::fmt::Write as _;

use serde_json::json;

use crate::cli::config::ExperimentConfig;
use crate::cli::report::{num, SuiteReport};
use crate::control_bench::{
    bounds_for, holder_pairs, modulus_joint_with, modulus_space_with, modulus_time, modulus_time_with, problem,
    random_joint_pairs, random_space_pairs, random_time_pairs, value, Engine, ModulusReport, ModulusSpec,
};
use crate::error::Result;
use crate::path_space::PwPath;

fn modulus_check(rep: &mut SuiteReport, id: &str, r: &ModulusReport, hard: bool) {
    let worst = r.rows.iter().map(|w| w.measured - w.bound).fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "{} of {} pairs above the bound on {} ({:?} engine); C = {:.3}, C̃ = {:.3e}",
        r.failures,
        r.rows.len(),
        r.problem,
        r.engine,
        r.c_burkholder,
        r.c_tilde
    );
    let measured = json!({ "failures": r.failures, "worst_measured_minus_bound": num(worst),
                           "c_burkholder": r.c_burkholder, "c_tilde": num(r.c_tilde), "c_hat": r.c_hat });
    if hard {
        rep.hard(id, r.passed, detail, measured);
    } else {
        rep.soft(id, r.passed, detail, measured);
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let cc = &cfg.control;
    let t = cfg.horizon;
    let spec = ModulusSpec { p: cfg.p as f64, seed: cc.modulus.seed.wrapping_add(cfg.seed), ..cc.modulus.clone() };
    let mut rep = SuiteReport::new("control-moduli", 10);

    let prob = problem(&cc.modulus_problem, t)?;
    let space_pairs = random_space_pairs(t, cc.pairs, cfg.seed.wrapping_add(1001))?;
    let time_pairs = random_time_pairs(t, cc.pairs, cfg.seed.wrapping_add(1002))?;
    let joint_pairs = random_joint_pairs(t, cc.joint_pairs, cfg.seed.wrapping_add(1003))?;
    let starts: Vec<(f64, PwPath)> = time_pairs.iter().map(|p| (p.t, p.omega.clone())).collect();
    let (bounds, c_hat) = bounds_for(&prob, &spec, Some(&starts))?;

    let space = modulus_space_with(&prob, &space_pairs, &spec, &bounds)?;
    modulus_check(&mut rep, "space-modulus", &space, true);
    rep.table("space", space.to_csv());
    let time = modulus_time_with(&prob, &time_pairs, &spec, &bounds, c_hat)?;
    modulus_check(&mut rep, "time-modulus", &time, true);
    rep.table("time", time.to_csv());
    let joint = modulus_joint_with(&prob, &joint_pairs, &spec, &bounds, c_hat)?;
    modulus_check(&mut rep, "joint-modulus", &joint, false);
    rep.table("joint", joint.to_csv());

    let hp = problem(&cc.holder_problem, t)?;
    let (k0, k1) = (cc.holder_k.iter().min().copied().unwrap_or(2), cc.holder_k.iter().max().copied().unwrap_or(7));
    let holder = modulus_time(&hp, &holder_pairs(t, k0..=k1), &spec)?;
    let e = holder.holder_exponent;
    rep.hard(
        "holder-exponent",
        e.is_some_and(|e| (cc.holder_range[0]..=cc.holder_range[1]).contains(&e)),
        format!("fitted exponent {} on {} over Δt = 2^-{k0}..2^-{k1}", e.map_or("none".into(), |e| format!("{e:.4}")), hp.name),
        json!({ "exponent": e.map(num) }),
    );
    rep.table("holder", holder.to_csv());

    let mut vcsv = String::from("problem,engine,controls,value,std_error,target,relative_error\n");
    let examples = [("vol-control", 2.25 * t), ("bm-abs", (2.0 * t / std::f64::consts::PI).sqrt())];
    for (name, target) in examples {
        let pr = problem(name, t)?;
        for engine in [Engine::Lattice, Engine::MonteCarlo] {
            let v = value(&pr, 0.0, &PwPath::zero(1), engine, &spec.resolution, cfg.seed.wrapping_add(1004))?;
            let err = (v.value - target).abs() / target;
            rep.hard(
                &format!("value/{name}/{engine:?}"),
                err <= cc.value_tolerance,
                format!("{:.6} ± {:.1e} against {target:.6}", v.value, v.std_error),
                json!({ "value": v.value, "std_error": v.std_error, "target": target, "relative_error": err }),
            );
            let _ = writeln!(vcsv, "{name},{engine:?},{},{:.12e},{:.3e},{target:.12e},{err:.3e}", pr.controls.len(), v.value, v.std_error);
        }
    }
    let vc = problem("vol-control", t)?;
    let mut refined = Vec::new();
    for &k in &cc.refinement {
        let pr = vc.clone().with_controls(k)?;
        let v = value(&pr, 0.0, &PwPath::zero(1), Engine::Lattice, &spec.resolution, cfg.seed)?;
        let _ = writeln!(vcsv, "vol-control,Lattice,{k},{:.12e},0,{:.12e},", v.value, 2.25 * t);
        refined.push((k, v.value));
    }
    let monotone = refined.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    rep.hard(
        "control-refinement",
        monotone,
        format!("lattice values on nested control grids {refined:?}"),
        json!({ "values": refined }),
    );
    rep.table("values", vcsv);
    Ok(rep)
}
