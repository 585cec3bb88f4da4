//! One function per subcommand, each turning a validated [`RunConfig`] into an
//! [`Artifact`].

use serde::Serialize;
use vibro::diagnostics::{basin_entropy, sali_map, BasinLabel};
use vibro::melnikov::{lambda_star, melnikov_ab, SlowCoeffs};
use vibro::model::simulate;
use vibro::multiparticle::{flatten, mp_simulate, mp_strobo_jacobian, MPJacobianReport, MPParams, MPState};
use vibro::orbits::{
    build_symmetric_orbit, continue_branch, critical_frictions, newton_fixed_point, region_map, symmetric_roots,
    FixedPoint, GridSpec, NewtonOptions, VerifySettings,
};
use vibro::perturbed::{perturbed_spectrum, PerturbedParams};
use vibro::rigorous::certify_fixed_point;
use vibro::strobomap::rotation_number;
use vibro::Params;

use crate::config::RunConfig;
use crate::error::Failure;
use crate::output::{Artifact, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Integrate one trajectory and export samples and events.
    Simulate,
    /// Newton solve for a fixed point of the stroboscopic map.
    Fixpoint,
    /// Natural continuation of a fixed point in one parameter.
    Branch,
    /// Analytic (f, R) regions plus Newton verification points.
    RegionMap,
    /// SALI chaos indicator on a grid around a fixed point.
    SaliMap,
    /// Non-sticking basin and basin entropies on a grid around a fixed point.
    Basin,
    /// Interval certification of a fixed point.
    Verify,
    /// Splitting function near the saddle-centre fold.
    Melnikov,
    /// N-particle simulation and 2N-dimensional Jacobian.
    Multiparticle,
    /// Closed-form symmetric orbits across a list of frictions.
    SymmetricBranch,
    /// Spectrum of the continued fixed point under restitution and viscous loss.
    Perturbed,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fixpoint => "fixpoint",
            Command::Branch => "branch",
            Command::RegionMap => "region-map",
            Command::SaliMap => "sali-map",
            Command::Basin => "basin",
            Command::Verify => "verify",
            Command::Melnikov => "melnikov",
            Command::Multiparticle => "multiparticle",
            Command::SymmetricBranch => "symmetric-branch",
            Command::Perturbed => "perturbed",
        }
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let p = cfg.params.to_params()?;
    match cmd {
        Command::Simulate => cmd_simulate(&p, cfg),
        Command::Fixpoint => cmd_fixpoint(&p, cfg),
        Command::Branch => cmd_branch(&p, cfg),
        Command::RegionMap => cmd_region_map(&p, cfg),
        Command::SaliMap => cmd_sali_map(&p, cfg),
        Command::Basin => cmd_basin(&p, cfg),
        Command::Verify => cmd_verify(&p, cfg),
        Command::Melnikov => cmd_melnikov(&p, cfg),
        Command::Multiparticle => cmd_multiparticle(&p, cfg),
        Command::SymmetricBranch => cmd_symmetric_branch(&p, cfg),
        Command::Perturbed => cmd_perturbed(&p, cfg),
    }
}

fn newton(p: &Params, seed: [f64; 2]) -> Result<FixedPoint, Failure> {
    Ok(newton_fixed_point(p, (seed[0], seed[1]), &NewtonOptions::default())?)
}

fn cmd_simulate(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let s = &cfg.simulate;
    let trace = simulate(p, (s.x0, s.v0), s.t_span, s.sample_dt)?;
    let mut table = Table::new(vec!["t", "x", "v"]);
    for st in &trace.samples {
        table.push(vec![st.t.into(), st.x.into(), st.v.into()]);
    }
    Artifact::new("simulate", table, &trace)
}

#[derive(Serialize)]
struct FixpointReport {
    x_star: f64,
    v_star: f64,
    residual: f64,
    iterations: usize,
    trace: f64,
    det: f64,
    theta_star: Option<f64>,
    rotation: Option<f64>,
    jacobian: [[f64; 2]; 2],
    stability: String,
}

fn cmd_fixpoint(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let f = &cfg.fixpoint;
    let opts = NewtonOptions { tol: f.tol, max_iters: f.max_iters, ..NewtonOptions::default() };
    let fp = newton_fixed_point(p, (f.seed[0], f.seed[1]), &opts)?;
    let rot = rotation_number(&fp.jac).ok();
    let report = FixpointReport {
        x_star: fp.z.0,
        v_star: fp.z.1,
        residual: fp.residual,
        iterations: fp.iterations,
        trace: fp.trace(),
        det: fp.det(),
        theta_star: rot.map(|r| r.0),
        rotation: rot.map(|r| r.1),
        jacobian: fp.jac.rows(),
        stability: format!("{:?}", fp.stability),
    };
    let mut table = Table::new(vec!["x_star", "v_star", "trace", "det", "theta_star", "residual"]);
    table.push(vec![
        report.x_star.into(),
        report.v_star.into(),
        report.trace.into(),
        report.det.into(),
        report.theta_star.into(),
        report.residual.into(),
    ]);
    Artifact::new("fixpoint", table, &report)
}

fn cmd_branch(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let b = &cfg.branch;
    let param = b.param.into();
    let start = vibro::orbits::ContinuationParam::get(&param, p);
    let seed = newton(p, b.seed)?;
    let points = continue_branch(p, param, (start, b.end), b.step, &seed, &NewtonOptions::default())?;
    let mut table = Table::new(vec!["param", "x_star", "v_star", "trace", "det", "theta_star", "fold_flag"]);
    for bp in &points {
        table.push(vec![
            bp.param_value.into(),
            bp.z.0.into(),
            bp.z.1.into(),
            bp.trace.into(),
            bp.det.into(),
            bp.theta_star.into(),
            bp.fold_flag.into(),
        ]);
    }
    Artifact::new("branch", table, &points)
}

fn cmd_region_map(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let r = &cfg.region_map;
    let points: Vec<(f64, f64)> =
        r.verify_gaps.iter().flat_map(|&g| r.verify_frictions.iter().map(move |&f| (f, g))).collect();
    let map = region_map(
        (r.f_range[0], r.f_range[1]),
        (r.r_range[0], r.r_range[1]),
        p,
        (r.analytic_grid[0], r.analytic_grid[1]),
        &points,
        &VerifySettings::default(),
    );
    let mut table = Table::new(vec!["friction", "gap", "label", "elliptic", "saddle"]);
    for v in &map.verification {
        let label = format!("{:?}", v.label);
        table.push(vec![v.friction.into(), v.gap.into(), label.as_str().into(), v.elliptic.into(), v.saddle.into()]);
    }
    Artifact::new("region-map", table, &map)
}

fn grid_around(p: &Params, seed: [f64; 2], half: [f64; 2], nx: usize, nv: usize) -> Result<GridSpec, Failure> {
    let fp = newton(p, seed)?;
    Ok(GridSpec::new((fp.z.0 - half[0], fp.z.0 + half[0]), (fp.z.1 - half[1], fp.z.1 + half[1]), nx, nv))
}

fn cmd_sali_map(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let s = &cfg.sali_map;
    let grid = grid_around(p, s.seed, s.half_width, s.nx, s.nv)?;
    let map = sali_map(p, &grid, s.iterations, cfg.seed);
    let mut table = Table::new(vec!["x", "v", "log10_sali", "category"]);
    for c in &map.cells {
        table.push(vec![c.z0.0.into(), c.z0.1.into(), c.log10_sali.into(), c.category.name().into()]);
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        grid: GridSpec,
        counts: vibro::diagnostics::SaliCounts,
        cells: Vec<(f64, f64, Option<f64>, &'a str)>,
    }
    let summary = Summary {
        grid: map.grid,
        counts: map.counts,
        cells: map.cells.iter().map(|c| (c.z0.0, c.z0.1, c.log10_sali, c.category.name())).collect(),
    };
    Artifact::new("sali-map", table, &summary)
}

fn cmd_basin(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let b = &cfg.basin;
    let grid = grid_around(p, b.seed, b.half_width, b.nx, b.nv)?;
    let basin = basin_entropy(p, &grid, b.iterations, b.box_size);
    let mut table = Table::new(vec!["x", "v", "non_sticking"]);
    for ((x, v), l) in grid.points().into_iter().zip(&basin.labels) {
        table.push(vec![x.into(), v.into(), (*l == BasinLabel::NonSticking).into()]);
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        s_b: f64,
        s_bb: f64,
        boundary_boxes: usize,
        total_boxes: usize,
        non_sticking_fraction: f64,
        basin: &'a vibro::diagnostics::BasinGrid,
    }
    let summary = Summary {
        s_b: basin.s_b,
        s_bb: basin.s_bb,
        boundary_boxes: basin.boundary_boxes,
        total_boxes: basin.total_boxes,
        non_sticking_fraction: basin.non_sticking_fraction(),
        basin: &basin,
    };
    Artifact::new("basin", table, &summary)
}

fn cmd_verify(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let v = &cfg.verify;
    let fp = newton(p, v.seed)?;
    let cert = certify_fixed_point(p, fp.z, v.radius)?;
    if !cert.certificate.certified() {
        return Err(Failure::Inconclusive(format!(
            "Krawczyk image not inside the box (margin {:e})",
            cert.certificate.margin
        )));
    }
    let log = cert.proof_log();
    let mut table = Table::new(vec!["quantity", "lo", "hi"]);
    let mut push = |name: &str, lo: &str, hi: &str| table.push(vec![name.into(), lo.into(), hi.into()]);
    push("x", &log.contracted_box[0].lo, &log.contracted_box[0].hi);
    push("v", &log.contracted_box[1].lo, &log.contracted_box[1].hi);
    push("det", &log.det.lo, &log.det.hi);
    push("trace", &log.trace.lo, &log.trace.hi);
    if let (Some(th), Some(rot)) = (&log.theta, &log.rotation) {
        push("theta", &th.lo, &th.hi);
        push("rotation", &rot.lo, &rot.hi);
    }
    Artifact::new("verify", table, &log)
}

fn cmd_melnikov(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let m = &cfg.melnikov;
    let c = SlowCoeffs::new(m.omega0, m.alpha0, m.beta0, m.alpha_m, m.mu)?;
    let res = melnikov_ab(p, &c);
    let mut table = Table::new(vec!["lambda_star", "a", "b", "j0", "has_transverse_zeros", "zero_phase"]);
    let row = |z: Option<f64>| -> Vec<Cell> {
        vec![
            lambda_star(&c).into(),
            res.a.into(),
            res.b.into(),
            res.j0.into(),
            res.has_transverse_zeros.into(),
            z.into(),
        ]
    };
    if res.zero_phases.is_empty() {
        table.push(row(None));
    }
    for &z in &res.zero_phases {
        table.push(row(Some(z)));
    }
    Artifact::new("melnikov", table, &res)
}

fn cmd_multiparticle(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let m = &cfg.multiparticle;
    let mp = MPParams::new(*p, m.masses.clone())?;
    let z0 = MPState::new(&mp, 0.0, m.x0.clone(), m.v0.clone())?;
    let trace = mp_simulate(&mp, &z0, m.t_span, m.sample_dt)?;
    let jacobian: Option<MPJacobianReport> =
        if m.jacobian { Some(mp_strobo_jacobian(&mp, &flatten(&z0))?) } else { None };
    let n = mp.n();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain((1..=n).map(|i| format!("v{i}")))
        .collect();
    let mut table = Table::new(header);
    for st in &trace.samples {
        table.push(std::iter::once(st.t).chain(flatten(st)).map(Cell::from).collect());
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        trace: &'a vibro::multiparticle::MPTrace,
        jacobian: Option<MPJacobianReport>,
    }
    Artifact::new("multiparticle", table, &Summary { trace: &trace, jacobian })
}

fn cmd_symmetric_branch(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let cf = critical_frictions(p);
    let mut table = Table::new(vec!["friction", "theta", "transverse", "v_wall", "max_residual"]);
    #[derive(Serialize)]
    struct Row {
        friction: f64,
        theta: f64,
        transverse: bool,
        v_wall: f64,
        max_residual: f64,
    }
    let mut rows = Vec::new();
    for &f in &cfg.symmetric_branch.frictions {
        let pf = p.with_friction(f);
        for (theta, transverse) in symmetric_roots(&pf, f) {
            let orbit = build_symmetric_orbit(&pf, theta);
            let max_residual = orbit.residuals().iter().fold(0.0_f64, |m, r| m.max(r.abs()));
            let v_wall = orbit.piece(true, 0.0).1;
            table.push(vec![f.into(), theta.into(), transverse.into(), v_wall.into(), max_residual.into()]);
            rows.push(Row { friction: f, theta, transverse, v_wall, max_residual });
        }
    }
    #[derive(Serialize)]
    struct Summary {
        f_sc: f64,
        f_imp: f64,
        roots: Vec<Row>,
    }
    Artifact::new("symmetric-branch", table, &Summary { f_sc: cf.f_sc, f_imp: cf.f_imp, roots: rows })
}

fn cmd_perturbed(p: &Params, cfg: &RunConfig) -> Result<Artifact, Failure> {
    let c = &cfg.perturbed;
    let pp = PerturbedParams::new(*p, c.epsilon, c.mu_v)?;
    let rep = perturbed_spectrum(&pp, (c.seed[0], c.seed[1]), &NewtonOptions::default())?;
    let mut table = Table::new(vec![
        "epsilon", "mu_v", "x_star", "v_star", "n_star", "det", "rho_exact", "rho_leading", "modulus_1", "modulus_2",
    ]);
    table.push(vec![
        c.epsilon.into(),
        c.mu_v.into(),
        rep.z.0.into(),
        rep.z.1.into(),
        rep.n_star.into(),
        rep.det_measured.into(),
        rep.rho_predicted.exact.into(),
        rep.rho_predicted.leading.into(),
        rep.eigenvalue_moduli.0.into(),
        rep.eigenvalue_moduli.1.into(),
    ]);
    Artifact::new("perturbed", table, &rep)
}
