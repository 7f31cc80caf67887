//! Acceptance criteria 1–13. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Tests take a global lock so that the measured runtimes are not inflated by
//! other criteria running on the same cores.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use kinwave::collision::{olg_direct, transport_coefficients, GlobalOperators, PAIRS};
use kinwave::diagnostics::h_functional;
use kinwave::euler_waves::{approx_rarefaction, burgers_decay_report, burgers_residual, riemann_invariants_3};
use kinwave::field::manufactured_poisson_error;
use kinwave::solver::{wall_density_gradient, CollisionMode, Envelope, Perturbation, PerturbationKind, SpeciesMode};
use kinwave::velocity::{collision_invariants, entropy_closed, entropy_eta, entropy_quadrature};
use kinwave::{
    BurnettSet, ChiBasis, CollisionOperator, EndStates, EulerState, KernelConfig, LinearizedOperator, MacroState, Mesh,
    Scenario, SmoothedBurgers, Solver, VelocityGrid, WaveProfile,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: usize, title: &str, pass: bool, elapsed: Duration, limit_s: f64, detail: &str) -> bool {
    let secs = elapsed.as_secs_f64();
    let ok = pass && secs < limit_s;
    println!(
        "criterion {n}: {} {title} [{detail}; {secs:.1} s of {limit_s} s]",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

fn minus_state() -> EulerState {
    EulerState::new(1.0, 0.0, 1.5).unwrap()
}

#[test]
fn criterion_01_riemann_invariant_constancy() {
    let _g = serial();
    let start = Instant::now();
    let ends = EndStates::with_strength(minus_state(), 0.2).unwrap();
    let (r1, s) = riemann_invariants_3(&ends.minus).unwrap();
    let mut worst = 0.0f64;
    for i in 0..200 {
        let t = 200.0 * i as f64 / 199.0;
        for j in 0..200 {
            let x = -200.0 + 600.0 * j as f64 / 199.0;
            let st = approx_rarefaction(t, x, &ends).unwrap();
            let (a, b) = riemann_invariants_3(&st).unwrap();
            worst = worst.max((a - r1).abs()).max((b - s).abs());
        }
    }
    let ok = verdict(
        1,
        "Riemann-invariant constancy",
        worst < 1e-10,
        start.elapsed(),
        1.0,
        &format!("max |ΔR1|, |ΔS| = {worst:.2e} over 200×200 (t, x1)"),
    );
    assert!(ok);
}

#[test]
fn criterion_02_burgers_residual_order() {
    let _g = serial();
    let start = Instant::now();
    let ends = EndStates::with_strength(minus_state(), 0.2).unwrap();
    let profile = WaveProfile::smoothed(ends).unwrap();
    let b = profile.burgers();
    let ts: Vec<f64> = (0..20).map(|i| 0.5 + 0.5 * i as f64).collect();
    let xs: Vec<f64> = (0..40).map(|i| -10.0 + 0.5 * i as f64).collect();
    let hs = [0.08, 0.04, 0.02];
    let r: Vec<f64> = hs.iter().map(|h| burgers_residual(b, &ts, &xs, *h).unwrap().0).collect();
    let orders: Vec<f64> = r.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = orders.iter().all(|p| (p - 2.0).abs() <= 0.2);
    let ok = verdict(
        2,
        "Burgers residual order",
        pass,
        start.elapsed(),
        5.0,
        &format!("residuals {}, observed orders {orders:.3?}", sci(&r)),
    );
    assert!(ok);
}

#[test]
fn criterion_03_decay_slopes() {
    let _g = serial();
    let start = Instant::now();
    let b = SmoothedBurgers::new(0.0, 1.0).unwrap();
    let times: Vec<f64> = (0..9).map(|i| 10f64.powf(1.0 + 0.25 * i as f64)).collect();
    let rep = burgers_decay_report(&b, &times, &[1.0, 2.0, f64::INFINITY]).unwrap();
    let s2 = rep.slopes_for(2.0).unwrap().derivative;
    let sinf = rep.slopes_for(f64::INFINITY).unwrap();
    let l1: Vec<f64> = rep.rows_for(1.0).map(|r| r.derivative).collect();
    let l1_max = l1.iter().cloned().fold(0.0, f64::max);
    let l1_min = l1.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = (s2 + 0.5).abs() <= 0.1
        && (sinf.derivative + 1.0).abs() <= 0.1
        && (sinf.distance + 0.5).abs() <= 0.1
        && l1_max <= (b.w_plus() - b.w_minus()) * (1.0 + 1e-6);
    let ok = verdict(
        3,
        "decay slopes of the smoothed Burgers wave",
        pass,
        start.elapsed(),
        10.0,
        &format!(
            "L2 slope {s2:+.3}, Linf slope {:+.3}, Linf distance slope {:+.3}, L1 in [{l1_min:.6}, {l1_max:.6}]",
            sinf.derivative, sinf.distance
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_maxwellian_moments_and_projections() {
    let _g = serial();
    let start = Instant::now();
    let grid = VelocityGrid::new(8.0, 48).unwrap();
    // the δ = 0.2 end states and a perturbed state inside the wave
    let states = [
        MacroState::new(1.0, [0.0; 3], 1.5).unwrap(),
        MacroState::new(1.10655, [0.132945, 0.0, 0.0], 1.604746).unwrap(),
        MacroState::new(1.05, [0.07, 0.05, -0.05], 1.55).unwrap(),
    ];
    let (mut moment_err, mut ortho, mut idem) = (0.0f64, 0.0f64, 0.0f64);
    for st in &states {
        let m = grid.maxwellian(st);
        let back = grid.moments(&m).unwrap();
        moment_err = moment_err
            .max((back.rho - st.rho).abs() / st.rho)
            .max((back.theta - st.theta).abs() / st.theta);
        for d in 0..3 {
            moment_err = moment_err.max((back.u[d] - st.u[d]).abs() / st.thermal_speed());
        }
        let basis = ChiBasis::new(*st, &grid);
        for (i, row) in basis.gram(&grid).iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                ortho = ortho.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let f = grid.sample(|v| (1.0 + 0.3 * v[0] - 0.1 * v[1] * v[2] + 0.05 * v[0].powi(3)) * (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / 3.0).exp());
        let p = basis.project_p0(&f, &grid);
        let pp = basis.project_p0(&p, &grid);
        idem = idem.max(rel_diff(&pp, &p));
    }
    let ok = verdict(
        4,
        "Maxwellian moment round trip and χ basis at N=48, L=8",
        moment_err < 1e-6 && ortho < 1e-8 && idem < 1e-10,
        start.elapsed(),
        30.0,
        &format!("moment error {moment_err:.2e}, orthonormality defect {ortho:.2e}, P0 idempotence {idem:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_05_entropy() {
    let _g = serial();
    let start = Instant::now();
    let grid = VelocityGrid::new(8.0, 48).unwrap();
    let states = [
        MacroState::new(1.0, [0.0; 3], 1.5).unwrap(),
        MacroState::new(1.3, [0.4, -0.2, 0.1], 1.2).unwrap(),
        MacroState::new(0.7, [-0.3, 0.0, 0.5], 2.0).unwrap(),
    ];
    let mut quad = 0.0f64;
    let mut diag = 0.0f64;
    for st in &states {
        let (a, b) = (entropy_quadrature(st, &grid), entropy_closed(st));
        quad = quad.max(((a - b) / b).abs());
        diag = diag.max(entropy_eta(st, st).abs());
    }
    let bar = MacroState::new(1.0, [0.0; 3], 1.5).unwrap();
    let mut min_off = f64::INFINITY;
    for k in 0..100 {
        let x = k as f64 / 99.0;
        let st = MacroState::new(
            0.6 + 0.9 * x,
            [0.5 * (7.0 * x).sin(), 0.3 * (3.0 * x).cos(), 0.0],
            1.0 + (5.0 * x).sin().abs(),
        )
        .unwrap();
        if st != bar {
            min_off = min_off.min(entropy_eta(&st, &bar));
        }
    }
    let ok = verdict(
        5,
        "entropy quadrature and η",
        quad < 1e-6 && diag == 0.0 && min_off > 0.0,
        start.elapsed(),
        10.0,
        &format!("max relative entropy error {quad:.2e}, η(s,s) = {diag:e}, min off-diagonal η = {min_off:.3e}"),
    );
    assert!(ok);
}

fn kernel_16(n_theta: usize) -> KernelConfig {
    KernelConfig::boltzmann_default()
        .with_resolution(n_theta, n_theta)
        .with_theta_min(std::f64::consts::PI / 64.0)
}

#[test]
fn criterion_06_collision_conservation() {
    let _g = serial();
    let start = Instant::now();
    let grid = VelocityGrid::new(7.0, 16).unwrap();
    let op = CollisionOperator::new(&grid, kernel_16(8)).unwrap();
    let a = MacroState::new(0.5, [0.8, 0.0, 0.0], 1.2).unwrap();
    let b = MacroState::new(0.5, [-0.8, 0.3, 0.0], 1.5).unwrap();
    let f: Vec<f64> = grid.maxwellian(&a).iter().zip(grid.maxwellian(&b)).map(|(x, y)| x + y).collect();
    let q = op.collide(&f).unwrap();
    let l1 = grid.l1(&q);
    let defect = (0..5)
        .map(|i| grid.dot(&q, &grid.sample(|v| collision_invariants(v)[i])).abs() / l1)
        .fold(0.0, f64::max);

    // Q(M, M) for a Maxwellian other than the interpolation reference μ, relative to its loss term
    let m_state = MacroState::new(1.2, [0.3, -0.2, 0.0], 1.3).unwrap();
    let reference = MacroState::global();
    let m = grid.maxwellian(&m_state);
    let mut qmm = Vec::new();
    for n_sigma in [4, 8, 16] {
        let op = CollisionOperator::new(&grid, kernel_16(n_sigma)).unwrap();
        let q = op.apply(&m, &m, &reference);
        qmm.push(grid.l1(&q) / grid.l1(&op.loss(&m, &m)));
    }
    let decreasing = qmm.windows(2).all(|w| w[1] < w[0]);
    let pass = defect < 1e-3 && qmm[1] < 1e-2 && decreasing;
    let ok = verdict(
        6,
        "collision conservation at N=16, 8×8 σ, θ_min = π/64",
        pass,
        start.elapsed(),
        300.0,
        &format!(
            "conservation defect {defect:.2e}; Q(M,M) relative at 4², 8², 16² σ nodes: {} (decreasing: {decreasing})",
            sci(&qmm)
        ),
    );
    assert!(ok);
}

struct Shared {
    op: CollisionOperator,
    build: Duration,
}

/// `N = 16`, `L = 7`, 8×8 σ operator shared by criteria 7–9.
fn shared_op() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let grid = VelocityGrid::new(7.0, 16).unwrap();
        let op = CollisionOperator::new(&grid, kernel_16(8)).unwrap();
        Shared {
            op,
            build: start.elapsed(),
        }
    })
}

struct SharedLinear {
    lin: LinearizedOperator<'static>,
    burnett: BurnettSet,
    build: Duration,
}

fn background(theta: f64) -> MacroState {
    MacroState::new(1.0, [0.0; 3], theta).unwrap()
}

/// `L_M` and its Burnett set at `θ = 3/2`.
fn shared_linear() -> &'static SharedLinear {
    static CELL: OnceLock<SharedLinear> = OnceLock::new();
    CELL.get_or_init(|| {
        let shared = shared_op();
        let start = Instant::now();
        let lin = LinearizedOperator::new(&shared.op, background(1.5)).unwrap();
        let burnett = BurnettSet::build(&lin).unwrap();
        SharedLinear {
            lin,
            burnett,
            build: shared.build + start.elapsed(),
        }
    })
}

#[test]
fn criterion_07_linearized_null_spaces() {
    let _g = serial();
    let start = Instant::now();
    let shared = shared_linear();
    let lin = &shared.lin;
    let grid = lin.grid();
    let l_norm = lin.norm_estimate();
    let mut lm_worst = 0.0f64;
    for k in 0..5 {
        let chi = lin.basis().chi(k);
        lm_worst = lm_worst.max(norm(&lin.apply(chi)) / (l_norm * norm(chi)));
    }

    let ops = GlobalOperators::new(&shared_op().op);
    let sm = ops.sqrt_mu().to_vec();
    // norm estimate of 𝓛 from a few probes
    let probes: Vec<Vec<f64>> = (0..3)
        .map(|p| {
            grid.nodes()
                .iter()
                .zip(&sm)
                .map(|(v, s)| (v[0].powi(2) * v[1] - (p as f64 + 1.0) * v[2] * v[1] + 0.3 * v[0].powi(4)) * s)
                .collect()
        })
        .collect();
    let script_norm = probes.iter().map(|f| norm(&ops.script_l(f)) / norm(f)).fold(0.0, f64::max);
    let mut script_worst = 0.0f64;
    for i in 0..5 {
        let f: Vec<f64> = grid.nodes().iter().zip(&sm).map(|(v, s)| collision_invariants(*v)[i] * s).collect();
        script_worst = script_worst.max(norm(&ops.script_l(&f)) / (script_norm * norm(&f)));
    }
    let l2_worst = norm(&ops.script_l2(&sm)) / (script_norm * norm(&sm));
    let worst = lm_worst.max(script_worst).max(l2_worst);
    let ok = verdict(
        7,
        "linearized null spaces on N=16",
        worst < 1e-2,
        start.elapsed() + shared.build,
        300.0,
        &format!("L_M χ-directions {lm_worst:.2e}, 𝓛 invariants {script_worst:.2e}, 𝓛₂√μ {l2_worst:.2e} (relative to norm estimates)"),
    );
    assert!(ok);
}

/// Sign, independence and identity bullets of the Burnett table; returns failed bullet names.
fn burnett_bullets(set: &BurnettSet) -> Vec<String> {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let within = |vals: &[f64]| {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().all(|v| ((v - mean) / mean).abs() <= 0.05)
    };
    let aa: Vec<f64> = (0..3).map(|i| -set.aa(i, i)).collect();
    check("-(Ahat_i,A_i) > 0", aa.iter().all(|x| *x > 0.0));
    check("-(Ahat_i,A_i) independent of i", within(&aa));
    let a_scale = aa[0];
    let mut off = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                off = off.max(set.aa(i, j).abs());
            }
        }
    }
    check("(Ahat_i,A_j) = 0 for i != j", off <= 0.05 * a_scale);
    let b_scale = -set.bb(0, 1, 0, 1);
    let mut ab = 0.0f64;
    for i in 0..3 {
        for &(j, k) in &PAIRS {
            ab = ab.max(set.ab(i, j, k).abs());
        }
    }
    check("(Ahat_i,B_jk) = 0", ab <= 0.05 * b_scale.min(a_scale));
    let mut sym = true;
    for &(i, j) in &PAIRS {
        for &(k, l) in &PAIRS {
            let (x, y) = (set.bb(i, j, k, l), set.bb(k, l, i, j));
            sym &= (x - y).abs() <= 0.05 * b_scale;
        }
    }
    check("(Bhat_ij,B_kl) = (Bhat_kl,B_ij)", sym);
    let bij: Vec<f64> = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| -set.bb(i, j, i, j)).collect();
    check("-(Bhat_ij,B_ij) > 0 for i != j", bij.iter().all(|x| *x > 0.0));
    check("-(Bhat_ij,B_ij) independent of i,j", within(&bij));
    let biijj: Vec<f64> = [(0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)]
        .iter()
        .map(|&(i, j)| -set.bb(i, i, j, j))
        .collect();
    check("-(Bhat_ii,B_jj) > 0 for i != j", biijj.iter().all(|x| *x > 0.0));
    check("-(Bhat_ii,B_jj) independent of i", within(&biijj));
    let bii: Vec<f64> = (0..3).map(|i| -set.bb(i, i, i, i)).collect();
    check("-(Bhat_ii,B_ii) > 0", bii.iter().all(|x| *x > 0.0));
    check("-(Bhat_ii,B_ii) independent of i", within(&bii));
    let mut zero = 0.0f64;
    for &(i, j) in &PAIRS {
        for &(k, l) in &PAIRS {
            if (i, j) == (k, l) || (i == j && k == l) {
                continue;
            }
            zero = zero.max(set.bb(i, j, k, l).abs());
        }
    }
    check("(Bhat_ij,B_kl) = 0 otherwise", zero <= 0.05 * b_scale);
    let ratio = set.bb(0, 0, 0, 0) / set.bb(0, 1, 0, 1);
    check(&format!("(Bhat_ii,B_ii) = 3 (Bhat_ij,B_ij) [ratio {ratio:.4}]"), (ratio - 3.0).abs() <= 0.15);
    failed
}

#[test]
fn criterion_08_burnett_table() {
    let _g = serial();
    let start = Instant::now();
    let shared = shared_linear();
    let op = &shared_op().op;
    let mut failed = Vec::new();
    let mut coeffs = Vec::new();
    for theta in [1.5, 2.0, 2.5] {
        let owned;
        let set = if theta == 1.5 {
            &shared.burnett
        } else {
            let lin = LinearizedOperator::new(op, background(theta)).unwrap();
            owned = BurnettSet::build(&lin).unwrap();
            &owned
        };
        for f in burnett_bullets(set) {
            failed.push(format!("θ={theta}: {f}"));
        }
        match transport_coefficients(set) {
            Ok(tc) if tc.viscosity > 0.0 && tc.conductivity > 0.0 => coeffs.push((theta, tc.viscosity, tc.conductivity)),
            other => failed.push(format!("θ={theta}: transport coefficients {other:?}")),
        }
    }
    let detail = format!(
        "μ, κ = {}; failed bullets: {}",
        coeffs
            .iter()
            .map(|(t, m, k)| format!("({t}: {m:.4e}, {k:.4e})"))
            .collect::<Vec<_>>()
            .join(" "),
        if failed.is_empty() { "none".to_string() } else { failed.join("; ") }
    );
    let ok = verdict(8, "Burnett table", failed.is_empty(), start.elapsed() + shared.build, 600.0, &detail);
    assert!(ok);
}

#[test]
fn criterion_09_olg_identity() {
    let _g = serial();
    let shared = shared_linear();
    let start = Instant::now();
    let (tx, ux) = (0.02, -0.015);
    let burnett = shared.burnett.olg(tx, ux);
    let direct = olg_direct(&shared.lin, tx, ux).unwrap();
    let rel = rel_diff(&burnett, &direct);
    let ok = verdict(
        9,
        "Ḡ Burnett form against direct inversion on N=16",
        rel < 0.02,
        start.elapsed(),
        120.0,
        &format!("relative L2 difference {rel:.3e}"),
    );
    assert!(ok);
}

fn duct_scenario(ny: usize) -> Scenario {
    let mesh = Mesh::duct(-2.0, 2.0, 3, 1.0, ny).unwrap();
    let grid = VelocityGrid::new(7.0, 10).unwrap();
    let ends = EndStates::constant(minus_state()).unwrap();
    let mut sc = Scenario::new(mesh, grid, ends);
    sc.perturbation = Perturbation {
        kind: PerturbationKind::Macroscopic,
        amplitude: 0.05,
        envelope: Envelope::Uniform,
    };
    sc
}

#[test]
fn criterion_10_specular_duct() {
    let _g = serial();
    let start = Instant::now();
    let solver = Solver::new(duct_scenario(8)).unwrap();
    let mut snap = solver.initialize().unwrap();
    let mut worst_u2 = solver.wall_u2(&snap);
    for _ in 0..500 {
        snap = solver.step(&snap, solver.dt()).unwrap();
        worst_u2 = worst_u2.max(solver.wall_u2(&snap));
    }
    // one-sided wall derivative at a fixed time under transverse refinement
    let t_fixed = 0.5;
    let mut grads = Vec::new();
    for ny in [32, 64, 128] {
        let solver = Solver::new(duct_scenario(ny)).unwrap();
        let mut snap = solver.initialize().unwrap();
        while snap.time < t_fixed - 1e-12 {
            let dt = solver.dt().min(t_fixed - snap.time);
            snap = solver.step(&snap, dt).unwrap();
        }
        grads.push(wall_density_gradient(&snap, &solver.scenario().mesh));
    }
    let orders: Vec<f64> = grads.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = worst_u2 < 1e-14 && orders.iter().all(|p| (p - 1.0).abs() <= 0.2);
    let ok = verdict(
        10,
        "specular duct parity",
        pass,
        start.elapsed(),
        120.0,
        &format!("max wall |u2| over 500 steps {worst_u2:.2e}; wall ∂x2ρ at ny=32,64,128: {}, orders {orders:.3?}", sci(&grads)),
    );
    assert!(ok);
}

#[test]
fn criterion_11_homogeneous_bgk() {
    let _g = serial();
    let start = Instant::now();
    let mesh = Mesh::line(-2.0, 2.0, 4).unwrap();
    let grid = VelocityGrid::new(7.0, 12).unwrap();
    let ends = EndStates::constant(minus_state()).unwrap();
    let mut sc = Scenario::new(mesh, grid.clone(), ends);
    sc.perturbation = Perturbation {
        kind: PerturbationKind::Microscopic,
        amplitude: 0.005,
        envelope: Envelope::Uniform,
    };
    sc.seed = 3;
    let solver = Solver::new(sc.clone()).unwrap();
    let mut snap = solver.initialize().unwrap();
    let tau = sc.viscosity.relaxation_time(&snap.macros[0]);
    let dt = tau / 200.0;
    let c0 = grid.conserved(&snap.f1_cell(0));
    let mut h_prev = h_functional(&snap, &grid, &sc.mesh);
    let (mut drift, mut increases) = (0.0f64, 0usize);
    let h0 = h_prev;
    for _ in 0..1000 {
        snap = solver.step(&snap, dt).unwrap();
        let c = grid.conserved(&snap.f1_cell(0));
        for k in 0..5 {
            drift = drift.max((c[k] - c0[k]).abs() / c0[0].abs().max(c0[4].abs()));
        }
        let h = h_functional(&snap, &grid, &sc.mesh);
        if h > h_prev {
            increases += 1;
        }
        h_prev = h;
    }
    let ok = verdict(
        11,
        "homogeneous BGK relaxation",
        drift < 1e-12 && increases == 0 && h_prev < h0,
        start.elapsed(),
        60.0,
        &format!("moment drift {drift:.2e}, H increases {increases} of 1000 steps, H {h0:.12} to {h_prev:.12}"),
    );
    assert!(ok);
}

#[test]
fn criterion_12_rarefaction_stability() {
    let _g = serial();
    let start = Instant::now();
    let mesh = Mesh::line(-60.0, 340.0, 200).unwrap();
    let grid = VelocityGrid::new(7.0, 16).unwrap();
    let delta = 0.2;
    let ends = EndStates::with_strength(minus_state(), delta).unwrap();
    let mut sc = Scenario::new(mesh, grid, ends);
    sc.collision = CollisionMode::Bgk;
    sc.perturbation = Perturbation {
        kind: PerturbationKind::Microscopic,
        amplitude: 1e-2,
        envelope: Envelope::Gaussian {
            center: 0.0,
            width: 10.0,
        },
    };
    sc.t_end = 200.0;
    sc.output_every = 10.0;
    let solver = Solver::new(sc).unwrap();
    let summary = solver.run(|_, _| Ok(()));
    let (detail, pass) = match summary {
        Ok(s) => {
            let at = |t: f64| s.rows.iter().find(|r| (r.t - t).abs() < 1e-9).map(|r| r.conv_metric);
            let (c20, c200) = (at(20.0).unwrap_or(f64::NAN), at(200.0).unwrap_or(f64::NAN));
            let ek0 = s.rows[0].ek;
            let bound = 2.0 * ek0 + delta.powf(2.0 / 3.0);
            let ek_max = s.rows.iter().map(|r| r.ek).fold(f64::NEG_INFINITY, f64::max);
            let clipped: usize = s.rows.iter().map(|r| r.clipped).max().unwrap_or(0);
            let pass = c200 < 0.5 * c20 && ek_max <= bound && s.rows.iter().all(|r| r.ek.is_finite());
            (
                format!(
                    "conv_metric(20) = {c20:.4e}, conv_metric(200) = {c200:.4e} (ratio {:.3}); max E_k {ek_max:.4e} vs bound {bound:.4e}; {} steps, clipped {clipped}",
                    c200 / c20,
                    s.steps
                ),
                pass,
            )
        }
        Err(e) => (format!("run aborted: {e}"), false),
    };
    let ok = verdict(12, "1-D rarefaction stability run", pass, start.elapsed(), 900.0, &detail);
    assert!(ok);
}

#[test]
fn criterion_13_vpb_neutral_run() {
    let _g = serial();
    let start = Instant::now();
    let mesh = Mesh::line(0.0, 20.0, 40).unwrap();
    let grid = VelocityGrid::new(7.0, 12).unwrap();
    let ends = EndStates::constant(minus_state()).unwrap();
    let mut sc = Scenario::new(mesh, grid, ends);
    sc.species = SpeciesMode::TwoSpecies;
    sc.kernel = KernelConfig::vpb_default();
    sc.perturbation = Perturbation {
        kind: PerturbationKind::Charge,
        amplitude: 0.01,
        envelope: Envelope::Cosine { mode: 1 },
    };
    sc.t_end = 20.0;
    sc.output_every = 1.0;
    let solver = Solver::new(sc).unwrap();
    let (run_detail, run_pass) = match solver.run(|_, _| Ok(())) {
        Ok(s) => {
            let (g0, g1) = (s.rows[0].grad_phi, s.rows.last().unwrap().grad_phi);
            (format!("‖∇φ‖ {g0:.4e} at t=0, {g1:.4e} at t={}", s.rows.last().unwrap().t), g1 < g0)
        }
        Err(e) => (format!("run aborted: {e}"), false),
    };
    let errs: Vec<f64> = [32, 64, 128, 256].iter().map(|n| manufactured_poisson_error(*n, 3.0).unwrap()).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let poisson_pass = orders.iter().all(|p| (p - 2.0).abs() <= 0.2);
    let ok = verdict(
        13,
        "VPB neutral run and Poisson order",
        run_pass && poisson_pass,
        start.elapsed(),
        900.0,
        &format!("{run_detail}; Poisson orders {orders:.3?}"),
    );
    assert!(ok);
}
