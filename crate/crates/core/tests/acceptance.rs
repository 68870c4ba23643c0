//! Acceptance suite. One test per criterion; each writes a single
//! `criterion N name: PASS|FAIL (...)` line to stdout, bypassing the test
//! harness capture so the lines appear in every run. The tests hold a shared
//! lock so the timed ones are not slowed by their neighbours.

use std::io::Write;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

use cattaneo_core::audit::{coleman_noll_audit, names, sample_rotations, sample_states, AuditConfig, AuditReport};
use cattaneo_core::engine::{cauchy_from_first_piola, expected_cauchy_skew, first_piola_from_cauchy, EntropySample};
use cattaneo_core::fourier::{fourier_audit, fourier_from_cattaneo};
use cattaneo_core::kinematics::{pull_heat_flux, push_covector, push_heat_flux, spatial_density};
use cattaneo_core::material::{IsotropicParams, PresetMaterial};
use cattaneo_core::sim::{
    l2_distance, l2_norm, write_snapshots_csv, ElectricBc, Mode, Profile, RunOutput, Scenario, Simulation, Support,
};
use cattaneo_core::{CattaneoEngine, MaterialModel, ReferentialState, Vec3};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {n:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    writeln!(std::io::stdout().lock(), "{line}").unwrap();
    assert!(pass, "{line}");
}

fn isotropic() -> PresetMaterial {
    PresetMaterial::isotropic(IsotropicParams::default()).unwrap()
}

fn theta_dependent() -> PresetMaterial {
    PresetMaterial::theta_dependent(IsotropicParams::default()).unwrap()
}

fn residual(r: &AuditReport, name: &str) -> (f64, bool) {
    let c = r.check(name).unwrap_or_else(|| panic!("missing check {name}"));
    (c.residual, c.pass)
}

fn run(sc: Scenario, m: Arc<dyn MaterialModel>) -> RunOutput {
    Simulation::new(sc, m).unwrap().run().unwrap()
}

#[test]
fn criterion_01_gradient_suite() {
    let _g = serial();
    let start = Instant::now();
    let cfg = AuditConfig { samples: 100, dissipation_samples: 1, seed: 1, ..AuditConfig::default() };
    let mut pass = true;
    let mut detail = Vec::new();
    for m in [isotropic(), theta_dependent()] {
        let r = coleman_noll_audit(&m, &cfg).unwrap();
        let mut worst = 0.0_f64;
        for name in [names::ENTROPY_GRADIENT, names::STRESS_GRADIENT, names::POLARIZATION_GRADIENT] {
            let (res, ok) = residual(&r, name);
            worst = worst.max(res);
            pass &= ok && res <= 1e-5;
        }
        let (g_res, g_ok) = residual(&r, names::GRADIENT_INDEPENDENCE);
        pass &= g_ok && g_res <= 1e-12;
        detail.push(format!("{}: gradient {worst:.1e}, G-independence {g_res:.1e}", m.name()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 5.0;
    verdict(1, "coleman_noll_gradients", pass, format!("{}; {secs:.2} s", detail.join("; ")));
}

#[test]
fn criterion_02_reduced_dissipation() {
    let _g = serial();
    let start = Instant::now();
    let cfg = AuditConfig { samples: 10, dissipation_samples: 10_000, seed: 2, ..AuditConfig::default() };
    let admissible = coleman_noll_audit(&isotropic(), &cfg).unwrap();
    let (slack, ok) = residual(&admissible, names::REDUCED_DISSIPATION);
    let skew = PresetMaterial::nonsymmetric_relaxation(IsotropicParams::default(), 0.5).unwrap();
    let r_skew = coleman_noll_audit(&skew, &cfg).unwrap();
    let indefinite = PresetMaterial::orthotropic(IsotropicParams::default(), [1.0, 1.0, -1.0], [1.0; 3]).unwrap();
    let r_indef = coleman_noll_audit(&indefinite, &cfg).unwrap();
    let skew_caught = !residual(&r_skew, names::REDUCED_DISSIPATION).1 && !residual(&r_skew, names::RELAXATION_SYMMETRY).1;
    let indef_caught = !residual(&r_indef, names::REDUCED_DISSIPATION).1 && !residual(&r_indef, names::CONDUCTIVITY_PD).1;
    let secs = start.elapsed().as_secs_f64();
    let pass = ok && slack <= 1e-12 && skew_caught && indef_caught && secs < 10.0;
    verdict(
        2,
        "reduced_dissipation",
        pass,
        format!(
            "max slack {slack:.1e} over 10000 states; skew Z caught {skew_caught}, indefinite K caught {indef_caught}; {secs:.2} s"
        ),
    );
}

#[test]
fn criterion_03_a_identity() {
    let _g = serial();
    let cfg = AuditConfig { samples: 100, dissipation_samples: 1, seed: 3, ..AuditConfig::default() };
    let r = coleman_noll_audit(&theta_dependent(), &cfg).unwrap();
    let (res, ok) = residual(&r, names::A_IDENTITY);
    verdict(3, "a_identity", ok && res <= 1e-6, format!("max residual {res:.2e} on 100 states"));
}

#[test]
fn criterion_04_equilibrium() {
    let _g = serial();
    let models: Vec<Arc<dyn MaterialModel>> = vec![
        Arc::new(isotropic()),
        Arc::new(theta_dependent()),
        Arc::new(PresetMaterial::orthotropic(IsotropicParams::default(), [1.0, 2.0, 0.5], [0.3, 1.0, 2.0]).unwrap()),
    ];
    let mut worst_rate = 0.0_f64;
    let mut worst_flux = 0.0_f64;
    for m in &models {
        let engine = CattaneoEngine::new(m.as_ref());
        let fm = fourier_from_cattaneo(Arc::clone(m));
        for s in sample_states(4, 0, 200, 1.0) {
            let eq = s.equilibrium();
            worst_rate = worst_rate.max(engine.heat_flux_rate(&eq).unwrap().norm_max());
            worst_flux = worst_flux.max(fm.heat_flux(&s.with_g(Vec3::ZERO)).unwrap().norm_max());
        }
    }
    verdict(
        4,
        "equilibrium_flux",
        worst_rate == 0.0 && worst_flux == 0.0,
        format!("max |Q_dot(Q=0,G=0)| = {worst_rate:e}, max |q_fn(G=0)| = {worst_flux:e}"),
    );
}

#[test]
fn criterion_05_frame_round_trips() {
    let _g = serial();
    let m = isotropic();
    let engine = CattaneoEngine::new(&m);
    let mut stress = 0.0_f64;
    let mut flux = 0.0_f64;
    let mut skew = 0.0_f64;
    for s in sample_states(5, 0, 1000, 1.0) {
        let big_s = engine.stress(&s).unwrap();
        let pi = engine.polarization(&s).unwrap();
        let rho = spatial_density(m.reference_density(), s.f.det()).unwrap();
        let p = s.f * pi * rho;
        let e_m = push_covector(&s.f, s.w).unwrap();
        let tau = cauchy_from_first_piola(&s.f, &big_s, &p, &e_m);
        let back = first_piola_from_cauchy(&s.f, &tau, &p, &e_m).unwrap();
        stress = stress.max((back - big_s).norm_max() / big_s.norm_max().max(1.0));
        let q = push_heat_flux(&s.f, s.q).unwrap();
        let q_back = pull_heat_flux(&s.f, q).unwrap();
        flux = flux.max((q_back - s.q).norm_max() / s.q.norm_max().max(1.0));
        let tau_engine = engine.cauchy_stress(&s).unwrap();
        skew = skew.max((tau_engine.skew() - expected_cauchy_skew(&p, &e_m)).norm_max());
    }
    let pass = stress <= 1e-12 && flux <= 1e-12 && skew <= 1e-10;
    verdict(5, "frame_round_trips", pass, format!("S<->tau {stress:.1e}, Q<->q {flux:.1e}, skew(tau) {skew:.1e}; 1000 states"));
}

#[test]
fn criterion_06_objectivity() {
    let _g = serial();
    let m = isotropic();
    let engine = CattaneoEngine::new(&m);
    let rotations = sample_rotations(6, 2, 100);
    let mut psi = 0.0_f64;
    let mut tau = 0.0_f64;
    for s in sample_states(6, 0, 20, 1.0) {
        let r = engine.objectivity_check(&s, &rotations).unwrap();
        psi = psi.max(r.psi);
        tau = tau.max(r.tau);
    }
    verdict(
        6,
        "objectivity",
        psi <= 1e-12 && tau <= 1e-10,
        format!("psi {psi:.1e}, tau {tau:.1e} over 100 rotations x 20 states"),
    );
}

fn second_sound_scenario(cells: usize) -> Scenario {
    let mut sc = Scenario::new(
        1.0,
        cells,
        0.5,
        Profile::CosineBump { base: 1.0, amplitude: 0.01, center: 0.25, half_width: 0.05 },
    );
    sc.mechanics.frozen = true;
    sc.output_stride = 0;
    sc
}

#[test]
fn criterion_07_second_sound() {
    let _g = serial();
    let p = IsotropicParams { kappa: 1.0, c_v: 1.0, tau: 1.0, rho_r: 1.0, ..IsotropicParams::default() };
    let oracle = (p.kappa / (p.rho_r * p.c_v * p.tau)).sqrt();
    let start = Instant::now();
    let out = run(second_sound_scenario(2000), Arc::new(PresetMaterial::isotropic(p).unwrap()));
    let secs = start.elapsed().as_secs_f64();
    let speed = out.report.front_speed.unwrap_or(f64::NAN);
    let err = (speed - oracle).abs() / oracle;
    verdict(
        7,
        "second_sound",
        err <= 0.05 && secs < 30.0,
        format!("front speed {speed:.5} vs {oracle}, error {:.2}%; N = 2000, {secs:.1} s", 100.0 * err),
    );
}

#[test]
fn criterion_08_fourier_collapse() {
    let _g = serial();
    let (n, tau0) = (200, 0.04);
    let scenario = |mode| {
        let mut sc =
            Scenario::new(1.0, n, 0.25, Profile::Gaussian { base: 1.0, amplitude: 0.01, center: 0.5, width: 0.1 });
        sc.mechanics.frozen = true;
        sc.output_stride = 0;
        sc.mode = mode;
        sc
    };
    let model = |tau| -> Arc<dyn MaterialModel> {
        Arc::new(PresetMaterial::isotropic(IsotropicParams { kappa: 0.01, tau, ..IsotropicParams::default() }).unwrap())
    };
    let dx = 1.0 / n as f64;
    let fourier = run(scenario(Mode::Fourier), model(tau0));
    let reference = &fourier.last().theta;
    let norm = l2_norm(reference, 1.0, dx);
    let distances: Vec<f64> = [1.0, 0.25, 1.0 / 16.0, 1.0 / 64.0]
        .iter()
        .map(|k| l2_distance(&run(scenario(Mode::Cattaneo), model(tau0 * k)).last().theta, reference, dx))
        .collect();
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    let final_rel = distances[3] / norm;
    let series: Vec<String> = distances.iter().map(|d| format!("{:.2e}", d / norm)).collect();
    verdict(
        8,
        "fourier_collapse",
        monotone && final_rel <= 0.02,
        format!("relative L2 distances [{}], monotone {monotone}", series.join(", ")),
    );
}

fn coupled_demo(model: Arc<dyn MaterialModel>) -> RunOutput {
    let mut sc = Scenario::new(
        1.0,
        200,
        1.0,
        Profile::CosineBump { base: 1.0, amplitude: 0.02, center: 0.5, half_width: 0.15 },
    );
    sc.mechanics.left = Support::Free;
    sc.mechanics.right = Support::Free;
    sc.electric = Some(ElectricBc { phi_left: 1.0, phi_right: 0.0 });
    // The residual negative production is RK3 truncation error that falls
    // off roughly like dt⁶; with κ(θ) it is −2.9e-12 at cfl 0.5, −5e-14 at 0.25.
    sc.cfl = 0.25;
    sc.output_stride = 0;
    run(sc, model)
}

#[test]
fn criterion_09_entropy_production() {
    let _g = serial();
    let p = IsotropicParams { beta: 0.5, chi: 0.2, ..IsotropicParams::default() };
    let mut pass = true;
    let mut detail = Vec::new();
    let models: Vec<Arc<dyn MaterialModel>> =
        vec![Arc::new(PresetMaterial::isotropic(p).unwrap()), Arc::new(PresetMaterial::theta_dependent(p).unwrap())];
    for m in models {
        let out = coupled_demo(Arc::clone(&m));
        let min = out.report.min_entropy_production;
        pass &= min >= -1e-12;
        detail.push(format!("{}: min {min:.2e} over {} steps x 200 cells", m.name(), out.report.steps));
    }
    verdict(9, "entropy_production", pass, detail.join("; "));
}

/// Homogeneous relaxation at rest: `Q(t) = Q₀e^{−t/τ}` and `θ(t)` from
/// `ε(θ, Q(t)) = ε(θ₀, Q₀)`.
fn relaxed(engine: &CattaneoEngine<'_>, s0: &ReferentialState, tau: f64, t: f64) -> ReferentialState {
    let eps0 = engine.internal_energy(s0).unwrap();
    let mut s = s0.with_q(s0.q * (-t / tau).exp());
    for _ in 0..50 {
        let r = engine.internal_energy(&s).unwrap() - eps0;
        if r.abs() < 1e-15 {
            break;
        }
        s.theta -= r / engine.energy_partials(&s).unwrap().d_theta;
    }
    s
}

#[test]
fn criterion_10_internal_dissipation() {
    let _g = serial();
    // Fourier side: δ₀ vanishes in the audit and in a simulation.
    let fm = fourier_from_cattaneo(Arc::new(isotropic()));
    let cfg = AuditConfig { samples: 100, dissipation_samples: 100, seed: 10, ..AuditConfig::default() };
    let (audit_delta0, audit_ok) = residual(&fourier_audit(&fm, &cfg).unwrap(), names::INTERNAL_DISSIPATION_ZERO);
    let mut sc = second_sound_scenario(200);
    sc.mode = Mode::Fourier;
    sc.t_end = 0.05;
    let sim_delta0 = run(sc, Arc::new(isotropic())).report.max_internal_dissipation;
    let fourier_ok = audit_ok && audit_delta0 == 0.0 && sim_delta0 == 0.0;

    // Cattaneo side: entropy balance residual along an exact relaxation path.
    let p = IsotropicParams { tau: 0.5, ..IsotropicParams::default() };
    let m = PresetMaterial::isotropic(p).unwrap();
    let engine = CattaneoEngine::new(&m);
    let s0 = ReferentialState { theta: 1.1, q: Vec3::new(0.4, -0.2, 0.1), ..ReferentialState::reference(1.0) };
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];
    let residuals: Vec<f64> = steps
        .iter()
        .map(|&dt| {
            let sample = EntropySample {
                at: s0,
                at_next: relaxed(&engine, &s0, p.tau, dt),
                dt,
                r: 0.0,
                div_q: 0.0,
                rho: m.reference_density(),
            };
            engine.entropy_balance_residual(&sample).unwrap()
        })
        .collect();
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let first_order = orders.iter().all(|o| (0.9..=1.1).contains(o));
    let series: Vec<String> = residuals.iter().map(|r| format!("{r:.2e}")).collect();
    let order_txt: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
    verdict(
        10,
        "internal_dissipation",
        fourier_ok && first_order,
        format!(
            "fourier delta0 audit {audit_delta0:e} sim {sim_delta0:e}; cattaneo residuals [{}] orders [{}]",
            series.join(", "),
            order_txt.join(", ")
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    let _g = serial();
    let cfg = AuditConfig { samples: 50, dissipation_samples: 500, seed: 11, ..AuditConfig::default() };
    let audit = || coleman_noll_audit(&isotropic(), &cfg).unwrap().to_json().unwrap();
    let audit_same = audit() == audit();
    let simulate = || {
        let mut sc = second_sound_scenario(100);
        sc.t_end = 0.2;
        sc.output_stride = 10;
        let out = run(sc, Arc::new(isotropic()));
        let mut csv = Vec::new();
        write_snapshots_csv(&mut csv, &out.snapshots).unwrap();
        (csv, serde_json::to_string(&out.report).unwrap())
    };
    let sim_same = simulate() == simulate();
    verdict(
        11,
        "determinism",
        audit_same && sim_same,
        format!("audit JSON identical {audit_same}, snapshot CSV and run report identical {sim_same}"),
    );
}
