//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//! Tolerances are pinned here, independently of the ones carried inside reports.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use loopforge::algebra::AlgebraTag;
use loopforge::report::Report;
use loopforge::suites::{self, CompanionMap, Mode, VerifySettings};
use loopforge::variational::FlowConfig;

const SEED: u64 = 20240601;
const SAMPLES: usize = 1000;

const TOL_K: f64 = 1e-12;
const TOL_LAMBDA: f64 = 1e-10;
const TOL_PHI_BRACKET: f64 = 1e-10;
const TOL_AKIVIS_FD: f64 = 1e-5;
const TOL_BRACKET_FD: f64 = 1e-6;
const MIN_FD_ORDER: f64 = 1.9;
const TOL_STRUCTURE: f64 = 1e-8;
const TOL_ANCHOR: f64 = 1e-12;
const TOL_BIANCHI: f64 = 1e-8;
const TOL_GAUGE: f64 = 1e-7;
const TOL_CS_GAUGE: f64 = 1e-8;
const TOL_CS_VARIATION: f64 = 1e-5;
const TOL_FLOW_DIV: f64 = 1e-4;
const TOL_HAT_NORM: f64 = 1e-10;
const FLOW_ITERATIONS: usize = 5000;
const FLOW_GRID: usize = 32;
const BUDGET_EXACT: Duration = Duration::from_secs(30);
const BUDGET_FIELDS: Duration = Duration::from_secs(60);
const BUDGET_FLOW: Duration = Duration::from_secs(60);

struct Outcome {
    ok: bool,
    detail: String,
}

fn res(r: &Report, name: &str) -> f64 {
    r.get(name).map(|c| c.max_residual).unwrap_or(f64::INFINITY)
}

fn samples(r: &Report, name: &str) -> usize {
    r.get(name).map(|c| c.samples).unwrap_or(0)
}

fn flag(r: &Report, name: &str) -> bool {
    r.get(name).is_some_and(|c| c.passed)
}

fn value(r: &Report, key: &str) -> f64 {
    r.get_value(key).unwrap_or(f64::NAN)
}

fn le(x: f64, tol: f64) -> bool {
    x.is_finite() && x <= tol
}

fn verify(mode: Mode, fields: bool) -> loopforge::Result<(Report, Duration)> {
    let mut set = VerifySettings::new(AlgebraTag::O, mode, SEED);
    set.samples = SAMPLES;
    set.phi_points = 50;
    set.fields = fields;
    let t = Instant::now();
    let r = suites::verify(&set)?;
    Ok((r, t.elapsed()))
}

const EXACT_IDENTITIES: [&str; 16] = [
    "identity-element",
    "quasigroup-ldiv-mul",
    "quasigroup-mul-ldiv",
    "quasigroup-rdiv-mul",
    "quasigroup-mul-rdiv",
    "two-sided-inverse",
    "left-inverse-property",
    "right-inverse-property",
    "rdiv-is-inverse-product",
    "left-alternative",
    "right-alternative",
    "flexible",
    "left-bol",
    "right-bol",
    "moufang-middle",
    "power-associative",
];

fn c1(exact: &Report, took: Duration) -> Outcome {
    let bad: Vec<&str> =
        EXACT_IDENTITIES.iter().copied().filter(|n| res(exact, n) != 0.0 || samples(exact, n) < SAMPLES).collect();
    Outcome {
        ok: bad.is_empty() && took < BUDGET_EXACT,
        detail: format!("{} identities x {SAMPLES} rational samples, failing {bad:?}, {:.1}s", EXACT_IDENTITIES.len(), took.as_secs_f64()),
    }
}

fn c2(exact: &Report) -> loopforge::Result<Outcome> {
    let rep = suites::companions_run(AlgebraTag::O, CompanionMap::Identity, Mode::Exact, SEED)?;
    let dim = value(exact, "right-nucleus-dimension");
    let line = rep.nucleus.clone().unwrap_or_default();
    Ok(Outcome {
        ok: dim == 1.0 && flag(exact, "right-nucleus-dimension") && line.contains("{±1}") && line.contains("Z₂"),
        detail: format!("dim {dim}, {line}"),
    })
}

fn c3(exact: &Report) -> Outcome {
    let r = res(exact, "adq-companion-q3");
    Outcome { ok: r == 0.0 && samples(exact, "adq-companion-q3") >= SAMPLES, detail: format!("residual {r:e} on {} samples", samples(exact, "adq-companion-q3")) }
}

fn c4(exact: &Report, float: &Report) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, r) in [("exact", exact), ("float", float)] {
        let k = value(r, "k");
        let lam = res(r, "phi-lambda");
        let n = samples(r, "phi-lambda");
        let ker = flag(r, "phi-kernel-dimension");
        ok &= le((k + 0.25).abs(), TOL_K) && le(res(r, "phi-k"), TOL_K) && le(lam, TOL_LAMBDA) && n >= 50 && ker;
        ok &= (value(r, "lambda") - 0.375).abs() <= TOL_LAMBDA;
        parts.push(format!("{label}: k {k}, |λ-3/8| {lam:e} at {n} points, dim ker φ = 14 {ker}"));
    }
    Outcome { ok, detail: parts.join("; ") }
}

fn c5(exact: &Report, float: &Report) -> Outcome {
    let (e, f) = (res(exact, "phi-bracket-ratio"), res(float, "phi-bracket-ratio"));
    Outcome {
        ok: le(e, TOL_PHI_BRACKET) && le(f, TOL_PHI_BRACKET) && samples(float, "phi-bracket-ratio") == 49,
        detail: format!("3k³ ratio residual exact {e:e}, float {f:e} over 7x7 basis pairs"),
    }
}

fn c6(exact: &Report) -> Outcome {
    let ak = res(exact, "akivis");
    let ml = res(exact, "malcev");
    let fd = res(exact, "akivis-fd");
    let ks = res(exact, "killing-form-scalar");
    let scale = value(exact, "killing-scale");
    let neg = flag(exact, "killing-negative-definite");
    Outcome {
        ok: ak == 0.0 && ml == 0.0 && le(fd, TOL_AKIVIS_FD) && ks == 0.0 && scale == 24.0 && neg,
        detail: format!("Akivis exact {ak:e}, FD {fd:e}; Malcev {ml:e}; K = -{scale}δ residual {ks:e}, negative-definite {neg}"),
    }
}

fn c7(float: &Report) -> Outcome {
    let e = res(float, "bracket-fd");
    let p = value(float, "bracket-fd-order");
    Outcome { ok: le(e, TOL_BRACKET_FD) && p >= MIN_FD_ORDER, detail: format!("max error {e:e}, observed order {p:.2}") }
}

fn c8(o: &Report, c: &Report, took: Duration) -> Outcome {
    let s = res(o, "structure-equation");
    let n = samples(o, "structure-equation");
    let anchor = res(c, "abelian-anchor");
    Outcome {
        ok: le(s, TOL_STRUCTURE) && n == 125 && le(anchor, TOL_ANCHOR) && took < BUDGET_FIELDS,
        detail: format!("residual {s:e} on {n} points of T³, U(1) |F̂-dT| {anchor:e}, {:.1}s", took.as_secs_f64()),
    }
}

fn c9(o: &Report) -> Outcome {
    let b = res(o, "bianchi");
    Outcome { ok: le(b, TOL_BIANCHI) && samples(o, "bianchi") == 125, detail: format!("residual {b:e}") }
}

fn c10(o: &Report, cs: &suites::CsReport) -> Outcome {
    let t = res(o, "torsion-gauge-equivariance");
    let f = res(o, "fhat-gauge-equivariance");
    let g = res(&cs.functional.checks, "cs-gauge-invariance");
    Outcome {
        ok: le(t, TOL_GAUGE) && le(f, TOL_GAUGE) && le(g, TOL_CS_GAUGE),
        detail: format!("torsion {t:e}, F̂ {f:e}, CS relative {g:e}"),
    }
}

fn c11(cs: &suites::CsReport) -> Outcome {
    let r = res(&cs.functional.checks, "cs-first-variation");
    let num = value(&cs.functional.checks, "cs-first-variation-numeric");
    let pred = value(&cs.functional.checks, "cs-first-variation-predicted");
    Outcome { ok: le(r, TOL_CS_VARIATION), detail: format!("numeric {num:.9}, 2∫⟨ξ,F̂⟩ {pred:.9}, relative {r:e}") }
}

fn c12() -> loopforge::Result<Outcome> {
    let t = Instant::now();
    let (ctx, st) = suites::flow_state(AlgebraTag::H, 2, FLOW_GRID, 1, false)?;
    let cfg = FlowConfig { max_iterations: FLOW_ITERATIONS, tol: TOL_FLOW_DIV, ..FlowConfig::default() };
    let (rep, _) = suites::flow_run(&ctx, st, &cfg)?;
    let took = t.elapsed();
    Ok(Outcome {
        ok: rep.converged
            && rep.final_div_max < TOL_FLOW_DIV
            && rep.iterations <= FLOW_ITERATIONS
            && rep.monotone
            && le(rep.hat_norm_residual, TOL_HAT_NORM)
            && took < BUDGET_FLOW,
        detail: format!(
            "{} iterations, ‖div‖∞ {:e}, energy {:.6} -> {:.6e} monotone {}, |ω̂|² residual {:e}, {:.1}s",
            rep.iterations,
            rep.final_div_max,
            rep.initial_energy,
            rep.final_energy,
            rep.monotone,
            rep.hat_norm_residual,
            took.as_secs_f64()
        ),
    })
}

fn cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_loopforge"))
        .args(args)
        .env("LOOPFORGE_THREADS", threads)
        .output()
        .expect("run loopforge");
    assert!(out.status.success(), "loopforge {args:?} exited {:?}", out.status.code());
    out.stdout
}

fn c13() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["verify", "--algebra", "H", "--mode", "float", "--seed", "11"],
        &["torsion", "--algebra", "O", "--seed", "11"],
        &["flow", "--algebra", "H", "--seed", "11", "--set", "flow.grid=12"],
    ];
    let mut bad = Vec::new();
    for args in runs {
        let a = cli(args, "1");
        let b = cli(args, "1");
        let c = cli(args, "4");
        if a != b || a != c || a.is_empty() {
            bad.push(args[0]);
        }
    }
    Outcome { ok: bad.is_empty(), detail: format!("verify, torsion, flow repeated at 1 and 4 threads; differing {bad:?}") }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut line = |n: usize, what: &str, o: loopforge::Result<Outcome>| {
        let o = o.unwrap_or_else(|e| Outcome { ok: false, detail: format!("error: {e}") });
        all &= o.ok;
        println!("{} [{n:>2}] {what}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    };

    let exact = verify(Mode::Exact, false);
    let float = verify(Mode::Float, false);
    let (exact, took) = match exact {
        Ok(x) => x,
        Err(e) => {
            println!("FAIL [ 1] exact verify: {e}");
            return ExitCode::FAILURE;
        }
    };
    let float = match float {
        Ok((r, _)) => r,
        Err(e) => {
            println!("FAIL [ 4] float verify: {e}");
            return ExitCode::FAILURE;
        }
    };
    line(1, "exact loop identities", Ok(c1(&exact, took)));
    line(2, "right nucleus", c2(&exact));
    line(3, "Moufang companion", Ok(c3(&exact)));
    line(4, "tangent constants", Ok(c4(&exact, &float)));
    line(5, "phi-bracket proportionality", Ok(c5(&exact, &float)));
    line(6, "Akivis, Malcev, Killing", Ok(c6(&exact)));
    line(7, "bracket oracle", Ok(c7(&float)));

    let t = Instant::now();
    let fields = suites::field_suite(AlgebraTag::O, SEED, 5);
    let took = t.elapsed();
    let anchor = suites::field_suite(AlgebraTag::C, SEED, 5);
    let cs = suites::cs_run(AlgebraTag::O, SEED, 12);
    match (&fields, &anchor) {
        (Ok(o), Ok(c)) => {
            line(8, "structure equation", Ok(c8(o, c, took)));
            line(9, "Bianchi identity", Ok(c9(o)));
        }
        (Err(e), _) | (_, Err(e)) => {
            line(8, "structure equation", Err(e.clone()));
            line(9, "Bianchi identity", Err(e.clone()));
        }
    }
    match (&fields, &cs) {
        (Ok(o), Ok(cs)) => line(10, "gauge equivariance", Ok(c10(o, cs))),
        (Err(e), _) | (_, Err(e)) => line(10, "gauge equivariance", Err(e.clone())),
    }
    line(11, "CS first variation", cs.map(|cs| c11(&cs)));
    line(12, "energy flow", c12());
    line(13, "determinism", Ok(c13()));

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
