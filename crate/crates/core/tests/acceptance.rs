//! Acceptance criteria at desk scale. Prints one `PASS`/`FAIL` line per criterion and
//! exits non-zero if any fails. Tolerances and configurations are the pinned ones.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use sks_core::assembly::{convection_jacobian, convection_vector};
use sks_core::experiments::{
    exp_moment_stats, holder_quotients, kappa_threshold, localized_error, spatial_rate,
    stability_stats, temporal_rate, RateReport,
};
use sks_core::inequalities::{gronwall_suite, SamplerParams};
use sks_core::{l2_project, run, sample_path, ExperimentKind, Operators, RunConfig, SplineSpace};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    format!("error: {err}")
}

/// Criteria 1, 3 and 4 share one temporal sweep.
fn temporal(cfg: &RunConfig) -> Result<[Verdict; 3], String> {
    let out = temporal_rate(cfg).map_err(e)?;
    let sup = out.sup_rate(0.5).ok_or("missing sup rate")?;
    let boot = out.bootstrap_rate(0.5).ok_or("missing bootstrap rate")?;
    let h2 = out.h2_rate().ok_or("missing h2 rate")?;
    let c1 = check(
        (0.35..=0.65).contains(&sup.slope),
        format!(
            "slope {:.3} +- {:.3}, errors {:?}",
            sup.slope,
            sup.half_width,
            short(&sup.errors)
        ),
    );
    let c3 = check(
        h2.slope >= 0.35,
        format!("slope {:.3} +- {:.3}", h2.slope, h2.half_width),
    );
    let jensen = out
        .reports
        .iter()
        .all(|r| r.sup_4q[0] >= r.sup_2q[0] * (1.0 - 1e-15));
    let c4 = check(
        (0.35..=0.65).contains(&boot.slope) && jensen,
        format!(
            "slope {:.3} +- {:.3}, 4q >= 2q at every M: {jensen}",
            boot.slope, boot.half_width
        ),
    );
    Ok([c1, c3, c4])
}

fn short(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.3e}")).collect()
}

fn spatial() -> Verdict {
    let cfg = RunConfig::defaults(ExperimentKind::ConvergenceSpace);
    let out = spatial_rate(&cfg).map_err(e)?;
    let s = out.sup_rate(0.5).ok_or("missing rate")?.slope;
    let det = out
        .deterministic_control
        .as_ref()
        .and_then(|c| c.sup_rate(0.5))
        .ok_or("missing control")?
        .slope;
    check(
        s >= 1.7 && det >= 1.7,
        format!(
            "stochastic slope {s:.3}, deterministic slope {det:.3} (M = {}, mc = {})",
            cfg.steps, cfg.mc
        ),
    )
}

fn localized() -> Verdict {
    let cfg = RunConfig::defaults(ExperimentKind::Localized);
    let out = localized_error(&cfg, cfg.beta, cfg.c_e).map_err(e)?;
    let mut below = true;
    for rung in &out.rungs {
        let rep = &rung.report;
        let loc = rep.localized.as_ref().ok_or("missing localized norms")?;
        for i in 0..rep.q.len() {
            below &= loc.sup_2q[i] <= rep.sup_2q[i] && loc.sup_4q[i] <= rep.sup_4q[i];
        }
        below &= loc.h2 <= rep.h2;
    }
    let p: Vec<f64> = out.rungs.iter().map(|r| r.probability()).collect();
    let monotone = p.windows(2).all(|w| w[0] <= w[1]);
    let last = *p.last().unwrap();
    check(
        below && monotone && last >= 0.9,
        format!("P(Omega) along the ladder {p:?}, localized <= unlocalized: {below}"),
    )
}

fn stability() -> Verdict {
    let cfg = RunConfig::defaults(ExperimentKind::Stability);
    let rep = stability_stats(&cfg).map_err(e)?;
    let ratio = rep.energy_ratio();
    check(
        rep.finite() && (0.5..=2.0).contains(&ratio),
        format!(
            "E sup ||u||^(2,4,8) = {:?}, dissipation ratio (k/2 vs k) {ratio:.4}",
            short(&rep.rows[0].sup_moments)
        ),
    )
}

fn structural() -> Verdict {
    let mut worst = [0.0f64; 5];
    let mut spd = true;
    let mut ratios = Vec::new();
    for &n in &[8usize, 16, 32] {
        for &r in &[4usize, 5] {
            let space = SplineSpace::new(2.0 * PI, n, r).map_err(e)?;
            let ops = Operators::assemble(&space).map_err(e)?;
            for k in 0..101 {
                let x = 2.0 * PI * k as f64 / 101.0;
                let s: f64 = space.eval_basis(x, 0).iter().map(|p| p.1).sum();
                worst[0] = worst[0].max((s - 1.0).abs());
            }
            let c: Vec<f64> = (0..n).map(|i| ((i * 7 + 1) as f64).sin()).collect();
            let nc = convection_vector(&space, &c);
            let dot: f64 = c.iter().zip(&nc).map(|(a, b)| a * b).sum();
            let scale: f64 = nc.iter().map(|v| v.abs()).sum::<f64>();
            worst[1] = worst[1].max(dot.abs() / scale);
            spd &= cholesky_ok(&ops.mass.to_dense());
            let ones = vec![1.0; n];
            let kern = ops
                .bending
                .matvec(&ones)
                .iter()
                .chain(ops.gradient.matvec(&ones).iter())
                .fold(0.0f64, |m, v| m.max(v.abs()))
                / ops.bending.max_abs();
            worst[2] = worst[2].max(kern);
            let p = l2_project(&space, |x| (x.cos()).exp()).map_err(e)?;
            let pp = l2_project(&space, |x| space.function_eval(&p, x, 0)).map_err(e)?;
            worst[3] = worst[3].max(
                p.iter()
                    .zip(pp.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
            let d: Vec<f64> = (0..n).map(|i| ((i * 3 + 2) as f64).cos()).collect();
            let jd = convection_jacobian(&space, &c).matvec(&d);
            let fd = |eps: f64| {
                let s: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + eps * b).collect();
                let f = convection_vector(&space, &s);
                f.iter()
                    .zip(&nc)
                    .zip(&jd)
                    .map(|((a, b), j)| ((a - b) / eps - j).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            ratios.push(fd(1e-3) / fd(5e-4));
        }
    }
    let ratio_ok = ratios.iter().all(|r| (r - 2.0).abs() < 0.05);
    check(
        worst[0] <= 1e-12 && worst[1] <= 1e-10 && spd && worst[2] <= 1e-12 && worst[3] <= 1e-11 && ratio_ok,
        format!(
            "unity {:.1e}, skew {:.1e}, mass SPD {spd}, kernel {:.1e}, idempotence {:.1e}, FD ratios in [{:.3}, {:.3}]",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn cholesky_ok(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

fn projection_order() -> Verdict {
    let l = 2.0 * PI;
    let ns = [8usize, 16, 32, 64];
    let mut errs = Vec::new();
    for &n in &ns {
        let space = SplineSpace::new(l, n, 4).map_err(e)?;
        let f = |x: f64| (2.0 * PI * x / l).sin();
        let c = l2_project(&space, f).map_err(e)?;
        let m = 50 * n;
        let dx = l / m as f64;
        let s: f64 = (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                (f(x) - space.function_eval(&c, x, 0)).powi(2)
            })
            .sum();
        errs.push((s * dx).sqrt());
    }
    let h: Vec<f64> = ns.iter().map(|&n| l / n as f64).collect();
    let fit = RateReport::fit("projection", &h, &errs).map_err(e)?;
    check(
        (3.7..=4.3).contains(&fit.slope),
        format!("slope {:.3}", fit.slope),
    )
}

fn wiener() -> Verdict {
    let mut checks = 0usize;
    let mut worst = 0.0f64;
    let mut seed = 0;
    while checks < 10_000 {
        let p = sample_path(seed, 0.25, 10).map_err(e)?;
        for lvl in 1..=10u32 {
            let fine = p.increments_at(1 << lvl).map_err(e)?;
            let coarse = p.increments_at(1 << (lvl - 1)).map_err(e)?;
            for (i, c) in coarse.iter().enumerate() {
                worst = worst.max((c - fine[2 * i] - fine[2 * i + 1]).abs());
                checks += 1;
            }
        }
        seed += 1;
    }
    let path = sample_path(77, 1.0, 17).map_err(e)?;
    let inc = path
        .increments_at(100_000usize.next_power_of_two())
        .map_err(e)?;
    let sample = &inc[..100_000];
    let k = 1.0 / inc.len() as f64;
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (sample.len() - 1) as f64;
    check(
        worst <= 1e-12 && (var / k - 1.0).abs() <= 0.05,
        format!(
            "{checks} checks, max defect {worst:.1e}; variance / k = {:.4} at 1e5 samples",
            var / k
        ),
    )
}

fn gronwall() -> Verdict {
    let s = gronwall_suite(20240601, 1000, 64, &SamplerParams::default()).map_err(e)?;
    check(
        s.violations == 0,
        format!(
            "{} instances, {} violations, worst lhs/rhs {:.3}",
            s.instances, s.violations, s.worst_ratio
        ),
    )
}

fn exp_moment() -> Verdict {
    let cfg = RunConfig::defaults(ExperimentKind::ExpMoment);
    let kappa = kappa_threshold(&cfg).map_err(e)?.min(0.05);
    let rep = exp_moment_stats(&cfg, kappa).map_err(e)?;
    check(
        rep.finite() && rep.stable(),
        format!(
            "kappa {kappa:.5}: mean {:.5} +- {:.5} ({} paths), half-sample {:.5} +- {:.5}",
            rep.mean, rep.se, rep.samples, rep.half_mean, rep.half_se
        ),
    )
}

fn holder() -> Verdict {
    let cfg = RunConfig::defaults(ExperimentKind::Holder);
    let t = holder_quotients(&cfg).map_err(e)?;
    let s = t.summary(0, 1.0).ok_or("missing (m, q) = (0, 1)")?;
    check(
        s.spread() <= 4.0,
        format!(
            "quotient range [{:.3}, {:.3}] over gaps {:?}, spread {:.3}",
            s.min,
            s.max,
            cfg.holder_gaps,
            s.spread()
        ),
    )
}

fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().map_err(e)?;
    let mut same = true;
    let mut files = 0;
    for (kind, text) in [
        (
            ExperimentKind::Simulate,
            "[space]\nN = 32\n[scheme]\nM = 256\n",
        ),
        (
            ExperimentKind::ConvergenceTime,
            "[space]\nN = 16\n[scheme]\nM_list = 16, 32, 64\nM_ref = 512\n[run]\nmc = 8\n",
        ),
    ] {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{kind}-{rep}"));
            let overrides = vec![("out".to_string(), out.display().to_string())];
            let cfg = RunConfig::parse(Some(kind), text, &overrides).map_err(e)?;
            run(&cfg).map_err(e)?;
            outs.push(out);
        }
        for entry in fs::read_dir(&outs[0]).map_err(e)? {
            let name = entry.map_err(e)?.file_name();
            if name.to_string_lossy().ends_with(".csv") {
                files += 1;
                same &= fs::read(outs[0].join(&name)).map_err(e)?
                    == fs::read(outs[1].join(&name)).map_err(e)?;
            }
        }
    }
    check(
        same && files >= 3,
        format!("{files} CSV files compared byte for byte"),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let t0 = RunConfig::defaults(ExperimentKind::ConvergenceTime);
    match temporal(&t0) {
        Ok([c1, c3, c4]) => {
            results.push((1, "temporal strong rate (q = 1/2) in [0.35, 0.65]", c1));
            results.push((3, "H2 error rate >= 0.35", c3));
            results.push((
                4,
                "bootstrap 4q-moment rate in [0.35, 0.65] and >= 2q moment",
                c4,
            ));
        }
        Err(msg) => {
            for (i, name) in [
                (1, "temporal strong rate"),
                (3, "H2 error rate"),
                (4, "bootstrap moment rate"),
            ] {
                results.push((i, name, Err(msg.clone())));
            }
        }
    }
    results.push((
        2,
        "spatial L2 rate >= 1.7 (stochastic and deterministic)",
        spatial(),
    ));
    results.push((5, "localized errors and P(Omega) -> 1", localized()));
    results.push((
        6,
        "stability moments finite, dissipation stable under k/2",
        stability(),
    ));
    results.push((7, "structural invariants", structural()));
    results.push((8, "projection order in [3.7, 4.3]", projection_order()));
    results.push((9, "Wiener path consistency and variance", wiener()));
    results.push((
        10,
        "stochastic Gronwall: 1000 instances, no violations",
        gronwall(),
    ));
    results.push((
        11,
        "exponential moment finite and stable under doubling",
        exp_moment(),
    ));
    results.push((12, "Holder quotient spread <= 4 (m = 0, q = 1)", holder()));
    results.push((
        13,
        "byte-identical CSVs for identical config and seed",
        reproducibility(),
    ));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (i, name, verdict) in &results {
        match verdict {
            Ok(d) => println!("criterion {i:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {i:>2} FAIL  {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.0} s)",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
