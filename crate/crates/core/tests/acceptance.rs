//! Acceptance criteria. Every test prints one `PASS`/`FAIL` line.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

use workbench_core::config::RunConfig;
use workbench_core::dmft::{
    self_consistency_loop, self_consistency_loop_with, tail_deviation, DmftOptions, HubbardParams,
};
use workbench_core::laser::{run_metrics, sweep_energy, LaserConfig, TABLE3_ENERGIES};
use workbench_core::optimizer::{
    derive_seed, evolve, greedy_baseline, map_schedule, map_schedule_with, random_ising, random_table, reduce,
    scaling_experiment, select_gap, EvolveOptions, GapCandidate, Landscape, PipelineConfig, WorkingGap, TABLE4_SIZES,
};
use workbench_core::reproduce::{check_energy_sweep, reproduce, scaling_fit};
use workbench_core::tunneling::{barrier_height_bohr, transmission, TunnelBarrier};

fn verdict(name: &str, ok: bool, detail: impl AsRef<str>) {
    println!("{} {name}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(ok, "{name}: {}", detail.as_ref());
}

#[test]
fn tunnelling_worked_examples() {
    let cases = [(0.75, 0.5e-9, 1.52e-7), (1.5, 0.5e-9, 2.76e-7), (0.75, 1.0e-9, 2.30e-14), (1.5, 1.0e-9, 7.66e-14)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (e, l, published) in cases {
        let t = transmission(&TunnelBarrier::electron_ev(10.2, e, l)).unwrap().transmission;
        let rel = (t - published) / published;
        ok &= rel.abs() <= 0.05;
        detail.push(format!("E={e} L={l:e}: T={t:.3e} vs {published:.2e} ({:+.1}%)", rel * 100.0));
    }
    verdict("tunnelling transmissions within 5%", ok, detail.join("; "));
}

#[test]
fn barrier_height() {
    let e = barrier_height_bohr(1.0, 1, 2).unwrap();
    verdict("barrier height 10.2 eV", e == 10.2, format!("{e}"));
}

#[test]
fn laser_trends() {
    let cfg = LaserConfig::default();
    let rows = sweep_energy(&cfg, &TABLE3_ENERGIES).unwrap();
    let c = check_energy_sweep(&cfg, &rows);
    let ok = c.all_rows_ok
        && c.fwhm_non_increasing
        && c.width_140_in_band
        && c.plateau_ok
        && c.peak_increasing
        && c.energy_bound_ok;
    verdict(
        "laser trends over the input-energy set",
        ok,
        format!(
            "width(140uJ) {:.4} ns, plateau spread {:.4} ns, fwhm non-increasing {}, peak increasing {}, max out/Est {:.4}",
            c.width_140.unwrap_or(f64::NAN) * 1e9,
            c.plateau_spread * 1e9,
            c.fwhm_non_increasing,
            c.peak_increasing,
            c.worst_energy_ratio
        ),
    );
}

#[test]
fn euler_convergence() {
    let base = LaserConfig::default();
    let fine = LaserConfig { dt: base.dt / 2.0, steps: base.steps * 2, ..base };
    let a = run_metrics(&base).unwrap();
    let b = run_metrics(&fine).unwrap();
    let dw = ((b.fwhm_width - a.fwhm_width) / a.fwhm_width).abs();
    let dp = ((b.peak_power - a.peak_power) / a.peak_power).abs();
    verdict(
        "halving dt changes width and peak power by < 2%",
        dw < 0.02 && dp < 0.02,
        format!("width {:.4}%, peak power {:.4}%", dw * 100.0, dp * 100.0),
    );
}

/// Direct evaluation of `-sum J_ij s_i s_j` over every spin configuration.
fn ising_ground_energy(spec: &Landscape) -> f64 {
    let Landscape::Ising(s) = spec else { unreachable!() };
    let mut best = f64::INFINITY;
    for id in 0u64..(1 << s.sites) {
        let spin = |i: usize| if id >> i & 1 == 1 { -1.0 } else { 1.0 };
        let e: f64 = -s.couplings.iter().map(|&(i, j, v)| v * spin(i) * spin(j)).sum::<f64>();
        best = best.min(e);
    }
    best
}

#[test]
fn optimizer_matches_exhaustive_oracle() {
    let cfg = PipelineConfig { safety: 10.0, ..PipelineConfig::default() };
    let gap = select_gap(&cfg.gap_candidates, cfg.min_transition, cfg.min_stability).unwrap();
    let schedule = map_schedule_with(&gap, cfg.drive_energy, cfg.safety, cfg.steps_per_unit).unwrap();
    let barrier = cfg.barrier;
    let map = move |de: f64, w: f64| barrier.barrier(de, w);
    let opts = EvolveOptions { hill_climb_seeds: cfg.hill_climb_seeds, length_scale: barrier.length_scale };

    let mut matched = [0usize; 2];
    let mut dominated = [0usize; 2];
    for i in 0..100u64 {
        let seed = derive_seed(2024, 0, i);
        let n = 10 + (seed % 9_991) as usize;
        let land = random_table(n, seed);
        let Landscape::Table(ref v) = land else { unreachable!() };
        let oracle = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let model = reduce(&land).unwrap();
        let r = evolve(&model, &schedule, &map, seed, &opts).unwrap();
        matched[0] += usize::from(r.best_energy == oracle);
        dominated[0] += usize::from(r.best_energy <= greedy_baseline(&model, opts.hill_climb_seeds, seed).energy);

        let seed = derive_seed(2024, 1, i);
        let sites = 4 + (i % 13) as usize;
        let land = random_ising(sites, seed);
        let oracle = ising_ground_energy(&land);
        let model = reduce(&land).unwrap();
        let r = evolve(&model, &schedule, &map, seed, &opts).unwrap();
        matched[1] += usize::from((r.best_energy - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
        dominated[1] += usize::from(r.best_energy <= greedy_baseline(&model, opts.hill_climb_seeds, seed).energy);
    }
    verdict(
        "optimizer matches the exhaustive minimum in >= 95% and never loses to greedy",
        matched.iter().all(|&m| m >= 95) && dominated.iter().all(|&d| d == 100),
        format!(
            "tables {}/100 matched, {}/100 dominant; Ising {}/100 matched, {}/100 dominant",
            matched[0], dominated[0], matched[1], dominated[1]
        ),
    );
}

#[test]
fn scaling_shape() {
    let rows = scaling_experiment(&TABLE4_SIZES, 5, 42, &PipelineConfig::default()).unwrap();
    let (r2, bound) = scaling_fit(&rows);
    verdict(
        "comparisons grow like ln n and respect the bisection bound",
        r2 >= 0.95 && bound,
        format!("R^2 = {r2:.4}, bound held on every run: {bound}"),
    );
}

#[test]
fn schedule_law() {
    let mut runner = TestRunner::new(PropConfig { cases: 10_000, failure_persistence: None, ..PropConfig::default() });
    let result = runner.run(&(1e-6f64..1e3, 0.05f64..1e3, 1.0f64..10.0), |(e, g, safety)| {
        let wg = WorkingGap { candidates: vec![GapCandidate::new(g, 1.0, 1.0)], chosen: 0 };
        let s = map_schedule_with(&wg, e, safety, 1e-3).unwrap();
        prop_assert!(s.total_time * g * g >= e);
        Ok(())
    });
    verdict("tau * g^2 >= E over 10^4 random triples", result.is_ok(), format!("{result:?}"));
    // The default resolution also yields admissible schedules.
    let s =
        map_schedule(&WorkingGap { candidates: vec![GapCandidate::new(0.5, 1.0, 1.0)], chosen: 0 }, 1.0, 1.0).unwrap();
    assert!(s.is_admissible());
}

/// Semicircle Hilbert transform by midpoint quadrature in `e = D sin(theta)`.
fn semicircle_oracle(w: f64, d: f64, points: usize) -> Complex64 {
    let h = PI / points as f64;
    let z = Complex64::new(0.0, w);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let theta = -PI / 2.0 + (k as f64 + 0.5) * h;
        acc += (2.0 / PI) * theta.cos().powi(2) / (z - d * theta.sin());
    }
    acc * h
}

#[test]
fn dmft_analytic_limit() {
    let opts = DmftOptions { alpha: 1e-6, ..DmftOptions::default() };
    let free = self_consistency_loop(&HubbardParams::half_filled(1.0, 0.0, 16.0), &opts).unwrap();
    let err = (0..free.g_imp.len())
        .map(|n| (free.g_imp.values[n] - semicircle_oracle(free.g_imp.freq(n), 2.0, 1 << 20)).norm())
        .fold(0.0, f64::max);

    let mut every_iterate = true;
    let mut worst_tail: f64 = 0.0;
    let mut iterations = Vec::new();
    for u in [0.0, 1.0, 2.0] {
        let s = self_consistency_loop_with(&HubbardParams::half_filled(1.0, u, 16.0), &opts, |st| {
            let causal = st.g_imp.values.iter().all(|g| g.im < 0.0) && st.sigma.values.iter().all(|s| s.im <= 0.0);
            let tail = tail_deviation(&st.g_imp);
            worst_tail = worst_tail.max(tail);
            every_iterate &= causal && tail <= 1e-3;
        })
        .unwrap();
        every_iterate &= s.residual <= opts.alpha && s.residuals()[..s.iteration - 1].iter().all(|&r| r > opts.alpha);
        iterations.push(s.iteration);
    }
    let loose = DmftOptions { alpha: 1.0, ..opts };
    let once = self_consistency_loop(&HubbardParams::half_filled(1.0, 1.0, 16.0), &loose).unwrap();
    verdict(
        "DMFT free limit, causality, tail and loop guard",
        err <= 1e-8 && every_iterate && once.iteration == 1,
        format!(
            "U=0 max error {err:.2e}; worst tail deviation {worst_tail:.2e}; iterations {iterations:?}; loose alpha stops after {}",
            once.iteration
        ),
    );
}

fn csv_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reproducibility() {
    let root = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let cfg = RunConfig { output_dir: root.path().join(name), seed: 42, ..RunConfig::default() };
        reproduce(&cfg).unwrap();
        csv_tree(&cfg.output_dir)
    };
    let a = run("a");
    let b = run("b");
    let names: Vec<_> = a.iter().map(|(n, _)| n.as_str()).collect();
    verdict(
        "reproduce --seed 42 twice gives byte-identical CSV trees",
        a == b && a.len() >= 6,
        format!("{} files: {}", a.len(), names.join(", ")),
    );
}
