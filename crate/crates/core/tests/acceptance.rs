//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use kondratiev::curve::{ClosedCurve, CircleCurve};
use kondratiev::diagnostics::{corner_ball_width, finite_width_estimate, MetricGraph};
use kondratiev::fem::{solve_dirichlet, weighted_eigen_min, FemSolution};
use kondratiev::geometry::{construct_rounded_domain, select_default_params, select_params_with_rho, Polygon, RoundedDomain, RoundingParams};
use kondratiev::harness::{run_sweep, ExperimentConfig, PolygonSpec, ResultTable, SourcePreset};
use kondratiev::mesh::{mesh_domain, unit_square, Mesh, SizingField};
use kondratiev::norms::{kondratiev_norm, shift_interval, sobolev_norm, SampledField};
use kondratiev::weights::{admissibility_grid, conformal_curvature, curvature_profile, geodesic_length};
use kondratiev::{Vec2, WeightFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FAMILY: [u32; 5] = [1, 2, 4, 8, 16];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// Least-squares slope of `log err` against `log h`.
fn slope(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ")
}

fn sine_source(x: Vec2) -> f64 {
    -2.0 * PI * PI * (PI * x.x).sin() * (PI * x.y).sin()
}

fn sine_exact(x: Vec2) -> f64 {
    (PI * x.x).sin() * (PI * x.y).sin()
}

fn lshape() -> Polygon {
    Polygon::preset("lshape").expect("preset")
}

fn square() -> Polygon {
    Polygon::preset("square").expect("preset")
}

/// Rounding parameters with `rho = R/4`, so every arc lies where `r` is the
/// distance to its puncture.
fn cone_zone_params(polygon: &Polygon) -> RoundingParams {
    select_params_with_rho(polygon, polygon.separation_radius() / 4.0).expect("params")
}

fn member(polygon: &Polygon, params: &RoundingParams, n: u32) -> (RoundedDomain, WeightFunction) {
    let d = construct_rounded_domain(polygon, &params.at(n)).expect("domain");
    let w = WeightFunction::for_domain(&d);
    (d, w)
}

fn conformal_mesh(domain: &RoundedDomain, w: &WeightFunction, beta: f64, h_max: f64) -> Mesh {
    mesh_domain(domain, &SizingField::conformal(w.clone(), beta, 1e-5, h_max).expect("sizing")).expect("mesh")
}

fn criterion_1() -> Outcome {
    let divisions = [8usize, 16, 32, 64];
    let h: Vec<f64> = divisions.iter().map(|&m| 1.0 / m as f64).collect();
    let errors = |order: u8| -> Vec<f64> {
        divisions
            .iter()
            .map(|&m| {
                let mesh = if order == 2 { unit_square(m).elevate() } else { unit_square(m) };
                let (u, _) = solve_dirichlet(Arc::new(mesh), &sine_source, None).expect("solve");
                u.l2_error(&sine_exact).expect("error")
            })
            .collect()
    };
    let (e1, e2) = (errors(1), errors(2));
    let (s1, s2) = (slope(&h, &e1), slope(&h, &e2));
    outcome(
        (s1 - 2.0).abs() <= 0.15 && s2 >= 2.7,
        format!("P1 slope {s1:.3} (target 2 ± 0.15), P2 slope {s2:.3} (target ≥ 2.7); P1 errors {}, P2 errors {}", sci(&e1), sci(&e2)),
    )
}

fn criterion_2() -> Outcome {
    let mesh = unit_square(32).elevate();
    let eig = weighted_eigen_min(&mesh, &WeightFunction::constant(1.0), 1e-10).expect("eigen");
    let exact = 2.0 * PI * PI;
    let rel = (eig.lambda - exact).abs() / exact;
    outcome(rel < 0.01, format!("λ_min {:.6} vs 2π² = {exact:.6}, relative error {rel:.2e} (target < 1e-2)", eig.lambda))
}

fn criterion_3() -> Outcome {
    let sq = square();
    let (d, w) = member(&sq, &select_default_params(&sq).expect("params"), 1);
    let p = d.punctures()[0];
    let big_r = sq.separation_radius();
    let rho = big_r / 10.0;
    let circle = geodesic_length(|t| (p + Vec2::new(t.cos(), t.sin()) * rho, Vec2::new(-t.sin(), t.cos()) * rho), 0.0, TAU, &w).expect("circle");
    let dir = Vec2::new(0.6, 0.8);
    let (a, b) = (big_r / 100.0, big_r / 10.0);
    let radial = geodesic_length(|t| (p + dir * t, dir), a, b, &w).expect("radial");
    let curve = CircleCurve::new(p, rho);
    let kappa = (0..32)
        .map(|k| conformal_curvature(&curve, curve.length() * k as f64 / 32.0, &w).expect("curvature").abs())
        .fold(0.0, f64::max);
    let (e_circle, e_radial) = ((circle - TAU).abs() / TAU, (radial - (b / a).ln()).abs() / (b / a).ln());
    outcome(
        e_circle < 1e-3 && e_radial < 1e-3 && kappa < 1e-6,
        format!("circle length {circle:.8} (rel err {e_circle:.1e}), radial length {radial:.8} vs ln 10 (rel err {e_radial:.1e}), max |κ| {kappa:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let sq = square();
    let params = cone_zone_params(&sq);
    let arcs: Vec<usize> = (0..sq.len()).map(|j| 2 * j).collect();
    let sups: Vec<Vec<f64>> = [1u32, 2, 4, 8]
        .iter()
        .map(|&n| {
            let (d, w) = member(&sq, &params, n);
            (0..=2).map(|k| curvature_profile(&d, &w, k, 24, Some(&arcs)).expect("profile").sup).collect()
        })
        .collect();
    let curvature_dev = (0..=2)
        .map(|k| {
            let base = sups[0][k];
            sups.iter().map(|s| (s[k] - base).abs() / base.abs().max(1e-300)).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let big_r = sq.separation_radius();
    let mut path_dev = 0.0f64;
    let mut pairs = Vec::new();
    for n in [2u32, 4, 8] {
        let (d, w) = member(&sq, &params, n);
        let (d2, w2) = member(&sq, &params, 2 * n);
        let g = MetricGraph::new(&conformal_mesh(&d, &w, 0.2, 0.1), &w, 5).expect("graph");
        let g2 = MetricGraph::new(&conformal_mesh(&d2, &w2, 0.2, 0.1), &w2, 5).expect("graph");
        for j in 0..sq.len() {
            let vertex = sq.vertex(j as isize);
            let pj = d.punctures()[j];
            let inward = (vertex - pj).normalize();
            let rot = |v: Vec2, t: f64| Vec2::new(v.x * t.cos() - v.y * t.sin(), v.x * t.sin() + v.y * t.cos());
            let x = pj + rot(inward, 0.25) * (0.12 * big_r);
            let y = pj + rot(inward, -0.25) * (0.1 * big_r);
            let half = |z: Vec2| vertex + (z - vertex) * 0.5;
            let dxy = g.distance_between(&w, x, y).expect("distance");
            let dh = g2.distance_between(&w2, half(x), half(y)).expect("distance");
            path_dev = path_dev.max((dxy - dh).abs() / dxy);
            if j == 0 {
                pairs.push(format!("n={n}: {dxy:.4} vs {dh:.4}"));
            }
        }
    }
    // Straight line in log-polar coordinates around the puncture.
    let cone = ((0.12f64 / 0.1).ln().powi(2) + 0.25).sqrt();
    outcome(
        curvature_dev <= 1e-8 && path_dev <= 0.02,
        format!(
            "arc curvature sups k=0..2 at n=1 {:.6?}, max relative deviation across n=1,2,4,8 {curvature_dev:.1e} (target 1e-8); geodesic distances under h_(p,1/2) max relative deviation {:.2}% (target 2%), corner 0 (cone distance {cone:.4}): {}",
            sups[0],
            100.0 * path_dev,
            pairs.join(", ")
        ),
    )
}

fn kappa_ratios(polygon: &Polygon, params: &RoundingParams) -> (Vec<f64>, Vec<Vec<f64>>) {
    let sups: Vec<Vec<f64>> = FAMILY
        .iter()
        .map(|&n| {
            let (d, w) = member(polygon, params, n);
            (0..=2).map(|k| curvature_profile(&d, &w, k, 24, None).expect("profile").sup).collect()
        })
        .collect();
    let ratios = (0..=2).map(|k| spread(&sups.iter().map(|s| s[k]).collect::<Vec<_>>())).collect();
    (ratios, sups)
}

fn criterion_5() -> Outcome {
    let l = lshape();
    let (ratios, sups) = kappa_ratios(&l, &cone_zone_params(&l));
    let (default_ratios, _) = kappa_ratios(&l, &select_default_params(&l).expect("params"));
    outcome(
        ratios.iter().all(|&r| r < 2.0),
        format!(
            "rho = R/4 family: max/min of sup|d^kκ| for k=0,1,2 = {ratios:.6?} (target < 2), sups at n=1 {:.4?}; informational rho = R0/4 family ratios {default_ratios:.3?}",
            sups[0]
        ),
    )
}

fn criterion_6() -> Outcome {
    let l = lshape();
    let params = select_default_params(&l).expect("params");
    let mut widths = Vec::new();
    let mut corner_max = 0.0f64;
    for n in FAMILY {
        let (d, w) = member(&l, &params, n);
        let mesh = conformal_mesh(&d, &w, 0.4, 0.1);
        let est = finite_width_estimate(&mesh, &w, 2).expect("width");
        corner_max = corner_max.max(corner_ball_width(&mesh, &w, &est.distances, w.eta().exact_radius()));
        widths.push(est.sup);
    }
    let ratio = spread(&widths);
    let bound = TAU + 0.1;
    outcome(
        widths.iter().all(|v| v.is_finite()) && ratio <= 2.0 && corner_max <= bound,
        format!("width_sup per n {widths:.4?}, max/min {ratio:.4} (target ≤ 2); corner-ball max distance {corner_max:.4} (target ≤ {bound:.4})"),
    )
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        polygon: PolygonSpec::Preset("lshape".into()),
        n_list: FAMILY.to_vec(),
        a_list: vec![0.3, 0.9],
        source: SourcePreset::Sine,
        h_max: 0.1,
        h_min: 1e-5,
        beta: 0.4,
        order: 2,
        eigen: true,
        ..ExperimentConfig::default()
    }
}

fn criterion_7(table: &ResultTable) -> Outcome {
    let mut lambdas = Vec::new();
    for n in FAMILY {
        match table.rows.iter().find(|r| r.n == n).and_then(|r| r.lambda_min) {
            Some(l) => lambdas.push(l),
            None => return outcome(false, format!("λ_min missing for n = {n}")),
        }
    }
    let ratio = spread(&lambdas);
    outcome(ratio <= 2.0, format!("λ_min per n {lambdas:.5?}, max/min {ratio:.4} (target ≤ 2)"))
}

fn criterion_8(table: &ResultTable) -> Outcome {
    let refined_cfg = ExperimentConfig { beta: 0.2, h_max: 0.05, eigen: false, a_list: vec![0.3], ..sweep_config() };
    let refined = run_sweep(&refined_cfg).expect("refined sweep");
    if table.any_error() || refined.any_error() {
        return outcome(false, "sweep rows reported errors".into());
    }
    let coarse: Vec<f64> = table.ratios(0.3).into_iter().map(|(_, r)| r.unwrap_or(f64::NAN)).collect();
    let fine: Vec<f64> = refined.ratios(0.3).into_iter().map(|(_, r)| r.unwrap_or(f64::NAN)).collect();
    let change = coarse.iter().zip(&fine).map(|(c, f)| (c - f).abs() / f).fold(0.0, f64::max);
    let ratio = table.ratio_spread(0.3).unwrap_or(f64::INFINITY);
    let probe: Vec<f64> = table.ratios(0.9).into_iter().map(|(_, r)| r.unwrap_or(f64::NAN)).collect();
    let increasing = probe[2..].windows(2).all(|p| p[1] > p[0]);
    outcome(
        ratio <= 3.0 && change < 0.05,
        format!(
            "a = 0.3 ratios {coarse:.5?}, max/min {ratio:.4} (target ≤ 3); change under refinement {:.3}% (target < 5%); informational a = 0.9 ratios {probe:.4?}, increasing for n ≥ 4: {increasing}",
            100.0 * change
        ),
    )
}

fn random_field(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng) -> FemSolution {
    FemSolution::from_values(mesh.clone(), (0..mesh.nodes.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn coarse_family_meshes() -> Vec<(u32, Arc<Mesh>, WeightFunction)> {
    let l = lshape();
    let params = select_default_params(&l).expect("params");
    FAMILY
        .iter()
        .map(|&n| {
            let (d, w) = member(&l, &params, n);
            (n, Arc::new(conformal_mesh(&d, &w, 0.8, 0.25).elevate()), w)
        })
        .collect()
}

fn criterion_9(meshes: &[(u32, Arc<Mesh>, WeightFunction)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    let mut cases = 0;
    for (_, mesh, w) in meshes {
        for _ in 0..100 {
            let f = SampledField::from_fem(&random_field(mesh, &mut rng), Some(w)).expect("field");
            for m in [1usize, 2] {
                let h = sobolev_norm(&f, m).expect("h");
                let k = kondratiev_norm(&f, w, m, m as f64).expect("k");
                cases += 1;
                tightest = tightest.min(k / h);
                if h > k * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{cases} comparisons of H¹ ≤ K¹₁ and H² ≤ K²₂ on {} meshes, {violations} violations, smallest K/H {tightest:.4}", meshes.len()),
    )
}

fn criterion_10(meshes: &[(u32, Arc<Mesh>, WeightFunction)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a = 0.3;
    let b = 0.25;
    let mut failures = Vec::new();
    let mut extremes = (f64::INFINITY, 0.0f64);
    let mut intervals = Vec::new();
    for (n, mesh, w) in meshes {
        let grid = admissibility_grid(w, 24, 64);
        let plus = shift_interval(w, b, 2, &grid).expect("interval");
        let minus = shift_interval(w, -b, 2, &grid).expect("interval");
        let c_star = plus.1.max(minus.1).max(1.0 / plus.0).max(1.0 / minus.0);
        intervals.push(format!("n={n}: [{:.3}, {:.3}]", plus.0, plus.1));
        for _ in 0..20 {
            let f = SampledField::from_fem(&random_field(mesh, &mut rng), Some(w)).expect("field");
            let base = kondratiev_norm(&f, w, 2, a).expect("norm");
            let rp = kondratiev_norm(&f.shifted(w, b).expect("shift"), w, 2, a + b).expect("norm") / base;
            let rm = kondratiev_norm(&f.shifted(w, -b).expect("shift"), w, 2, a - b).expect("norm") / base;
            extremes = (extremes.0.min(rp.min(rm)), extremes.1.max(rp.max(rm)));
            let product = rp * rm;
            if !(plus.0 <= rp && rp <= plus.1) || !(minus.0 <= rm && rm <= minus.1) || !(1.0 / c_star.powi(2) <= product && product <= c_star.powi(2)) {
                failures.push(format!("n={n}: {rp:.4} {rm:.4}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "b = ±{b}: {} fields, {} outside bounds, observed ratios in [{:.4}, {:.4}], b = +{b} intervals {}",
            20 * meshes.len(),
            failures.len(),
            extremes.0,
            extremes.1,
            intervals.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, run: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {id:>2}: {} ({secs:.1} s) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, o, secs));
    };
    record(1, &criterion_1);
    record(2, &criterion_2);
    record(3, &criterion_3);
    record(4, &criterion_4);
    record(5, &criterion_5);
    record(6, &criterion_6);
    let sweep_start = Instant::now();
    let table = run_sweep(&sweep_config()).expect("sweep");
    println!("(shared L-shape sweep: {:.1} s)", sweep_start.elapsed().as_secs_f64());
    record(7, &|| criterion_7(&table));
    record(8, &|| criterion_8(&table));
    let meshes = coarse_family_meshes();
    record(9, &|| criterion_9(&meshes));
    record(10, &|| criterion_10(&meshes));
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s{}",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failed: {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
