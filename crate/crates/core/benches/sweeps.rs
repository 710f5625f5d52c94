use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use rollwave::bloch::{classify_stability, resolvent_norm_scan, uniform_xis, ClassifyOptions};
use rollwave::exec::Exec;
use rollwave::profile::{seed_profile, DischargeRule, WaveProfile};
use rollwave::ModelParams;

fn wave() -> WaveProfile {
    let p = ModelParams::st_venant(2.5, 0.1);
    seed_profile(&p, 10.0, 128, DischargeRule::HopfNormalized).expect("seed profile")
}

fn executors() -> Vec<(&'static str, Exec)> {
    let v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    let v = [v, vec![("parallel", Exec::Parallel)]].concat();
    v
}

fn bloch_sweep(c: &mut Criterion) {
    let w = wave();
    let mut g = c.benchmark_group("classify_stability");
    g.sample_size(10);
    for (name, exec) in executors() {
        let opts = ClassifyOptions { modes: 32, xi_points: 24, exec, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| {
            b.iter(|| classify_stability(&w, o).expect("classify"))
        });
    }
    g.finish();
}

fn resolvent_sweep(c: &mut Criterion) {
    let w = wave();
    let xis = uniform_xis(w.period, 8);
    let lambdas: Vec<Complex64> = (0..6).map(|j| Complex64::new(0.1, 2.0 + j as f64)).collect();
    let mut g = c.benchmark_group("resolvent_norm_scan");
    g.sample_size(10);
    for (name, exec) in executors() {
        g.bench_function(name, |b| b.iter(|| resolvent_norm_scan(&w, 1, &lambdas, &xis, 32, 1e-8, exec).expect("scan")));
    }
    g.finish();
}

criterion_group!(benches, bloch_sweep, resolvent_sweep);
criterion_main!(benches);
