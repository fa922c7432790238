use billiard::exec::{map_reduce, ExecMode};
use billiard::{tables, BilliardMap, CollisionPoint};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn orbit_sum(map: &BilliardMap, index: usize, steps: usize) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(777);
    rng.set_stream(index as u64);
    let si = rng.gen_range(0..map.table.scatterers.len());
    let per = map.table.scatterers[si].perimeter();
    let mut x = CollisionPoint::new(si, rng.gen_range(0.0..per), (rng.gen_range(-1.0f64..1.0)).asin());
    let mut acc = 0.0;
    for _ in 0..steps {
        match map.step(x) {
            Ok(y) => {
                acc += y.phi.cos();
                x = y;
            }
            Err(_) => break,
        }
    }
    acc
}

fn bench_ensemble(c: &mut Criterion) {
    let table = tables::fh2();
    let map = BilliardMap::unperturbed(&table);
    let mut group = c.benchmark_group("orbit_ensemble");
    group.sample_size(10);
    for &mode in &[ExecMode::Sequential, ExecMode::Parallel] {
        let name = match mode {
            ExecMode::Sequential => "sequential",
            ExecMode::Parallel => "parallel",
        };
        group.bench_function(name, |b| {
            b.iter(|| {
                map_reduce(
                    mode,
                    black_box(2000),
                    0.0f64,
                    |i| orbit_sum(&map, i, 50),
                    |a, x| *a += x,
                    |a, b| *a += b,
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ensemble);
criterion_main!(benches);
