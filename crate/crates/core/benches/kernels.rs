use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hardy_retrieval::factorization::{outer_boundary_with, reconstruct};
use hardy_retrieval::hilbert::hilbert_mqm_on_nodes_with;
use hardy_retrieval::minvalue::{default_search_radii, inner_modulus_field, mqmv_retrieve, MinSearchConfig};
use hardy_retrieval::paraconj::{mqpc_retrieve, PencilConfig};
use hardy_retrieval::synth::{draw_example2_zeros, gen_example1, gen_example2};
use hardy_retrieval::{CircleGrid, Execution, RealSamples};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn hilbert(c: &mut Criterion) {
    let mut g = c.benchmark_group("hilbert_on_nodes");
    for n in [256, 1024, 4096] {
        let f = RealSamples::from_fn(CircleGrid::new(n, 1.0).unwrap(), |x| (2.0 + x.sin() * x.cos()).ln());
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, n), &f, |b, f| b.iter(|| hilbert_mqm_on_nodes_with(f, exec)));
        }
    }
    g.finish();
}

fn fields(c: &mut Criterion) {
    let radii = default_search_radii();
    let s = gen_example2(&draw_example2_zeros(42), 1024, &radii).unwrap();
    let mut g = c.benchmark_group("n1024");
    for (name, exec) in POLICIES {
        let outer = outer_boundary_with(s.field.boundary(), exec).unwrap();
        g.bench_function(BenchmarkId::new("inner_modulus_field", name), |b| {
            b.iter(|| inner_modulus_field(&s.field, &outer, &radii, exec))
        });
        let bp = hardy_retrieval::BlaschkeProduct::from_zeros(&draw_example2_zeros(42)).unwrap();
        g.bench_function(BenchmarkId::new("reconstruct", name), |b| b.iter(|| reconstruct(&outer, &bp, &radii, exec)));
    }
    g.finish();
}

fn pipelines(c: &mut Criterion) {
    let mut radii = default_search_radii();
    radii.push(0.8);
    let ex2 = gen_example2(&draw_example2_zeros(42), 1024, &radii).unwrap();
    let ex1 = gen_example1(256, &default_search_radii()).unwrap();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let pc = PencilConfig { execution: exec, ..PencilConfig::default() };
        g.bench_function(BenchmarkId::new("mqpc_example2_n1024", name), |b| b.iter(|| mqpc_retrieve(&ex2.field, &pc)));
        let mv = MinSearchConfig { execution: exec, ..MinSearchConfig::default() };
        g.bench_function(BenchmarkId::new("mqmv_example1_n256", name), |b| b.iter(|| mqmv_retrieve(&ex1.field, &mv)));
    }
    g.finish();
}

criterion_group!(benches, hilbert, fields, pipelines);
criterion_main!(benches);
