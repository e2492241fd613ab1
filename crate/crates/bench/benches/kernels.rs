use criterion::{black_box, criterion_group, criterion_main, Criterion};
use phasemix::distributions::ExitLaw;
use phasemix::inference::state_update_alive;
use phasemix::matcore::expm;
use phasemix::presets::{birth_death, BirthDeathParams};
use phasemix::simulator::{estimate_surv, SimConfig};
use phasemix::InformationScenario;

fn kernels(c: &mut Criterion) {
    let (model, family) = birth_death(&BirthDeathParams::default()).unwrap();
    let alive = InformationScenario::alive_current_only(10.0).unwrap();
    let law = ExitLaw::new(&model, &family, &alive).unwrap();

    c.bench_function("expm 6x6", |b| {
        b.iter(|| expm(black_box(model.q(0)), 3.7).unwrap())
    });
    c.bench_function("alive filter", |b| {
        b.iter(|| state_update_alive(&model, black_box(&alive)).unwrap())
    });
    c.bench_function("exit law setup", |b| {
        b.iter(|| ExitLaw::new(&model, &family, black_box(&alive)).unwrap())
    });
    c.bench_function("dens_biv", |b| {
        b.iter(|| law.dens_biv(black_box(12.5), 11.0).unwrap())
    });
    c.bench_function("surv_multi", |b| {
        b.iter(|| law.surv_multi(black_box(&[12.5, 11.0])).unwrap())
    });
    c.bench_function("singular tail", |b| {
        b.iter(|| law.singular_surv_biv(black_box(11.0)).unwrap())
    });

    let start = InformationScenario::no_information(0.0).unwrap();
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("10k paths", |b| {
        b.iter(|| {
            estimate_surv(
                &model,
                &family,
                &start,
                &[1.0, 2.0],
                &SimConfig::new(10_000, 7),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
