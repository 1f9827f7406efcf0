use arz_bench::{riemann, smooth_state};
use arz_core::basis::{project, CellPoly, DgBasis};
use arz_core::dg::BoundaryCondition;
use arz_core::limiter::limit_cell;
use arz_core::oe::{apply_oe, damping_profile};
use arz_core::{InvariantBox, Mesh, Mode, PressureLaw, State};
use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("ten_steps_n300");
    g.sample_size(20);
    for mode in [Mode::LocalBp, Mode::GlobalBp, Mode::NonBpOe, Mode::PlainDg] {
        g.bench_with_input(BenchmarkId::from_parameter(mode.name()), &mode, |b, &mode| {
            b.iter_batched(
                || riemann(mode, 300, 2.0),
                |mut sim| {
                    for _ in 0..10 {
                        let _ = sim.step(1.0);
                    }
                    sim
                },
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let law = PressureLaw::standard(0.9, 2.0).unwrap();
    let basis = DgBasis::new(2);
    let avg = law.from_primitives(0.4, 0.5, 1.0).unwrap();
    let bx = InvariantBox { w_min: 0.6, w_max: 0.9, c_min: 0.9, c_max: 1.1, v_min: 0.3 };
    let cell = CellPoly { modes: vec![avg, State::new(0.3, 0.2, 0.25), State::new(-0.1, 0.15, 0.05)] };
    c.bench_function("limit_cell", |b| {
        b.iter(|| {
            let mut bx = bx;
            let mut cell = cell.clone();
            limit_cell(&law, &basis, &mut bx, &mut cell).unwrap();
            black_box(cell)
        })
    });

    let mesh = Mesh::new(0.0, 1.0, 300);
    let sol = project(&mesh, 2, 4, |x| smooth_state(&law, x));
    let ext = BoundaryCondition::Periodic.exterior(&sol);
    let averages = sol.averages();
    c.bench_function("damping_n300", |b| {
        b.iter(|| {
            let prof = damping_profile(&law, &basis, &sol, &ext, &averages).unwrap();
            let mut out = sol.clone();
            apply_oe(&mut out, &prof, 1e-3, &mesh);
            black_box(out)
        })
    });

    let (u1, u2) = (smooth_state(&law, 0.1), smooth_state(&law, 0.7));
    c.bench_function("alpha_max", |b| b.iter(|| law.alpha_max(black_box(u1), black_box(u2)).unwrap()));
}

criterion_group!(benches, steps, kernels);
criterion_main!(benches);
