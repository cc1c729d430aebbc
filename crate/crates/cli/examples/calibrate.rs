use jgsa::data::{generate_synthetic, SyntheticSpec};
use jgsa::jgsa::{fit, JgsaParams};
use jgsa::{Bandwidth, KernelSpec};
use jgsa::classify::accuracy;

fn main() {
    for seed in [0u64, 1] {
        let spec = SyntheticSpec::shifted_default(seed);
        let (xs, xt) = generate_synthetic(&spec).unwrap();
        for kernel in [KernelSpec::Linear, KernelSpec::Rbf(Bandwidth::Median)] {
            let params = JgsaParams::new(2, 2, 0.1).with_kernel(kernel);
            let model = fit(&xs, &xt, &params).unwrap();
            let acc = accuracy(model.target_labels(), xt.labels().unwrap()).unwrap();
            let a_norm: f64 = model.projections.a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let b_norm: f64 = model.projections.b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let zs_spread: f64 = {
                let m = &model.source_embedding;
                let mean = m.mean_axis(ndarray::Axis(1)).unwrap();
                m.columns().into_iter().map(|c| (&c.to_owned() - &mean).iter().map(|v| v*v).sum::<f64>()).sum::<f64>() / m.ncols() as f64
            };
            let zt_spread: f64 = {
                let m = &model.target_embedding;
                let mean = m.mean_axis(ndarray::Axis(1)).unwrap();
                m.columns().into_iter().map(|c| (&c.to_owned() - &mean).iter().map(|v| v*v).sum::<f64>()).sum::<f64>() / m.ncols() as f64
            };
            println!(
                "seed {seed} {kernel:?}: acc {acc:.4} jitters {:?} objective {:?} |A| {a_norm:.3e} |B| {b_norm:.3e} var(zs) {zs_spread:.3e} var(zt) {zt_spread:.3e} warn {:?}",
                model.diagnostics.jitters, model.objective_history, model.diagnostics.warnings
            );
        }
    }
}
