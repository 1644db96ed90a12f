use qpflow::checkpoint::Checkpoint;
use qpflow::model::Differentiable;
use qpflow::powerflow::{split_dataset, Dataset};

fn main() {
    let dir = std::env::args().nth(1).expect("usage: probe <run-dir>");
    let dir = std::path::Path::new(&dir);
    let ds = Dataset::read_files(&dir.join("data.csv"), &dir.join("data.meta.json")).unwrap();
    let (_, test) = split_dataset(&ds, 0.6, 2).unwrap();
    let ck = Checkpoint::load(&dir.join("checkpoint.json")).unwrap();
    let model = &ck.model;
    let params = ck.point_params().expect("point checkpoint");
    let (n, nb) = (model.n_bus(), model.n_branch());

    let mut phi_err2 = vec![0.0f64; n];
    let mut phi_max = vec![0.0f64; n];
    let mut pf_err2 = vec![0.0f64; nb];
    let mut pf_over = vec![0usize; nb];
    let m = test.samples.len() as f64;
    for s in &test.samples {
        let xn = model.norms.normalize_input(&s.input);
        let out = model.output(params, &xn, None).unwrap();
        let pred = model.norms.denormalize_target(&out);
        for i in 0..n {
            let e = (pred[n + i] - s.target[n + i]).abs();
            phi_err2[i] += e * e;
            if e > phi_max[i] {
                phi_max[i] = e;
            }
        }
        for j in 0..nb {
            let e = (pred[2 * n + j] - s.target[2 * n + j]).abs();
            pf_err2[j] += e * e;
            if e > 0.05 {
                pf_over[j] += 1;
            }
        }
    }
    println!("per-bus phi rmse / max (rad):");
    for i in 0..n {
        println!("  bus {i}: {:.5} / {:.5}", (phi_err2[i] / m).sqrt(), phi_max[i]);
    }
    println!("per-branch pf rmse (pu) / frac>5MW:");
    for j in 0..nb {
        let (f, t) = (model.case.branches[j].from, model.case.branches[j].to);
        println!(
            "  br {j} ({f}->{t}): {:.5} / {:.3}",
            (pf_err2[j] / m).sqrt(),
            pf_over[j] as f64 / m
        );
    }
}
