//! Fit the 2D linear projection (feature matrix F and outcome vector Y are
//! jointly approximated from the latent coordinates Z = A·F) and place the
//! instances in the plane.
//!
//! ```bash
//! cargo run --example project_space
//! ```

use isa_av::pilot::{fit_pilot, pilot_objective, project};
use isa_av::rng;
use isa_av::Result;
use rand::Rng;

fn main() -> Result<()> {
    // 4 standardized features driven by 2 latent factors, 250 instances;
    // F is n x i row-major (feature rows, instance columns).
    let (n, i) = (4, 250);
    let mut rng_ = rng::stream(3, &[rng::tag("projection-example")]);
    let mut f = vec![0.0; n * i];
    let mut y = vec![0.0; i];
    for t in 0..i {
        let u: f64 = rng_.gen_range(-1.0..1.0);
        let v: f64 = rng_.gen_range(-1.0..1.0);
        f[t] = u;
        f[i + t] = v;
        f[2 * i + t] = 0.8 * u - 0.2 * v;
        f[3 * i + t] = 0.5 * u + 0.5 * v;
        y[t] = u - v;
    }

    let model = fit_pilot(&f, &y, n, 30, 99)?;
    println!("objective after 30 restarts: {:.6}", model.objective);
    println!("ridge fallback used: {}", model.ridge_used);
    println!("projection matrix A (2 x {n}):");
    for r in 0..2 {
        let row: Vec<String> = (0..n).map(|k| format!("{:+.3}", model.a[r * n + k])).collect();
        println!("  z{} = [{}]", r + 1, row.join(", "));
    }

    // The objective re-evaluates to the fitted optimum at the returned A.
    let check = pilot_objective(&model.a, &f, &y, n);
    println!("re-evaluated objective: {:.6}", check.value);

    let coords = project(&model, &f)?;
    println!("\nfirst 5 instances in the space:");
    for (t, z) in coords.iter().take(5).enumerate() {
        println!("  instance {t}: z = ({:+.4}, {:+.4})", z[0], z[1]);
    }
    Ok(())
}
