use dephase_core::langevin::rk4_step;
use dephase_core::noise_model::NoiseParams;

/// Max error over `[0, 20]` against the exact damped oscillator from `X(0) = 1`.
fn global_error(dt: f64) -> f64 {
    let (w0, g) = (1.0, 0.1);
    let n = NoiseParams::direct(w0, g, 0.0, 0.0).unwrap();
    let wd = (w0 * w0 - g * g / 4.0f64).sqrt();
    let steps = (20.0 / dt).round() as usize;
    let mut s = [1.0, 0.0, 0.0, 0.0];
    let mut worst = 0.0f64;
    for i in 1..=steps {
        s = rk4_step(&n, &s, [0.0; 2], [0.0; 2], dt);
        let t = i as f64 * dt;
        let exact = (-g * t / 2.0).exp() * ((wd * t).cos() + g / (2.0 * wd) * (wd * t).sin());
        worst = worst.max((s[0] - exact).abs());
    }
    worst
}

#[test]
fn global_error_is_fourth_order() {
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let xs: Vec<f64> = dts.iter().map(|d: &f64| d.ln()).collect();
    let ys: Vec<f64> = dts.iter().map(|&d| global_error(d).ln()).collect();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 4.0).abs() < 0.3, "slope {slope}");
}
