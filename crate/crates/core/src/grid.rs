//! Frequency and parameter grids.

/// `points` values from `start` to `stop` inclusive, evenly spaced.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i + 1 == points {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// `points` values from `start` to `stop` inclusive, evenly spaced in log.
/// Both ends must be positive.
pub fn logspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    linspace(start.ln(), stop.ln(), points)
        .into_iter()
        .enumerate()
        .map(|(i, l)| match i {
            0 => start,
            _ if i + 1 == points => stop,
            _ => l.exp(),
        })
        .collect()
}

/// Log grid with a fixed density of points per decade.
pub fn log_grid_per_decade(start: f64, stop: f64, per_decade: usize) -> Vec<f64> {
    let decades = (stop / start).log10();
    let points = (decades * per_decade as f64).round() as usize + 1;
    logspace(start, stop, points.max(2))
}
