use mer_core::flow::{estimate_flow, FlowEstimatorParams};
use mer_core::GrayFrame;

fn blob(cx: f64, cy: f64) -> GrayFrame {
    GrayFrame::from_fn(64, 64, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        (0.1 + 0.8 * (-(dx * dx + dy * dy) / (2.0 * 6.0 * 6.0)).exp()) as f32
    })
}

fn texture(dx: f64, dy: f64) -> GrayFrame {
    GrayFrame::from_fn(64, 64, |x, y| {
        let (x, y) = (x as f64 - dx, y as f64 - dy);
        (0.5 + 0.2 * (x * 0.45).sin() * (y * 0.3).cos() + 0.15 * ((x + 2.0 * y) * 0.21).sin())
            as f32
    })
}

/// Mean flow over pixels where the blob is clearly visible in frame A.
fn blob_mean(dx: f64, dy: f64) -> (f64, f64) {
    let a = blob(32.0, 32.0);
    let b = blob(32.0 + dx, 32.0 + dy);
    let flow = estimate_flow(&a, &b, &FlowEstimatorParams::default()).unwrap();
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0.0);
    for y in 0..64 {
        for x in 0..64 {
            let (ddx, ddy) = (x as f64 - 32.0, y as f64 - 32.0);
            if ddx * ddx + ddy * ddy <= 100.0 {
                let f = flow.get(x, y);
                su += f.u as f64;
                sv += f.v as f64;
                n += 1.0;
            }
        }
    }
    (su / n, sv / n)
}

#[test]
fn blob_shift_is_recovered() {
    for (dx, dy) in [(2.0, 0.0), (0.0, -2.0), (1.5, 1.0)] {
        let (u, v) = blob_mean(dx, dy);
        println!("blob shift ({dx}, {dy}) -> ({u:.3}, {v:.3})");
        assert!(
            (u - dx).abs() < 0.5 && (v - dy).abs() < 0.5,
            "({dx}, {dy}) -> ({u}, {v})"
        );
    }
}

#[test]
fn textured_shift_median_is_recovered() {
    let a = texture(0.0, 0.0);
    let b = texture(1.0, 1.0);
    let flow = estimate_flow(&a, &b, &FlowEstimatorParams::default()).unwrap();
    let mut us: Vec<f64> = Vec::new();
    let mut vs: Vec<f64> = Vec::new();
    for y in 8..56 {
        for x in 8..56 {
            let f = flow.get(x, y);
            us.push(f.u as f64);
            vs.push(f.v as f64);
        }
    }
    us.sort_by(f64::total_cmp);
    vs.sort_by(f64::total_cmp);
    let (mu, mv) = (us[us.len() / 2], vs[vs.len() / 2]);
    println!("texture median ({mu:.3}, {mv:.3})");
    assert!((mu - 1.0).abs() < 0.5 && (mv - 1.0).abs() < 0.5);
}
