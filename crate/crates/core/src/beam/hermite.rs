//! Cubic Hermite shape functions on `xi in [-1, 1]`, arranged for the nodal
//! blocks `[d1, t1, d2, t2]`. Tangent functions carry the factor `l / 2`.

/// Values, first and second derivatives with respect to the arc parameter
/// `s in [0, l]` of the four shape functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteShape {
    pub n: [f64; 4],
    pub d1: [f64; 4],
    pub d2: [f64; 4],
}

pub fn xi_of(s: f64, l: f64) -> f64 {
    2.0 * s / l - 1.0
}

pub fn shape(s: f64, l: f64) -> HermiteShape {
    let x = xi_of(s, l);
    let half = 0.5 * l;
    let n = [
        0.25 * (2.0 + x) * (1.0 - x).powi(2),
        half * 0.25 * (1.0 + x) * (1.0 - x).powi(2),
        0.25 * (2.0 - x) * (1.0 + x).powi(2),
        -half * 0.25 * (1.0 - x) * (1.0 + x).powi(2),
    ];
    let dxi = [
        0.75 * (x * x - 1.0),
        half * 0.25 * (3.0 * x * x - 2.0 * x - 1.0),
        0.75 * (1.0 - x * x),
        half * 0.25 * (3.0 * x * x + 2.0 * x - 1.0),
    ];
    let d2xi = [
        1.5 * x,
        half * 0.5 * (3.0 * x - 1.0),
        -1.5 * x,
        half * 0.5 * (3.0 * x + 1.0),
    ];
    let j = 2.0 / l;
    HermiteShape {
        n,
        d1: dxi.map(|v| v * j),
        d2: d2xi.map(|v| v * j * j),
    }
}
